#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vhm/imaging.hpp"
#include "vhm/nli.hpp"
#include "vhm/report.hpp"
#include "vhm/responder.hpp"
#include "vhm/scoring.hpp"

namespace vhm {

enum class Stage { VariantBuilt, Generated, Scored };
std::string_view to_string(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view s) noexcept;

struct RunConfig {
    std::filesystem::path manifest;
    std::optional<std::size_t> limit;
    std::filesystem::path out_dir;
    std::filesystem::path cache_dir;  ///< empty: <out_dir>/cache
    bool strict = false;

    int kernel_size = 15;
    NrMode nr_mode = NrMode::PureMedian;
    BlendWeights blend{};

    int samples = 3;
    double temperature = 0.7;
    std::string model_id = "gpt-3.5-turbo";
    PremiseMode premise_mode = PremiseMode::Reference;

    std::string responder = "mock";  ///< "mock" or an endpoint URL
    std::filesystem::path responder_fixture;
    int mock_latency_ms = 0;
    double requests_per_second = 0.0;
    std::string nli = "stub";  ///< "stub" or a service base URL
    std::filesystem::path nli_table;
    std::string nli_model_id = "nli-default";

    std::vector<Policy> policies{Policy::OracleMin, Policy::CategoryRoute};
    int concurrency = 4;  ///< in-flight responder calls
    int workers = 4;      ///< records processed in parallel
    std::uint64_t seed = 0;

    /// Halt cleanly once every record reached this stage (no reports).
    std::optional<Stage> stop_after;

    std::filesystem::path effective_cache_dir() const;
    /// Throws ConfigError describing the first invalid field.
    void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Stage markers per (record, variant). Markers only ever move forward.
class RunState {
public:
    void mark(const std::string& record_id, Variant v, Stage s);
    bool reached(const std::string& record_id, Variant v, Stage s) const;
    nlohmann::json to_json() const;

private:
    std::map<std::string, std::map<Variant, int>> progress_;
};

struct RunStats {
    std::size_t records = 0;
    std::size_t complete = 0;
    std::size_t quarantined = 0;
    long variant_cache_hits = 0;
    long variant_builds = 0;
    long generation_cache_hits = 0;
    long generation_calls = 0;
    long score_cache_hits = 0;
    long score_computations = 0;
    bool stopped_early = false;
};

struct RunOutcome {
    int exit_code = 0;  ///< 0 ok, 2 finished with quarantined records
    RunStats stats;
    ScoredRun scored;
    RunState state;
};

/// Optional injected services; null members are built from the config.
struct RunServices {
    Responder* responder = nullptr;
    NliClient* nli = nullptr;
};

/// Full evaluation: corpus -> variants -> responses -> NLI scores -> ensembles -> reports.
/// Per-record failures are quarantined; ConfigError aborts.
RunOutcome run(const RunConfig& config, RunServices services = {});

/// Re-emits report artifacts from a finished run directory.
ReportFiles rerun_report(const std::filesystem::path& run_dir);

/// Cache key of a variant image given the source image hash.
std::string variant_cache_key(const std::string& source_sha, Variant v, const RunConfig& config);

/// Writes ORG/NR/EE PNGs for one image into `out_dir`.
void write_variants(const std::filesystem::path& image, const std::filesystem::path& out_dir, const FilterSpec& base);

}  // namespace vhm
