#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vhm/ensemble.hpp"
#include "vhm/taxonomy.hpp"

namespace vhm {

/// Rows of the winner table. The first six are strict predicates; the tie
/// rows count records where the matching predicate pair is undecided.
enum class CaseRow : std::size_t {
    EeBest,      ///< EE < NR and EE < ORG
    NrBest,      ///< NR < EE and NR < ORG
    OrgBest,     ///< ORG < EE and ORG < NR
    EeBeatsOrg,  ///< EE < ORG
    NrBeatsOrg,  ///< NR < ORG
    NrBeatsEe,   ///< NR < EE
    NoStrictBest,
    TieEeOrg,
    TieNrOrg,
    TieNrEe,
};
inline constexpr std::size_t kCaseRows = 10;

/// Columns: all records, then one per category (records count in every category they carry).
enum class CaseColumn : std::size_t { All, ObjectIdentification, Quantity, Color, Other };
inline constexpr std::size_t kCaseColumns = 5;

std::string_view to_string(CaseRow r) noexcept;
std::string_view to_string(CaseColumn c) noexcept;

struct CaseCounts {
    std::array<std::size_t, kCaseColumns> records{};
    std::array<std::array<std::size_t, kCaseColumns>, kCaseRows> counts{};
    std::size_t excluded = 0;

    std::size_t at(CaseRow r, CaseColumn c = CaseColumn::All) const noexcept {
        return counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
};

/// Incomplete triples are excluded (counted in `excluded`) and logged.
CaseCounts case_counts(const std::vector<VariantScoreTriple>& triples, const std::vector<CategorySet>& categories);

struct SummaryStats {
    std::size_t records = 0;
    double mean_org = 0.0;
    double mean_ee = 0.0;
    double mean_nr = 0.0;
    double mean_ensemble = 0.0;
    /// (mean_org - mean_ensemble) / mean_org * 100; absent when mean_org == 0.
    std::optional<double> reduction_pct;

    friend bool operator==(const SummaryStats&, const SummaryStats&) = default;
};

/// Means over complete triples; `decisions` aligned with `triples` by record id.
/// Throws EmptyInput when there is nothing to summarize.
SummaryStats summarize(const std::vector<VariantScoreTriple>& triples, const std::vector<EnsembleDecision>& decisions);

nlohmann::json to_json(const SummaryStats& s);
SummaryStats summary_from_json(const nlohmann::json& j);

/// Display rule: one decimal place.
std::string format_reduction(const SummaryStats& s);

struct QuarantinedRecord {
    std::string record_id;
    std::string reason;
};

/// Everything the report needs from a finished run.
struct ScoredRun {
    nlohmann::json config = nlohmann::json::object();
    std::size_t records_total = 0;
    std::vector<VariantScoreTriple> triples;  ///< complete records, manifest order
    std::vector<CategorySet> categories;      ///< aligned with triples
    std::vector<QuarantinedRecord> quarantined;
    std::vector<Policy> policies{Policy::OracleMin, Policy::CategoryRoute};
};

struct ReportFiles {
    std::filesystem::path case_counts_csv;
    std::filesystem::path summary_json;
    std::filesystem::path per_record_csv;
    std::optional<std::filesystem::path> routing_json;
};

/// Writes case_counts.csv, summary.json, per_record.csv and (when routing is
/// enabled) routing.json into `out_dir`. Output bytes depend only on `run`.
ReportFiles emit(const ScoredRun& run, const std::filesystem::path& out_dir);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// RFC 4180 field quoting.
std::string csv_field(std::string_view s);

}  // namespace vhm
