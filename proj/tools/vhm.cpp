// Command-line front end: run / report / filters.

#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "vhm/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitQuarantine = 2;

vhm::NrMode parse_nr_mode(const std::string& s) {
    return s == "blended" ? vhm::NrMode::Blended : vhm::NrMode::PureMedian;
}

void print_stats(const vhm::RunStats& s) {
    std::cout << "records: " << s.records << "\n"
              << "complete: " << s.complete << "\n"
              << "quarantined: " << s.quarantined << "\n"
              << "variant cache hits: " << s.variant_cache_hits << "\n"
              << "variant builds: " << s.variant_builds << "\n"
              << "generation cache hits: " << s.generation_cache_hits << "\n"
              << "responder calls: " << s.generation_calls << "\n"
              << "score cache hits: " << s.score_cache_hits << "\n"
              << "score computations: " << s.score_computations << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Filtered-variant hallucination evaluation"};
    app.require_subcommand(1);

    vhm::RunConfig cfg;
    cfg.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::size_t limit = 0;
    std::string nr_mode = "pure";
    std::string premise = "reference";
    std::string policy = "both";
    std::string stop_after;
    std::string cache_dir;
    std::string log_level = "warn";

    auto* run = app.add_subcommand("run", "evaluate a manifest end to end");
    run->add_option("--manifest", cfg.manifest, "line-delimited JSON manifest")->required();
    run->add_option("--limit", limit, "keep only the first N records (0 = all)");
    run->add_option("--out", cfg.out_dir, "output directory")->required();
    run->add_option("--cache", cache_dir, "cache directory (default OUT/cache)");
    run->add_option("--kernel", cfg.kernel_size, "median kernel size (odd, >= 3)")->capture_default_str();
    run->add_option("--nr-mode", nr_mode, "noise-reduced variant definition")
        ->check(CLI::IsMember({"pure", "blended"}))
        ->capture_default_str();
    run->add_option("--alpha", cfg.blend.alpha, "blend weight of the original")->capture_default_str();
    run->add_option("--beta", cfg.blend.beta, "blend weight of the filtered image")->capture_default_str();
    run->add_option("--gamma", cfg.blend.gamma, "blend brightness offset")->capture_default_str();
    run->add_option("--samples", cfg.samples, "answers sampled per variant")->capture_default_str();
    run->add_option("--temperature", cfg.temperature)->capture_default_str();
    run->add_option("--model", cfg.model_id, "responder model id")->capture_default_str();
    run->add_option("--premise", premise, "NLI premises")
        ->check(CLI::IsMember({"reference", "self"}))
        ->capture_default_str();
    run->add_option("--policy", policy)->check(CLI::IsMember({"oracle", "route", "both"}))->capture_default_str();
    run->add_option("--responder", cfg.responder, "'mock' or endpoint URL")->capture_default_str();
    run->add_option("--mock-fixture", cfg.responder_fixture, "canned answers for the mock responder");
    run->add_option("--mock-latency-ms", cfg.mock_latency_ms, "artificial mock latency")->group("");
    run->add_option("--rps", cfg.requests_per_second, "responder rate limit (0 = off)");
    run->add_option("--nli", cfg.nli, "'stub' or NLI service base URL")->capture_default_str();
    run->add_option("--nli-table", cfg.nli_table, "lookup table for the NLI stub");
    run->add_option("--nli-model", cfg.nli_model_id)->capture_default_str();
    run->add_option("--concurrency", cfg.concurrency, "max in-flight responder calls")->capture_default_str();
    run->add_option("--workers", cfg.workers, "records processed in parallel");
    run->add_option("--seed", cfg.seed)->capture_default_str();
    run->add_flag("--strict", cfg.strict, "missing images are errors");
    run->add_option("--stop-after", stop_after, "halt after a stage")
        ->check(CLI::IsMember({"variant_built", "generated", "scored"}));
    run->add_option("--log-level", log_level)->capture_default_str();

    std::string report_dir;
    auto* report = app.add_subcommand("report", "re-emit artifacts from a finished run");
    report->add_option("--run", report_dir, "run output directory")->required();

    std::string filter_in;
    std::string filter_out;
    vhm::FilterSpec filter_spec;
    std::string filter_nr_mode = "pure";
    auto* filters = app.add_subcommand("filters", "write the ORG/NR/EE variants of one image");
    filters->add_option("--in", filter_in, "input PNG or JPEG")->required();
    filters->add_option("--out", filter_out, "output directory")->required();
    filters->add_option("--kernel", filter_spec.kernel_size)->capture_default_str();
    filters->add_option("--nr-mode", filter_nr_mode)->check(CLI::IsMember({"pure", "blended"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) {
            spdlog::set_level(spdlog::level::from_str(log_level));
            if (limit > 0) cfg.limit = limit;
            cfg.cache_dir = cache_dir;
            cfg.nr_mode = parse_nr_mode(nr_mode);
            cfg.premise_mode = premise == "self" ? vhm::PremiseMode::SelfSamples : vhm::PremiseMode::Reference;
            if (policy == "oracle") cfg.policies = {vhm::Policy::OracleMin};
            else if (policy == "route") cfg.policies = {vhm::Policy::CategoryRoute};
            if (!stop_after.empty()) cfg.stop_after = vhm::parse_stage(stop_after);

            const auto outcome = vhm::run(cfg);
            print_stats(outcome.stats);
            if (outcome.stats.stopped_early) {
                std::cout << "stopped after stage " << stop_after << "\n";
                return kExitOk;
            }
            std::cout << "reports: " << cfg.out_dir.string() << "\n";
            return outcome.exit_code == 0 ? kExitOk : kExitQuarantine;
        }
        if (*report) {
            const auto files = vhm::rerun_report(report_dir);
            std::cout << "wrote " << files.summary_json.string() << "\n";
            return kExitOk;
        }
        if (*filters) {
            filter_spec.nr_mode = parse_nr_mode(filter_nr_mode);
            vhm::write_variants(filter_in, filter_out, filter_spec);
            std::cout << "wrote org.png nr.png ee.png to " << filter_out << "\n";
            return kExitOk;
        }
    } catch (const vhm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const vhm::InvalidArgument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
