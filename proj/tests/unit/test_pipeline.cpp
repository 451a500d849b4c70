#include <doctest.h>

#include <json.hpp>

#include "test_support.hpp"
#include "vhm/corpus.hpp"
#include "vhm/pipeline.hpp"

using namespace vhm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<std::string, std::string>> kQa{
    {"How many buttons are there on the kitten's sweater?", "There are two buttons on the kitten's sweater."},
    {"What color is the hose?", "The hose is black."},
    {"What is the dog wearing?", "The dog is wearing a hoodie."},
    {"Is the sky clear today?", "Yes, the sky is clear."},
    {"What colour is the man's hair, and how many hats are there?", "The man's hair is black. There is one hat."},
};

const std::vector<std::string> kOutputs{"config.json",     "scores.jsonl", "run_index.json", "run_state.json",
                                        "case_counts.csv", "summary.json", "per_record.csv", "routing.json"};

RunConfig base_config(const test::TempDir& dir, int records = 5) {
    RunConfig c;
    c.manifest = test::write_fixture_corpus(dir / "corpus", records, kQa);
    c.out_dir = dir / "out";
    c.kernel_size = 5;
    c.seed = 17;
    c.workers = 3;
    return c;
}

std::map<std::string, std::string> snapshot(const fs::path& out) {
    std::map<std::string, std::string> files;
    for (const auto& name : kOutputs) {
        REQUIRE_MESSAGE(fs::exists(out / name), name);
        files[name] = test::read_text(out / name);
    }
    return files;
}

}  // namespace

TEST_CASE("second run is fully cached and byte-identical") {
    test::TempDir dir("pipe");
    const auto config = base_config(dir);

    const auto first = run(config);
    CHECK(first.exit_code == 0);
    CHECK(first.stats.records == 5);
    CHECK(first.stats.complete == 5);
    CHECK(first.stats.generation_calls == 15);
    CHECK(first.stats.generation_cache_hits == 0);
    CHECK(first.stats.variant_builds == 15);
    const auto before = snapshot(config.out_dir);

    MockResponder mock({.seed = config.seed});
    const auto second = run(config, {.responder = &mock});
    CHECK(mock.calls() == 0);
    CHECK(second.stats.generation_calls == 0);
    CHECK(second.stats.generation_cache_hits == 15);
    CHECK(second.stats.variant_cache_hits == 15);
    CHECK(second.stats.variant_builds == 0);
    CHECK(second.stats.score_cache_hits == 15);
    CHECK(second.stats.score_computations == 0);
    CHECK(snapshot(config.out_dir) == before);

    const auto scores = test::read_text(config.out_dir / "scores.jsonl");
    CHECK(std::count(scores.begin(), scores.end(), '\n') == 5);
}

TEST_CASE("different seed changes generations but not variants") {
    test::TempDir dir("pipe");
    auto config = base_config(dir, 3);
    run(config);
    config.seed = 18;
    const auto other = run(config);
    CHECK(other.stats.variant_cache_hits == 9);
    CHECK(other.stats.generation_calls == 9);
}

TEST_CASE("stop after generation, then resume without responder calls") {
    test::TempDir dir("pipe");
    auto config = base_config(dir);
    config.stop_after = Stage::Generated;
    MockResponder first_mock({.seed = config.seed});
    const auto partial = run(config, {.responder = &first_mock});
    CHECK(partial.stats.stopped_early);
    CHECK(first_mock.calls() == 15);
    CHECK(partial.state.reached("r4", Variant::Ee, Stage::Generated));
    CHECK_FALSE(partial.state.reached("r4", Variant::Ee, Stage::Scored));
    CHECK_FALSE(fs::exists(config.out_dir / "summary.json"));
    CHECK(fs::exists(config.out_dir / "run_state.json"));

    config.stop_after.reset();
    MockResponder resumed({.seed = config.seed});
    const auto full = run(config, {.responder = &resumed});
    CHECK(resumed.calls() == 0);
    CHECK(full.stats.score_computations == 15);
    CHECK(full.exit_code == 0);
    CHECK(full.state.reached("r0", Variant::Org, Stage::Scored));

    // Same scores as an uninterrupted run.
    test::TempDir fresh("pipe");
    const auto clean = base_config(fresh);
    run(clean);
    CHECK(test::read_text(config.out_dir / "scores.jsonl") == test::read_text(clean.out_dir / "scores.jsonl"));
}

TEST_CASE("failing and unreadable records are quarantined, not fatal") {
    test::TempDir dir("pipe");
    auto config = base_config(dir);
    fs::remove(dir / "corpus" / "images" / "img3.png");
    MockResponder mock({.seed = config.seed, .failing_records = {"r1"}});
    const auto out = run(config, {.responder = &mock});
    CHECK(out.exit_code == 2);
    CHECK(out.stats.records == 5);
    CHECK(out.stats.quarantined == 2);
    CHECK(out.stats.complete == out.stats.records - out.stats.quarantined);

    const auto summary = json::parse(test::read_text(config.out_dir / "summary.json"));
    CHECK(summary["records"]["quarantined"] == 2);
    CHECK(summary["policies"]["oracle_min"]["records"] == 3);
    const auto index = json::parse(test::read_text(config.out_dir / "run_index.json"));
    REQUIRE(index["quarantined"].size() == 2);
    CHECK(index["quarantined"][0]["record_id"] == "r1");
    CHECK(index["quarantined"][0]["reason"].get<std::string>().find("generation ORG") != std::string::npos);
    CHECK(index["quarantined"][1]["reason"].get<std::string>().find("not found") != std::string::npos);

    config.strict = true;
    CHECK_THROWS_AS(run(config), ManifestError);
}

TEST_CASE("fatal configuration errors abort before work") {
    test::TempDir dir("pipe");
    auto config = base_config(dir);
    SUBCASE("even kernel") { config.kernel_size = 4; }
    SUBCASE("missing manifest") { config.manifest = dir / "absent.jsonl"; }
    SUBCASE("self premises need two samples") {
        config.premise_mode = PremiseMode::SelfSamples;
        config.samples = 1;
    }
    SUBCASE("bad responder") { config.responder = "ftp://x"; }
    SUBCASE("no policies") { config.policies.clear(); }
    CHECK_THROWS_AS(run(config), ConfigError);
    CHECK_FALSE(fs::exists(config.out_dir / "summary.json"));
}

TEST_CASE("self-consistency premises run end to end") {
    test::TempDir dir("pipe");
    auto config = base_config(dir, 3);
    config.premise_mode = PremiseMode::SelfSamples;
    config.samples = 4;
    config.policies = {Policy::OracleMin};
    const auto out = run(config);
    CHECK(out.exit_code == 0);
    CHECK(out.stats.generation_calls == 9);
    CHECK_FALSE(fs::exists(config.out_dir / "routing.json"));
    for (const auto& t : out.scored.triples) {
        CHECK(*t.org >= 0.0);
        CHECK(*t.org <= 1.0);
    }
}

TEST_CASE("responder concurrency stays within the limit") {
    test::TempDir dir("pipe");
    auto config = base_config(dir, 8);
    config.workers = 8;
    config.concurrency = 2;
    MockResponder mock({.seed = 1, .latency = std::chrono::milliseconds(15)});
    run(config, {.responder = &mock});
    CHECK(mock.calls() == 24);
    CHECK(mock.max_in_flight() <= 2);
}

TEST_CASE("variant cache keys depend only on fields that affect the variant") {
    RunConfig a;
    RunConfig b = a;
    b.kernel_size = 7;
    const std::string sha(64, 'a');
    CHECK(variant_cache_key(sha, Variant::Org, a) == variant_cache_key(sha, Variant::Org, b));
    CHECK(variant_cache_key(sha, Variant::Ee, a) == variant_cache_key(sha, Variant::Ee, b));
    CHECK(variant_cache_key(sha, Variant::Nr, a) != variant_cache_key(sha, Variant::Nr, b));

    RunConfig c = a;
    c.blend.alpha = 2.0;
    CHECK(variant_cache_key(sha, Variant::Nr, a) == variant_cache_key(sha, Variant::Nr, c));
    CHECK(variant_cache_key(sha, Variant::Ee, a) != variant_cache_key(sha, Variant::Ee, c));
    c.nr_mode = NrMode::Blended;
    CHECK(variant_cache_key(sha, Variant::Nr, a) != variant_cache_key(sha, Variant::Nr, c));

    RunConfig d = a;
    d.samples = 9;
    d.seed = 3;
    for (Variant v : kAllVariants) CHECK(variant_cache_key(sha, v, a) == variant_cache_key(sha, v, d));
    CHECK(variant_cache_key(std::string(64, 'b'), Variant::Org, a) != variant_cache_key(sha, Variant::Org, a));
}

TEST_CASE("config JSON round trip and report regeneration") {
    test::TempDir dir("pipe");
    auto config = base_config(dir, 3);
    config.limit = 3;
    config.nr_mode = NrMode::Blended;
    config.premise_mode = PremiseMode::SelfSamples;
    config.policies = {Policy::CategoryRoute};
    CHECK(to_json(run_config_from_json(to_json(config))) == to_json(config));

    config = base_config(dir, 3);
    run(config);
    const auto before = snapshot(config.out_dir);
    for (const auto* name : {"case_counts.csv", "summary.json", "per_record.csv", "routing.json"})
        fs::remove(config.out_dir / name);
    rerun_report(config.out_dir);
    CHECK(snapshot(config.out_dir) == before);
}

TEST_CASE("stage names") {
    for (Stage s : {Stage::VariantBuilt, Stage::Generated, Stage::Scored}) CHECK(parse_stage(to_string(s)) == s);
    CHECK_FALSE(parse_stage("done"));
}
