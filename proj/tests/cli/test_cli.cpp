#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <signal.h>

#include <chrono>
#include <thread>

#include <json.hpp>

#include "process.hpp"
#include "test_support.hpp"
#include "vhm/codec.hpp"
#include "vhm/imaging.hpp"

using namespace vhm;
namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<std::string, std::string>> kQa{
    {"How many cats are in the picture?", "There are two cats in the picture."},
    {"What color is the bus?", "The bus is yellow."},
    {"Where is the ball?", "The ball is under the table."},
};

std::vector<std::string> run_args(const fs::path& manifest, const fs::path& out) {
    return {VHM_CLI_PATH, "run", "--manifest", manifest.string(), "--out", out.string(),
            "--kernel", "3", "--workers", "2", "--seed", "5"};
}

}  // namespace

TEST_CASE("run, rerun from cache, and regenerate reports") {
    test::TempDir dir("cli");
    const auto manifest = test::write_fixture_corpus(dir / "corpus", 4, kQa);
    const auto first = test::run_process(run_args(manifest, dir / "out"), dir / "first.log");
    REQUIRE_MESSAGE(first.exit_code == 0, first.output);
    CHECK(test::stat_line(first.output, "responder calls") == 12);
    CHECK(test::stat_line(first.output, "records") == 4);
    const auto summary = test::read_text(dir / "out" / "summary.json");
    const auto per_record = test::read_text(dir / "out" / "per_record.csv");

    const auto second = test::run_process(run_args(manifest, dir / "out"), dir / "second.log");
    CHECK(second.exit_code == 0);
    CHECK(test::stat_line(second.output, "responder calls") == 0);
    CHECK(test::stat_line(second.output, "generation cache hits") == 12);
    CHECK(test::read_text(dir / "out" / "summary.json") == summary);

    fs::remove(dir / "out" / "per_record.csv");
    const auto report = test::run_process({VHM_CLI_PATH, "report", "--run", (dir / "out").string()}, dir / "report.log");
    CHECK(report.exit_code == 0);
    CHECK(test::read_text(dir / "out" / "per_record.csv") == per_record);
}

TEST_CASE("exit codes") {
    test::TempDir dir("cli");
    const auto manifest = test::write_fixture_corpus(dir / "corpus", 3, kQa);

    CHECK(test::run_process({VHM_CLI_PATH, "--help"}, dir / "help.log").exit_code == 0);
    CHECK(test::run_process({VHM_CLI_PATH, "run", "--out", (dir / "x").string()}, dir / "noarg.log").exit_code == 1);

    auto bad_kernel = run_args(manifest, dir / "bad");
    bad_kernel[7] = "4";
    const auto bad = test::run_process(bad_kernel, dir / "bad.log");
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("config error") != std::string::npos);

    fs::remove(dir / "corpus" / "images" / "img1.png");
    const auto partial = test::run_process(run_args(manifest, dir / "partial"), dir / "partial.log");
    CHECK(partial.exit_code == 2);
    CHECK(test::stat_line(partial.output, "quarantined") == 1);

    auto strict = run_args(manifest, dir / "strict");
    strict.push_back("--strict");
    CHECK(test::run_process(strict, dir / "strict.log").exit_code == 1);

    auto auth = run_args(manifest, dir / "auth");
    auth.insert(auth.end(), {"--nli", "ftp://nowhere"});
    CHECK(test::run_process(auth, dir / "auth.log").exit_code == 1);
}

TEST_CASE("filters writes the three variants") {
    test::TempDir dir("cli");
    std::mt19937_64 rng(1);
    const auto img = test::random_image(rng, 31, 17);
    codec::write_png(dir / "in.png", img);
    const auto r = test::run_process({VHM_CLI_PATH, "filters", "--in", (dir / "in.png").string(), "--out",
                                      (dir / "variants").string(), "--kernel", "3"},
                                     dir / "filters.log");
    REQUIRE(r.exit_code == 0);
    CHECK(codec::read_image(dir / "variants" / "org.png") == img);
    CHECK(codec::read_image(dir / "variants" / "nr.png") == median_filter(img, 3));
    CHECK(codec::read_image(dir / "variants" / "ee.png") == apply_variant(img, {.variant = Variant::Ee}));
}

TEST_CASE("SIGKILL mid-run, then resume without repeating cached generations") {
    test::TempDir dir("cli");
    const int records = 10;
    const auto manifest = test::write_fixture_corpus(dir / "corpus", records, kQa);
    const auto args = run_args(manifest, dir / "out");
    auto slow = args;
    slow.insert(slow.end(), {"--mock-latency-ms", "100"});

    const pid_t pid = test::spawn(slow, dir / "killed.log");
    const auto cache = dir / "out" / "cache";
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
    while (test::complete_generations(cache, 3) < 5 && std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    ::kill(pid, SIGKILL);
    REQUIRE(test::wait_for(pid) == 128 + SIGKILL);
    CHECK_FALSE(fs::exists(dir / "out" / "summary.json"));

    const auto cached = test::complete_generations(cache, 3);
    REQUIRE(cached > 0);
    REQUIRE(cached < 3 * records);

    const auto resumed = test::run_process(args, dir / "resumed.log");
    REQUIRE_MESSAGE(resumed.exit_code == 0, resumed.output);
    CHECK(test::stat_line(resumed.output, "generation cache hits") == static_cast<long>(cached));
    CHECK(test::stat_line(resumed.output, "responder calls") == static_cast<long>(3 * records - cached));

    // Same scores as an uninterrupted run elsewhere.
    const auto clean = test::run_process(run_args(manifest, dir / "clean"), dir / "clean.log");
    REQUIRE(clean.exit_code == 0);
    for (const char* f : {"scores.jsonl", "case_counts.csv", "per_record.csv", "routing.json"})
        CHECK(test::read_text(dir / "out" / f) == test::read_text(dir / "clean" / f));
}
