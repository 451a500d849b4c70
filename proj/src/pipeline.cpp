#include "vhm/pipeline.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "vhm/cache.hpp"
#include "vhm/codec.hpp"
#include "vhm/corpus.hpp"
#include "vhm/hashing.hpp"

namespace vhm {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Stage s) noexcept {
    switch (s) {
        case Stage::VariantBuilt: return "variant_built";
        case Stage::Generated: return "generated";
        case Stage::Scored: return "scored";
    }
    return "?";
}

std::optional<Stage> parse_stage(std::string_view s) noexcept {
    for (Stage st : {Stage::VariantBuilt, Stage::Generated, Stage::Scored})
        if (s == to_string(st)) return st;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Config

fs::path RunConfig::effective_cache_dir() const { return cache_dir.empty() ? out_dir / "cache" : cache_dir; }

void RunConfig::validate() const {
    if (manifest.empty()) throw ConfigError("--manifest is required");
    if (!fs::exists(manifest)) throw ConfigError("manifest not found: " + manifest.string());
    if (out_dir.empty()) throw ConfigError("--out is required");
    if (kernel_size < 3 || kernel_size % 2 == 0) throw ConfigError("--kernel must be odd and >= 3");
    if (!blend.finite()) throw ConfigError("blend weights must be finite");
    if (samples < 1) throw ConfigError("--samples must be >= 1");
    if (premise_mode == PremiseMode::SelfSamples && samples < 2)
        throw ConfigError("--premise self needs --samples >= 2");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (concurrency < 1) throw ConfigError("--concurrency must be >= 1");
    if (workers < 1) throw ConfigError("--workers must be >= 1");
    if (policies.empty()) throw ConfigError("at least one ensemble policy is required");
    if (responder != "mock" && responder.rfind("http://", 0) != 0 && responder.rfind("https://", 0) != 0)
        throw ConfigError("--responder must be 'mock' or an http(s) URL");
    if (nli != "stub" && nli.rfind("http://", 0) != 0 && nli.rfind("https://", 0) != 0)
        throw ConfigError("--nli must be 'stub' or an http(s) URL");
    if (!responder_fixture.empty() && !fs::exists(responder_fixture))
        throw ConfigError("responder fixture not found: " + responder_fixture.string());
    if (!nli_table.empty() && !fs::exists(nli_table))
        throw ConfigError("NLI table not found: " + nli_table.string());
}

json to_json(const RunConfig& c) {
    json policies = json::array();
    for (auto p : c.policies) policies.push_back(std::string(to_string(p)));
    return {{"manifest", c.manifest.string()},
            {"limit", c.limit ? json(*c.limit) : json(nullptr)},
            {"out_dir", c.out_dir.string()},
            {"cache_dir", c.cache_dir.string()},
            {"strict", c.strict},
            {"kernel_size", c.kernel_size},
            {"nr_mode", c.nr_mode == NrMode::PureMedian ? "pure" : "blended"},
            {"blend", {{"alpha", c.blend.alpha}, {"beta", c.blend.beta}, {"gamma", c.blend.gamma}}},
            {"samples", c.samples},
            {"temperature", c.temperature},
            {"model_id", c.model_id},
            {"premise_mode", std::string(to_string(c.premise_mode))},
            {"responder", c.responder},
            {"responder_fixture", c.responder_fixture.string()},
            {"mock_latency_ms", c.mock_latency_ms},
            {"requests_per_second", c.requests_per_second},
            {"nli", c.nli},
            {"nli_table", c.nli_table.string()},
            {"nli_model_id", c.nli_model_id},
            {"policies", policies},
            {"concurrency", c.concurrency},
            {"workers", c.workers},
            {"seed", c.seed},
            {"stop_after", c.stop_after ? json(std::string(to_string(*c.stop_after))) : json(nullptr)}};
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    c.manifest = j.at("manifest").get<std::string>();
    if (!j.at("limit").is_null()) c.limit = j.at("limit").get<std::size_t>();
    c.out_dir = j.at("out_dir").get<std::string>();
    c.cache_dir = j.at("cache_dir").get<std::string>();
    c.strict = j.at("strict").get<bool>();
    c.kernel_size = j.at("kernel_size").get<int>();
    c.nr_mode = j.at("nr_mode").get<std::string>() == "blended" ? NrMode::Blended : NrMode::PureMedian;
    c.blend = {j.at("blend").at("alpha").get<double>(), j.at("blend").at("beta").get<double>(),
               j.at("blend").at("gamma").get<double>()};
    c.samples = j.at("samples").get<int>();
    c.temperature = j.at("temperature").get<double>();
    c.model_id = j.at("model_id").get<std::string>();
    c.premise_mode = j.at("premise_mode").get<std::string>() == "self" ? PremiseMode::SelfSamples : PremiseMode::Reference;
    c.responder = j.at("responder").get<std::string>();
    c.responder_fixture = j.at("responder_fixture").get<std::string>();
    c.mock_latency_ms = j.at("mock_latency_ms").get<int>();
    c.requests_per_second = j.at("requests_per_second").get<double>();
    c.nli = j.at("nli").get<std::string>();
    c.nli_table = j.at("nli_table").get<std::string>();
    c.nli_model_id = j.at("nli_model_id").get<std::string>();
    c.policies.clear();
    for (const auto& p : j.at("policies")) {
        const auto s = p.get<std::string>();
        if (s == "oracle_min") c.policies.push_back(Policy::OracleMin);
        else if (s == "category_route") c.policies.push_back(Policy::CategoryRoute);
        else throw ConfigError("unknown policy " + s);
    }
    c.concurrency = j.at("concurrency").get<int>();
    c.workers = j.at("workers").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("stop_after").is_null()) c.stop_after = parse_stage(j.at("stop_after").get<std::string>());
    return c;
}

// ---------------------------------------------------------------------------
// State

void RunState::mark(const std::string& record_id, Variant v, Stage s) {
    int& level = progress_[record_id][v];
    level = std::max(level, static_cast<int>(s) + 1);
}

bool RunState::reached(const std::string& record_id, Variant v, Stage s) const {
    auto r = progress_.find(record_id);
    if (r == progress_.end()) return false;
    auto it = r->second.find(v);
    return it != r->second.end() && it->second > static_cast<int>(s);
}

json RunState::to_json() const {
    json j = json::object();
    for (const auto& [id, by_variant] : progress_) {
        for (Variant v : kAllVariants) {
            auto it = by_variant.find(v);
            const int level = it == by_variant.end() ? 0 : it->second;
            j[id][std::string(to_string(v))] = {{"variant_built", level >= 1}, {"generated", level >= 2}, {"scored", level >= 3}};
        }
    }
    return j;
}

// ---------------------------------------------------------------------------
// Run

std::string variant_cache_key(const std::string& source_sha, Variant v, const RunConfig& config) {
    json fields{{"stage", "variant"}, {"source_sha", source_sha}, {"variant", to_string(v)}};
    const json blend{config.blend.alpha, config.blend.beta, config.blend.gamma};
    if (v == Variant::Nr) {
        fields["kernel_size"] = config.kernel_size;
        fields["nr_mode"] = config.nr_mode == NrMode::PureMedian ? "pure" : "blended";
        if (config.nr_mode == NrMode::Blended) fields["blend"] = blend;
    } else if (v == Variant::Ee) {
        fields["blend"] = blend;
    }
    return ContentCache::key(fields);
}

namespace {

struct Counters {
    std::atomic<long> variant_hits{0}, variant_builds{0};
    std::atomic<long> generation_hits{0}, generation_calls{0};
    std::atomic<long> score_hits{0}, score_computations{0};
};

struct RecordResult {
    VariantScoreTriple triple;
    std::optional<std::string> quarantine_reason;
};

json response_to_json(const ResponseScore& r) {
    json sentences = json::array();
    for (const auto& s : r.sentence_scores)
        sentences.push_back({{"index", s.sentence_index}, {"sentence", s.sentence}, {"per_premise", s.per_premise}, {"s_nli", s.s_nli}});
    return {{"response_nli", r.response_nli}, {"sentences", sentences}};
}

class RecordProcessor {
public:
    RecordProcessor(const RunConfig& config, const ContentCache& cache, CachingResponder& responder, NliClient& nli,
                    RunState& state, std::mutex& state_mutex, Counters& counters)
        : config_(config), cache_(cache), responder_(responder), nli_(nli), state_(state),
          state_mutex_(state_mutex), counters_(counters) {}

    RecordResult process(const CorpusRecord& rec) {
        RecordResult result;
        result.triple.record_id = rec.id;
        if (rec.skippable) {
            result.quarantine_reason = rec.skip_reason;
            return result;
        }
        std::string stage = "image";
        try {
            const codec::Bytes source = fetch_image(rec, cache_);
            const std::string source_sha = sha256_hex(source);
            std::optional<ImageBuffer> decoded;

            // Fixed per-record order: ORG, then NR, then EE.
            for (Variant v : kAllVariants) {
                stage = "variant " + std::string(to_string(v));
                const codec::Bytes png = build_variant(source, source_sha, decoded, v);
                mark(rec.id, v, Stage::VariantBuilt);
                if (config_.stop_after == Stage::VariantBuilt) continue;

                stage = "generation " + std::string(to_string(v));
                const auto samples = generate(rec, v, png);
                mark(rec.id, v, Stage::Generated);
                if (config_.stop_after == Stage::Generated) continue;

                stage = "scoring " + std::string(to_string(v));
                result.triple.set(v, score(rec, v, samples));
                mark(rec.id, v, Stage::Scored);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const ContentError& e) {
            result.quarantine_reason = stage + ": " + e.what() + " (payload: " + e.payload().substr(0, 200) + ")";
        } catch (const std::exception& e) {
            result.quarantine_reason = stage + ": " + e.what();
        }
        if (result.quarantine_reason)
            spdlog::warn("record '{}' quarantined: {}", rec.id, *result.quarantine_reason);
        return result;
    }

private:
    void mark(const std::string& id, Variant v, Stage s) {
        std::lock_guard lock(state_mutex_);
        state_.mark(id, v, s);
    }

    codec::Bytes build_variant(const codec::Bytes& source, const std::string& source_sha,
                               std::optional<ImageBuffer>& decoded, Variant v) {
        const std::string key = variant_cache_key(source_sha, v, config_);
        if (auto hit = cache_.get("variant", key)) {
            ++counters_.variant_hits;
            return codec::Bytes(hit->begin(), hit->end());
        }
        if (!decoded) decoded = codec::decode(source);
        FilterSpec spec{v, config_.kernel_size, config_.nr_mode, config_.blend, BorderPolicy::Replicate};
        codec::Bytes png = codec::encode_png(apply_variant(*decoded, spec));
        cache_.put("variant", key, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
        ++counters_.variant_builds;
        return png;
    }

    std::vector<std::string> generate(const CorpusRecord& rec, Variant v, const codec::Bytes& png) {
        GenerationRequest req{rec.id, v, png, rec.question, config_.samples, config_.model_id, config_.temperature};
        auto response = responder_.generate(req);
        ++(response.from_cache ? counters_.generation_hits : counters_.generation_calls);
        return std::move(response.samples);
    }

    double score(const CorpusRecord& rec, Variant v, const std::vector<std::string>& samples) {
        json sample_hashes = json::array();
        for (const auto& s : samples) sample_hashes.push_back(sha256_hex(s));
        json fields{{"stage", "score"},
                    {"record_id", rec.id},
                    {"variant", to_string(v)},
                    {"nli", nli_.identity()},
                    {"premise_mode", to_string(config_.premise_mode)},
                    {"samples", sample_hashes}};
        if (config_.premise_mode == PremiseMode::Reference) fields["reference_sha"] = sha256_hex(rec.reference_answer);
        const std::string key = ContentCache::key(fields);
        if (auto hit = cache_.get("score", key)) {
            ++counters_.score_hits;
            return json::parse(*hit).at("variant_nli").get<double>();
        }

        json responses = json::array();
        double total = 0.0;
        for (std::size_t k = 0; k < samples.size(); ++k) {
            std::vector<std::string> premises;
            if (config_.premise_mode == PremiseMode::Reference) {
                premises.push_back(rec.reference_answer);
            } else {
                for (std::size_t j = 0; j < samples.size(); ++j)
                    if (j != k) premises.push_back(samples[j]);
            }
            auto rs = score_response(samples[k], premises, config_.premise_mode, nli_);
            rs.record_id = rec.id;
            rs.variant = v;
            total += rs.response_nli;
            responses.push_back(response_to_json(rs));
        }
        const double variant_nli = total / static_cast<double>(samples.size());
        cache_.put("score", key, json{{"variant_nli", variant_nli}, {"responses", responses}}.dump());
        ++counters_.score_computations;
        return variant_nli;
    }

    const RunConfig& config_;
    const ContentCache& cache_;
    CachingResponder& responder_;
    NliClient& nli_;
    RunState& state_;
    std::mutex& state_mutex_;
    Counters& counters_;
};

json categories_json(CategorySet set) {
    json arr = json::array();
    for (auto c : set.members()) arr.push_back(std::string(to_string(c)));
    return arr;
}

void write_scored_run(const ScoredRun& run, const fs::path& dir) {
    std::string lines;
    for (std::size_t i = 0; i < run.triples.size(); ++i) {
        const auto& t = run.triples[i];
        lines += json{{"record_id", t.record_id}, {"categories", categories_json(run.categories[i])},
                      {"org", *t.org}, {"ee", *t.ee}, {"nr", *t.nr}}
                     .dump();
        lines += '\n';
    }
    atomic_write(dir / "scores.jsonl", lines);

    json index{{"records_total", run.records_total}, {"quarantined", json::array()}};
    for (const auto& q : run.quarantined) index["quarantined"].push_back({{"record_id", q.record_id}, {"reason", q.reason}});
    atomic_write(dir / "run_index.json", index.dump(2) + "\n");
}

}  // namespace

RunOutcome run(const RunConfig& config, RunServices services) {
    config.validate();
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + config.out_dir.string() + ": " + ec.message());

    const auto manifest = load_manifest(config.manifest, {config.limit, config.strict});
    const ContentCache cache(config.effective_cache_dir());

    std::unique_ptr<Responder> owned_responder;
    Responder* base = services.responder;
    if (!base) {
        if (config.responder == "mock") {
            MockResponderOptions opts;
            opts.seed = config.seed;
            opts.latency = std::chrono::milliseconds(config.mock_latency_ms);
            if (!config.responder_fixture.empty()) opts.fixture = load_responder_fixture(config.responder_fixture);
            owned_responder = std::make_unique<MockResponder>(std::move(opts));
        } else {
            HttpResponderOptions opts;
            opts.endpoint = config.responder;
            opts.requests_per_second = config.requests_per_second;
            owned_responder = std::make_unique<HttpResponder>(std::move(opts));
        }
        base = owned_responder.get();
    }
    std::unique_ptr<NliClient> owned_nli;
    NliClient* nli = services.nli;
    if (!nli) {
        if (config.nli == "stub") {
            owned_nli = std::make_unique<StubNliClient>(config.nli_table.empty() ? StubNliClient()
                                                                                 : StubNliClient::from_file(config.nli_table));
        } else {
            auto http = std::make_unique<HttpNliClient>(HttpNliOptions{config.nli, config.nli_model_id});
            if (!http->healthy()) throw ConfigError("NLI service at " + config.nli + " is not healthy");
            owned_nli = std::move(http);
        }
        nli = owned_nli.get();
    }

    ConcurrencyLimitedResponder limited(*base, config.concurrency);
    CachingResponder responder(limited, cache);

    RunOutcome outcome;
    std::mutex state_mutex;
    Counters counters;
    RecordProcessor processor(config, cache, responder, *nli, outcome.state, state_mutex, counters);

    const auto& records = manifest.records;
    std::vector<RecordResult> results(records.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;
    {
        std::vector<std::jthread> pool;
        const int n_workers = std::max(1, std::min<int>(config.workers, static_cast<int>(records.size())));
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < records.size() && !abort; i = next++) {
                    try {
                        results[i] = processor.process(records[i]);
                    } catch (...) {
                        std::lock_guard lock(fatal_mutex);
                        if (!fatal) fatal = std::current_exception();
                        abort = true;
                    }
                }
            });
        }
    }  // barrier: all workers joined
    if (fatal) std::rethrow_exception(fatal);

    auto& stats = outcome.stats;
    stats.records = records.size();
    stats.variant_cache_hits = counters.variant_hits;
    stats.variant_builds = counters.variant_builds;
    stats.generation_cache_hits = counters.generation_hits;
    stats.generation_calls = counters.generation_calls;
    stats.score_cache_hits = counters.score_hits;
    stats.score_computations = counters.score_computations;

    atomic_write(config.out_dir / "run_state.json", outcome.state.to_json().dump(2) + "\n");
    if (config.stop_after && config.stop_after != Stage::Scored) {
        stats.stopped_early = true;
        return outcome;
    }

    auto& scored = outcome.scored;
    scored.config = to_json(config);
    scored.records_total = records.size();
    scored.policies = config.policies;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& r = results[i];
        if (!r.quarantine_reason && !r.triple.complete()) r.quarantine_reason = "missing variant score";
        if (r.quarantine_reason) {
            scored.quarantined.push_back({records[i].id, *r.quarantine_reason});
        } else {
            scored.triples.push_back(r.triple);
            scored.categories.push_back(records[i].categories);
        }
    }
    stats.complete = scored.triples.size();
    stats.quarantined = scored.quarantined.size();

    atomic_write(config.out_dir / "config.json", scored.config.dump(2) + "\n");
    write_scored_run(scored, config.out_dir);
    if (!scored.triples.empty()) {
        emit(scored, config.out_dir);
    } else {
        spdlog::error("no complete records; reports not written");
    }
    outcome.exit_code = scored.quarantined.empty() && !scored.triples.empty() ? 0 : 2;
    return outcome;
}

ReportFiles rerun_report(const fs::path& run_dir) {
    auto read_json = [&](const fs::path& p) {
        std::ifstream in(p);
        if (!in) throw IoError("cannot open " + p.string());
        return json::parse(in);
    };
    ScoredRun run;
    run.config = read_json(run_dir / "config.json");
    run.policies = run_config_from_json(run.config).policies;

    const json index = read_json(run_dir / "run_index.json");
    run.records_total = index.at("records_total").get<std::size_t>();
    for (const auto& q : index.at("quarantined"))
        run.quarantined.push_back({q.at("record_id").get<std::string>(), q.at("reason").get<std::string>()});

    std::ifstream in(run_dir / "scores.jsonl");
    if (!in) throw IoError("cannot open " + (run_dir / "scores.jsonl").string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        VariantScoreTriple t;
        t.record_id = j.at("record_id").get<std::string>();
        t.org = j.at("org").get<double>();
        t.ee = j.at("ee").get<double>();
        t.nr = j.at("nr").get<double>();
        CategorySet cats;
        for (const auto& c : j.at("categories")) {
            auto cat = parse_category(c.get<std::string>());
            if (!cat) throw IoError("unknown category in scores.jsonl");
            cats.insert(*cat);
        }
        run.triples.push_back(std::move(t));
        run.categories.push_back(cats);
    }
    return emit(run, run_dir);
}

void write_variants(const fs::path& image, const fs::path& out_dir, const FilterSpec& base) {
    const ImageBuffer src = codec::read_image(image);
    fs::create_directories(out_dir);
    for (Variant v : kAllVariants) {
        FilterSpec spec = base;
        spec.variant = v;
        std::string name(to_string(v));
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        codec::write_png(out_dir / (name + ".png"), apply_variant(src, spec));
    }
}

}  // namespace vhm
