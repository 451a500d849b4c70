#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vhm/scoring.hpp"

using namespace vhm;

namespace {

/// Returns scripted probabilities as logits (ze = 0, zc = logit(p)), in call order.
class ScriptedNli : public NliClient {
public:
    explicit ScriptedNli(std::vector<double> probs) : probs_(std::move(probs)) {}
    std::vector<NliLogits> infer(std::span<const NliPair> pairs) override {
        std::vector<NliLogits> out;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const double p = probs_.at(next_++ % probs_.size());
            out.push_back({0.0, 0.0, std::log(p / (1.0 - p))});
        }
        seen.insert(seen.end(), pairs.begin(), pairs.end());
        return out;
    }
    std::string identity() const override { return "scripted"; }
    std::vector<NliPair> seen;

private:
    std::vector<double> probs_;
    std::size_t next_ = 0;
};

/// Probability looked up by premise text, independent of call order.
class PremiseKeyedNli : public NliClient {
public:
    std::vector<NliLogits> infer(std::span<const NliPair> pairs) override {
        std::vector<NliLogits> out;
        for (const auto& p : pairs) {
            const double prob = 0.05 + 0.9 * static_cast<double>(std::hash<std::string>{}(p.premise + "|" + p.hypothesis) % 1000) / 1000.0;
            out.push_back({0.0, 1.0, std::log(prob / (1.0 - prob))});
        }
        return out;
    }
    std::string identity() const override { return "keyed"; }
};

}  // namespace

TEST_CASE("split_sentences") {
    using V = std::vector<std::string>;
    CHECK(split_sentences("There are two jellyfish pictured.") == V{"There are two jellyfish pictured."});
    CHECK(split_sentences("A. B! C?") == V{"A.", "B!", "C?"});
    CHECK(split_sentences("See e.g. the cat. It sits.") == V{"See e.g. the cat.", "It sits."});
    CHECK(split_sentences("Ask Dr. Smith, i.e. the vet. Then leave") == V{"Ask Dr. Smith, i.e. the vet.", "Then leave"});
    CHECK(split_sentences("It costs 3.50 dollars. Really?!  Yes.") == V{"It costs 3.50 dollars.", "Really?!", "Yes."});
    CHECK(split_sentences("He said \"stop.\" Then he left.") == V{"He said \"stop.\"", "Then he left."});
    CHECK(split_sentences("  no terminal punctuation  ") == V{"no terminal punctuation"});
    CHECK(split_sentences("Cats, dogs, etc.") == V{"Cats, dogs, etc."});
    CHECK(split_sentences("Hi. ... Bye.") == V{"Hi.", "Bye."});
}

TEST_CASE("split_sentences rejects text without alphanumerics") {
    CHECK_THROWS_AS(split_sentences(""), EmptyInput);
    CHECK_THROWS_AS(split_sentences(" ?! ..."), EmptyInput);
}

TEST_CASE("contradiction_probability") {
    CHECK(contradiction_probability({0.0, 123.0, 0.0}) == 0.5);
    CHECK(contradiction_probability({0.0, -7.0, 0.0}) == 0.5);
    CHECK(contradiction_probability({0.0, 0.0, 50.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(1.0 - contradiction_probability({0.0, 0.0, 50.0}) <= 1e-15);
    CHECK(contradiction_probability({2.0, 0.0, -1.0}) == doctest::Approx(0.04742587).epsilon(1e-7));
    CHECK(std::abs(contradiction_probability({2.0, 0.0, -1.0}) - 1.0 / (1.0 + std::exp(3.0))) < 1e-15);
    CHECK(contradiction_probability({1000.0, 0.0, -1000.0}) == 0.0);
    CHECK(contradiction_probability({-1000.0, 0.0, 1000.0}) == 1.0);
}

TEST_CASE("contradiction_probability rejects non-finite logits") {
    const double inf = std::numeric_limits<double>::infinity();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(contradiction_probability({inf, 0, 0}), InvalidArgument);
    CHECK_THROWS_AS(contradiction_probability({0, nan, 0}), InvalidArgument);
    CHECK_THROWS_AS(contradiction_probability({0, 0, -inf}), InvalidArgument);
}

TEST_CASE("contradiction_probability monotonicity and range") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> z(-15.0, 15.0);
    std::uniform_real_distribution<double> step(1e-3, 2.0);
    for (int i = 0; i < 10000; ++i) {
        const double ze = z(rng), zc = z(rng), d = step(rng);
        const double p = contradiction_probability({ze, 0, zc});
        REQUIRE(p >= 0.0);
        REQUIRE(p <= 1.0);
        REQUIRE(contradiction_probability({ze, 0, zc + d}) > p);
        REQUIRE(contradiction_probability({ze + d, 0, zc}) < p);
    }
}

TEST_CASE("score_response: self-entailment scores near zero") {
    class SelfNli : public NliClient {
    public:
        std::vector<NliLogits> infer(std::span<const NliPair> pairs) override {
            std::vector<NliLogits> out;
            for (const auto& p : pairs) out.push_back(p.premise == p.hypothesis ? NliLogits{10, 0, -10} : NliLogits{0, 0, 0});
            return out;
        }
        std::string identity() const override { return "self"; }
    } nli;
    const auto s = score_response("The hose is black.", {"The hose is black."}, PremiseMode::Reference, nli);
    CHECK(s.response_nli == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(s.sentence_scores.size() == 1);
    CHECK(s.response_nli == s.sentence_scores[0].s_nli);
}

TEST_CASE("score_response: constant probabilities average to the constant") {
    ScriptedNli nli({0.4});
    const auto s = score_response("One thing. Another thing.", {"a", "b", "c"}, PremiseMode::SelfSamples, nli);
    CHECK(s.sentence_scores.size() == 2);
    CHECK(s.response_nli == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(nli.seen.size() == 6);
    CHECK(s.premise_mode == PremiseMode::SelfSamples);
}

TEST_CASE("score_response: nested mean") {
    ScriptedNli nli({0.2, 0.4, 0.6, 0.8});
    const auto s = score_response("First. Second.", {"p1", "p2"}, PremiseMode::SelfSamples, nli);
    REQUIRE(s.sentence_scores.size() == 2);
    CHECK(s.sentence_scores[0].s_nli == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(s.sentence_scores[1].s_nli == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(s.response_nli == doctest::Approx(0.5).epsilon(1e-12));
    // premise first, sentence as hypothesis
    CHECK(nli.seen[0] == NliPair{"p1", "First."});
    CHECK(nli.seen[1] == NliPair{"p2", "First."});
    CHECK(nli.seen[2] == NliPair{"p1", "Second."});
}

TEST_CASE("score_response: premise permutation leaves sentence scores unchanged") {
    PremiseKeyedNli nli;
    std::mt19937_64 rng(4);
    std::vector<std::string> premises{"alpha one", "beta two", "gamma three", "delta four", "epsilon five"};
    const auto base = score_response("Cats sit. Dogs run! Birds fly?", premises, PremiseMode::SelfSamples, nli);
    for (int i = 0; i < 200; ++i) {
        std::shuffle(premises.begin(), premises.end(), rng);
        const auto s = score_response("Cats sit. Dogs run! Birds fly?", premises, PremiseMode::SelfSamples, nli);
        for (std::size_t k = 0; k < s.sentence_scores.size(); ++k)
            REQUIRE(s.sentence_scores[k].s_nli == base.sentence_scores[k].s_nli);
        REQUIRE(s.response_nli == base.response_nli);
    }
}

TEST_CASE("score_response errors") {
    ScriptedNli nli({0.5});
    CHECK_THROWS_AS(score_response("...", {"p"}, PremiseMode::Reference, nli), EmptyInput);
    CHECK_THROWS_AS(score_response("Fine.", {}, PremiseMode::Reference, nli), InvalidArgument);

    class FailingNli : public NliClient {
    public:
        std::vector<NliLogits> infer(std::span<const NliPair>) override { throw RetriableError("down"); }
        std::string identity() const override { return "failing"; }
    } failing;
    CHECK_THROWS_AS(score_response("Fine.", {"p"}, PremiseMode::Reference, failing), RetriableError);
}
