#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vhm/nli.hpp"
#include "vhm/variant.hpp"

namespace vhm {

enum class PremiseMode { Reference, SelfSamples };

std::string_view to_string(PremiseMode m) noexcept;

struct SentenceScore {
    std::size_t sentence_index = 0;
    std::string sentence;
    std::vector<double> per_premise;  ///< contradiction probability against each premise
    double s_nli = 0.0;
};

struct ResponseScore {
    std::string record_id;
    Variant variant = Variant::Org;
    std::vector<SentenceScore> sentence_scores;
    double response_nli = 0.0;
    PremiseMode premise_mode = PremiseMode::Reference;
};

/// Rule-based splitter: breaks after . ! ? when followed by whitespace or
/// end of text. "e.g.", "i.e.", "etc.", "Mr.", "Dr." never end a sentence
/// mid-text. Throws EmptyInput when the text has no alphanumeric content.
std::vector<std::string> split_sentences(std::string_view text);

/// Two-class softmax exp(zc) / (exp(ze) + exp(zc)); the neutral logit is ignored.
double contradiction_probability(const NliLogits& logits);

/// Scores every sentence of `answer` against every premise (premise first,
/// sentence as hypothesis), averages over premises per sentence and then over
/// sentences.
ResponseScore score_response(std::string_view answer, const std::vector<std::string>& premises,
                             PremiseMode mode, NliClient& nli);

}  // namespace vhm
