#include "vhm/scoring.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "vhm/errors.hpp"

namespace vhm {

namespace {

bool has_alnum(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c); });
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

constexpr std::array<std::string_view, 5> kAbbreviations{"e.g.", "i.e.", "etc.", "mr.", "dr."};

/// Whether the word ending at text[dot] (inclusive) is a protected abbreviation.
bool ends_abbreviation(std::string_view text, std::size_t dot) {
    std::size_t start = dot;
    while (start > 0 && !is_space(text[start - 1])) --start;
    while (start < dot && (text[start] == '(' || text[start] == '"' || text[start] == '\'')) ++start;
    std::string word(text.substr(start, dot - start + 1));
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

}  // namespace

std::string_view to_string(PremiseMode m) noexcept {
    return m == PremiseMode::Reference ? "reference" : "self";
}

std::vector<std::string> split_sentences(std::string_view text) {
    if (!has_alnum(text)) throw EmptyInput("split_sentences: no alphanumeric content");

    std::vector<std::string> sentences;
    auto flush = [&](std::string_view fragment) {
        fragment = trim(fragment);
        if (has_alnum(fragment)) sentences.emplace_back(fragment);
    };

    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_terminal(text[i])) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end + 1 < text.size() && is_terminal(text[end + 1])) ++end;
        const bool single_dot = end == i && text[i] == '.';
        while (end + 1 < text.size() && is_closer(text[end + 1])) ++end;
        ++end;  // one past the boundary
        const bool at_break = end == text.size() || is_space(text[end]);
        if (at_break && !(single_dot && end < text.size() && ends_abbreviation(text, i))) {
            flush(text.substr(start, end - start));
            start = end;
        }
        i = end;
    }
    if (start < text.size()) flush(text.substr(start));
    if (sentences.empty()) throw EmptyInput("split_sentences: no sentences");
    return sentences;
}

double contradiction_probability(const NliLogits& z) {
    if (!std::isfinite(z.entail) || !std::isfinite(z.neutral) || !std::isfinite(z.contra))
        throw InvalidArgument("contradiction_probability: non-finite logit");
    // Subtract the larger logit before exponentiating.
    const double m = std::max(z.entail, z.contra);
    const double e = std::exp(z.entail - m);
    const double c = std::exp(z.contra - m);
    return c / (e + c);
}

ResponseScore score_response(std::string_view answer, const std::vector<std::string>& premises,
                             PremiseMode mode, NliClient& nli) {
    if (premises.empty()) throw InvalidArgument("score_response: no premises");
    const auto sentences = split_sentences(answer);

    std::vector<NliPair> pairs;
    pairs.reserve(sentences.size() * premises.size());
    for (const auto& sentence : sentences)
        for (const auto& premise : premises) pairs.push_back({premise, sentence});

    const auto logits = nli.infer(pairs);
    if (logits.size() != pairs.size())
        throw ContentError("NLI client returned wrong number of logits", {});

    ResponseScore out;
    out.premise_mode = mode;
    double total = 0.0;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
        SentenceScore ss;
        ss.sentence_index = s;
        ss.sentence = sentences[s];
        for (std::size_t p = 0; p < premises.size(); ++p)
            ss.per_premise.push_back(contradiction_probability(logits[s * premises.size() + p]));
        // Summed in sorted order so the mean is bit-identical under premise permutation.
        std::vector<double> sorted = ss.per_premise;
        std::sort(sorted.begin(), sorted.end());
        double sum = 0.0;
        for (double v : sorted) sum += v;
        ss.s_nli = sum / static_cast<double>(premises.size());
        total += ss.s_nli;
        out.sentence_scores.push_back(std::move(ss));
    }
    out.response_nli = total / static_cast<double>(sentences.size());
    return out;
}

}  // namespace vhm
