#include "vhm/taxonomy.hpp"

#include <algorithm>
#include <bit>
#include <cctype>

#include "vhm/errors.hpp"

namespace vhm {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

/// Whitespace tokens, lowercased, with leading/trailing punctuation stripped.
std::vector<std::string> normalized_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::string_view raw = text.substr(start, i - start);
        std::size_t b = 0;
        std::size_t e = raw.size();
        while (b < e && !is_alnum(raw[b])) ++b;
        while (e > b && !is_alnum(raw[e - 1])) --e;
        if (b == e) continue;
        std::string tok(raw.substr(b, e - b));
        std::transform(tok.begin(), tok.end(), tok.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

}  // namespace

std::size_t CategorySet::size() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<QuestionCategory> CategorySet::members() const {
    std::vector<QuestionCategory> out;
    for (auto c : kAllCategories)
        if (contains(c)) out.push_back(c);
    return out;
}

std::string_view to_string(QuestionCategory c) noexcept {
    switch (c) {
        case QuestionCategory::ObjectIdentification: return "object_identification";
        case QuestionCategory::Quantity: return "quantity";
        case QuestionCategory::Color: return "color";
        case QuestionCategory::Other: return "other";
    }
    return "?";
}

std::optional<QuestionCategory> parse_category(std::string_view s) noexcept {
    for (auto c : kAllCategories)
        if (s == to_string(c)) return c;
    return std::nullopt;
}

CategorySet classify(std::string_view question) {
    const auto tokens = normalized_tokens(question);
    if (std::all_of(question.begin(), question.end(),
                    [](unsigned char c) { return std::isspace(c); }))
        throw InvalidArgument("classify: question is empty");

    CategorySet set;
    if (!tokens.empty()) {
        const auto& first = tokens.front();
        if (first == "what" || first == "where" || first == "which")
            set.insert(QuestionCategory::ObjectIdentification);
    }
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (tokens[i] == "how" && tokens[i + 1] == "many") {
            set.insert(QuestionCategory::Quantity);
            break;
        }
    }
    if (std::any_of(tokens.begin(), tokens.end(),
                    [](const std::string& t) { return t == "color" || t == "colour"; }))
        set.insert(QuestionCategory::Color);
    if (set.empty()) set.insert(QuestionCategory::Other);
    return set;
}

QuestionCategory primary_category(CategorySet set) {
    for (auto c : kPrimaryOrder)
        if (set.contains(c)) return c;
    return QuestionCategory::Other;
}

}  // namespace vhm
