#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vhm {

enum class QuestionCategory : std::uint8_t { ObjectIdentification, Quantity, Color, Other };

/// Small bitset over QuestionCategory; iteration order is the enum order.
class CategorySet {
public:
    CategorySet() = default;
    CategorySet(std::initializer_list<QuestionCategory> cats) {
        for (auto c : cats) insert(c);
    }

    void insert(QuestionCategory c) noexcept { bits_ |= mask(c); }
    bool contains(QuestionCategory c) const noexcept { return (bits_ & mask(c)) != 0; }
    bool empty() const noexcept { return bits_ == 0; }
    std::size_t size() const noexcept;
    std::vector<QuestionCategory> members() const;

    friend bool operator==(CategorySet, CategorySet) = default;

private:
    static std::uint8_t mask(QuestionCategory c) noexcept {
        return static_cast<std::uint8_t>(1u << static_cast<unsigned>(c));
    }
    std::uint8_t bits_ = 0;
};

inline constexpr QuestionCategory kAllCategories[] = {
    QuestionCategory::ObjectIdentification, QuestionCategory::Quantity,
    QuestionCategory::Color, QuestionCategory::Other};

/// Routing precedence for a record that belongs to several categories.
inline constexpr QuestionCategory kPrimaryOrder[] = {
    QuestionCategory::Quantity, QuestionCategory::Color,
    QuestionCategory::ObjectIdentification, QuestionCategory::Other};

std::string_view to_string(QuestionCategory c) noexcept;
std::optional<QuestionCategory> parse_category(std::string_view s) noexcept;

/// Lexical question-type rules, case-insensitive:
///   - ObjectIdentification: first token is what / where / which
///   - Quantity: the tokens "how many" appear consecutively
///   - Color: a token equals "color" or "colour"
///   - Other: none of the above
/// Throws InvalidArgument on a blank question.
CategorySet classify(std::string_view question);

/// First member of `set` in kPrimaryOrder.
QuestionCategory primary_category(CategorySet set);

}  // namespace vhm
