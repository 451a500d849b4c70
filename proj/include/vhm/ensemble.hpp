#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vhm/errors.hpp"
#include "vhm/taxonomy.hpp"
#include "vhm/variant.hpp"

namespace vhm {

/// NLI score of each variant's answer for one record. A missing entry makes
/// the record incomplete.
struct VariantScoreTriple {
    std::string record_id;
    std::optional<double> org;
    std::optional<double> ee;
    std::optional<double> nr;

    bool complete() const noexcept { return org && ee && nr; }
    std::optional<double> score(Variant v) const noexcept;
    void set(Variant v, double value) noexcept;
};

enum class Policy { OracleMin, CategoryRoute };
std::string_view to_string(Policy p) noexcept;

struct EnsembleDecision {
    std::string record_id;
    Variant chosen_variant = Variant::Org;
    double chosen_score = 0.0;
    Policy policy = Policy::OracleMin;
};

class IncompleteRecord : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Lowest of the three scores; ties prefer ORG, then NR, then EE.
EnsembleDecision oracle_min(const VariantScoreTriple& t);

using RoutingTable = std::map<QuestionCategory, Variant>;

nlohmann::json routing_to_json(const RoutingTable& table);
RoutingTable routing_from_json(const nlohmann::json& j);

/// Fit phase: per category, the variant with the lowest mean score over the
/// records carrying that category (overlapping records count in each).
/// Categories without records fall back to the globally best variant.
/// `categories` is aligned with `triples`; incomplete triples are ignored.
RoutingTable fit_routing(const std::vector<VariantScoreTriple>& triples,
                         const std::vector<CategorySet>& categories);

/// Apply phase: each record takes the variant routed for its primary category.
std::vector<EnsembleDecision> apply_routing(const RoutingTable& table,
                                            const std::vector<VariantScoreTriple>& triples,
                                            const std::vector<CategorySet>& categories);

struct RoutedDecisions {
    RoutingTable table;
    std::vector<EnsembleDecision> decisions;
};

/// Fit and apply on the same records.
RoutedDecisions category_route(const std::vector<VariantScoreTriple>& triples,
                               const std::vector<CategorySet>& categories);

}  // namespace vhm
