#include "vhm/ensemble.hpp"

#include <array>

namespace vhm {

using nlohmann::json;

namespace {

std::size_t slot(Variant v) noexcept { return static_cast<std::size_t>(v); }

/// Index of the smallest value, scanning in kAllVariants order with strict <.
Variant argmin(const std::array<double, 3>& by_variant) {
    Variant best = kAllVariants[0];
    for (Variant v : kAllVariants)
        if (by_variant[slot(v)] < by_variant[slot(best)]) best = v;
    return best;
}

void require_complete(const VariantScoreTriple& t) {
    if (!t.complete()) throw IncompleteRecord("record '" + t.record_id + "' is missing a variant score");
}

void require_aligned(const std::vector<VariantScoreTriple>& triples, const std::vector<CategorySet>& categories) {
    if (triples.size() != categories.size())
        throw InvalidArgument("triples and categories must be aligned");
}

struct MeanAccumulator {
    std::array<double, 3> sum{};
    std::size_t n = 0;

    void add(const VariantScoreTriple& t) {
        for (Variant v : kAllVariants) sum[slot(v)] += *t.score(v);
        ++n;
    }
    std::array<double, 3> means() const {
        std::array<double, 3> m{};
        for (std::size_t i = 0; i < 3; ++i) m[i] = sum[i] / static_cast<double>(n);
        return m;
    }
};

}  // namespace

std::optional<double> VariantScoreTriple::score(Variant v) const noexcept {
    switch (v) {
        case Variant::Org: return org;
        case Variant::Nr: return nr;
        case Variant::Ee: return ee;
    }
    return std::nullopt;
}

void VariantScoreTriple::set(Variant v, double value) noexcept {
    switch (v) {
        case Variant::Org: org = value; break;
        case Variant::Nr: nr = value; break;
        case Variant::Ee: ee = value; break;
    }
}

std::string_view to_string(Policy p) noexcept {
    return p == Policy::OracleMin ? "oracle_min" : "category_route";
}

EnsembleDecision oracle_min(const VariantScoreTriple& t) {
    require_complete(t);
    const std::array<double, 3> s{*t.org, *t.nr, *t.ee};
    const Variant best = argmin(s);
    return {t.record_id, best, s[slot(best)], Policy::OracleMin};
}

json routing_to_json(const RoutingTable& table) {
    json j = json::object();
    for (const auto& [cat, v] : table) j[std::string(to_string(cat))] = std::string(to_string(v));
    return j;
}

RoutingTable routing_from_json(const json& j) {
    RoutingTable table;
    for (const auto& [k, v] : j.items()) {
        auto cat = parse_category(k);
        auto var = parse_variant(v.get<std::string>());
        if (!cat || !var) throw InvalidArgument("routing table entry " + k + " is invalid");
        table[*cat] = *var;
    }
    return table;
}

RoutingTable fit_routing(const std::vector<VariantScoreTriple>& triples, const std::vector<CategorySet>& categories) {
    require_aligned(triples, categories);
    MeanAccumulator global;
    std::map<QuestionCategory, MeanAccumulator> per_category;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (!triples[i].complete()) continue;
        global.add(triples[i]);
        for (auto c : categories[i].members()) per_category[c].add(triples[i]);
    }
    if (global.n == 0) throw EmptyInput("fit_routing: no complete records");

    const Variant fallback = argmin(global.means());
    RoutingTable table;
    for (auto c : kAllCategories) {
        auto it = per_category.find(c);
        table[c] = it == per_category.end() ? fallback : argmin(it->second.means());
    }
    return table;
}

std::vector<EnsembleDecision> apply_routing(const RoutingTable& table, const std::vector<VariantScoreTriple>& triples,
                                            const std::vector<CategorySet>& categories) {
    require_aligned(triples, categories);
    std::vector<EnsembleDecision> out;
    out.reserve(triples.size());
    for (std::size_t i = 0; i < triples.size(); ++i) {
        require_complete(triples[i]);
        const auto primary = primary_category(categories[i]);
        auto it = table.find(primary);
        if (it == table.end())
            throw InvalidArgument("routing table has no entry for " + std::string(to_string(primary)));
        out.push_back({triples[i].record_id, it->second, *triples[i].score(it->second), Policy::CategoryRoute});
    }
    return out;
}

RoutedDecisions category_route(const std::vector<VariantScoreTriple>& triples,
                               const std::vector<CategorySet>& categories) {
    if (triples.empty()) throw EmptyInput("category_route: no records");
    RoutedDecisions out;
    out.table = fit_routing(triples, categories);
    out.decisions = apply_routing(out.table, triples, categories);
    return out;
}

}  // namespace vhm
