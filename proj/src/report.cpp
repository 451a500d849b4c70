#include "vhm/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include <spdlog/spdlog.h>

#include "vhm/cache.hpp"

namespace vhm {

using nlohmann::json;

namespace {

std::size_t idx(CaseRow r) { return static_cast<std::size_t>(r); }

std::optional<CaseColumn> column_for(QuestionCategory c) {
    switch (c) {
        case QuestionCategory::ObjectIdentification: return CaseColumn::ObjectIdentification;
        case QuestionCategory::Quantity: return CaseColumn::Quantity;
        case QuestionCategory::Color: return CaseColumn::Color;
        case QuestionCategory::Other: return CaseColumn::Other;
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(CaseRow r) noexcept {
    switch (r) {
        case CaseRow::EeBest: return "NLI_EE < NLI_NR & NLI_EE < NLI_org";
        case CaseRow::NrBest: return "NLI_NR < NLI_EE & NLI_NR < NLI_org";
        case CaseRow::OrgBest: return "NLI_org < NLI_EE & NLI_org < NLI_NR";
        case CaseRow::EeBeatsOrg: return "NLI_EE < NLI_org";
        case CaseRow::NrBeatsOrg: return "NLI_NR < NLI_org";
        case CaseRow::NrBeatsEe: return "NLI_NR < NLI_EE";
        case CaseRow::NoStrictBest: return "tie: no strict lowest";
        case CaseRow::TieEeOrg: return "tie: NLI_EE = NLI_org";
        case CaseRow::TieNrOrg: return "tie: NLI_NR = NLI_org";
        case CaseRow::TieNrEe: return "tie: NLI_NR = NLI_EE";
    }
    return "?";
}

std::string_view to_string(CaseColumn c) noexcept {
    switch (c) {
        case CaseColumn::All: return "all";
        case CaseColumn::ObjectIdentification: return "object_identification";
        case CaseColumn::Quantity: return "quantity";
        case CaseColumn::Color: return "color";
        case CaseColumn::Other: return "other";
    }
    return "?";
}

CaseCounts case_counts(const std::vector<VariantScoreTriple>& triples, const std::vector<CategorySet>& categories) {
    if (triples.size() != categories.size()) throw InvalidArgument("triples and categories must be aligned");
    CaseCounts out;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const auto& t = triples[i];
        if (!t.complete()) {
            spdlog::warn("case_counts: excluding incomplete record '{}'", t.record_id);
            ++out.excluded;
            continue;
        }
        const double org = *t.org, ee = *t.ee, nr = *t.nr;
        std::array<bool, kCaseRows> hit{};
        hit[idx(CaseRow::EeBest)] = ee < nr && ee < org;
        hit[idx(CaseRow::NrBest)] = nr < ee && nr < org;
        hit[idx(CaseRow::OrgBest)] = org < ee && org < nr;
        hit[idx(CaseRow::EeBeatsOrg)] = ee < org;
        hit[idx(CaseRow::NrBeatsOrg)] = nr < org;
        hit[idx(CaseRow::NrBeatsEe)] = nr < ee;
        hit[idx(CaseRow::NoStrictBest)] =
            !(hit[idx(CaseRow::EeBest)] || hit[idx(CaseRow::NrBest)] || hit[idx(CaseRow::OrgBest)]);
        hit[idx(CaseRow::TieEeOrg)] = ee == org;
        hit[idx(CaseRow::TieNrOrg)] = nr == org;
        hit[idx(CaseRow::TieNrEe)] = nr == ee;

        std::vector<std::size_t> cols{static_cast<std::size_t>(CaseColumn::All)};
        for (auto c : categories[i].members()) cols.push_back(static_cast<std::size_t>(*column_for(c)));
        for (auto col : cols) {
            ++out.records[col];
            for (std::size_t r = 0; r < kCaseRows; ++r)
                if (hit[r]) ++out.counts[r][col];
        }
    }
    return out;
}

SummaryStats summarize(const std::vector<VariantScoreTriple>& triples, const std::vector<EnsembleDecision>& decisions) {
    if (triples.empty() || decisions.empty()) throw EmptyInput("summarize: empty run");
    if (triples.size() != decisions.size()) throw InvalidArgument("summarize: triples and decisions differ in length");
    SummaryStats s;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const auto& t = triples[i];
        if (!t.complete()) throw IncompleteRecord("summarize: record '" + t.record_id + "' is incomplete");
        if (decisions[i].record_id != t.record_id)
            throw InvalidArgument("summarize: decision order does not match records");
        s.mean_org += *t.org;
        s.mean_ee += *t.ee;
        s.mean_nr += *t.nr;
        s.mean_ensemble += decisions[i].chosen_score;
    }
    const double n = static_cast<double>(triples.size());
    s.records = triples.size();
    s.mean_org /= n;
    s.mean_ee /= n;
    s.mean_nr /= n;
    s.mean_ensemble /= n;
    if (s.mean_org > 0.0) s.reduction_pct = (s.mean_org - s.mean_ensemble) / s.mean_org * 100.0;
    return s;
}

json to_json(const SummaryStats& s) {
    json j{{"records", s.records},
           {"mean_org", s.mean_org},
           {"mean_ee", s.mean_ee},
           {"mean_nr", s.mean_nr},
           {"mean_ensemble", s.mean_ensemble}};
    j["reduction_pct"] = s.reduction_pct ? json(*s.reduction_pct) : json(nullptr);
    return j;
}

SummaryStats summary_from_json(const json& j) {
    SummaryStats s;
    s.records = j.at("records").get<std::size_t>();
    s.mean_org = j.at("mean_org").get<double>();
    s.mean_ee = j.at("mean_ee").get<double>();
    s.mean_nr = j.at("mean_nr").get<double>();
    s.mean_ensemble = j.at("mean_ensemble").get<double>();
    if (!j.at("reduction_pct").is_null()) s.reduction_pct = j.at("reduction_pct").get<double>();
    return s;
}

std::string format_reduction(const SummaryStats& s) {
    if (!s.reduction_pct) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", *s.reduction_pct);
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

ReportFiles emit(const ScoredRun& run, const std::filesystem::path& out_dir) {
    if (run.triples.empty()) throw EmptyInput("emit: empty run (no complete records)");

    const bool want_oracle = std::find(run.policies.begin(), run.policies.end(), Policy::OracleMin) != run.policies.end();
    const bool want_route = std::find(run.policies.begin(), run.policies.end(), Policy::CategoryRoute) != run.policies.end();

    std::vector<EnsembleDecision> oracle;
    if (want_oracle)
        for (const auto& t : run.triples) oracle.push_back(oracle_min(t));
    std::optional<RoutedDecisions> routed;
    if (want_route) routed = category_route(run.triples, run.categories);

    ReportFiles files;
    files.case_counts_csv = out_dir / "case_counts.csv";
    files.summary_json = out_dir / "summary.json";
    files.per_record_csv = out_dir / "per_record.csv";

    // Winner table.
    const auto counts = case_counts(run.triples, run.categories);
    std::string csv = "case";
    for (std::size_t c = 0; c < kCaseColumns; ++c) csv += "," + std::string(to_string(static_cast<CaseColumn>(c)));
    csv += "\nrecords";
    for (std::size_t c = 0; c < kCaseColumns; ++c) csv += "," + std::to_string(counts.records[c]);
    csv += '\n';
    for (std::size_t r = 0; r < kCaseRows; ++r) {
        csv += csv_field(to_string(static_cast<CaseRow>(r)));
        for (std::size_t c = 0; c < kCaseColumns; ++c) csv += "," + std::to_string(counts.counts[r][c]);
        csv += '\n';
    }
    atomic_write(files.case_counts_csv, csv);

    // Summary.
    json summary{{"config", run.config},
                 {"records", {{"total", run.records_total},
                              {"complete", run.triples.size()},
                              {"quarantined", run.quarantined.size()}}},
                 {"quarantine", json::array()},
                 {"policies", json::object()}};
    for (const auto& q : run.quarantined) summary["quarantine"].push_back({{"record_id", q.record_id}, {"reason", q.reason}});
    if (want_oracle) summary["policies"]["oracle_min"] = to_json(summarize(run.triples, oracle));
    if (want_route) {
        auto s = to_json(summarize(run.triples, routed->decisions));
        s["routing"] = routing_to_json(routed->table);
        summary["policies"]["category_route"] = s;
    }
    atomic_write(files.summary_json, summary.dump(2) + "\n");

    // Long-format per-record series.
    std::string series = "record_id,variant,score";
    if (want_oracle) series += ",chosen_oracle_min";
    if (want_route) series += ",chosen_category_route";
    series += '\n';
    for (std::size_t i = 0; i < run.triples.size(); ++i) {
        for (Variant v : kAllVariants) {
            series += csv_field(run.triples[i].record_id) + "," + std::string(to_string(v)) + "," +
                      format_double(*run.triples[i].score(v));
            if (want_oracle) series += oracle[i].chosen_variant == v ? ",1" : ",0";
            if (want_route) series += routed->decisions[i].chosen_variant == v ? ",1" : ",0";
            series += '\n';
        }
    }
    atomic_write(files.per_record_csv, series);

    if (want_route) {
        files.routing_json = out_dir / "routing.json";
        atomic_write(*files.routing_json, routing_to_json(routed->table).dump(2) + "\n");
    }
    return files;
}

}  // namespace vhm
