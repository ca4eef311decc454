#pragma once

// Report surface: assembles analysis results into a bundle shaped like the
// study's tables and renders it as a CSV file set, a single markdown
// document, or a lossless JSON form that keeps raw counts.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crashlens/classifier.hpp"
#include "crashlens/common.hpp"
#include "crashlens/crash_model.hpp"
#include "crashlens/factor_categories.hpp"
#include "crashlens/ingestion.hpp"
#include "crashlens/profiler.hpp"
#include "crashlens/stats.hpp"

namespace crashlens {

enum class ReportFormat { CsvSet, Markdown, Json };

inline std::optional<ReportFormat> report_format_from_token(std::string_view s) {
    std::string t = lower(s);
    if (t == "csv" || t == "csv_set") return ReportFormat::CsvSet;
    if (t == "md" || t == "markdown") return ReportFormat::Markdown;
    if (t == "json") return ReportFormat::Json;
    return std::nullopt;
}

inline constexpr std::array<MergedConfig, 7> kSelectedConfigs = {
    MergedConfig::ScpLd, MergedConfig::TipLd, MergedConfig::TapOd, MergedConfig::TapSd,
    MergedConfig::ReSd,  MergedConfig::HsOd,  MergedConfig::Sv,
};

struct SpeedRow {
    std::string label;
    SpeedTimeSummary posted;
    SpeedTimeSummary impact;
    SpeedTimeSummary tpei;
    std::size_t speeding_count = 0;
    std::size_t speeding_known_n = 0;

    auto operator<=>(const SpeedRow&) const = default;
};

struct FactorColumn {
    std::string label;
    std::uint64_t known_n = 0;
    std::array<std::uint64_t, kFactorCategoryCount> counts{};

    auto operator<=>(const FactorColumn&) const = default;
};

struct FactorMatrix {
    std::vector<FactorColumn> columns;  // Total first, then the selected configs

    auto operator<=>(const FactorMatrix&) const = default;
};

struct EvasiveColumn {
    std::string label;
    std::uint64_t known_n = 0;  // records with a known evasive action
    std::uint64_t brake = 0, swerve = 0, other = 0, no_action = 0;
    std::uint64_t attempted = 0;
    std::uint64_t sel_improper = 0, sel_proper = 0, sel_unknown = 0;
    struct ExecCell {
        std::uint64_t n = 0, improper = 0, proper = 0, unknown = 0;
        auto operator<=>(const ExecCell&) const = default;
    };
    ExecCell exec_brake, exec_swerve, exec_other;

    auto operator<=>(const EvasiveColumn&) const = default;
};

struct EvasiveMatrix {
    std::vector<EvasiveColumn> columns;  // Total first, then the selected configs

    auto operator<=>(const EvasiveMatrix&) const = default;
};

struct ProfileEntry {
    ConfigProfile profile;
    std::vector<SkillRecommendation> skills;

    auto operator<=>(const ProfileEntry&) const = default;
};

struct ReportBundle {
    FilterReport filter;
    std::vector<FrequencyTable> frequency;  // Total, Severe, NonSevere, L3, L1
    std::vector<SpeedRow> speed;            // selected configs + Total
    FactorMatrix factors;
    EvasiveMatrix evasive;
    std::vector<ProfileEntry> profiles;     // selected configs

    auto operator<=>(const ReportBundle&) const = default;
};

// ---------------------------------------------------------------------------
// Bundle construction
// ---------------------------------------------------------------------------

inline ReportBundle build_report_bundle(const std::vector<CrashRecord>& input,
                                        const ConfigRulebook& rulebook,
                                        const SkillRulebook& skills,
                                        const ProfileThresholds& thresholds = {}) {
    ReportBundle b;
    auto [study, report] = filter_study_population(input);
    b.filter = report;
    Partition part = partition(study, rulebook);
    b.filter.n_other_bucket = part.bucket(MergedConfig::OtherBucket).size();
    b.filter.n_selected_configs = part.total() - b.filter.n_other_bucket;

    b.frequency.push_back(frequency_table(part, [](const CrashRecord&) { return true; }, "Total"));
    b.frequency.push_back(frequency_table(
        part, [](const CrashRecord& r) { return is_severe(r) == std::optional<bool>(true); },
        "Severe"));
    b.frequency.push_back(frequency_table(
        part, [](const CrashRecord& r) { return is_severe(r) == std::optional<bool>(false); },
        "NonSevere"));
    b.frequency.push_back(frequency_table(
        part, [](const CrashRecord& r) { return r.ptw_class == PtwClass::L3Motorcycle; }, "L3"));
    b.frequency.push_back(frequency_table(
        part, [](const CrashRecord& r) { return r.ptw_class == PtwClass::L1Moped; }, "L1"));

    // Speed/TPEI rows per selected configuration plus a Total over them.
    std::vector<CrashRecord> selected_all;
    for (auto cfg : kSelectedConfigs) {
        const auto& bucket = part.bucket(cfg);
        selected_all.insert(selected_all.end(), bucket.begin(), bucket.end());
        SpeedRow row;
        row.label = display_label(cfg);
        row.posted = summarize_numeric(bucket, NumericField::PostedSpeed);
        row.impact = summarize_numeric(bucket, NumericField::ImpactSpeed);
        row.tpei = summarize_numeric(bucket, NumericField::Tpei);
        for (const auto& r : bucket) {
            auto s = speeding_flag(r);
            if (!s) continue;
            ++row.speeding_known_n;
            if (*s) ++row.speeding_count;
        }
        b.speed.push_back(std::move(row));
    }
    {
        SpeedRow total;
        total.label = "Total";
        total.posted = summarize_numeric(selected_all, NumericField::PostedSpeed);
        total.impact = summarize_numeric(selected_all, NumericField::ImpactSpeed);
        total.tpei = summarize_numeric(selected_all, NumericField::Tpei);
        for (const auto& r : selected_all) {
            auto s = speeding_flag(r);
            if (!s) continue;
            ++total.speeding_known_n;
            if (*s) ++total.speeding_count;
        }
        b.speed.push_back(std::move(total));
    }

    // Factor matrix: Total column first, then the selected configurations.
    {
        FactorColumn total;
        total.label = "Total";
        for (auto cfg : kSelectedConfigs) {
            FactorColumn col;
            col.label = display_label(cfg);
            for (const auto& r : part.bucket(cfg)) {
                if (!r.primary_factor) continue;
                auto idx = factor_category_index(*r.primary_factor);
                if (!idx) continue;
                ++col.counts[*idx];
                ++col.known_n;
                ++total.counts[*idx];
                ++total.known_n;
            }
            b.factors.columns.push_back(std::move(col));
        }
        b.factors.columns.insert(b.factors.columns.begin(), std::move(total));
    }

    // Evasive matrix.
    {
        EvasiveColumn total;
        total.label = "Total";
        for (auto cfg : kSelectedConfigs) {
            EvasiveColumn col;
            col.label = display_label(cfg);
            auto bd = evasive_quality_breakdown(part.bucket(cfg));
            for (const auto& r : part.bucket(cfg)) {
                if (!r.evasive || r.evasive->action == EvasiveAction::Unknown) continue;
                ++col.known_n;
                switch (r.evasive->action) {
                    case EvasiveAction::Brake: ++col.brake; break;
                    case EvasiveAction::Swerve: ++col.swerve; break;
                    case EvasiveAction::Other: ++col.other; break;
                    case EvasiveAction::NoAction: ++col.no_action; break;
                    default: break;
                }
            }
            col.attempted = bd.attempted;
            col.sel_improper = bd.selection_improper;
            col.sel_proper = bd.selection_proper;
            col.sel_unknown = bd.selection_unknown;
            for (const auto& aq : bd.per_action) {
                EvasiveColumn::ExecCell cell{aq.n_properly_selected, aq.exec_improper,
                                             aq.exec_proper, aq.exec_unknown};
                if (aq.action == EvasiveAction::Brake) col.exec_brake = cell;
                else if (aq.action == EvasiveAction::Swerve) col.exec_swerve = cell;
                else if (aq.action == EvasiveAction::Other) col.exec_other = cell;
            }
            auto add = [](EvasiveColumn::ExecCell& t, const EvasiveColumn::ExecCell& c) {
                t.n += c.n; t.improper += c.improper; t.proper += c.proper; t.unknown += c.unknown;
            };
            total.known_n += col.known_n;
            total.brake += col.brake;
            total.swerve += col.swerve;
            total.other += col.other;
            total.no_action += col.no_action;
            total.attempted += col.attempted;
            total.sel_improper += col.sel_improper;
            total.sel_proper += col.sel_proper;
            total.sel_unknown += col.sel_unknown;
            add(total.exec_brake, col.exec_brake);
            add(total.exec_swerve, col.exec_swerve);
            add(total.exec_other, col.exec_other);
            b.evasive.columns.push_back(std::move(col));
        }
        b.evasive.columns.insert(b.evasive.columns.begin(), std::move(total));
    }

    for (auto cfg : kSelectedConfigs) {
        if (part.bucket(cfg).empty()) continue;
        ProfileEntry entry;
        entry.profile = build_profile(part, cfg, thresholds);
        entry.skills = map_skills(entry.profile, skills);
        b.profiles.push_back(std::move(entry));
    }
    return b;
}

// ---------------------------------------------------------------------------
// JSON form (lossless: raw counts plus full-precision shares)
// ---------------------------------------------------------------------------

using nlohmann::json;

inline void to_json(json& j, const FilterReport& r) {
    j = json{{"n_input", r.n_input},
             {"n_excluded_impairment_mechanical", r.n_excluded_impairment_mechanical},
             {"n_excluded_mofa", r.n_excluded_mofa},
             {"n_study_population", r.n_study_population},
             {"n_selected_configs", r.n_selected_configs},
             {"n_other_bucket", r.n_other_bucket}};
}
inline void from_json(const json& j, FilterReport& r) {
    j.at("n_input").get_to(r.n_input);
    j.at("n_excluded_impairment_mechanical").get_to(r.n_excluded_impairment_mechanical);
    j.at("n_excluded_mofa").get_to(r.n_excluded_mofa);
    j.at("n_study_population").get_to(r.n_study_population);
    j.at("n_selected_configs").get_to(r.n_selected_configs);
    j.at("n_other_bucket").get_to(r.n_other_bucket);
}

inline void to_json(json& j, const FrequencyRow& r) {
    j = json{{"label", r.label}, {"count", r.count}};
    if (r.pct) j["pct"] = *r.pct;
}
inline void from_json(const json& j, FrequencyRow& r) {
    j.at("label").get_to(r.label);
    j.at("count").get_to(r.count);
    if (j.contains("pct")) r.pct = j.at("pct").get<double>();
}

inline void to_json(json& j, const FrequencyTable& t) {
    j = json{{"segment", t.segment}, {"column_n", t.column_n}, {"rows", t.rows}};
}
inline void from_json(const json& j, FrequencyTable& t) {
    j.at("segment").get_to(t.segment);
    j.at("column_n").get_to(t.column_n);
    j.at("rows").get_to(t.rows);
}

inline void to_json(json& j, const SpeedTimeSummary& s) {
    j = json{{"n", s.n}};
    if (s.mean) j["mean"] = *s.mean;
    if (s.q1) j["q1"] = *s.q1;
    if (s.q3) j["q3"] = *s.q3;
}
inline void from_json(const json& j, SpeedTimeSummary& s) {
    j.at("n").get_to(s.n);
    if (j.contains("mean")) s.mean = j.at("mean").get<double>();
    if (j.contains("q1")) s.q1 = j.at("q1").get<double>();
    if (j.contains("q3")) s.q3 = j.at("q3").get<double>();
}

inline void to_json(json& j, const SpeedRow& r) {
    j = json{{"label", r.label},
             {"posted", r.posted},
             {"impact", r.impact},
             {"tpei", r.tpei},
             {"speeding_count", r.speeding_count},
             {"speeding_known_n", r.speeding_known_n}};
}
inline void from_json(const json& j, SpeedRow& r) {
    j.at("label").get_to(r.label);
    j.at("posted").get_to(r.posted);
    j.at("impact").get_to(r.impact);
    j.at("tpei").get_to(r.tpei);
    j.at("speeding_count").get_to(r.speeding_count);
    j.at("speeding_known_n").get_to(r.speeding_known_n);
}

inline void to_json(json& j, const FactorColumn& c) {
    j = json{{"label", c.label}, {"known_n", c.known_n}, {"counts", c.counts}};
}
inline void from_json(const json& j, FactorColumn& c) {
    j.at("label").get_to(c.label);
    j.at("known_n").get_to(c.known_n);
    j.at("counts").get_to(c.counts);
}

inline void to_json(json& j, const FactorMatrix& m) { j = json{{"columns", m.columns}}; }
inline void from_json(const json& j, FactorMatrix& m) { j.at("columns").get_to(m.columns); }

inline void to_json(json& j, const EvasiveColumn::ExecCell& c) {
    j = json{{"n", c.n}, {"improper", c.improper}, {"proper", c.proper}, {"unknown", c.unknown}};
}
inline void from_json(const json& j, EvasiveColumn::ExecCell& c) {
    j.at("n").get_to(c.n);
    j.at("improper").get_to(c.improper);
    j.at("proper").get_to(c.proper);
    j.at("unknown").get_to(c.unknown);
}

inline void to_json(json& j, const EvasiveColumn& c) {
    j = json{{"label", c.label},
             {"known_n", c.known_n},
             {"brake", c.brake},
             {"swerve", c.swerve},
             {"other", c.other},
             {"no_action", c.no_action},
             {"attempted", c.attempted},
             {"sel_improper", c.sel_improper},
             {"sel_proper", c.sel_proper},
             {"sel_unknown", c.sel_unknown},
             {"exec_brake", c.exec_brake},
             {"exec_swerve", c.exec_swerve},
             {"exec_other", c.exec_other}};
}
inline void from_json(const json& j, EvasiveColumn& c) {
    j.at("label").get_to(c.label);
    j.at("known_n").get_to(c.known_n);
    j.at("brake").get_to(c.brake);
    j.at("swerve").get_to(c.swerve);
    j.at("other").get_to(c.other);
    j.at("no_action").get_to(c.no_action);
    j.at("attempted").get_to(c.attempted);
    j.at("sel_improper").get_to(c.sel_improper);
    j.at("sel_proper").get_to(c.sel_proper);
    j.at("sel_unknown").get_to(c.sel_unknown);
    j.at("exec_brake").get_to(c.exec_brake);
    j.at("exec_swerve").get_to(c.exec_swerve);
    j.at("exec_other").get_to(c.exec_other);
}

inline void to_json(json& j, const EvasiveMatrix& m) { j = json{{"columns", m.columns}}; }
inline void from_json(const json& j, EvasiveMatrix& m) { j.at("columns").get_to(m.columns); }

inline void to_json(json& j, const ContributingFactor& f) {
    j = json{{"actor", std::string(to_token(f.actor))}};
    if (f.stage) j["stage"] = std::string(to_token(*f.stage));
    if (f.detail) j["detail"] = std::string(to_token(*f.detail));
}
namespace json_detail {

template <typename T>
T required_token(std::optional<T> parsed, const char* what) {
    if (!parsed) throw DataError(std::string("unknown ") + what + " token in report JSON");
    return *parsed;
}

}  // namespace json_detail

inline void from_json(const json& j, ContributingFactor& f) {
    f.actor = json_detail::required_token(
        factor_actor_from_token(j.at("actor").get<std::string>()), "actor");
    if (j.contains("stage"))
        f.stage = json_detail::required_token(
            factor_stage_from_token(j.at("stage").get<std::string>()), "stage");
    if (j.contains("detail"))
        f.detail = json_detail::required_token(
            factor_detail_from_token(j.at("detail").get<std::string>()), "detail");
}

inline void to_json(json& j, const OddsRatioResult& r) {
    j = json{{"a", r.a},
             {"b", r.b},
             {"c", r.c},
             {"d", r.d},
             {"or", r.or_value},
             {"ci_low", r.ci_low},
             {"ci_high", r.ci_high},
             {"significant", r.significant},
             {"corrected", r.corrected}};
}
inline void from_json(const json& j, OddsRatioResult& r) {
    j.at("a").get_to(r.a);
    j.at("b").get_to(r.b);
    j.at("c").get_to(r.c);
    j.at("d").get_to(r.d);
    j.at("or").get_to(r.or_value);
    j.at("ci_low").get_to(r.ci_low);
    j.at("ci_high").get_to(r.ci_high);
    j.at("significant").get_to(r.significant);
    j.at("corrected").get_to(r.corrected);
}

inline void to_json(json& j, const OverrepresentedManeuver& m) {
    j = json{{"action", std::string(to_token(m.action))},
             {"assoc", m.assoc},
             {"significant", m.significant},
             {"borderline", m.borderline}};
}
inline void from_json(const json& j, OverrepresentedManeuver& m) {
    m.action = json_detail::required_token(
        evasive_action_from_token(j.at("action").get<std::string>()), "action");
    j.at("assoc").get_to(m.assoc);
    j.at("significant").get_to(m.significant);
    j.at("borderline").get_to(m.borderline);
}

inline void to_json(json& j, const ConfigProfile& p) {
    json shares = json::array();
    for (const auto& [factor, pct] : p.factor_shares)
        shares.push_back(json{{"factor", factor}, {"share", pct}});
    j = json{{"config", std::string(to_token(p.config))},
             {"n_cases", p.n_cases},
             {"dominant_factors", p.dominant_factors},
             {"dominant_share_pct", p.dominant_share_pct},
             {"factor_shares", shares},
             {"factor_known_n", p.factor_known_n},
             {"alignment_mode", std::string(to_token(p.alignment_mode))},
             {"straight_pct", p.straight_pct},
             {"curve_left_pct", p.curve_left_pct},
             {"curve_right_pct", p.curve_right_pct},
             {"curve_dominant", p.curve_dominant},
             {"no_evasive_pct", p.no_evasive_pct},
             {"no_evasive_flag", p.no_evasive_flag},
             {"overrepresented", p.overrepresented},
             {"brake_improper_execution_pct", p.brake_improper_execution_pct},
             {"speeding_pct", p.speeding_pct},
             {"speeding_known_n", p.speeding_known_n},
             {"tpei", p.tpei},
             {"short_tpei_flag", p.short_tpei_flag},
             {"frequency_pct", p.frequency_pct},
             {"severe_share_pct", p.severe_share_pct}};
    if (p.mean_impact_speed) j["mean_impact_speed"] = *p.mean_impact_speed;
}
inline void from_json(const json& j, ConfigProfile& p) {
    p.config = json_detail::required_token(
        merged_config_from_token(j.at("config").get<std::string>()), "config");
    j.at("n_cases").get_to(p.n_cases);
    j.at("dominant_factors").get_to(p.dominant_factors);
    j.at("dominant_share_pct").get_to(p.dominant_share_pct);
    for (const auto& item : j.at("factor_shares"))
        p.factor_shares[item.at("factor").get<ContributingFactor>()] = item.at("share").get<double>();
    j.at("factor_known_n").get_to(p.factor_known_n);
    p.alignment_mode = json_detail::required_token(
        alignment_from_token(j.at("alignment_mode").get<std::string>()), "alignment");
    j.at("straight_pct").get_to(p.straight_pct);
    j.at("curve_left_pct").get_to(p.curve_left_pct);
    j.at("curve_right_pct").get_to(p.curve_right_pct);
    j.at("curve_dominant").get_to(p.curve_dominant);
    j.at("no_evasive_pct").get_to(p.no_evasive_pct);
    j.at("no_evasive_flag").get_to(p.no_evasive_flag);
    j.at("overrepresented").get_to(p.overrepresented);
    j.at("brake_improper_execution_pct").get_to(p.brake_improper_execution_pct);
    j.at("speeding_pct").get_to(p.speeding_pct);
    j.at("speeding_known_n").get_to(p.speeding_known_n);
    j.at("tpei").get_to(p.tpei);
    j.at("short_tpei_flag").get_to(p.short_tpei_flag);
    j.at("frequency_pct").get_to(p.frequency_pct);
    j.at("severe_share_pct").get_to(p.severe_share_pct);
    if (j.contains("mean_impact_speed")) p.mean_impact_speed = j.at("mean_impact_speed").get<double>();
}

inline void to_json(json& j, const SkillRecommendation& s) {
    j = json{{"skill", s.skill}, {"rationale", s.rationale}, {"rule_id", s.rule_id}};
}
inline void from_json(const json& j, SkillRecommendation& s) {
    j.at("skill").get_to(s.skill);
    j.at("rationale").get_to(s.rationale);
    j.at("rule_id").get_to(s.rule_id);
}

inline void to_json(json& j, const ProfileEntry& e) {
    j = json{{"profile", e.profile}, {"skills", e.skills}};
}
inline void from_json(const json& j, ProfileEntry& e) {
    j.at("profile").get_to(e.profile);
    j.at("skills").get_to(e.skills);
}

inline void to_json(json& j, const ReportBundle& b) {
    j = json{{"filter", b.filter},
             {"frequency", b.frequency},
             {"speed", b.speed},
             {"factors", b.factors},
             {"evasive", b.evasive},
             {"profiles", b.profiles}};
}
inline void from_json(const json& j, ReportBundle& b) {
    j.at("filter").get_to(b.filter);
    j.at("frequency").get_to(b.frequency);
    j.at("speed").get_to(b.speed);
    j.at("factors").get_to(b.factors);
    j.at("evasive").get_to(b.evasive);
    j.at("profiles").get_to(b.profiles);
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace render_detail {

inline std::string pct_or_empty(std::uint64_t count, std::uint64_t n) {
    if (n == 0) return "";
    return format_pct(100.0 * static_cast<double>(count) / static_cast<double>(n));
}

inline std::string opt1(const std::optional<double>& v) {
    return v ? format_fixed(*v, 1) : "";
}

inline std::string frequency_csv(const ReportBundle& b) {
    std::string out = "config,total_pct,severe_pct,nonsevere_pct,l3_pct,l1_pct\n";
    bool any_defined = false;
    for (const auto& t : b.frequency) any_defined = any_defined || t.column_n > 0;
    if (!any_defined) return out;
    for (std::size_t row = 0; row < kAllMergedConfigs.size(); ++row) {
        std::vector<std::string> fields;
        fields.push_back(b.frequency.front().rows[row].label);
        for (const auto& table : b.frequency) {
            const auto& r = table.rows[row];
            fields.push_back(r.pct ? format_pct(*r.pct) : "");
        }
        out += csv::join_row(fields);
    }
    return out;
}

inline std::string filter_csv(const FilterReport& f) {
    std::string out = "stage,count\n";
    out += "input," + std::to_string(f.n_input) + "\n";
    out += "excluded_impairment_mechanical," + std::to_string(f.n_excluded_impairment_mechanical) + "\n";
    out += "excluded_mofa," + std::to_string(f.n_excluded_mofa) + "\n";
    out += "study_population," + std::to_string(f.n_study_population) + "\n";
    out += "selected_configs," + std::to_string(f.n_selected_configs) + "\n";
    out += "other_bucket," + std::to_string(f.n_other_bucket) + "\n";
    return out;
}

inline std::string speed_csv(const ReportBundle& b) {
    std::string out =
        "config,posted_mean,posted_q1,posted_q3,posted_n,impact_mean,impact_q1,impact_q3,"
        "impact_n,tpei_mean,tpei_q1,tpei_q3,tpei_n,speeding_pct,speeding_n\n";
    for (const auto& r : b.speed) {
        if (r.posted.n == 0 && r.impact.n == 0 && r.tpei.n == 0 && r.speeding_known_n == 0)
            continue;
        std::vector<std::string> f{r.label,
                                   opt1(r.posted.mean), opt1(r.posted.q1), opt1(r.posted.q3),
                                   std::to_string(r.posted.n),
                                   opt1(r.impact.mean), opt1(r.impact.q1), opt1(r.impact.q3),
                                   std::to_string(r.impact.n),
                                   opt1(r.tpei.mean), opt1(r.tpei.q1), opt1(r.tpei.q3),
                                   std::to_string(r.tpei.n),
                                   pct_or_empty(r.speeding_count, r.speeding_known_n),
                                   std::to_string(r.speeding_known_n)};
        out += csv::join_row(f);
    }
    return out;
}

inline std::string factor_csv(const FactorMatrix& m) {
    std::string out = "category";
    for (const auto& c : m.columns) out += "," + lower(c.label);
    out += "\n";
    bool any = false;
    for (const auto& c : m.columns) any = any || c.known_n > 0;
    if (!any) return out;
    out += "n";
    for (const auto& c : m.columns) out += "," + std::to_string(c.known_n);
    out += "\n";
    for (std::size_t i = 0; i < kFactorCategoryCount; ++i) {
        out += std::string(factor_category_token(i));
        for (const auto& c : m.columns) out += "," + pct_or_empty(c.counts[i], c.known_n);
        out += "\n";
    }
    return out;
}

inline std::string evasive_actions_csv(const EvasiveMatrix& m) {
    std::string out = "row";
    for (const auto& c : m.columns) out += "," + lower(c.label);
    out += "\n";
    bool any = false;
    for (const auto& c : m.columns) any = any || c.known_n > 0;
    if (!any) return out;
    out += "n";
    for (const auto& c : m.columns) out += "," + std::to_string(c.known_n);
    out += "\n";
    auto line = [&](const char* name, auto getter) {
        out += name;
        for (const auto& c : m.columns) out += "," + pct_or_empty(getter(c), c.known_n);
        out += "\n";
    };
    line("brake", [](const EvasiveColumn& c) { return c.brake; });
    line("swerve", [](const EvasiveColumn& c) { return c.swerve; });
    line("other", [](const EvasiveColumn& c) { return c.other; });
    line("no_action", [](const EvasiveColumn& c) { return c.no_action; });
    return out;
}

inline std::string evasive_selection_csv(const EvasiveMatrix& m) {
    std::string out = "row";
    for (const auto& c : m.columns) out += "," + lower(c.label);
    out += "\n";
    bool any = false;
    for (const auto& c : m.columns) any = any || c.attempted > 0;
    if (!any) return out;
    out += "n";
    for (const auto& c : m.columns) out += "," + std::to_string(c.attempted);
    out += "\n";
    auto line = [&](const char* name, auto getter) {
        out += name;
        for (const auto& c : m.columns) out += "," + pct_or_empty(getter(c), c.attempted);
        out += "\n";
    };
    line("improper", [](const EvasiveColumn& c) { return c.sel_improper; });
    line("proper", [](const EvasiveColumn& c) { return c.sel_proper; });
    line("unknown", [](const EvasiveColumn& c) { return c.sel_unknown; });
    return out;
}

inline std::string evasive_execution_csv(const EvasiveMatrix& m) {
    std::string out = "row";
    for (const auto& c : m.columns) out += "," + lower(c.label);
    out += "\n";
    bool any = false;
    for (const auto& c : m.columns)
        any = any || c.exec_brake.n > 0 || c.exec_swerve.n > 0 || c.exec_other.n > 0;
    if (!any) return out;
    auto block = [&](const char* action, auto getter) {
        out += std::string(action) + "_n";
        for (const auto& c : m.columns) out += "," + std::to_string(getter(c).n);
        out += "\n";
        for (const char* q : {"improper", "proper", "unknown"}) {
            out += std::string(action) + "_" + q;
            for (const auto& c : m.columns) {
                const auto& cell = getter(c);
                std::uint64_t v = q[0] == 'i' ? cell.improper : (q[0] == 'p' ? cell.proper : cell.unknown);
                out += "," + pct_or_empty(v, cell.n);
            }
            out += "\n";
        }
    };
    block("brake", [](const EvasiveColumn& c) -> const EvasiveColumn::ExecCell& { return c.exec_brake; });
    block("swerve", [](const EvasiveColumn& c) -> const EvasiveColumn::ExecCell& { return c.exec_swerve; });
    block("other", [](const EvasiveColumn& c) -> const EvasiveColumn::ExecCell& { return c.exec_other; });
    return out;
}

inline std::string factor_label(const ContributingFactor& f) {
    std::string out(to_token(f.actor));
    if (f.stage) out += ":" + std::string(to_token(*f.stage));
    if (f.detail) out += ":" + std::string(to_token(*f.detail));
    return out;
}

inline std::string profiles_csv(const std::vector<ProfileEntry>& entries) {
    std::string out =
        "config,n_cases,dominant_factor,dominant_share_pct,alignment_mode,straight_pct,"
        "curve_left_pct,curve_right_pct,no_evasive_pct,no_evasive_flag,overrepresented,"
        "brake_improper_execution_pct,mean_impact_speed,speeding_pct,tpei_mean,short_tpei,"
        "frequency_pct,severe_share_pct\n";
    for (const auto& e : entries) {
        const auto& p = e.profile;
        std::string dom;
        for (const auto& f : p.dominant_factors) {
            if (!dom.empty()) dom += "|";
            dom += factor_label(f);
        }
        std::string over;
        for (const auto& m : p.overrepresented) {
            if (!over.empty()) over += "|";
            over += std::string(to_token(m.action)) + "(or=" + format_fixed(m.assoc.or_value, 2) +
                    ",ci=" + format_fixed(m.assoc.ci_low, 2) + "-" +
                    format_fixed(m.assoc.ci_high, 2) +
                    (m.significant ? ",significant" : (m.borderline ? ",borderline" : "")) + ")";
        }
        std::vector<std::string> f{std::string(display_label(p.config)),
                                   std::to_string(p.n_cases),
                                   dom,
                                   format_pct(p.dominant_share_pct),
                                   std::string(to_token(p.alignment_mode)),
                                   format_pct(p.straight_pct),
                                   format_pct(p.curve_left_pct),
                                   format_pct(p.curve_right_pct),
                                   format_pct(p.no_evasive_pct),
                                   p.no_evasive_flag ? "true" : "false",
                                   over,
                                   format_pct(p.brake_improper_execution_pct),
                                   opt1(p.mean_impact_speed),
                                   format_pct(p.speeding_pct),
                                   opt1(p.tpei.mean),
                                   p.short_tpei_flag ? "true" : "false",
                                   format_pct(p.frequency_pct),
                                   format_pct(p.severe_share_pct)};
        out += csv::join_row(f);
    }
    return out;
}

inline std::string skills_csv(const std::vector<ProfileEntry>& entries) {
    std::string out = "config,skill,rationale,rule_id\n";
    for (const auto& e : entries)
        for (const auto& s : e.skills)
            out += csv::join_row({std::string(display_label(e.profile.config)), s.skill,
                                  s.rationale, s.rule_id});
    return out;
}

inline std::string md_escape(const std::string& cell) {
    std::string out;
    for (char c : cell) {
        if (c == '|') out += "\\|";
        else out += c;
    }
    return out;
}

inline void md_table(std::string& out, const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) return;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out += "|";
        for (const auto& cell : rows[i]) out += " " + md_escape(cell) + " |";
        out += "\n";
        if (i == 0) {
            out += "|";
            for (std::size_t k = 0; k < rows[0].size(); ++k) out += " --- |";
            out += "\n";
        }
    }
    out += "\n";
}

inline std::vector<std::vector<std::string>> csv_to_rows(const std::string& text) {
    return csv::parse(text);
}

}  // namespace render_detail

/// Renders the bundle into named files (content by file name). Rendering is
/// pure and deterministic: identical bundles yield byte-identical content.
inline std::map<std::string, std::string> render_to_strings(const ReportBundle& b,
                                                            ReportFormat format) {
    using namespace render_detail;
    std::map<std::string, std::string> files;
    switch (format) {
        case ReportFormat::CsvSet:
            files["filter_report.csv"] = filter_csv(b.filter);
            files["frequency.csv"] = frequency_csv(b);
            files["speed_tpei.csv"] = speed_csv(b);
            files["factor_matrix.csv"] = factor_csv(b.factors);
            files["evasive_actions.csv"] = evasive_actions_csv(b.evasive);
            files["evasive_selection.csv"] = evasive_selection_csv(b.evasive);
            files["evasive_execution.csv"] = evasive_execution_csv(b.evasive);
            files["profiles.csv"] = profiles_csv(b.profiles);
            files["skills.csv"] = skills_csv(b.profiles);
            break;
        case ReportFormat::Markdown: {
            std::string md = "# Crash configuration analysis\n\n";
            md += "## Data selection\n\n";
            md_table(md, csv_to_rows(filter_csv(b.filter)));
            md += "## Crash configuration frequencies\n\n";
            md_table(md, csv_to_rows(frequency_csv(b)));
            md += "## Primary crash contributing factors\n\n";
            md_table(md, csv_to_rows(factor_csv(b.factors)));
            md += "## Collision avoidance maneuvers\n\n";
            md_table(md, csv_to_rows(evasive_actions_csv(b.evasive)));
            md += "### Maneuver selection quality\n\n";
            md_table(md, csv_to_rows(evasive_selection_csv(b.evasive)));
            md += "### Maneuver execution quality\n\n";
            md_table(md, csv_to_rows(evasive_execution_csv(b.evasive)));
            md += "## Speeds and time from precipitating event to impact\n\n";
            md_table(md, csv_to_rows(speed_csv(b)));
            md += "## Configuration profiles\n\n";
            md_table(md, csv_to_rows(profiles_csv(b.profiles)));
            md += "## Skill recommendations\n\n";
            md_table(md, csv_to_rows(skills_csv(b.profiles)));
            files["report.md"] = md;
            break;
        }
        case ReportFormat::Json: {
            json j = b;
            files["report.json"] = j.dump(2) + "\n";
            break;
        }
    }
    return files;
}

/// Writes the rendered files under `dir`. Throws DataError if unwritable.
inline std::vector<std::string> render(const ReportBundle& b, ReportFormat format,
                                       const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    auto files = render_to_strings(b, format);
    std::vector<std::string> written;
    for (const auto& [name, content] : files) {
        fs::path path = fs::path(dir) / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write report file: " + path.string());
        out << content;
        written.push_back(path.string());
    }
    return written;
}

}  // namespace crashlens
