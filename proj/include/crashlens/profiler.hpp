#pragma once

// Per-configuration human-error profiles and the declarative mapping from
// profiles to training-skill recommendations. The skill rules live in a
// data file so training designers can edit them without code changes.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "crashlens/classifier.hpp"
#include "crashlens/common.hpp"
#include "crashlens/crash_model.hpp"
#include "crashlens/factor_categories.hpp"
#include "crashlens/stats.hpp"

namespace crashlens {

struct OverrepresentedManeuver {
    EvasiveAction action = EvasiveAction::Unknown;
    OddsRatioResult assoc;
    bool significant = false;
    bool borderline = false;  // lower CI bound rounds to 1.0

    auto operator<=>(const OverrepresentedManeuver&) const = default;
};

struct ProfileThresholds {
    double no_evasive_pct = 25.0;  // flag configurations with >=25% no-action
    double short_tpei_s = 1.7;     // flag configurations with mean TPEI <= 1.7 s
};

struct ConfigProfile {
    MergedConfig config = MergedConfig::OtherBucket;
    std::size_t n_cases = 0;

    // Primary contributing factor structure (shares over factor-known cases).
    std::vector<ContributingFactor> dominant_factors;  // ties reported together
    double dominant_share_pct = 0.0;
    std::map<ContributingFactor, double> factor_shares;
    std::size_t factor_known_n = 0;

    // Roadway alignment.
    Alignment alignment_mode = Alignment::Unknown;
    double straight_pct = 0.0;
    double curve_left_pct = 0.0;
    double curve_right_pct = 0.0;
    bool curve_dominant = false;

    // Evasive behaviour.
    double no_evasive_pct = 0.0;  // share of the whole bucket
    bool no_evasive_flag = false;
    std::vector<OverrepresentedManeuver> overrepresented;
    double brake_improper_execution_pct = 0.0;  // among properly selected brakes

    // Speed and time.
    std::optional<double> mean_impact_speed;
    double speeding_pct = 0.0;  // among cases with both speeds known
    std::size_t speeding_known_n = 0;
    SpeedTimeSummary tpei;
    bool short_tpei_flag = false;

    // Position within the whole dataset.
    double frequency_pct = 0.0;
    double severe_share_pct = 0.0;

    auto operator<=>(const ConfigProfile&) const = default;
};

// ---------------------------------------------------------------------------
// Evasive quality breakdown
// ---------------------------------------------------------------------------

struct ActionExecutionQuality {
    EvasiveAction action = EvasiveAction::Unknown;
    std::size_t n_properly_selected = 0;
    std::size_t exec_improper = 0;
    std::size_t exec_proper = 0;
    std::size_t exec_unknown = 0;

    auto operator<=>(const ActionExecutionQuality&) const = default;
};

struct EvasiveQualityBreakdown {
    std::size_t attempted = 0;  // action present and != no_action
    std::size_t selection_proper = 0;
    std::size_t selection_improper = 0;
    std::size_t selection_unknown = 0;
    std::vector<ActionExecutionQuality> per_action;  // only actions that occur

    bool empty() const { return attempted == 0; }

    auto operator<=>(const EvasiveQualityBreakdown&) const = default;
};

/// Selection quality among attempted maneuvers, and execution quality per
/// action among the properly selected ones. Records whose action is unknown
/// are dropped, like every other unknown in this toolkit.
inline EvasiveQualityBreakdown evasive_quality_breakdown(const std::vector<CrashRecord>& records) {
    EvasiveQualityBreakdown out;
    std::map<EvasiveAction, ActionExecutionQuality> acc;
    for (const auto& r : records) {
        if (!r.evasive || r.evasive->action == EvasiveAction::NoAction ||
            r.evasive->action == EvasiveAction::Unknown)
            continue;
        ++out.attempted;
        switch (r.evasive->selection_quality) {
            case Quality::Proper: ++out.selection_proper; break;
            case Quality::Improper: ++out.selection_improper; break;
            case Quality::Unknown: ++out.selection_unknown; break;
        }
        if (r.evasive->selection_quality == Quality::Proper) {
            auto& slot = acc[r.evasive->action];
            slot.action = r.evasive->action;
            ++slot.n_properly_selected;
            switch (r.evasive->execution_quality) {
                case Quality::Improper: ++slot.exec_improper; break;
                case Quality::Proper: ++slot.exec_proper; break;
                case Quality::Unknown: ++slot.exec_unknown; break;
            }
        }
    }
    for (auto action : {EvasiveAction::Brake, EvasiveAction::Swerve, EvasiveAction::Other})
        if (auto it = acc.find(action); it != acc.end()) out.per_action.push_back(it->second);
    return out;
}

inline EvasiveQualityBreakdown evasive_quality_breakdown(const Partition& partition,
                                                         MergedConfig config) {
    return evasive_quality_breakdown(partition.bucket(config));
}

// ---------------------------------------------------------------------------
// Profile construction
// ---------------------------------------------------------------------------

inline ConfigProfile build_profile(const Partition& partition, MergedConfig config,
                                   const ProfileThresholds& thresholds = {}) {
    const auto& bucket = partition.bucket(config);
    if (bucket.empty())
        throw DataError("no cases for configuration " + std::string(to_token(config)));

    ConfigProfile p;
    p.config = config;
    p.n_cases = bucket.size();

    // Contributing factor shares over factor-known cases.
    std::map<ContributingFactor, std::size_t> factor_counts;
    for (const auto& r : bucket) {
        if (!r.primary_factor) continue;
        ++factor_counts[normalize_factor(*r.primary_factor)];
        ++p.factor_known_n;
    }
    std::size_t best = 0;
    for (const auto& [key, count] : factor_counts) {
        p.factor_shares[key] = 100.0 * static_cast<double>(count) / static_cast<double>(p.factor_known_n);
        // Unattributed rider failures count toward actor totals but are not
        // eligible to be the dominant stage on their own.
        if (key.stage == FactorStage::UnknownType) continue;
        best = std::max(best, count);
    }
    for (const auto& [key, count] : factor_counts) {
        if (key.stage == FactorStage::UnknownType) continue;
        if (count == best && best > 0) p.dominant_factors.push_back(key);
    }
    if (best > 0)
        p.dominant_share_pct = 100.0 * static_cast<double>(best) / static_cast<double>(p.factor_known_n);

    // Alignment mode with curve-handedness split.
    std::map<Alignment, std::size_t> align_counts;
    for (const auto& r : bucket) ++align_counts[r.alignment];
    std::size_t align_best = 0;
    for (auto a : {Alignment::Straight, Alignment::CurveLeft, Alignment::CurveRight,
                   Alignment::Corner, Alignment::Jog}) {
        auto it = align_counts.find(a);
        std::size_t n = it == align_counts.end() ? 0 : it->second;
        if (n > align_best) {
            align_best = n;
            p.alignment_mode = a;
        }
    }
    auto align_pct = [&](Alignment a) {
        auto it = align_counts.find(a);
        return it == align_counts.end()
                   ? 0.0
                   : 100.0 * static_cast<double>(it->second) / static_cast<double>(bucket.size());
    };
    p.straight_pct = align_pct(Alignment::Straight);
    p.curve_left_pct = align_pct(Alignment::CurveLeft);
    p.curve_right_pct = align_pct(Alignment::CurveRight);
    p.curve_dominant = p.alignment_mode == Alignment::CurveLeft ||
                       p.alignment_mode == Alignment::CurveRight ||
                       p.alignment_mode == Alignment::Corner;

    // Evasive behaviour.
    std::size_t no_action = 0;
    for (const auto& r : bucket)
        if (r.evasive && r.evasive->action == EvasiveAction::NoAction) ++no_action;
    p.no_evasive_pct = 100.0 * static_cast<double>(no_action) / static_cast<double>(bucket.size());
    p.no_evasive_flag = p.no_evasive_pct >= thresholds.no_evasive_pct;

    for (auto action : {EvasiveAction::Brake, EvasiveAction::Swerve, EvasiveAction::NoAction,
                        EvasiveAction::Other}) {
        auto outcome = [action](const CrashRecord& r) -> std::optional<bool> {
            if (!r.evasive || r.evasive->action == EvasiveAction::Unknown) return std::nullopt;
            return r.evasive->action == action;
        };
        OddsRatioResult assoc;
        try {
            assoc = config_association(partition, config, outcome);
        } catch (const DataError&) {
            continue;  // no evasive data for this dichotomy
        }
        if (assoc.or_value > 1.0) {
            OverrepresentedManeuver m;
            m.action = action;
            m.assoc = assoc;
            m.significant = assoc.significant;
            m.borderline = !assoc.significant && round1(assoc.ci_low) == 1.0;
            p.overrepresented.push_back(m);
        }
    }

    auto breakdown = evasive_quality_breakdown(bucket);
    for (const auto& aq : breakdown.per_action) {
        if (aq.action != EvasiveAction::Brake || aq.n_properly_selected == 0) continue;
        p.brake_improper_execution_pct =
            100.0 * static_cast<double>(aq.exec_improper) / static_cast<double>(aq.n_properly_selected);
    }

    // Speed and time.
    p.mean_impact_speed = summarize_numeric(bucket, NumericField::ImpactSpeed).mean;
    std::size_t speeding = 0;
    for (const auto& r : bucket) {
        auto s = speeding_flag(r);
        if (!s) continue;
        ++p.speeding_known_n;
        if (*s) ++speeding;
    }
    if (p.speeding_known_n > 0)
        p.speeding_pct = 100.0 * static_cast<double>(speeding) / static_cast<double>(p.speeding_known_n);
    p.tpei = summarize_numeric(bucket, NumericField::Tpei);
    p.short_tpei_flag = p.tpei.mean && *p.tpei.mean <= thresholds.short_tpei_s;

    // Position within the dataset.
    std::size_t total = partition.total();
    std::size_t severe_total = 0, severe_here = 0;
    for (auto cfg : kAllMergedConfigs)
        for (const auto& r : partition.bucket(cfg))
            if (is_severe(r) == std::optional<bool>(true)) {
                ++severe_total;
                if (cfg == config) ++severe_here;
            }
    p.frequency_pct = 100.0 * static_cast<double>(bucket.size()) / static_cast<double>(total);
    if (severe_total > 0)
        p.severe_share_pct = 100.0 * static_cast<double>(severe_here) / static_cast<double>(severe_total);
    return p;
}

// ---------------------------------------------------------------------------
// Skill rulebook
// ---------------------------------------------------------------------------

enum class RuleOp { Eq, Ne, Lt, Le, Gt, Ge };

struct RuleCondition {
    std::string field;
    RuleOp op = RuleOp::Eq;
    std::variant<double, std::string, bool> value;
};

struct SkillRule {
    std::string id;
    std::vector<RuleCondition> conditions;
    std::string skill;
    std::string rationale;
};

struct SkillRulebook {
    std::vector<SkillRule> rules;
};

struct SkillRecommendation {
    std::string skill;
    std::string rationale;
    std::string rule_id;

    auto operator<=>(const SkillRecommendation&) const = default;
};

namespace detail {

// Fields addressable from rule conditions, with their kind.
enum class RuleFieldKind { Number, Token, Boolean };

inline std::optional<RuleFieldKind> rule_field_kind(std::string_view field) {
    static const std::map<std::string, RuleFieldKind, std::less<>> kFields = {
        {"dominant_actor", RuleFieldKind::Token},
        {"dominant_stage", RuleFieldKind::Token},
        {"alignment_mode", RuleFieldKind::Token},
        {"curve_dominant", RuleFieldKind::Boolean},
        {"brake_overrepresented", RuleFieldKind::Boolean},
        {"swerve_overrepresented", RuleFieldKind::Boolean},
        {"no_action_overrepresented", RuleFieldKind::Boolean},
        {"other_action_overrepresented", RuleFieldKind::Boolean},
        {"no_evasive_flag", RuleFieldKind::Boolean},
        {"short_tpei", RuleFieldKind::Boolean},
        {"no_evasive_share", RuleFieldKind::Number},
        {"speeding_share", RuleFieldKind::Number},
        {"mean_impact_speed", RuleFieldKind::Number},
        {"tpei_mean", RuleFieldKind::Number},
        {"brake_improper_execution_share", RuleFieldKind::Number},
        {"frequency_share", RuleFieldKind::Number},
        {"severe_share", RuleFieldKind::Number},
        {"dominant_share", RuleFieldKind::Number},
        {"factor_known_n", RuleFieldKind::Number},
        {"n_cases", RuleFieldKind::Number},
    };
    auto it = kFields.find(field);
    if (it == kFields.end()) return std::nullopt;
    return it->second;
}

inline bool compare_numbers(double lhs, RuleOp op, double rhs) {
    switch (op) {
        case RuleOp::Eq: return lhs == rhs;
        case RuleOp::Ne: return lhs != rhs;
        case RuleOp::Lt: return lhs < rhs;
        case RuleOp::Le: return lhs <= rhs;
        case RuleOp::Gt: return lhs > rhs;
        case RuleOp::Ge: return lhs >= rhs;
    }
    return false;
}

inline bool overrepresented_with(const ConfigProfile& p, EvasiveAction action) {
    return std::any_of(p.overrepresented.begin(), p.overrepresented.end(),
                       [&](const auto& m) { return m.action == action; });
}

inline bool eval_condition(const ConfigProfile& p, const RuleCondition& c) {
    auto kind = rule_field_kind(c.field);
    if (!kind) return false;  // parser guarantees this cannot happen
    if (*kind == RuleFieldKind::Number) {
        double lhs = 0.0;
        if (c.field == "no_evasive_share") lhs = p.no_evasive_pct;
        else if (c.field == "speeding_share") lhs = p.speeding_pct;
        else if (c.field == "mean_impact_speed") lhs = p.mean_impact_speed.value_or(0.0);
        else if (c.field == "tpei_mean") lhs = p.tpei.mean.value_or(0.0);
        else if (c.field == "brake_improper_execution_share") lhs = p.brake_improper_execution_pct;
        else if (c.field == "frequency_share") lhs = p.frequency_pct;
        else if (c.field == "severe_share") lhs = p.severe_share_pct;
        else if (c.field == "dominant_share") lhs = p.dominant_share_pct;
        else if (c.field == "factor_known_n") lhs = static_cast<double>(p.factor_known_n);
        else if (c.field == "n_cases") lhs = static_cast<double>(p.n_cases);
        return compare_numbers(lhs, c.op, std::get<double>(c.value));
    }
    if (*kind == RuleFieldKind::Boolean) {
        bool lhs = false;
        if (c.field == "curve_dominant") lhs = p.curve_dominant;
        else if (c.field == "no_evasive_flag") lhs = p.no_evasive_flag;
        else if (c.field == "short_tpei") lhs = p.short_tpei_flag;
        else if (c.field == "brake_overrepresented") lhs = overrepresented_with(p, EvasiveAction::Brake);
        else if (c.field == "swerve_overrepresented") lhs = overrepresented_with(p, EvasiveAction::Swerve);
        else if (c.field == "no_action_overrepresented") lhs = overrepresented_with(p, EvasiveAction::NoAction);
        else if (c.field == "other_action_overrepresented") lhs = overrepresented_with(p, EvasiveAction::Other);
        bool rhs = std::get<bool>(c.value);
        return c.op == RuleOp::Ne ? lhs != rhs : lhs == rhs;
    }
    // Token fields. dominant_* match any of the tied dominant factors.
    const std::string& rhs = std::get<std::string>(c.value);
    bool matched = false;
    if (c.field == "dominant_actor") {
        for (const auto& f : p.dominant_factors)
            if (to_token(f.actor) == rhs) matched = true;
    } else if (c.field == "dominant_stage") {
        for (const auto& f : p.dominant_factors)
            if (f.stage && to_token(*f.stage) == rhs) matched = true;
    } else if (c.field == "alignment_mode") {
        matched = to_token(p.alignment_mode) == rhs;
    }
    return c.op == RuleOp::Ne ? !matched : matched;
}

}  // namespace detail

/// Parses the line-oriented skill rulebook:
///   rule <id>: when <field> <op> <value> [and ...] then skill "<tag>" because "<rationale>"
/// Unknown fields are rejected with their exact line and column.
inline SkillRulebook parse_skill_rulebook(std::string_view text) {
    SkillRulebook book;
    std::size_t line_no = 0;
    for (const auto& raw_line : split(text, '\n')) {
        ++line_no;
        std::string line = raw_line;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;

        auto fail = [&](std::size_t col, const std::string& msg) -> ParseError {
            return ParseError("skills:" + std::to_string(line_no) + ":" + std::to_string(col + 1) +
                              ": " + msg);
        };

        std::size_t pos = line.find_first_not_of(" \t");
        auto expect_word = [&](std::string_view word) {
            if (pos == std::string::npos || pos >= line.size() ||
                line.compare(pos, word.size(), word) != 0)
                throw fail(pos == std::string::npos ? line.size() : pos,
                           "expected '" + std::string(word) + "'");
            pos += word.size();
        };
        auto skip_ws = [&] { pos = line.find_first_not_of(" \t", pos); };
        auto read_token = [&]() -> std::string {
            skip_ws();
            if (pos == std::string::npos) throw fail(line.size(), "unexpected end of line");
            std::size_t start = pos;
            while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos])) &&
                   line[pos] != ':')
                ++pos;
            return line.substr(start, pos - start);
        };
        auto read_quoted = [&]() -> std::string {
            skip_ws();
            if (pos == std::string::npos || line[pos] != '"')
                throw fail(pos == std::string::npos ? line.size() : pos, "expected quoted string");
            std::size_t start = ++pos;
            while (pos < line.size() && line[pos] != '"') ++pos;
            if (pos >= line.size()) throw fail(start, "unterminated quoted string");
            return line.substr(start, pos++ - start);
        };

        SkillRule rule;
        expect_word("rule");
        rule.id = read_token();
        skip_ws();
        if (pos == std::string::npos || line[pos] != ':') throw fail(pos, "expected ':' after rule id");
        ++pos;
        skip_ws();
        expect_word("when");

        bool more = true;
        while (more) {
            skip_ws();
            std::size_t field_col = pos;
            std::string field = read_token();
            auto kind = detail::rule_field_kind(field);
            if (!kind) throw fail(field_col, "unknown field '" + field + "'");

            skip_ws();
            std::size_t op_col = pos;
            std::string op_s = read_token();
            RuleOp op;
            if (op_s == "==") op = RuleOp::Eq;
            else if (op_s == "!=") op = RuleOp::Ne;
            else if (op_s == "<") op = RuleOp::Lt;
            else if (op_s == "<=") op = RuleOp::Le;
            else if (op_s == ">") op = RuleOp::Gt;
            else if (op_s == ">=") op = RuleOp::Ge;
            else throw fail(op_col, "unknown operator '" + op_s + "'");

            skip_ws();
            std::size_t val_col = pos;
            std::string val = read_token();
            RuleCondition cond;
            cond.field = field;
            cond.op = op;
            switch (*kind) {
                case detail::RuleFieldKind::Number: {
                    auto num = parse_double(val);
                    if (!num) throw fail(val_col, "expected a number for field '" + field + "'");
                    cond.value = *num;
                    break;
                }
                case detail::RuleFieldKind::Boolean: {
                    if (val != "true" && val != "false")
                        throw fail(val_col, "expected true/false for field '" + field + "'");
                    if (op != RuleOp::Eq && op != RuleOp::Ne)
                        throw fail(op_col, "boolean fields support only == and !=");
                    cond.value = val == "true";
                    break;
                }
                case detail::RuleFieldKind::Token: {
                    if (op != RuleOp::Eq && op != RuleOp::Ne)
                        throw fail(op_col, "token fields support only == and !=");
                    // Canonicalize at parse time so aliases match at eval time.
                    std::optional<std::string> canonical;
                    if (field == "dominant_actor") {
                        if (auto a = factor_actor_from_token(val))
                            canonical = std::string(to_token(*a));
                    } else if (field == "dominant_stage") {
                        if (auto s = factor_stage_from_token(val))
                            canonical = std::string(to_token(*s));
                    } else if (field == "alignment_mode") {
                        if (auto a = alignment_from_token(val))
                            canonical = std::string(to_token(*a));
                    }
                    if (!canonical)
                        throw fail(val_col, "unknown value '" + val + "' for field '" + field + "'");
                    cond.value = *canonical;
                    break;
                }
            }
            rule.conditions.push_back(std::move(cond));

            skip_ws();
            if (pos != std::string::npos && line.compare(pos, 4, "and ") == 0) {
                pos += 4;
            } else if (pos != std::string::npos && line.compare(pos, 3, "and") == 0 &&
                       pos + 3 == line.size()) {
                throw fail(pos, "dangling 'and'");
            } else {
                more = false;
            }
        }

        skip_ws();
        expect_word("then");
        skip_ws();
        expect_word("skill");
        rule.skill = read_quoted();
        skip_ws();
        expect_word("because");
        rule.rationale = read_quoted();
        book.rules.push_back(std::move(rule));
    }
    return book;
}

inline SkillRulebook load_skill_rulebook(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open skills file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_skill_rulebook(ss.str());
}

/// Deterministic rule evaluation in file order. All firing rules emit a
/// recommendation; duplicate skill tags are merged keeping the first
/// rationale. A profile matching no rule is tagged "unmapped".
inline std::vector<SkillRecommendation> map_skills(const ConfigProfile& profile,
                                                   const SkillRulebook& rulebook) {
    std::vector<SkillRecommendation> out;
    for (const auto& rule : rulebook.rules) {
        bool fires = true;
        for (const auto& cond : rule.conditions)
            if (!detail::eval_condition(profile, cond)) {
                fires = false;
                break;
            }
        if (!fires) continue;
        bool duplicate = false;
        for (const auto& existing : out)
            if (existing.skill == rule.skill) duplicate = true;
        if (!duplicate) out.push_back({rule.skill, rule.rationale, rule.id});
    }
    if (out.empty()) out.push_back({"unmapped", "no rule matched this profile", ""});
    return out;
}

}  // namespace crashlens
