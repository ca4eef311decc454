#pragma once

// Deterministic synthetic dataset generation from a marginal profile, plus
// the count-reconstruction oracle used to rebuild 2x2 tables from published
// percentages. Categorical counts are hit exactly (quota generation, never
// sampled); numeric fields come from seeded truncated log-normal draws.

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crashlens/classifier.hpp"
#include "crashlens/common.hpp"
#include "crashlens/crash_model.hpp"
#include "crashlens/factor_categories.hpp"
#include "crashlens/rng.hpp"

namespace crashlens {

// ---------------------------------------------------------------------------
// Count reconstruction oracle
// ---------------------------------------------------------------------------

/// Nearest integer count for `share_pct` of `column_n`, with a consistency
/// check that the recomputed share stays within 0.1 points of the input.
inline std::uint64_t reconstruct_counts(double share_pct, std::uint64_t column_n) {
    if (share_pct < 0.0 || share_pct > 100.0) throw DataError("share out of range");
    auto count = static_cast<std::uint64_t>(std::llround(share_pct / 100.0 * static_cast<double>(column_n)));
    if (column_n > 0) {
        double recomputed = 100.0 * static_cast<double>(count) / static_cast<double>(column_n);
        if (std::abs(recomputed - share_pct) > 0.1 + 1e-9)
            throw DataError("inconsistent share: " + format_fixed(share_pct, 2) + "% of " +
                            std::to_string(column_n) + " rounds to " + std::to_string(count) +
                            " (" + format_fixed(recomputed, 2) + "%)");
    }
    return count;
}

/// 2x2 table from an exposed-outcome count and the published margins.
inline std::array<std::uint64_t, 4> build_2x2(std::uint64_t exposed_outcome,
                                              std::uint64_t exposed_total,
                                              std::uint64_t pooled_outcome_total,
                                              std::uint64_t pooled_grand_total) {
    if (exposed_outcome > exposed_total || exposed_total > pooled_grand_total ||
        exposed_outcome > pooled_outcome_total || pooled_outcome_total > pooled_grand_total)
        throw DataError("inconsistent 2x2 margins");
    std::uint64_t a = exposed_outcome;
    std::uint64_t b = exposed_total - a;
    std::uint64_t c = pooled_outcome_total - a;
    std::uint64_t rest = pooled_grand_total - exposed_total;
    if (c > rest) throw DataError("inconsistent 2x2 margins");
    std::uint64_t d = rest - c;
    return {a, b, c, d};
}

// ---------------------------------------------------------------------------
// Marginal profile
// ---------------------------------------------------------------------------

struct NumericMarginal {
    double mean = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    std::uint64_t n = 0;  // present values in this configuration
};

struct ExecutionMarginal {
    std::uint64_t n = 0;  // properly selected maneuvers of this action
    double improper_pct = 0.0;
    double proper_pct = 0.0;
    double unknown_pct = 0.0;
};

struct ConfigMarginal {
    // Table-1 style column shares (percent of each column total).
    double total_pct = 0.0;
    double severe_pct = 0.0;
    double nonsevere_pct = 0.0;
    double l3_pct = 0.0;
    double l1_pct = 0.0;
    std::uint64_t severity_missing = 0;

    // Primary contributing factor (percent of factor-known cases).
    std::array<double, kFactorCategoryCount> factor_pct{};
    std::uint64_t factor_missing = 0;

    // Evasive action shares (percent of the bucket, including missing).
    double brake_pct = 0.0;
    double swerve_pct = 0.0;
    double other_action_pct = 0.0;
    double no_action_pct = 0.0;
    double evasive_missing_pct = 0.0;

    // Selection quality among attempted maneuvers (percent).
    double sel_improper_pct = 0.0;
    double sel_proper_pct = 0.0;
    double sel_unknown_pct = 0.0;

    // Execution quality among properly selected, per action.
    ExecutionMarginal exec_brake;
    ExecutionMarginal exec_swerve;
    ExecutionMarginal exec_other;

    // Alignment shares (percent of the bucket).
    double straight_pct = 0.0;
    double curve_left_pct = 0.0;
    double curve_right_pct = 0.0;
    double corner_pct = 0.0;
    double jog_pct = 0.0;

    NumericMarginal posted;
    NumericMarginal impact;
    NumericMarginal tpei;
    std::uint64_t speeding_count = 0;
};

struct MarginalProfile {
    std::uint64_t total_n = 0;  // full input population, exclusions included
    std::uint64_t excluded_impairment = 0;
    std::uint64_t excluded_mechanical = 0;
    std::uint64_t excluded_mofa = 0;

    std::uint64_t column_total = 0;
    std::uint64_t column_severe = 0;
    std::uint64_t column_nonsevere = 0;
    std::uint64_t column_l3 = 0;
    std::uint64_t column_l1 = 0;

    std::array<ConfigMarginal, 8> configs{};

    const ConfigMarginal& config(MergedConfig c) const {
        return configs[static_cast<std::size_t>(c)];
    }
    ConfigMarginal& config(MergedConfig c) { return configs[static_cast<std::size_t>(c)]; }
};

namespace detail {

class KeyValueReader {
public:
    explicit KeyValueReader(std::string_view text) {
        std::size_t line_no = 0;
        for (const auto& raw : split(text, '\n')) {
            ++line_no;
            std::string line = trim(raw);
            if (line.empty() || line[0] == '#') continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ParseError("profile line " + std::to_string(line_no) + ": expected 'key = value'");
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (!entries_.emplace(key, val).second)
                throw ParseError("profile line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }

    double number(const std::string& key) {
        auto v = parse_double(take(key));
        if (!v) throw ParseError("profile key '" + key + "' is not a number");
        return *v;
    }

    std::uint64_t count(const std::string& key) {
        auto v = parse_int(take(key));
        if (!v || *v < 0) throw ParseError("profile key '" + key + "' is not a non-negative integer");
        return static_cast<std::uint64_t>(*v);
    }

    double number_or(const std::string& key, double fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        return number(key);
    }

    std::uint64_t count_or(const std::string& key, std::uint64_t fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        return count(key);
    }

    void expect_exhausted() const {
        if (!entries_.empty())
            throw ParseError("profile has unrecognized key '" + entries_.begin()->first + "'");
    }

private:
    std::string take(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ParseError("profile is missing key '" + key + "'");
        std::string v = it->second;
        entries_.erase(it);
        return v;
    }

    std::map<std::string, std::string> entries_;
};

inline void check_distribution_sum(const std::string& what, double sum) {
    if (std::abs(sum - 100.0) > 0.1 + 1e-9)
        throw ParseError(what + " sums to " + format_fixed(sum, 2) + "%, expected 100 +- 0.1");
}

}  // namespace detail

inline MarginalProfile parse_marginal_profile(std::string_view text) {
    detail::KeyValueReader kv(text);
    MarginalProfile p;
    p.total_n = kv.count("total_n");
    if (p.total_n == 0) throw ParseError("total_n must be positive");
    p.excluded_impairment = kv.count("exclusions.impairment");
    p.excluded_mechanical = kv.count("exclusions.mechanical");
    p.excluded_mofa = kv.count("exclusions.mofa");
    p.column_total = kv.count("columns.total");
    p.column_severe = kv.count("columns.severe");
    p.column_nonsevere = kv.count("columns.nonsevere");
    p.column_l3 = kv.count("columns.l3");
    p.column_l1 = kv.count("columns.l1");

    if (p.excluded_impairment + p.excluded_mechanical + p.excluded_mofa + p.column_total != p.total_n)
        throw ParseError("exclusions plus study population do not add up to total_n");
    if (p.column_l3 + p.column_l1 != p.column_total)
        throw ParseError("PTW class columns do not add up to the study population");
    if (p.column_severe + p.column_nonsevere > p.column_total)
        throw ParseError("severity columns exceed the study population");

    double sum_total = 0, sum_severe = 0, sum_nonsevere = 0, sum_l3 = 0, sum_l1 = 0;
    for (auto cfg : kAllMergedConfigs) {
        auto& m = p.config(cfg);
        std::string base(to_token(cfg));
        m.total_pct = kv.number("freq." + base + ".total");
        m.severe_pct = kv.number("freq." + base + ".severe");
        m.nonsevere_pct = kv.number("freq." + base + ".nonsevere");
        m.l3_pct = kv.number("freq." + base + ".l3");
        m.l1_pct = kv.number("freq." + base + ".l1");
        m.severity_missing = kv.count_or("missing.severity." + base, 0);
        sum_total += m.total_pct;
        sum_severe += m.severe_pct;
        sum_nonsevere += m.nonsevere_pct;
        sum_l3 += m.l3_pct;
        sum_l1 += m.l1_pct;

        m.factor_missing = kv.count_or("factor." + base + ".n_missing", 0);
        double factor_sum = 0;
        for (std::size_t i = 0; i < kFactorCategoryCount; ++i) {
            m.factor_pct[i] =
                kv.number_or("factor." + base + "." + std::string(factor_category_token(i)), 0.0);
            factor_sum += m.factor_pct[i];
        }
        if (factor_sum > 0) detail::check_distribution_sum("factor." + base, factor_sum);

        m.brake_pct = kv.number_or("evasive." + base + ".brake", 0.0);
        m.swerve_pct = kv.number_or("evasive." + base + ".swerve", 0.0);
        m.other_action_pct = kv.number_or("evasive." + base + ".other", 0.0);
        m.no_action_pct = kv.number_or("evasive." + base + ".no_action", 0.0);
        m.evasive_missing_pct = kv.number_or("evasive." + base + ".missing", 0.0);
        detail::check_distribution_sum("evasive." + base,
                                       m.brake_pct + m.swerve_pct + m.other_action_pct +
                                           m.no_action_pct + m.evasive_missing_pct);

        m.sel_improper_pct = kv.number_or("selection." + base + ".improper", 0.0);
        m.sel_proper_pct = kv.number_or("selection." + base + ".proper", 0.0);
        m.sel_unknown_pct = kv.number_or("selection." + base + ".unknown", 0.0);
        double sel_sum = m.sel_improper_pct + m.sel_proper_pct + m.sel_unknown_pct;
        if (sel_sum > 0) detail::check_distribution_sum("selection." + base, sel_sum);

        auto read_exec = [&](const std::string& action, ExecutionMarginal& e) {
            e.n = kv.count_or("execution." + base + "." + action + ".n", 0);
            e.improper_pct = kv.number_or("execution." + base + "." + action + ".improper", 0.0);
            e.proper_pct = kv.number_or("execution." + base + "." + action + ".proper", 0.0);
            e.unknown_pct = kv.number_or("execution." + base + "." + action + ".unknown", 0.0);
            if (e.n > 0)
                detail::check_distribution_sum("execution." + base + "." + action,
                                               e.improper_pct + e.proper_pct + e.unknown_pct);
        };
        read_exec("brake", m.exec_brake);
        read_exec("swerve", m.exec_swerve);
        read_exec("other", m.exec_other);

        m.straight_pct = kv.number_or("alignment." + base + ".straight", 0.0);
        m.curve_left_pct = kv.number_or("alignment." + base + ".curve_left", 0.0);
        m.curve_right_pct = kv.number_or("alignment." + base + ".curve_right", 0.0);
        m.corner_pct = kv.number_or("alignment." + base + ".corner", 0.0);
        m.jog_pct = kv.number_or("alignment." + base + ".jog", 0.0);
        detail::check_distribution_sum("alignment." + base,
                                       m.straight_pct + m.curve_left_pct + m.curve_right_pct +
                                           m.corner_pct + m.jog_pct);

        auto read_numeric = [&](const std::string& field, NumericMarginal& nm) {
            nm.mean = kv.number("numeric." + field + "." + base + ".mean");
            nm.q1 = kv.number("numeric." + field + "." + base + ".q1");
            nm.q3 = kv.number("numeric." + field + "." + base + ".q3");
            nm.n = kv.count("numeric." + field + "." + base + ".n");
            if (nm.q1 > nm.q3)
                throw ParseError("numeric." + field + "." + base + ": q1 exceeds q3");
            if (!(nm.mean > 0.0))
                throw ParseError("numeric." + field + "." + base + ": mean must be positive");
        };
        read_numeric("posted", m.posted);
        read_numeric("impact", m.impact);
        read_numeric("tpei", m.tpei);

        m.speeding_count = kv.count_or("speeding." + base, 0);
    }
    detail::check_distribution_sum("freq totals", sum_total);
    detail::check_distribution_sum("freq severe", sum_severe);
    detail::check_distribution_sum("freq nonsevere", sum_nonsevere);
    detail::check_distribution_sum("freq l3", sum_l3);
    detail::check_distribution_sum("freq l1", sum_l1);
    kv.expect_exhausted();
    return p;
}

inline MarginalProfile load_marginal_profile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open profile file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_marginal_profile(ss.str());
}

// ---------------------------------------------------------------------------
// Integer quota derivation
// ---------------------------------------------------------------------------

struct ConfigQuotas {
    std::uint64_t bucket = 0;
    std::uint64_t severe = 0, nonsevere = 0, severity_missing = 0;
    std::uint64_t l3 = 0, l1 = 0;
    std::array<std::uint64_t, kFactorCategoryCount> factor{};
    std::uint64_t factor_missing = 0;
    std::uint64_t brake = 0, swerve = 0, other_action = 0, no_action = 0, evasive_missing = 0;
    std::uint64_t sel_improper = 0, sel_proper = 0, sel_unknown = 0;
    // Per action: properly-selected total and its execution split, then the
    // improper/unknown selection counts layered on top.
    struct ActionQuota {
        std::uint64_t proper_selected = 0;
        std::uint64_t exec_improper = 0, exec_proper = 0, exec_unknown = 0;
        std::uint64_t sel_improper = 0, sel_unknown = 0;
    };
    ActionQuota brake_q, swerve_q, other_q;
    std::array<std::uint64_t, 5> alignment{};  // straight, left, right, corner, jog
    std::uint64_t posted_missing = 0, impact_missing = 0, tpei_missing = 0;
    std::uint64_t speeding = 0;
};

struct GenerationQuotas {
    std::array<ConfigQuotas, 8> configs{};
    const ConfigQuotas& config(MergedConfig c) const { return configs[static_cast<std::size_t>(c)]; }
    ConfigQuotas& config(MergedConfig c) { return configs[static_cast<std::size_t>(c)]; }
};

inline GenerationQuotas derive_quotas(const MarginalProfile& p) {
    GenerationQuotas q;
    std::uint64_t bucket_sum = 0, severe_sum = 0, nonsevere_sum = 0, l3_sum = 0, l1_sum = 0;
    for (auto cfg : kAllMergedConfigs) {
        const auto& m = p.config(cfg);
        auto& c = q.config(cfg);
        std::string name(to_token(cfg));

        c.bucket = reconstruct_counts(m.total_pct, p.column_total);
        c.severe = reconstruct_counts(m.severe_pct, p.column_severe);
        c.nonsevere = reconstruct_counts(m.nonsevere_pct, p.column_nonsevere);
        c.severity_missing = m.severity_missing;
        if (c.severe + c.nonsevere + c.severity_missing != c.bucket)
            throw DataError("infeasible margin: severity counts for " + name + " (" +
                            std::to_string(c.severe) + "+" + std::to_string(c.nonsevere) + "+" +
                            std::to_string(c.severity_missing) + " != " + std::to_string(c.bucket) + ")");
        c.l3 = reconstruct_counts(m.l3_pct, p.column_l3);
        std::uint64_t l1_check = reconstruct_counts(m.l1_pct, p.column_l1);
        if (c.l3 > c.bucket || c.l3 + l1_check != c.bucket)
            throw DataError("infeasible margin: PTW class counts for " + name);
        c.l1 = c.bucket - c.l3;

        if (m.factor_missing > c.bucket)
            throw DataError("infeasible margin: factor_missing for " + name);
        c.factor_missing = m.factor_missing;
        std::uint64_t known = c.bucket - c.factor_missing;
        std::uint64_t fsum = 0;
        for (std::size_t i = 0; i < kFactorCategoryCount; ++i) {
            c.factor[i] = reconstruct_counts(m.factor_pct[i], known);
            fsum += c.factor[i];
        }
        bool has_factor_dist = fsum > 0;
        if (has_factor_dist && fsum != known)
            throw DataError("infeasible margin: factor counts for " + name + " sum to " +
                            std::to_string(fsum) + ", expected " + std::to_string(known));
        if (!has_factor_dist) c.factor_missing = c.bucket;  // no distribution given

        c.brake = reconstruct_counts(m.brake_pct, c.bucket);
        c.swerve = reconstruct_counts(m.swerve_pct, c.bucket);
        c.other_action = reconstruct_counts(m.other_action_pct, c.bucket);
        c.no_action = reconstruct_counts(m.no_action_pct, c.bucket);
        c.evasive_missing = reconstruct_counts(m.evasive_missing_pct, c.bucket);
        if (c.brake + c.swerve + c.other_action + c.no_action + c.evasive_missing != c.bucket)
            throw DataError("infeasible margin: evasive action counts for " + name);

        std::uint64_t attempted = c.brake + c.swerve + c.other_action;
        c.sel_improper = reconstruct_counts(m.sel_improper_pct, attempted);
        c.sel_proper = reconstruct_counts(m.sel_proper_pct, attempted);
        c.sel_unknown = reconstruct_counts(m.sel_unknown_pct, attempted);
        if (attempted > 0 && c.sel_improper + c.sel_proper + c.sel_unknown != attempted)
            throw DataError("infeasible margin: selection quality counts for " + name);

        auto fill_exec = [&](const ExecutionMarginal& e, std::uint64_t action_total,
                             ConfigQuotas::ActionQuota& aq, const char* action_name) {
            aq.proper_selected = e.n;
            if (e.n > action_total)
                throw DataError("infeasible margin: properly selected " + std::string(action_name) +
                                " exceeds action count for " + name);
            aq.exec_improper = reconstruct_counts(e.improper_pct, e.n);
            aq.exec_proper = reconstruct_counts(e.proper_pct, e.n);
            aq.exec_unknown = reconstruct_counts(e.unknown_pct, e.n);
            if (e.n > 0 && aq.exec_improper + aq.exec_proper + aq.exec_unknown != e.n)
                throw DataError("infeasible margin: execution quality counts for " + name);
        };
        fill_exec(m.exec_brake, c.brake, c.brake_q, "brake");
        fill_exec(m.exec_swerve, c.swerve, c.swerve_q, "swerve");
        fill_exec(m.exec_other, c.other_action, c.other_q, "other");
        std::uint64_t proper_total =
            c.brake_q.proper_selected + c.swerve_q.proper_selected + c.other_q.proper_selected;
        if (attempted > 0 && proper_total != c.sel_proper)
            throw DataError("infeasible margin: per-action proper selections for " + name +
                            " sum to " + std::to_string(proper_total) + ", expected " +
                            std::to_string(c.sel_proper));

        // Layer improper/unknown selections onto actions: improper fills
        // brake, swerve, other in order; unknown takes what remains.
        std::uint64_t extra_b = c.brake - c.brake_q.proper_selected;
        std::uint64_t extra_s = c.swerve - c.swerve_q.proper_selected;
        std::uint64_t extra_o = c.other_action - c.other_q.proper_selected;
        std::uint64_t improper_left = c.sel_improper;
        auto take_improper = [&](std::uint64_t& extra, std::uint64_t& slot) {
            std::uint64_t t = std::min(improper_left, extra);
            slot = t;
            extra -= t;
            improper_left -= t;
        };
        take_improper(extra_b, c.brake_q.sel_improper);
        take_improper(extra_s, c.swerve_q.sel_improper);
        take_improper(extra_o, c.other_q.sel_improper);
        if (improper_left > 0)
            throw DataError("infeasible margin: improper selections exceed attempted for " + name);
        c.brake_q.sel_unknown = extra_b;
        c.swerve_q.sel_unknown = extra_s;
        c.other_q.sel_unknown = extra_o;
        if (c.brake_q.sel_unknown + c.swerve_q.sel_unknown + c.other_q.sel_unknown != c.sel_unknown)
            throw DataError("infeasible margin: unknown selections for " + name);

        double align_pcts[5] = {m.straight_pct, m.curve_left_pct, m.curve_right_pct, m.corner_pct,
                                m.jog_pct};
        std::uint64_t asum = 0;
        for (int i = 0; i < 5; ++i) {
            c.alignment[i] = reconstruct_counts(align_pcts[i], c.bucket);
            asum += c.alignment[i];
        }
        if (asum != c.bucket)
            throw DataError("infeasible margin: alignment counts for " + name);

        if (m.posted.n > c.bucket || m.impact.n > c.bucket || m.tpei.n > c.bucket)
            throw DataError("infeasible margin: numeric n exceeds bucket for " + name);
        c.posted_missing = c.bucket - m.posted.n;
        c.impact_missing = c.bucket - m.impact.n;
        c.tpei_missing = c.bucket - m.tpei.n;
        if (c.posted_missing + c.impact_missing > c.bucket)
            throw DataError("infeasible margin: posted/impact missing overlap forced for " + name);
        std::uint64_t both_known = c.bucket - c.posted_missing - c.impact_missing;
        if (m.speeding_count > both_known)
            throw DataError("infeasible margin: speeding count exceeds cases with both speeds for " + name);
        c.speeding = m.speeding_count;

        bucket_sum += c.bucket;
        severe_sum += c.severe;
        nonsevere_sum += c.nonsevere;
        l3_sum += c.l3;
        l1_sum += c.l1;
    }
    if (bucket_sum != p.column_total) throw DataError("infeasible margin: bucket totals");
    if (severe_sum != p.column_severe) throw DataError("infeasible margin: severe totals");
    if (nonsevere_sum != p.column_nonsevere) throw DataError("infeasible margin: non-severe totals");
    if (l3_sum != p.column_l3 || l1_sum != p.column_l1)
        throw DataError("infeasible margin: PTW class totals");
    return q;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace detail {

inline double snap_posted(double v) {
    double snapped = std::round(v / 10.0) * 10.0;
    return std::max(30.0, snapped);
}

// Decimal rounding via scale-divide so the result is bit-identical to what
// parsing its decimal rendering yields.
inline double round_decimals(double v, double scale) { return std::round(v * scale) / scale; }

inline bool speeding_pair(double impact, double posted) { return impact * 5.0 > posted * 6.0; }

// Assigns (posted, impact) pairs over the both-known subset so that exactly
// `quota` pairs satisfy the speeding rule: the largest impacts meet the
// smallest posted limits, the remainder is rank-aligned, and local swaps
// repair any accidental speeding pair.
inline std::vector<std::pair<double, double>> pair_for_speeding(std::vector<double> posted,
                                                                std::vector<double> impact,
                                                                std::uint64_t quota,
                                                                const std::string& name) {
    std::sort(posted.begin(), posted.end());
    std::sort(impact.begin(), impact.end());
    std::size_t n = posted.size();
    if (impact.size() != n || quota > n) throw DataError("speeding quota infeasible for " + name);

    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < quota; ++i) {
        double po = posted[i];
        double im = impact[n - quota + i];
        if (!speeding_pair(im, po))
            throw DataError("speeding quota infeasible for " + name);
        pairs.emplace_back(po, im);
    }
    std::vector<std::pair<double, double>> rest;
    rest.reserve(n - quota);
    for (std::size_t i = 0; i < n - quota; ++i) rest.emplace_back(posted[quota + i], impact[i]);

    for (std::size_t i = 0; i < rest.size(); ++i) {
        if (!speeding_pair(rest[i].second, rest[i].first)) continue;
        bool fixed = false;
        for (std::size_t j = 0; j < rest.size() && !fixed; ++j) {
            if (j == i) continue;
            // Swap impacts if both pairs end up non-speeding.
            if (!speeding_pair(rest[j].second, rest[i].first) &&
                !speeding_pair(rest[i].second, rest[j].first)) {
                std::swap(rest[i].second, rest[j].second);
                fixed = true;
            }
        }
        if (!fixed) throw DataError("speeding quota infeasible for " + name);
    }
    pairs.insert(pairs.end(), rest.begin(), rest.end());
    return pairs;
}

// Removes `k` evenly spaced values from a sorted vector, returning them.
inline std::vector<double> strip_evenly(std::vector<double>& sorted, std::size_t k) {
    std::vector<double> taken;
    if (k == 0) return taken;
    if (k >= sorted.size()) {
        taken = std::move(sorted);
        sorted.clear();
        return taken;
    }
    std::vector<bool> take(sorted.size(), false);
    for (std::size_t i = 0; i < k; ++i) take[(i * sorted.size()) / k] = true;
    std::vector<double> kept;
    kept.reserve(sorted.size() - k);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (take[i]) taken.push_back(sorted[i]);
        else kept.push_back(sorted[i]);
    }
    sorted = std::move(kept);
    return taken;
}

inline const std::vector<MaidsConfig>& maids_tokens_for(MergedConfig cfg) {
    static const std::array<std::vector<MaidsConfig>, 8> kTokens = [] {
        std::array<std::vector<MaidsConfig>, 8> t;
        const auto& rb = default_rulebook();
        for (int i = 0; i < kMaidsConfigCount; ++i) {
            auto mc = static_cast<MaidsConfig>(i);
            t[static_cast<std::size_t>(rb.map(mc))].push_back(mc);
        }
        return t;
    }();
    return kTokens[static_cast<std::size_t>(cfg)];
}

}  // namespace detail

/// Deterministic quota-based generation: identical (profile, seed) yields an
/// identical record list; different seeds keep every categorical count and
/// change only numeric values and record order.
inline std::vector<CrashRecord> generate(const MarginalProfile& profile, std::uint64_t seed) {
    GenerationQuotas quotas = derive_quotas(profile);
    Rng rng(seed);
    std::vector<CrashRecord> records;
    records.reserve(profile.total_n);

    for (auto cfg : kAllMergedConfigs) {
        const auto& cq = quotas.config(cfg);
        const auto& cm = profile.config(cfg);
        std::size_t n = cq.bucket;
        if (n == 0) continue;

        std::vector<CrashRecord> bucket(n);
        const auto& tokens = detail::maids_tokens_for(cfg);
        for (std::size_t i = 0; i < n; ++i) bucket[i].maids_config = tokens[i % tokens.size()];

        // PTW class.
        {
            std::vector<PtwClass> v;
            v.insert(v.end(), cq.l3, PtwClass::L3Motorcycle);
            v.insert(v.end(), cq.l1, PtwClass::L1Moped);
            rng.shuffle(v);
            for (std::size_t i = 0; i < n; ++i) bucket[i].ptw_class = v[i];
        }

        // Severity -> MAIS.
        {
            enum class Sev { Severe, NonSevere, Missing };
            std::vector<Sev> v;
            v.insert(v.end(), cq.severe, Sev::Severe);
            v.insert(v.end(), cq.nonsevere, Sev::NonSevere);
            v.insert(v.end(), cq.severity_missing, Sev::Missing);
            rng.shuffle(v);
            for (std::size_t i = 0; i < n; ++i) {
                double u = rng.uniform01();
                switch (v[i]) {
                    case Sev::Severe: bucket[i].mais = u < 0.6 ? 3 : (u < 0.9 ? 4 : 5); break;
                    case Sev::NonSevere: bucket[i].mais = u < 0.05 ? 0 : (u < 0.6 ? 1 : 2); break;
                    case Sev::Missing: break;
                }
            }
        }

        // Primary contributing factor.
        {
            std::vector<std::optional<ContributingFactor>> v;
            for (std::size_t i = 0; i < kFactorCategoryCount; ++i)
                v.insert(v.end(), cq.factor[i], factor_category(i));
            v.insert(v.end(), cq.factor_missing, std::nullopt);
            rng.shuffle(v);
            for (std::size_t i = 0; i < n; ++i) bucket[i].primary_factor = v[i];
        }

        // Evasive response.
        {
            std::vector<std::optional<EvasiveResponse>> v;
            auto push_action = [&](EvasiveAction action, const ConfigQuotas::ActionQuota& aq) {
                auto add = [&](std::uint64_t k, Quality sel, Quality exec) {
                    v.insert(v.end(), k, EvasiveResponse{action, sel, exec});
                };
                add(aq.exec_improper, Quality::Proper, Quality::Improper);
                add(aq.exec_proper, Quality::Proper, Quality::Proper);
                add(aq.exec_unknown, Quality::Proper, Quality::Unknown);
                add(aq.sel_improper, Quality::Improper, Quality::Unknown);
                add(aq.sel_unknown, Quality::Unknown, Quality::Unknown);
            };
            push_action(EvasiveAction::Brake, cq.brake_q);
            push_action(EvasiveAction::Swerve, cq.swerve_q);
            push_action(EvasiveAction::Other, cq.other_q);
            v.insert(v.end(), cq.no_action,
                     EvasiveResponse{EvasiveAction::NoAction, Quality::Unknown, Quality::Unknown});
            v.insert(v.end(), cq.evasive_missing, std::nullopt);
            rng.shuffle(v);
            for (std::size_t i = 0; i < n; ++i) bucket[i].evasive = v[i];
        }

        // Alignment.
        {
            static constexpr Alignment kAligns[5] = {Alignment::Straight, Alignment::CurveLeft,
                                                     Alignment::CurveRight, Alignment::Corner,
                                                     Alignment::Jog};
            std::vector<Alignment> v;
            for (int i = 0; i < 5; ++i) v.insert(v.end(), cq.alignment[i], kAligns[i]);
            rng.shuffle(v);
            for (std::size_t i = 0; i < n; ++i) bucket[i].alignment = v[i];
        }

        // Numeric fields. Posted limits snap to a 10 km/h grid; the posted
        // and impact multisets are paired so the speeding quota is exact.
        {
            auto posted_fit = fit_truncated_lognormal(cm.posted.mean, cm.posted.q1, cm.posted.q3,
                                                      30.0, 130.0);
            auto impact_fit = fit_truncated_lognormal(cm.impact.mean, cm.impact.q1, cm.impact.q3,
                                                      1.0, 180.0);
            auto tpei_fit = fit_truncated_lognormal(cm.tpei.mean, cm.tpei.q1, cm.tpei.q3, 0.02, 15.0);

            std::vector<double> posted_vals = stratified_draws(posted_fit, cm.posted.n, rng);
            for (auto& v : posted_vals) v = detail::snap_posted(v);
            std::vector<double> impact_vals = stratified_draws(impact_fit, cm.impact.n, rng);
            for (auto& v : impact_vals) v = detail::round_decimals(v, 10.0);
            std::vector<double> tpei_vals = stratified_draws(tpei_fit, cm.tpei.n, rng);
            for (auto& v : tpei_vals) v = detail::round_decimals(v, 100.0);

            // Disjoint missing masks for posted/impact.
            std::vector<std::size_t> order(n);
            for (std::size_t i = 0; i < n; ++i) order[i] = i;
            rng.shuffle(order);
            std::vector<bool> posted_missing(n, false), impact_missing(n, false);
            std::size_t k = 0;
            for (std::size_t i = 0; i < cq.posted_missing; ++i) posted_missing[order[k++]] = true;
            for (std::size_t i = 0; i < cq.impact_missing; ++i) impact_missing[order[k++]] = true;

            std::sort(posted_vals.begin(), posted_vals.end());
            std::sort(impact_vals.begin(), impact_vals.end());
            // Records with exactly one of the two speeds take evenly spaced
            // values; the rest are paired for the speeding quota.
            auto posted_solo = detail::strip_evenly(posted_vals, cq.impact_missing);
            auto impact_solo = detail::strip_evenly(impact_vals, cq.posted_missing);
            auto pairs = detail::pair_for_speeding(posted_vals, impact_vals, cq.speeding,
                                                   std::string(to_token(cfg)));
            rng.shuffle(pairs);

            std::size_t pair_idx = 0, posted_solo_idx = 0, impact_solo_idx = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (posted_missing[i] && impact_missing[i]) continue;
                if (posted_missing[i]) bucket[i].impact_speed_kmh = impact_solo[impact_solo_idx++];
                else if (impact_missing[i]) bucket[i].posted_speed_kmh = posted_solo[posted_solo_idx++];
                else {
                    bucket[i].posted_speed_kmh = pairs[pair_idx].first;
                    bucket[i].impact_speed_kmh = pairs[pair_idx].second;
                    ++pair_idx;
                }
            }

            std::vector<bool> tpei_missing(n, false);
            std::vector<std::size_t> torder(n);
            for (std::size_t i = 0; i < n; ++i) torder[i] = i;
            rng.shuffle(torder);
            for (std::size_t i = 0; i < cq.tpei_missing; ++i) tpei_missing[torder[i]] = true;
            rng.shuffle(tpei_vals);
            std::size_t t_idx = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (!tpei_missing[i]) bucket[i].tpei_s = tpei_vals[t_idx++];
        }

        records.insert(records.end(), bucket.begin(), bucket.end());
    }

    // Excluded populations: crashes generated by impairment or a mechanical
    // problem, and mofa-class PTWs. Dropped by the study filter, so only
    // their flags and basic plausibility matter.
    auto add_excluded = [&](std::uint64_t count, bool impairment, bool mechanical, bool mofa) {
        for (std::uint64_t i = 0; i < count; ++i) {
            CrashRecord r;
            r.ptw_class = mofa ? PtwClass::Mofa
                               : (i % 2 == 0 ? PtwClass::L3Motorcycle : PtwClass::L1Moped);
            r.maids_config = static_cast<MaidsConfig>(i % kMaidsConfigCount);
            r.mais = static_cast<int>(i % 7);
            r.alignment = Alignment::Straight;
            r.rider_impairment_primary = impairment;
            r.mechanical_primary = mechanical;
            records.push_back(std::move(r));
        }
    };
    add_excluded(profile.excluded_impairment, true, false, false);
    add_excluded(profile.excluded_mechanical, false, true, false);
    add_excluded(profile.excluded_mofa, false, false, true);

    rng.shuffle(records);
    for (std::size_t i = 0; i < records.size(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "case_%06zu", i + 1);
        records[i].case_id = buf;
    }
    return records;
}

}  // namespace crashlens
