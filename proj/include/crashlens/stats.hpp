#pragma once

// Quantitative machinery: frequency tables, 2x2 odds ratios with Woolf
// 95% confidence intervals (Haldane-Anscombe corrected on zero cells),
// mean/quartile summaries under pairwise deletion, the speeding rule and
// the required-deceleration kinematics. Everything here is a pure function.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crashlens/classifier.hpp"
#include "crashlens/common.hpp"
#include "crashlens/crash_model.hpp"

namespace crashlens {

inline constexpr double kZ95 = 1.959964;

struct OddsRatioResult {
    std::uint64_t a = 0, b = 0, c = 0, d = 0;
    double or_value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool significant = false;
    bool corrected = false;

    auto operator<=>(const OddsRatioResult&) const = default;
};

/// Woolf log-normal odds ratio for the table
///   a = exposed & outcome, b = exposed & no outcome,
///   c = unexposed & outcome, d = unexposed & no outcome.
/// Any zero cell triggers the +0.5 continuity correction on all four cells
/// and sets `corrected`. Throws DataError when an exposure margin is empty.
inline OddsRatioResult odds_ratio(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                  std::uint64_t d) {
    if (a + b == 0 || c + d == 0) throw DataError("degenerate margin");
    OddsRatioResult r{a, b, c, d};
    double fa = static_cast<double>(a), fb = static_cast<double>(b);
    double fc = static_cast<double>(c), fd = static_cast<double>(d);
    if (a == 0 || b == 0 || c == 0 || d == 0) {
        fa += 0.5; fb += 0.5; fc += 0.5; fd += 0.5;
        r.corrected = true;
    }
    r.or_value = (fa * fd) / (fb * fc);
    double se = std::sqrt(1.0 / fa + 1.0 / fb + 1.0 / fc + 1.0 / fd);
    double log_or = std::log(r.or_value);
    r.ci_low = std::exp(log_or - kZ95 * se);
    r.ci_high = std::exp(log_or + kZ95 * se);
    r.significant = r.ci_low > 1.0 || r.ci_high < 1.0;
    return r;
}

/// Dichotomous outcome over a record; empty result means "unknown" and the
/// record is dropped from the analysis (pairwise deletion).
using OutcomePredicate = std::function<std::optional<bool>(const CrashRecord&)>;

/// Association between membership in one configuration (vs the pooled rest)
/// and a dichotomous outcome. Records with unknown outcome are dropped.
inline OddsRatioResult config_association(const Partition& partition, MergedConfig config,
                                          const OutcomePredicate& outcome) {
    std::uint64_t a = 0, b = 0, c = 0, d = 0;
    for (auto cfg : kAllMergedConfigs) {
        bool exposed = cfg == config;
        for (const auto& rec : partition.bucket(cfg)) {
            auto o = outcome(rec);
            if (!o) continue;
            if (exposed) (*o ? a : b)++;
            else (*o ? c : d)++;
        }
    }
    if (a + c == 0 || b + d == 0) throw DataError("degenerate margin");
    return odds_ratio(a, b, c, d);
}

// ---------------------------------------------------------------------------
// Frequency tables
// ---------------------------------------------------------------------------

struct FrequencyRow {
    std::string label;
    std::size_t count = 0;
    std::optional<double> pct;  // empty when the column total is zero

    auto operator<=>(const FrequencyRow&) const = default;
};

struct FrequencyTable {
    std::string segment;
    std::size_t column_n = 0;
    std::vector<FrequencyRow> rows;

    bool undefined() const { return column_n == 0; }

    auto operator<=>(const FrequencyTable&) const = default;
};

using SegmentPredicate = std::function<bool(const CrashRecord&)>;

/// Per-configuration counts of records satisfying the segment predicate,
/// with percentages relative to the segment total. An empty segment yields
/// a table flagged undefined instead of NaN percentages.
inline FrequencyTable frequency_table(const Partition& partition, const SegmentPredicate& segment,
                                      std::string segment_label) {
    FrequencyTable t;
    t.segment = std::move(segment_label);
    for (auto cfg : kAllMergedConfigs) {
        std::size_t n = 0;
        for (const auto& rec : partition.bucket(cfg))
            if (segment(rec)) ++n;
        t.rows.push_back({std::string(display_label(cfg)), n, std::nullopt});
        t.column_n += n;
    }
    if (t.column_n > 0)
        for (auto& row : t.rows)
            row.pct = 100.0 * static_cast<double>(row.count) / static_cast<double>(t.column_n);
    return t;
}

// ---------------------------------------------------------------------------
// Numeric summaries
// ---------------------------------------------------------------------------

struct SpeedTimeSummary {
    std::optional<double> mean;
    std::optional<double> q1;
    std::optional<double> q3;
    std::size_t n = 0;  // present values only (pairwise deletion)

    bool defined() const { return n > 0; }

    auto operator<=>(const SpeedTimeSummary&) const = default;
};

enum class NumericField { PostedSpeed, ImpactSpeed, Tpei };

inline std::optional<double> numeric_field(const CrashRecord& r, NumericField f) {
    switch (f) {
        case NumericField::PostedSpeed: return r.posted_speed_kmh;
        case NumericField::ImpactSpeed: return r.impact_speed_kmh;
        case NumericField::Tpei: return r.tpei_s;
    }
    return std::nullopt;
}

inline std::string_view to_token(NumericField f) {
    switch (f) {
        case NumericField::PostedSpeed: return "posted_speed_kmh";
        case NumericField::ImpactSpeed: return "impact_speed_kmh";
        case NumericField::Tpei: return "tpei_s";
    }
    return "";
}

// Quartile by linear interpolation between closest ranks, position 1+p(n-1).
inline double interpolated_quantile(const std::vector<double>& sorted, double p) {
    std::size_t n = sorted.size();
    double pos = 1.0 + p * static_cast<double>(n - 1);
    auto k = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(k);
    if (k >= n) return sorted[n - 1];
    double lo = sorted[k - 1];
    return frac == 0.0 ? lo : lo + frac * (sorted[k] - lo);
}

inline SpeedTimeSummary summarize_values(std::vector<double> values) {
    SpeedTimeSummary s;
    s.n = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.q1 = interpolated_quantile(values, 0.25);
    s.q3 = interpolated_quantile(values, 0.75);
    return s;
}

/// Mean and quartiles over present values of one numeric field.
inline SpeedTimeSummary summarize_numeric(const std::vector<CrashRecord>& records,
                                          NumericField field) {
    std::vector<double> values;
    values.reserve(records.size());
    for (const auto& r : records)
        if (auto v = numeric_field(r, field)) values.push_back(*v);
    return summarize_values(std::move(values));
}

// ---------------------------------------------------------------------------
// Speeding rule and kinematics
// ---------------------------------------------------------------------------

/// True iff impact speed strictly exceeds 120% of the posted limit.
/// Compared as impact*5 > posted*6 so the boundary case is exact for the
/// representable speeds that appear in practice.
inline std::optional<bool> speeding_flag(std::optional<double> impact_speed_kmh,
                                         std::optional<double> posted_speed_kmh) {
    if (!impact_speed_kmh || !posted_speed_kmh) return std::nullopt;
    return *impact_speed_kmh * 5.0 > *posted_speed_kmh * 6.0;
}

inline std::optional<bool> speeding_flag(const CrashRecord& r) {
    return speeding_flag(r.impact_speed_kmh, r.posted_speed_kmh);
}

/// Constant deceleration (m/s^2) bringing `speed_kmh` to zero in exactly
/// `tpei_s` seconds. Throws on a non-positive time budget.
inline double required_deceleration(double speed_kmh, double tpei_s) {
    if (!(tpei_s > 0.0)) throw DataError("zero time budget");
    if (speed_kmh < 0.0) throw DataError("negative speed");
    return (speed_kmh / 3.6) / tpei_s;
}

}  // namespace crashlens
