#pragma once

// Compares an analyzed record set against the marginal profile it should
// embody: filter counts exactly, categorical shares to +-0.1 points,
// numeric means to +-10%. This is the oracle behind `crashlens verify`.

#include <cmath>
#include <string>
#include <vector>

#include "crashlens/classifier.hpp"
#include "crashlens/common.hpp"
#include "crashlens/crash_model.hpp"
#include "crashlens/factor_categories.hpp"
#include "crashlens/ingestion.hpp"
#include "crashlens/profiler.hpp"
#include "crashlens/stats.hpp"
#include "crashlens/synth.hpp"

namespace crashlens {

struct VerifyCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyOutcome {
    std::vector<VerifyCheck> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace verify_detail {

inline void check_count(VerifyOutcome& out, const std::string& name, std::uint64_t got,
                        std::uint64_t want) {
    out.checks.push_back({name, got == want,
                          "got " + std::to_string(got) + ", expected " + std::to_string(want)});
}

inline void check_share(VerifyOutcome& out, const std::string& name, double got, double want,
                        double tol) {
    bool ok = std::abs(got - want) <= tol + 1e-9;
    out.checks.push_back({name, ok,
                          "got " + format_fixed(got, 2) + "%, expected " + format_fixed(want, 2) +
                              "% (tolerance " + format_fixed(tol, 2) + ")"});
}

inline void check_mean(VerifyOutcome& out, const std::string& name, std::optional<double> got,
                       double want) {
    bool ok = got && std::abs(*got - want) <= 0.10 * want;
    out.checks.push_back({name, ok,
                          (got ? "got " + format_fixed(*got, 2) : std::string("got none")) +
                              ", expected " + format_fixed(want, 2) + " +-10%"});
}

}  // namespace verify_detail

/// Runs every profile-derived check against raw (unfiltered) records.
inline VerifyOutcome verify_against_profile(const std::vector<CrashRecord>& input,
                                            const MarginalProfile& profile,
                                            const ConfigRulebook& rulebook = default_rulebook()) {
    using namespace verify_detail;
    VerifyOutcome out;
    GenerationQuotas quotas = derive_quotas(profile);

    auto [study, report] = filter_study_population(input);
    check_count(out, "filter.input", report.n_input, profile.total_n);
    check_count(out, "filter.excluded_impairment_mechanical",
                report.n_excluded_impairment_mechanical,
                profile.excluded_impairment + profile.excluded_mechanical);
    check_count(out, "filter.excluded_mofa", report.n_excluded_mofa, profile.excluded_mofa);
    check_count(out, "filter.study_population", report.n_study_population, profile.column_total);

    Partition part = partition(study, rulebook);
    std::uint64_t selected_n = 0;
    for (auto cfg : kAllMergedConfigs)
        if (cfg != MergedConfig::OtherBucket) selected_n += part.bucket(cfg).size();
    std::uint64_t other_expect = quotas.config(MergedConfig::OtherBucket).bucket;
    check_count(out, "split.selected", selected_n, profile.column_total - other_expect);
    check_count(out, "split.other", part.bucket(MergedConfig::OtherBucket).size(), other_expect);

    // Table-1 shape: per-column percentages within 0.1 points.
    struct Segment {
        const char* name;
        SegmentPredicate pred;
        double ConfigMarginal::* share;
    };
    const std::vector<Segment> segments = {
        {"total", [](const CrashRecord&) { return true; }, &ConfigMarginal::total_pct},
        {"severe", [](const CrashRecord& r) { return is_severe(r) == std::optional<bool>(true); },
         &ConfigMarginal::severe_pct},
        {"nonsevere", [](const CrashRecord& r) { return is_severe(r) == std::optional<bool>(false); },
         &ConfigMarginal::nonsevere_pct},
        {"l3", [](const CrashRecord& r) { return r.ptw_class == PtwClass::L3Motorcycle; },
         &ConfigMarginal::l3_pct},
        {"l1", [](const CrashRecord& r) { return r.ptw_class == PtwClass::L1Moped; },
         &ConfigMarginal::l1_pct},
    };
    for (const auto& seg : segments) {
        FrequencyTable t = frequency_table(part, seg.pred, seg.name);
        for (std::size_t i = 0; i < kAllMergedConfigs.size(); ++i) {
            auto cfg = kAllMergedConfigs[i];
            double want = profile.config(cfg).*(seg.share);
            double got = t.rows[i].pct.value_or(0.0);
            check_share(out, "freq." + std::string(to_token(cfg)) + "." + seg.name, got, want, 0.1);
        }
    }

    // Bucket sizes exactly.
    for (auto cfg : kAllMergedConfigs)
        check_count(out, "bucket." + std::string(to_token(cfg)), part.bucket(cfg).size(),
                    quotas.config(cfg).bucket);

    for (auto cfg : kAllMergedConfigs) {
        const auto& cm = profile.config(cfg);
        const auto& cq = quotas.config(cfg);
        const auto& bucket = part.bucket(cfg);
        std::string name(to_token(cfg));
        if (bucket.empty()) continue;

        // Factor cells to +-0.1 over factor-known records.
        bool has_factor = false;
        for (double v : cm.factor_pct) has_factor = has_factor || v > 0;
        if (has_factor) {
            std::array<std::uint64_t, kFactorCategoryCount> counts{};
            std::uint64_t known = 0;
            for (const auto& r : bucket) {
                if (!r.primary_factor) continue;
                auto idx = factor_category_index(*r.primary_factor);
                if (!idx) continue;
                ++counts[*idx];
                ++known;
            }
            check_count(out, "factor." + name + ".known_n", known, cq.bucket - cq.factor_missing);
            for (std::size_t i = 0; i < kFactorCategoryCount; ++i) {
                if (cm.factor_pct[i] <= 0 && counts[i] == 0) continue;
                double got = known ? 100.0 * static_cast<double>(counts[i]) / static_cast<double>(known) : 0.0;
                check_share(out, "factor." + name + "." + std::string(factor_category_token(i)),
                            got, cm.factor_pct[i], 0.1);
            }
        }

        // Evasive action counts exactly.
        std::uint64_t brake = 0, swerve = 0, other = 0, no_action = 0;
        for (const auto& r : bucket) {
            if (!r.evasive) continue;
            switch (r.evasive->action) {
                case EvasiveAction::Brake: ++brake; break;
                case EvasiveAction::Swerve: ++swerve; break;
                case EvasiveAction::Other: ++other; break;
                case EvasiveAction::NoAction: ++no_action; break;
                default: break;
            }
        }
        if (cq.brake + cq.swerve + cq.other_action + cq.no_action > 0) {
            check_count(out, "evasive." + name + ".brake", brake, cq.brake);
            check_count(out, "evasive." + name + ".swerve", swerve, cq.swerve);
            check_count(out, "evasive." + name + ".other", other, cq.other_action);
            check_count(out, "evasive." + name + ".no_action", no_action, cq.no_action);

            auto bd = evasive_quality_breakdown(bucket);
            check_count(out, "selection." + name + ".proper", bd.selection_proper, cq.sel_proper);
            check_count(out, "selection." + name + ".improper", bd.selection_improper, cq.sel_improper);
            check_count(out, "selection." + name + ".unknown", bd.selection_unknown, cq.sel_unknown);
            for (const auto& aq : bd.per_action) {
                const ConfigQuotas::ActionQuota* want = nullptr;
                if (aq.action == EvasiveAction::Brake) want = &cq.brake_q;
                else if (aq.action == EvasiveAction::Swerve) want = &cq.swerve_q;
                else if (aq.action == EvasiveAction::Other) want = &cq.other_q;
                if (!want) continue;
                std::string base = "execution." + name + "." + std::string(to_token(aq.action));
                check_count(out, base + ".n", aq.n_properly_selected, want->proper_selected);
                check_count(out, base + ".improper", aq.exec_improper, want->exec_improper);
                check_count(out, base + ".proper", aq.exec_proper, want->exec_proper);
                check_count(out, base + ".unknown", aq.exec_unknown, want->exec_unknown);
            }
        }

        // Alignment counts exactly.
        static constexpr Alignment kAligns[5] = {Alignment::Straight, Alignment::CurveLeft,
                                                 Alignment::CurveRight, Alignment::Corner,
                                                 Alignment::Jog};
        static constexpr const char* kAlignNames[5] = {"straight", "curve_left", "curve_right",
                                                       "corner", "jog"};
        for (int i = 0; i < 5; ++i) {
            std::uint64_t n = 0;
            for (const auto& r : bucket)
                if (r.alignment == kAligns[i]) ++n;
            if (cq.alignment[i] == 0 && n == 0) continue;
            check_count(out, "alignment." + name + "." + kAlignNames[i], n, cq.alignment[i]);
        }

        // Numeric means within 10%, present-value counts exactly.
        auto posted = summarize_numeric(bucket, NumericField::PostedSpeed);
        auto impact = summarize_numeric(bucket, NumericField::ImpactSpeed);
        auto tpei = summarize_numeric(bucket, NumericField::Tpei);
        check_count(out, "numeric.posted." + name + ".n", posted.n, cm.posted.n);
        check_count(out, "numeric.impact." + name + ".n", impact.n, cm.impact.n);
        check_count(out, "numeric.tpei." + name + ".n", tpei.n, cm.tpei.n);
        check_mean(out, "numeric.posted." + name + ".mean", posted.mean, cm.posted.mean);
        check_mean(out, "numeric.impact." + name + ".mean", impact.mean, cm.impact.mean);
        check_mean(out, "numeric.tpei." + name + ".mean", tpei.mean, cm.tpei.mean);

        // Speeding counts exactly.
        std::uint64_t speeding = 0;
        for (const auto& r : bucket)
            if (speeding_flag(r) == std::optional<bool>(true)) ++speeding;
        check_count(out, "speeding." + name, speeding, cq.speeding);
    }
    return out;
}

}  // namespace crashlens
