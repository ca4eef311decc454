#pragma once

// Domain model for a single in-depth powered-two-wheeler crash case.
// All types are immutable value objects; every downstream module consumes
// them by const reference or by value.

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

#include "crashlens/common.hpp"

namespace crashlens {

enum class PtwClass { L1Moped, L3Motorcycle, Mofa };

enum class FactorActor { Rider, OtherDriver, Environment, Other };

enum class FactorStage { Detection, Comprehension, Decision, Execution, UnknownType };

enum class FactorDetail {
    ViewObstruction,
    AdverseWeather,
    RoadwayMaintenanceDefect,
    RoadwayDesignDefect,
    RoadsideEnvironmentFactor,
    TemporaryTrafficControlProblem,
    TrafficObstruction,
    UninvolvedOvManeuver,
    OvAvoidingOtherCollision,
    PtwAvoidingOtherCollision,
    OvPostCrashMotion,
    PtwMaintenanceProblem,
    OtherDetail,
};

enum class EvasiveAction { Brake, Swerve, NoAction, Other, Unknown };

enum class Quality { Proper, Improper, Unknown };

enum class Alignment { Straight, CurveLeft, CurveRight, Corner, Jog, Unknown };

/// The 25 MAIDS crash-group configuration codes plus Unknown.
enum class MaidsConfig {
    PtwIntoOvAtIntersection,
    OvIntoPtwAtIntersection,
    OvTurningLeftInFrontOfPtw,
    OvTurningRightInFrontOfPtw,
    OvTurnsAcrossPtwPtwImpacting,
    OvTurnsAcrossPtwOvImpacting,
    PtwOvertakingOvTurningLeft,
    OvUTurnAheadOfPtw,
    SideswipeSameDirection,
    PtwOvertakingOvTurningRight,
    PtwRearEndingOv,
    HeadOnCollision,
    SideswipeOppositeDirection,
    PtwFallNoOv,
    PtwRunoffNoOv,
    PtwOtherNoOv,
    PtwFallAvoidingOv,
    OvRearEndingPtw,
    PtwIntoEnvironmentalObject,
    PtwIntoPedestrianOrAnimal,
    PtwTurningLeftAcrossOv,
    OvEnteringRoadwayFailingToYield,
    PtwRunoffAvoidingOv,
    PtwTurningRightAcrossOv,
    OtherUnspecified,
    Unknown,
};

inline constexpr int kMaidsConfigCount = 25;

/// The seven merged trajectory-based crash configurations plus the residual bucket.
enum class MergedConfig { ScpLd, TipLd, TapOd, TapSd, ReSd, HsOd, Sv, OtherBucket };

inline constexpr std::array<MergedConfig, 8> kAllMergedConfigs = {
    MergedConfig::ScpLd, MergedConfig::TipLd, MergedConfig::TapOd, MergedConfig::TapSd,
    MergedConfig::ReSd,  MergedConfig::HsOd,  MergedConfig::Sv,    MergedConfig::OtherBucket,
};

/// Primary crash contributing factor: an actor plus either an
/// information-processing stage (human actors) or a detail category
/// (environment / other factors).
struct ContributingFactor {
    FactorActor actor = FactorActor::Rider;
    std::optional<FactorStage> stage;
    std::optional<FactorDetail> detail;

    auto operator<=>(const ContributingFactor&) const = default;
};

/// Collision avoidance response, with selection and execution assessments.
struct EvasiveResponse {
    EvasiveAction action = EvasiveAction::Unknown;
    Quality selection_quality = Quality::Unknown;
    Quality execution_quality = Quality::Unknown;

    auto operator<=>(const EvasiveResponse&) const = default;
};

struct CrashRecord {
    std::string case_id;
    PtwClass ptw_class = PtwClass::L3Motorcycle;
    std::optional<int> mais;
    MaidsConfig maids_config = MaidsConfig::Unknown;
    std::optional<ContributingFactor> primary_factor;
    std::optional<EvasiveResponse> evasive;
    Alignment alignment = Alignment::Unknown;
    std::optional<double> posted_speed_kmh;
    std::optional<double> impact_speed_kmh;
    std::optional<double> tpei_s;
    bool rider_impairment_primary = false;
    bool mechanical_primary = false;

    auto operator<=>(const CrashRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Token tables. These are the canonical spellings used by the CSV / JSONL
// formats, the rulebook files and the report surface.
// ---------------------------------------------------------------------------

inline std::string_view to_token(PtwClass c) {
    switch (c) {
        case PtwClass::L1Moped: return "L1";
        case PtwClass::L3Motorcycle: return "L3";
        case PtwClass::Mofa: return "MOFA";
    }
    return "";
}

inline std::optional<PtwClass> ptw_class_from_token(std::string_view s) {
    std::string t = lower(s);
    if (t == "l1" || t == "l1_moped" || t == "moped") return PtwClass::L1Moped;
    if (t == "l3" || t == "l3_motorcycle" || t == "motorcycle") return PtwClass::L3Motorcycle;
    if (t == "mofa") return PtwClass::Mofa;
    return std::nullopt;
}

inline std::string_view to_token(FactorActor a) {
    switch (a) {
        case FactorActor::Rider: return "rider";
        case FactorActor::OtherDriver: return "other_driver";
        case FactorActor::Environment: return "environment";
        case FactorActor::Other: return "other";
    }
    return "";
}

inline std::optional<FactorActor> factor_actor_from_token(std::string_view s) {
    std::string t = lower(s);
    if (t == "rider" || t == "rider_mc" || t == "mc") return FactorActor::Rider;
    if (t == "other_driver" || t == "driver_ov" || t == "ov") return FactorActor::OtherDriver;
    if (t == "environment") return FactorActor::Environment;
    if (t == "other") return FactorActor::Other;
    return std::nullopt;
}

inline std::string_view to_token(FactorStage st) {
    switch (st) {
        case FactorStage::Detection: return "detection";
        case FactorStage::Comprehension: return "comprehension";
        case FactorStage::Decision: return "decision";
        case FactorStage::Execution: return "execution";
        case FactorStage::UnknownType: return "unknown_type";
    }
    return "";
}

inline std::optional<FactorStage> factor_stage_from_token(std::string_view s) {
    std::string t = lower(s);
    if (t == "detection") return FactorStage::Detection;
    if (t == "comprehension") return FactorStage::Comprehension;
    if (t == "decision") return FactorStage::Decision;
    if (t == "execution") return FactorStage::Execution;
    if (t == "unknown_type" || t == "unknown") return FactorStage::UnknownType;
    return std::nullopt;
}

inline std::string_view to_token(FactorDetail d) {
    switch (d) {
        case FactorDetail::ViewObstruction: return "view_obstruction";
        case FactorDetail::AdverseWeather: return "adverse_weather";
        case FactorDetail::RoadwayMaintenanceDefect: return "roadway_maintenance_defect";
        case FactorDetail::RoadwayDesignDefect: return "roadway_design_defect";
        case FactorDetail::RoadsideEnvironmentFactor: return "roadside_environment_factor";
        case FactorDetail::TemporaryTrafficControlProblem: return "temporary_traffic_control_problem";
        case FactorDetail::TrafficObstruction: return "traffic_obstruction";
        case FactorDetail::UninvolvedOvManeuver: return "uninvolved_ov_maneuver";
        case FactorDetail::OvAvoidingOtherCollision: return "ov_avoiding_other_collision";
        case FactorDetail::PtwAvoidingOtherCollision: return "ptw_avoiding_other_collision";
        case FactorDetail::OvPostCrashMotion: return "ov_post_crash_motion";
        case FactorDetail::PtwMaintenanceProblem: return "ptw_maintenance_problem";
        case FactorDetail::OtherDetail: return "other";
    }
    return "";
}

inline std::optional<FactorDetail> factor_detail_from_token(std::string_view s) {
    std::string t = lower(s);
    for (int i = 0; i <= static_cast<int>(FactorDetail::OtherDetail); ++i) {
        auto d = static_cast<FactorDetail>(i);
        if (t == to_token(d)) return d;
    }
    return std::nullopt;
}

inline std::string_view to_token(EvasiveAction a) {
    switch (a) {
        case EvasiveAction::Brake: return "brake";
        case EvasiveAction::Swerve: return "swerve";
        case EvasiveAction::NoAction: return "no_action";
        case EvasiveAction::Other: return "other";
        case EvasiveAction::Unknown: return "unknown";
    }
    return "";
}

inline std::optional<EvasiveAction> evasive_action_from_token(std::string_view s) {
    std::string t = lower(s);
    if (t == "brake" || t == "braking") return EvasiveAction::Brake;
    if (t == "swerve" || t == "swerving") return EvasiveAction::Swerve;
    if (t == "no_action" || t == "none") return EvasiveAction::NoAction;
    if (t == "other") return EvasiveAction::Other;
    if (t == "unknown") return EvasiveAction::Unknown;
    return std::nullopt;
}

inline std::string_view to_token(Quality q) {
    switch (q) {
        case Quality::Proper: return "proper";
        case Quality::Improper: return "improper";
        case Quality::Unknown: return "unknown";
    }
    return "";
}

inline std::optional<Quality> quality_from_token(std::string_view s) {
    std::string t = lower(s);
    if (t == "proper") return Quality::Proper;
    if (t == "improper") return Quality::Improper;
    if (t == "unknown") return Quality::Unknown;
    return std::nullopt;
}

inline std::string_view to_token(Alignment a) {
    switch (a) {
        case Alignment::Straight: return "straight";
        case Alignment::CurveLeft: return "curve_left";
        case Alignment::CurveRight: return "curve_right";
        case Alignment::Corner: return "corner";
        case Alignment::Jog: return "jog";
        case Alignment::Unknown: return "unknown";
    }
    return "";
}

inline std::optional<Alignment> alignment_from_token(std::string_view s) {
    std::string t = lower(s);
    for (int i = 0; i <= static_cast<int>(Alignment::Unknown); ++i) {
        auto a = static_cast<Alignment>(i);
        if (t == to_token(a)) return a;
    }
    return std::nullopt;
}

inline std::string_view to_token(MaidsConfig c) {
    switch (c) {
        case MaidsConfig::PtwIntoOvAtIntersection: return "ptw_into_ov_at_intersection";
        case MaidsConfig::OvIntoPtwAtIntersection: return "ov_into_ptw_at_intersection";
        case MaidsConfig::OvTurningLeftInFrontOfPtw: return "ov_turning_left_in_front_of_ptw";
        case MaidsConfig::OvTurningRightInFrontOfPtw: return "ov_turning_right_in_front_of_ptw";
        case MaidsConfig::OvTurnsAcrossPtwPtwImpacting: return "ov_turns_across_ptw_ptw_impacting";
        case MaidsConfig::OvTurnsAcrossPtwOvImpacting: return "ov_turns_across_ptw_ov_impacting";
        case MaidsConfig::PtwOvertakingOvTurningLeft: return "ptw_overtaking_ov_turning_left";
        case MaidsConfig::OvUTurnAheadOfPtw: return "ov_u_turn_ahead_of_ptw";
        case MaidsConfig::SideswipeSameDirection: return "sideswipe_same_direction";
        case MaidsConfig::PtwOvertakingOvTurningRight: return "ptw_overtaking_ov_turning_right";
        case MaidsConfig::PtwRearEndingOv: return "ptw_rear_ending_ov";
        case MaidsConfig::HeadOnCollision: return "head_on_collision";
        case MaidsConfig::SideswipeOppositeDirection: return "sideswipe_opposite_direction";
        case MaidsConfig::PtwFallNoOv: return "ptw_fall_no_ov";
        case MaidsConfig::PtwRunoffNoOv: return "ptw_runoff_no_ov";
        case MaidsConfig::PtwOtherNoOv: return "ptw_other_no_ov";
        case MaidsConfig::PtwFallAvoidingOv: return "ptw_fall_avoiding_ov";
        case MaidsConfig::OvRearEndingPtw: return "ov_rear_ending_ptw";
        case MaidsConfig::PtwIntoEnvironmentalObject: return "ptw_into_environmental_object";
        case MaidsConfig::PtwIntoPedestrianOrAnimal: return "ptw_into_pedestrian_or_animal";
        case MaidsConfig::PtwTurningLeftAcrossOv: return "ptw_turning_left_across_ov";
        case MaidsConfig::OvEnteringRoadwayFailingToYield: return "ov_entering_roadway_failing_to_yield";
        case MaidsConfig::PtwRunoffAvoidingOv: return "ptw_runoff_avoiding_ov";
        case MaidsConfig::PtwTurningRightAcrossOv: return "ptw_turning_right_across_ov";
        case MaidsConfig::OtherUnspecified: return "other_unspecified";
        case MaidsConfig::Unknown: return "unknown";
    }
    return "";
}

inline std::optional<MaidsConfig> maids_config_from_token(std::string_view s) {
    std::string t = lower(s);
    if (t.empty()) return MaidsConfig::Unknown;
    for (int i = 0; i <= static_cast<int>(MaidsConfig::Unknown); ++i) {
        auto c = static_cast<MaidsConfig>(i);
        if (t == to_token(c)) return c;
    }
    return std::nullopt;
}

inline std::string_view to_token(MergedConfig c) {
    switch (c) {
        case MergedConfig::ScpLd: return "scp_ld";
        case MergedConfig::TipLd: return "tip_ld";
        case MergedConfig::TapOd: return "tap_od";
        case MergedConfig::TapSd: return "tap_sd";
        case MergedConfig::ReSd: return "re_sd";
        case MergedConfig::HsOd: return "hs_od";
        case MergedConfig::Sv: return "sv";
        case MergedConfig::OtherBucket: return "other";
    }
    return "";
}

/// Upper-case display label matching the report surface ("SCP_LD", ...).
inline std::string_view display_label(MergedConfig c) {
    switch (c) {
        case MergedConfig::ScpLd: return "SCP_LD";
        case MergedConfig::TipLd: return "TIP_LD";
        case MergedConfig::TapOd: return "TAP_OD";
        case MergedConfig::TapSd: return "TAP_SD";
        case MergedConfig::ReSd: return "RE_SD";
        case MergedConfig::HsOd: return "HS_OD";
        case MergedConfig::Sv: return "SV";
        case MergedConfig::OtherBucket: return "OTHER";
    }
    return "";
}

inline std::optional<MergedConfig> merged_config_from_token(std::string_view s) {
    std::string t = lower(s);
    for (auto c : kAllMergedConfigs)
        if (t == to_token(c)) return c;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string field;
    std::string reason;
};

/// Checks every type invariant and returns one entry per violation.
/// Violations are data, not failures: callers decide how to react.
inline std::vector<Violation> validate_record(const CrashRecord& r) {
    std::vector<Violation> out;
    if (r.mais && (*r.mais < 0 || *r.mais > 6))
        out.push_back({"mais", "mais out of range (expected 0..6)"});
    if (r.posted_speed_kmh && !(*r.posted_speed_kmh > 0.0))
        out.push_back({"posted_speed_kmh", "posted speed must be positive"});
    if (r.impact_speed_kmh && *r.impact_speed_kmh < 0.0)
        out.push_back({"impact_speed_kmh", "negative speed"});
    if (r.tpei_s && *r.tpei_s < 0.0)
        out.push_back({"tpei_s", "negative time to impact"});
    if (r.primary_factor) {
        const auto& f = *r.primary_factor;
        bool human = f.actor == FactorActor::Rider || f.actor == FactorActor::OtherDriver;
        if (human && !f.stage)
            out.push_back({"primary_factor", "human actor requires a processing stage"});
        if (!human && !f.detail)
            out.push_back({"primary_factor", "environment/other actor requires a detail category"});
    }
    if (r.evasive && r.evasive->action == EvasiveAction::NoAction) {
        if (r.evasive->selection_quality != Quality::Unknown)
            out.push_back({"evasive_selection", "selection not assessable without action"});
        if (r.evasive->execution_quality != Quality::Unknown)
            out.push_back({"evasive_execution", "execution not assessable without action"});
    }
    return out;
}

/// MAIS3+ severity dichotomy; empty when MAIS is missing.
inline std::optional<bool> is_severe(const CrashRecord& r) {
    if (!r.mais) return std::nullopt;
    return *r.mais >= 3;
}

}  // namespace crashlens
