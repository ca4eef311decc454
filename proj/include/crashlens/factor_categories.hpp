#pragma once

// Canonical row order of the primary-contributing-factor matrix: the four
// other-driver stages, the five rider stages, then the thirteen
// environment/other detail categories.

#include <array>
#include <optional>
#include <string_view>

#include "crashlens/crash_model.hpp"

namespace crashlens {

inline constexpr std::size_t kFactorCategoryCount = 22;

inline ContributingFactor factor_category(std::size_t index) {
    ContributingFactor f;
    if (index < 4) {
        f.actor = FactorActor::OtherDriver;
        static constexpr FactorStage kStages[] = {FactorStage::Detection, FactorStage::Decision,
                                                  FactorStage::Comprehension, FactorStage::Execution};
        f.stage = kStages[index];
    } else if (index < 9) {
        f.actor = FactorActor::Rider;
        static constexpr FactorStage kStages[] = {FactorStage::Detection, FactorStage::Decision,
                                                  FactorStage::Comprehension, FactorStage::Execution,
                                                  FactorStage::UnknownType};
        f.stage = kStages[index - 4];
    } else if (index < 14) {
        f.actor = FactorActor::Environment;
        static constexpr FactorDetail kDetails[] = {
            FactorDetail::ViewObstruction, FactorDetail::AdverseWeather,
            FactorDetail::RoadwayMaintenanceDefect, FactorDetail::RoadwayDesignDefect,
            FactorDetail::RoadsideEnvironmentFactor};
        f.detail = kDetails[index - 9];
    } else {
        f.actor = FactorActor::Other;
        static constexpr FactorDetail kDetails[] = {
            FactorDetail::TemporaryTrafficControlProblem, FactorDetail::TrafficObstruction,
            FactorDetail::UninvolvedOvManeuver, FactorDetail::OvAvoidingOtherCollision,
            FactorDetail::PtwAvoidingOtherCollision, FactorDetail::OvPostCrashMotion,
            FactorDetail::PtwMaintenanceProblem, FactorDetail::OtherDetail};
        f.detail = kDetails[index - 14];
    }
    return f;
}

inline std::string_view factor_category_token(std::size_t index) {
    static constexpr std::array<std::string_view, kFactorCategoryCount> kTokens = {
        "ov_detection", "ov_decision", "ov_comprehension", "ov_execution",
        "rider_detection", "rider_decision", "rider_comprehension", "rider_execution",
        "rider_unknown_type",
        "view_obstruction", "adverse_weather", "roadway_maintenance_defect",
        "roadway_design_defect", "roadside_environment_factor",
        "temporary_traffic_control_problem", "traffic_obstruction", "uninvolved_ov_maneuver",
        "ov_avoiding_other_collision", "ptw_avoiding_other_collision", "ov_post_crash_motion",
        "ptw_maintenance_problem", "other"};
    return kTokens[index];
}

/// Canonical form: human actors keep only the stage, environment/other
/// actors keep only the detail.
inline ContributingFactor normalize_factor(const ContributingFactor& f) {
    ContributingFactor out;
    out.actor = f.actor;
    if (f.actor == FactorActor::Rider || f.actor == FactorActor::OtherDriver) out.stage = f.stage;
    else out.detail = f.detail;
    return out;
}

inline std::optional<std::size_t> factor_category_index(const ContributingFactor& f) {
    ContributingFactor key = normalize_factor(f);
    for (std::size_t i = 0; i < kFactorCategoryCount; ++i)
        if (factor_category(i) == key) return i;
    return std::nullopt;
}

}  // namespace crashlens
