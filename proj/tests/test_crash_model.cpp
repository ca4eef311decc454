#include <catch2/catch_amalgamated.hpp>

#include "crashlens/crash_model.hpp"

using namespace crashlens;

namespace {

CrashRecord valid_record() {
    CrashRecord r;
    r.case_id = "case_1";
    r.ptw_class = PtwClass::L3Motorcycle;
    r.mais = 2;
    r.maids_config = MaidsConfig::PtwRearEndingOv;
    r.posted_speed_kmh = 50.0;
    r.impact_speed_kmh = 38.0;
    return r;
}

}  // namespace

TEST_CASE("validate_record flags mais out of range") {
    auto r = valid_record();
    r.mais = 7;
    auto v = validate_record(r);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "mais");
    CHECK(v[0].reason.find("out of range") != std::string::npos);
}

TEST_CASE("validate_record accepts a well-formed case") {
    auto r = valid_record();
    CHECK(validate_record(r).empty());
}

TEST_CASE("validate_record rejects quality assessment without an action") {
    auto r = valid_record();
    r.evasive = EvasiveResponse{EvasiveAction::NoAction, Quality::Unknown, Quality::Proper};
    auto v = validate_record(r);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "evasive_execution");
}

TEST_CASE("validate_record enforces factor structure") {
    auto r = valid_record();
    r.primary_factor = ContributingFactor{FactorActor::Rider, std::nullopt, std::nullopt};
    CHECK(validate_record(r).size() == 1);
    r.primary_factor = ContributingFactor{FactorActor::Environment, std::nullopt, std::nullopt};
    CHECK(validate_record(r).size() == 1);
    r.primary_factor =
        ContributingFactor{FactorActor::Environment, std::nullopt, FactorDetail::AdverseWeather};
    CHECK(validate_record(r).empty());
}

TEST_CASE("validate_record flags negative speeds and times") {
    auto r = valid_record();
    r.impact_speed_kmh = -5.0;
    REQUIRE(validate_record(r).size() == 1);
    CHECK(validate_record(r)[0].reason == "negative speed");
    r = valid_record();
    r.posted_speed_kmh = 0.0;
    CHECK(validate_record(r).size() == 1);
    r = valid_record();
    r.tpei_s = -0.1;
    CHECK(validate_record(r).size() == 1);
}

TEST_CASE("is_severe implements the MAIS3+ dichotomy") {
    auto r = valid_record();
    r.mais = 3;
    CHECK(is_severe(r) == std::optional<bool>(true));
    r.mais = 2;
    CHECK(is_severe(r) == std::optional<bool>(false));
    r.mais.reset();
    CHECK(!is_severe(r).has_value());
}

TEST_CASE("is_severe is monotone in mais") {
    auto r = valid_record();
    bool seen_severe = false;
    for (int m = 0; m <= 6; ++m) {
        r.mais = m;
        bool severe = *is_severe(r);
        if (seen_severe) CHECK(severe);  // once severe, stays severe
        seen_severe = seen_severe || severe;
    }
    CHECK(seen_severe);
}

TEST_CASE("enum tokens round-trip") {
    for (auto c : {PtwClass::L1Moped, PtwClass::L3Motorcycle, PtwClass::Mofa})
        CHECK(ptw_class_from_token(to_token(c)) == c);
    for (int i = 0; i <= static_cast<int>(FactorActor::Other); ++i) {
        auto a = static_cast<FactorActor>(i);
        CHECK(factor_actor_from_token(to_token(a)) == a);
    }
    for (int i = 0; i <= static_cast<int>(FactorStage::UnknownType); ++i) {
        auto s = static_cast<FactorStage>(i);
        CHECK(factor_stage_from_token(to_token(s)) == s);
    }
    for (int i = 0; i <= static_cast<int>(FactorDetail::OtherDetail); ++i) {
        auto d = static_cast<FactorDetail>(i);
        CHECK(factor_detail_from_token(to_token(d)) == d);
    }
    for (int i = 0; i <= static_cast<int>(EvasiveAction::Unknown); ++i) {
        auto a = static_cast<EvasiveAction>(i);
        CHECK(evasive_action_from_token(to_token(a)) == a);
    }
    for (int i = 0; i <= static_cast<int>(Alignment::Unknown); ++i) {
        auto a = static_cast<Alignment>(i);
        CHECK(alignment_from_token(to_token(a)) == a);
    }
    for (int i = 0; i <= static_cast<int>(MaidsConfig::Unknown); ++i) {
        auto c = static_cast<MaidsConfig>(i);
        CHECK(maids_config_from_token(to_token(c)) == c);
    }
    for (auto c : kAllMergedConfigs) CHECK(merged_config_from_token(to_token(c)) == c);
}

TEST_CASE("ptw class accepts the long aliases") {
    CHECK(ptw_class_from_token("l3_motorcycle") == PtwClass::L3Motorcycle);
    CHECK(ptw_class_from_token("L1_MOPED") == PtwClass::L1Moped);
    CHECK(!ptw_class_from_token("l9").has_value());
}
