#include <catch2/catch_amalgamated.hpp>

#include "crashlens/ingestion.hpp"
#include "crashlens/rng.hpp"

using namespace crashlens;

namespace {

const std::string kHeader =
    "case_id,ptw_class,mais,maids_config,factor_actor,factor_stage,factor_detail,"
    "evasive_action,evasive_selection,evasive_execution,alignment,posted_speed_kmh,"
    "impact_speed_kmh,tpei_s,rider_impairment_primary,mechanical_primary\n";

CrashRecord random_record(Rng& rng, std::size_t i) {
    CrashRecord r;
    r.case_id = "case_" + std::to_string(i);
    r.ptw_class = static_cast<PtwClass>(rng.below(3));
    if (rng.below(4)) r.mais = static_cast<int>(rng.below(7));
    r.maids_config = static_cast<MaidsConfig>(rng.below(kMaidsConfigCount + 1));
    if (rng.below(2)) {
        ContributingFactor f;
        f.actor = static_cast<FactorActor>(rng.below(4));
        if (f.actor == FactorActor::Rider || f.actor == FactorActor::OtherDriver)
            f.stage = static_cast<FactorStage>(rng.below(5));
        else
            f.detail = static_cast<FactorDetail>(rng.below(13));
        r.primary_factor = f;
    }
    if (rng.below(2)) {
        EvasiveResponse e;
        e.action = static_cast<EvasiveAction>(rng.below(5));
        if (e.action != EvasiveAction::NoAction) {
            e.selection_quality = static_cast<Quality>(rng.below(3));
            e.execution_quality = static_cast<Quality>(rng.below(3));
        }
        r.evasive = e;
    }
    r.alignment = static_cast<Alignment>(rng.below(6));
    if (rng.below(2)) r.posted_speed_kmh = 10.0 * (3 + rng.below(10));
    if (rng.below(2)) r.impact_speed_kmh = std::round(rng.uniform01() * 1200.0) / 10.0;
    if (rng.below(2)) r.tpei_s = std::round(rng.uniform01() * 500.0) / 100.0;
    return r;
}

}  // namespace

TEST_CASE("CSV row maps directly onto a record") {
    std::string text = kHeader +
                       "case_9,L3,4,head_on_collision,other_driver,detection,,brake,proper,"
                       "improper,straight,50,61.5,1.25,false,false\n";
    auto result = parse_records_csv(text);
    REQUIRE(result.rejects.empty());
    REQUIRE(result.records.size() == 1);
    const auto& r = result.records[0];
    CHECK(r.ptw_class == PtwClass::L3Motorcycle);
    CHECK(r.mais == 4);
    CHECK(r.maids_config == MaidsConfig::HeadOnCollision);
    REQUIRE(r.primary_factor.has_value());
    CHECK(r.primary_factor->actor == FactorActor::OtherDriver);
    CHECK(r.primary_factor->stage == FactorStage::Detection);
    REQUIRE(r.evasive.has_value());
    CHECK(r.evasive->action == EvasiveAction::Brake);
    CHECK(r.evasive->execution_quality == Quality::Improper);
    CHECK(r.posted_speed_kmh == 50.0);
    CHECK(r.impact_speed_kmh == 61.5);
    CHECK(r.tpei_s == 1.25);
}

TEST_CASE("negative speed is rejected with its row number") {
    std::string text = kHeader + "a,L3,2,,,,,,,,,0,,,false,false\n" +
                       "b,L1,1,,,,,,,,,50,-5,,false,false\n";
    auto result = parse_records_csv(text);
    REQUIRE(result.rejects.size() == 2);
    CHECK(result.rejects[0].row_number == 2);
    CHECK(result.rejects[0].reason == "posted speed must be positive");
    CHECK(result.rejects[1].row_number == 3);
    CHECK(result.rejects[1].reason == "negative speed");
    CHECK(result.records.size() == 0);
}

TEST_CASE("empty file with a valid header parses to nothing") {
    auto result = parse_records_csv(kHeader);
    CHECK(result.records.empty());
    CHECK(result.rejects.empty());
}

TEST_CASE("header mismatches abort the parse") {
    CHECK_THROWS_AS(parse_records_csv("case_id,ptw_class\nx,L3\n"), DataError);
    CHECK_THROWS_AS(parse_records_csv(""), DataError);
    std::string wrong = kHeader;
    auto pos = wrong.find("mais");
    wrong.replace(pos, 4, "mays");
    CHECK_THROWS_AS(parse_records_csv(wrong), DataError);
}

TEST_CASE("malformed rows never abort the batch") {
    std::string text = kHeader;
    text += "ok1,L3,2,,,,,,,,,,,,false,false\n";
    text += "bad,L3,totally,,,,,,,,,,,,false,false\n";  // mais not an integer
    text += "short,row\n";
    text += "ok2,L1,,ptw_fall_no_ov,,,,,,,curve_left,,,,false,false\n";
    auto result = parse_records_csv(text);
    CHECK(result.records.size() == 2);
    REQUIRE(result.rejects.size() == 2);
    CHECK(result.rejects[0].row_number == 3);
    CHECK(result.rejects[1].row_number == 4);
}

TEST_CASE("JSON lines parse with the same field names") {
    std::string text =
        R"({"case_id":"j1","ptw_class":"L3","mais":4,"maids_config":"ptw_rear_ending_ov","posted_speed_kmh":50,"impact_speed_kmh":38.0})"
        "\n"
        R"({"case_id":"j2","ptw_class":"mofa","rider_impairment_primary":true})"
        "\n"
        R"(not json)"
        "\n";
    auto result = parse_records_jsonl(text);
    REQUIRE(result.records.size() == 2);
    REQUIRE(result.rejects.size() == 1);
    CHECK(result.rejects[0].row_number == 3);
    CHECK(result.records[0].maids_config == MaidsConfig::PtwRearEndingOv);
    CHECK(result.records[1].ptw_class == PtwClass::Mofa);
    CHECK(result.records[1].rider_impairment_primary);
}

TEST_CASE("parse then serialize then parse is identity (CSV and JSONL)") {
    Rng rng(123);
    std::vector<CrashRecord> records;
    for (std::size_t i = 0; i < 200; ++i) records.push_back(random_record(rng, i));

    auto csv_text = records_to_csv(records);
    auto parsed = parse_records_csv(csv_text);
    REQUIRE(parsed.rejects.empty());
    REQUIRE(parsed.records.size() == records.size());
    CHECK(parsed.records == records);
    CHECK(records_to_csv(parsed.records) == csv_text);  // serialized form is a fixpoint

    auto jsonl_text = records_to_jsonl(parsed.records);
    auto reparsed = parse_records_jsonl(jsonl_text);
    REQUIRE(reparsed.rejects.empty());
    CHECK(reparsed.records == parsed.records);
}

TEST_CASE("arbitrary bytes never crash the parsers") {
    Rng rng(31337);
    for (int round = 0; round < 200; ++round) {
        std::string garbage;
        std::size_t len = rng.below(400);
        for (std::size_t i = 0; i < len; ++i) {
            // Bias toward structural characters so quoting states get hit.
            static const char pool[] = ",\"\n\rab3.-{}:ltrue";
            garbage += pool[rng.below(sizeof(pool) - 1)];
        }
        try {
            auto r = parse_records_csv(kHeader + garbage);
            CHECK(r.records.size() + r.rejects.size() <= 400);
        } catch (const DataError&) {
        }
        auto j = parse_records_jsonl(garbage);
        CHECK(j.records.size() <= 400);
    }
}

TEST_CASE("filter removes impairment and mechanical cases first, then mofa") {
    std::vector<CrashRecord> records;
    CrashRecord normal;
    normal.ptw_class = PtwClass::L3Motorcycle;
    CrashRecord impaired = normal;
    impaired.rider_impairment_primary = true;
    CrashRecord mech = normal;
    mech.mechanical_primary = true;
    CrashRecord mofa1;
    mofa1.ptw_class = PtwClass::Mofa;
    CrashRecord mofa_impaired = mofa1;
    mofa_impaired.rider_impairment_primary = true;

    records = {normal, impaired, mech, mofa1, mofa_impaired};
    auto [retained, report] = filter_study_population(records);
    CHECK(retained.size() == 1);
    CHECK(report.n_input == 5);
    // The impaired mofa counts in the impairment/mechanical stage.
    CHECK(report.n_excluded_impairment_mechanical == 3);
    CHECK(report.n_excluded_mofa == 1);
    CHECK(report.n_study_population == 1);
}

TEST_CASE("all-mofa input is fully excluded") {
    std::vector<CrashRecord> records(10);
    for (auto& r : records) r.ptw_class = PtwClass::Mofa;
    auto [retained, report] = filter_study_population(records);
    CHECK(retained.empty());
    CHECK(report.n_excluded_mofa == 10);
    CHECK(report.n_excluded_impairment_mechanical == 0);
}

TEST_CASE("input without exclusions passes through unchanged") {
    std::vector<CrashRecord> records(7);
    for (std::size_t i = 0; i < records.size(); ++i) {
        records[i].case_id = std::to_string(i);
        records[i].ptw_class = i % 2 ? PtwClass::L1Moped : PtwClass::L3Motorcycle;
    }
    auto [retained, report] = filter_study_population(records);
    CHECK(retained == records);
    CHECK(report.n_study_population == 7);
}

TEST_CASE("filter conservation holds for random inputs") {
    Rng rng(5150);
    for (int round = 0; round < 40; ++round) {
        std::vector<CrashRecord> records;
        std::size_t n = rng.below(300);
        for (std::size_t i = 0; i < n; ++i) {
            auto r = random_record(rng, i);
            r.rider_impairment_primary = rng.below(8) == 0;
            r.mechanical_primary = rng.below(10) == 0;
            records.push_back(r);
        }
        auto [retained, report] = filter_study_population(records);
        CHECK(report.n_input == n);
        CHECK(report.n_excluded_impairment_mechanical + report.n_excluded_mofa +
                  report.n_study_population ==
              report.n_input);
        CHECK(retained.size() == report.n_study_population);
        for (const auto& r : retained) {
            CHECK(!r.rider_impairment_primary);
            CHECK(!r.mechanical_primary);
            CHECK(r.ptw_class != PtwClass::Mofa);
        }
    }
}
