#include <catch2/catch_amalgamated.hpp>

#include <future>

#include "crashlens/profiler.hpp"
#include "crashlens/rng.hpp"

using namespace crashlens;

namespace {

CrashRecord make_record(MaidsConfig cfg) {
    CrashRecord r;
    r.maids_config = cfg;
    return r;
}

// A small two-configuration dataset with a known structure.
Partition small_partition() {
    std::vector<CrashRecord> records;
    auto add_sv = [&](FactorStage stage, Alignment align, std::optional<double> posted,
                      std::optional<double> impact) {
        auto r = make_record(MaidsConfig::PtwFallNoOv);
        r.primary_factor = ContributingFactor{FactorActor::Rider, stage, std::nullopt};
        r.alignment = align;
        r.posted_speed_kmh = posted;
        r.impact_speed_kmh = impact;
        r.mais = 3;
        r.tpei_s = 1.5;
        records.push_back(r);
    };
    // 4 decision, 3 execution, 1 detection; curves dominate; 2 of 8 speeding.
    add_sv(FactorStage::Decision, Alignment::CurveLeft, 50, 70);
    add_sv(FactorStage::Decision, Alignment::CurveLeft, 50, 55);
    add_sv(FactorStage::Decision, Alignment::CurveLeft, 50, 40);
    add_sv(FactorStage::Decision, Alignment::CurveRight, 50, 30);
    add_sv(FactorStage::Execution, Alignment::CurveLeft, 80, 100);
    add_sv(FactorStage::Execution, Alignment::Straight, 80, 60);
    add_sv(FactorStage::Execution, Alignment::Straight, 80, 50);
    add_sv(FactorStage::Detection, Alignment::CurveLeft, 90, 80);
    // Rest-of-dataset bucket so associations have a pooled remainder.
    for (int i = 0; i < 12; ++i) {
        auto r = make_record(MaidsConfig::PtwRearEndingOv);
        r.primary_factor =
            ContributingFactor{FactorActor::OtherDriver, FactorStage::Detection, std::nullopt};
        r.alignment = Alignment::Straight;
        r.mais = 1;
        r.evasive = EvasiveResponse{i % 3 == 0 ? EvasiveAction::NoAction : EvasiveAction::Brake,
                                    i % 3 == 0 ? Quality::Unknown : Quality::Proper,
                                    i % 3 == 0 ? Quality::Unknown
                                               : (i % 2 ? Quality::Improper : Quality::Proper)};
        records.push_back(r);
    }
    return partition(records, default_rulebook());
}

}  // namespace

TEST_CASE("build_profile computes dominance, alignment and speeding") {
    auto part = small_partition();
    auto p = build_profile(part, MergedConfig::Sv);
    CHECK(p.n_cases == 8);
    CHECK(p.factor_known_n == 8);
    REQUIRE(p.dominant_factors.size() == 1);
    CHECK(p.dominant_factors[0].actor == FactorActor::Rider);
    CHECK(p.dominant_factors[0].stage == FactorStage::Decision);
    CHECK(p.dominant_share_pct == Catch::Approx(50.0));
    CHECK(p.alignment_mode == Alignment::CurveLeft);
    CHECK(p.curve_dominant);
    CHECK(p.curve_left_pct == Catch::Approx(62.5));
    // Speeding: 70>60 and 100>96 qualify; 55,40,30,60,50,80 do not.
    CHECK(p.speeding_known_n == 8);
    CHECK(p.speeding_pct == Catch::Approx(25.0));
    CHECK(p.no_evasive_pct == 0.0);
    CHECK(!p.no_evasive_flag);
    CHECK(p.tpei.mean == Catch::Approx(1.5));
    CHECK(p.short_tpei_flag);
    CHECK(p.frequency_pct == Catch::Approx(100.0 * 8 / 20));
    CHECK(p.severe_share_pct == Catch::Approx(100.0));  // all severe cases are SV here
}

TEST_CASE("factor shares sum to 100 over known factors") {
    auto part = small_partition();
    auto p = build_profile(part, MergedConfig::Sv);
    double sum = 0;
    for (const auto& [k, v] : p.factor_shares) sum += v;
    CHECK(sum == Catch::Approx(100.0).margin(1e-9));
}

TEST_CASE("profile shares equal a record-by-record brute force") {
    auto part = small_partition();
    auto p = build_profile(part, MergedConfig::Sv);

    // Recount from the raw records without the partition machinery.
    std::map<ContributingFactor, std::size_t> counts;
    std::size_t known = 0, no_action = 0, speeding = 0, speed_known = 0, n = 0;
    for (auto cfg : kAllMergedConfigs)
        for (const auto& r : part.bucket(cfg)) {
            if (classify(r, default_rulebook()) != MergedConfig::Sv) continue;
            ++n;
            if (r.primary_factor) {
                ++counts[normalize_factor(*r.primary_factor)];
                ++known;
            }
            if (r.evasive && r.evasive->action == EvasiveAction::NoAction) ++no_action;
            if (auto s = speeding_flag(r)) {
                ++speed_known;
                if (*s) ++speeding;
            }
        }
    CHECK(p.n_cases == n);
    CHECK(p.factor_known_n == known);
    for (const auto& [key, share] : p.factor_shares)
        CHECK(share == Catch::Approx(100.0 * counts.at(key) / known));
    CHECK(p.no_evasive_pct == Catch::Approx(100.0 * no_action / n));
    CHECK(p.speeding_pct == Catch::Approx(100.0 * speeding / speed_known));
}

TEST_CASE("ties report every dominant factor") {
    std::vector<CrashRecord> records;
    for (int i = 0; i < 2; ++i) {
        auto r = make_record(MaidsConfig::PtwFallNoOv);
        r.primary_factor = ContributingFactor{FactorActor::Rider, FactorStage::Decision, {}};
        records.push_back(r);
        r.primary_factor = ContributingFactor{FactorActor::Rider, FactorStage::Execution, {}};
        records.push_back(r);
    }
    auto p = build_profile(partition(records, default_rulebook()), MergedConfig::Sv);
    CHECK(p.dominant_factors.size() == 2);
}

TEST_CASE("unattributed rider failures count toward totals but never dominate") {
    std::vector<CrashRecord> records;
    auto add = [&](FactorStage stage, int n) {
        for (int i = 0; i < n; ++i) {
            auto r = make_record(MaidsConfig::PtwFallNoOv);
            r.primary_factor = ContributingFactor{FactorActor::Rider, stage, {}};
            records.push_back(r);
        }
    };
    add(FactorStage::UnknownType, 5);
    add(FactorStage::Decision, 3);
    auto p = build_profile(partition(records, default_rulebook()), MergedConfig::Sv);
    REQUIRE(p.dominant_factors.size() == 1);
    CHECK(p.dominant_factors[0].stage == FactorStage::Decision);
    // but the unknown-type share is still present in the shares map
    ContributingFactor unknown{FactorActor::Rider, FactorStage::UnknownType, {}};
    CHECK(p.factor_shares.at(unknown) == Catch::Approx(62.5));
}

TEST_CASE("empty bucket is an error") {
    auto part = partition({}, default_rulebook());
    CHECK_THROWS_AS(build_profile(part, MergedConfig::Sv), DataError);
}

TEST_CASE("evasive quality breakdown matches the small dataset") {
    auto part = small_partition();
    auto bd = evasive_quality_breakdown(part, MergedConfig::ReSd);
    CHECK(bd.attempted == 8);  // 12 records, every third is no-action
    CHECK(bd.selection_proper == 8);
    REQUIRE(bd.per_action.size() == 1);
    CHECK(bd.per_action[0].action == EvasiveAction::Brake);
    CHECK(bd.per_action[0].n_properly_selected == 8);
    CHECK(bd.per_action[0].exec_improper + bd.per_action[0].exec_proper == 8);
}

TEST_CASE("bucket with only no-action records yields an empty breakdown") {
    std::vector<CrashRecord> records;
    for (int i = 0; i < 5; ++i) {
        auto r = make_record(MaidsConfig::PtwFallNoOv);
        r.evasive = EvasiveResponse{EvasiveAction::NoAction, Quality::Unknown, Quality::Unknown};
        records.push_back(r);
    }
    auto bd = evasive_quality_breakdown(partition(records, default_rulebook()), MergedConfig::Sv);
    CHECK(bd.empty());
    CHECK(bd.per_action.empty());
}

TEST_CASE("unknown actions are dropped from the breakdown, not counted as attempts") {
    std::vector<CrashRecord> records;
    auto r = make_record(MaidsConfig::PtwFallNoOv);
    r.evasive = EvasiveResponse{EvasiveAction::Unknown, Quality::Unknown, Quality::Unknown};
    records.push_back(r);
    r.evasive = EvasiveResponse{EvasiveAction::Brake, Quality::Proper, Quality::Proper};
    records.push_back(r);
    auto bd = evasive_quality_breakdown(partition(records, default_rulebook()), MergedConfig::Sv);
    CHECK(bd.attempted == 1);
    REQUIRE(bd.per_action.size() == 1);
    CHECK(bd.per_action[0].action == EvasiveAction::Brake);
}

// --- skill rulebook -------------------------------------------------------

TEST_CASE("skill rules parse and fire in order with duplicate merging") {
    auto book = parse_skill_rulebook(
        "rule a: when curve_dominant == true then skill \"curve handling\" because \"first\"\n"
        "# comment line\n"
        "rule b: when dominant_stage == execution then skill \"curve handling\" because \"second\"\n"
        "rule c: when speeding_share >= 20 then skill \"speed choice\" because \"third\"\n");
    REQUIRE(book.rules.size() == 3);

    ConfigProfile p;
    p.curve_dominant = true;
    p.dominant_factors = {ContributingFactor{FactorActor::Rider, FactorStage::Execution, {}}};
    p.speeding_pct = 25.0;
    auto skills = map_skills(p, book);
    REQUIRE(skills.size() == 2);  // duplicate "curve handling" merged
    CHECK(skills[0].skill == "curve handling");
    CHECK(skills[0].rationale == "first");
    CHECK(skills[0].rule_id == "a");
    CHECK(skills[1].skill == "speed choice");

    // Pure function: same inputs, same outputs.
    CHECK(map_skills(p, book) == skills);
}

TEST_CASE("profiles matching no rule are tagged unmapped") {
    auto book = parse_skill_rulebook(
        "rule a: when speeding_share >= 99 then skill \"s\" because \"r\"\n");
    ConfigProfile p;
    auto skills = map_skills(p, book);
    REQUIRE(skills.size() == 1);
    CHECK(skills[0].skill == "unmapped");
}

TEST_CASE("unknown fields are rejected with exact position") {
    try {
        parse_skill_rulebook("rule a: when nonsense_field == 1 then skill \"s\" because \"r\"\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("skills:1:14") != std::string::npos);
        CHECK(msg.find("unknown field 'nonsense_field'") != std::string::npos);
    }
}

TEST_CASE("other malformed rule lines are rejected") {
    CHECK_THROWS_AS(parse_skill_rulebook("rule a: when speeding_share >= then skill \"s\" because \"r\"\n"),
                    ParseError);
    // Lines that simply stop early must still fail as parse errors.
    CHECK_THROWS_AS(parse_skill_rulebook("rule a: when curve_dominant == true\n"), ParseError);
    CHECK_THROWS_AS(parse_skill_rulebook("rule a: when curve_dominant == true then\n"), ParseError);
    CHECK_THROWS_AS(parse_skill_rulebook("rule\n"), ParseError);
    CHECK_THROWS_AS(parse_skill_rulebook("rule a:\n"), ParseError);
    CHECK_THROWS_AS(parse_skill_rulebook("rule a: when curve_dominant == maybe then skill \"s\" because \"r\"\n"),
                    ParseError);
    CHECK_THROWS_AS(parse_skill_rulebook("rule a when curve_dominant == true then skill \"s\" because \"r\"\n"),
                    ParseError);
    CHECK_THROWS_AS(parse_skill_rulebook("rule a: when curve_dominant == true then skill \"s\n"),
                    ParseError);
    CHECK_THROWS_AS(parse_skill_rulebook("rule a: when curve_dominant ~ true then skill \"s\" because \"r\"\n"),
                    ParseError);
}

TEST_CASE("unknown token values are rejected, aliases are canonicalized") {
    CHECK_THROWS_AS(
        parse_skill_rulebook("rule a: when dominant_actor == martian then skill \"s\" because \"r\"\n"),
        ParseError);
    CHECK_THROWS_AS(
        parse_skill_rulebook("rule a: when alignment_mode == sideways then skill \"s\" because \"r\"\n"),
        ParseError);
    // "mc" is an accepted spelling for the rider actor.
    auto book = parse_skill_rulebook(
        "rule a: when dominant_actor == mc then skill \"s\" because \"r\"\n");
    ConfigProfile p;
    p.dominant_factors = {ContributingFactor{FactorActor::Rider, FactorStage::Decision, {}}};
    CHECK(map_skills(p, book)[0].skill == "s");
}

TEST_CASE("garbled rule files fail with ParseError, never crash") {
    Rng rng(424242);
    for (int round = 0; round < 200; ++round) {
        std::string text;
        std::size_t len = rng.below(160);
        for (std::size_t i = 0; i < len; ++i) {
            static const char pool[] = "rule when then skill because \"=><!x1:\n";
            text += pool[rng.below(sizeof(pool) - 1)];
        }
        try {
            auto book = parse_skill_rulebook(text);
            for (const auto& r : book.rules) CHECK(!r.skill.empty());
        } catch (const ParseError&) {
        }
    }
}

TEST_CASE("conjunction requires every condition") {
    auto book = parse_skill_rulebook(
        "rule a: when dominant_actor == rider and dominant_stage == decision and "
        "speeding_share >= 15 then skill \"combo\" because \"r\"\n");
    ConfigProfile p;
    p.dominant_factors = {ContributingFactor{FactorActor::Rider, FactorStage::Decision, {}}};
    p.speeding_pct = 14.9;
    CHECK(map_skills(p, book)[0].skill == "unmapped");
    p.speeding_pct = 15.0;
    CHECK(map_skills(p, book)[0].skill == "combo");
}

TEST_CASE("raising the no-evasive threshold only shrinks the firing set") {
    auto part = small_partition();
    // Build the same profile under increasing thresholds; the flag can only
    // turn off, never on.
    bool previous = true;
    for (double threshold : {0.0, 10.0, 25.0, 40.0, 60.0, 100.0}) {
        ProfileThresholds t;
        t.no_evasive_pct = threshold;
        auto p = build_profile(part, MergedConfig::ReSd, t);
        if (!previous) CHECK(!p.no_evasive_flag);
        previous = p.no_evasive_flag;
    }
}

TEST_CASE("profiles built concurrently equal the sequential ones") {
    auto part = small_partition();
    std::vector<MergedConfig> configs = {MergedConfig::Sv, MergedConfig::ReSd};
    std::vector<ConfigProfile> sequential;
    for (auto cfg : configs) sequential.push_back(build_profile(part, cfg));

    std::vector<std::future<ConfigProfile>> futures;
    for (auto cfg : configs)
        futures.push_back(std::async(std::launch::async,
                                     [&part, cfg] { return build_profile(part, cfg); }));
    for (std::size_t i = 0; i < configs.size(); ++i) CHECK(futures[i].get() == sequential[i]);
}

TEST_CASE("default skills file parses and covers the documented conditions") {
    auto book = load_skill_rulebook(std::string(CRASHLENS_DATA_DIR) + "/skills.rules");
    CHECK(book.rules.size() == 7);
    // Smoke check: an intersection-style profile maps to the defensive skill.
    ConfigProfile p;
    p.dominant_factors = {ContributingFactor{FactorActor::OtherDriver, FactorStage::Detection, {}}};
    auto skills = map_skills(p, book);
    REQUIRE(!skills.empty());
    CHECK(skills[0].skill == "conspicuity and right-of-way defensive strategy");
}
