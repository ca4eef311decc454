#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "crashlens/classifier.hpp"
#include "crashlens/rng.hpp"
#include "crashlens/stats.hpp"

using namespace crashlens;

TEST_CASE("odds ratio on the reconstructed severity table") {
    auto r = odds_ratio(31, 64, 151, 554);
    CHECK(r.or_value == Catch::Approx(1.77711).margin(0.0005));
    CHECK(r.ci_low == Catch::Approx(1.11616).margin(0.0005));
    CHECK(r.ci_high == Catch::Approx(2.82946).margin(0.0005));
    CHECK(r.significant);
    CHECK(!r.corrected);
}

TEST_CASE("odds ratio on the reconstructed PTW-class table") {
    auto r = odds_ratio(78, 405, 11, 309);
    CHECK(round1(r.or_value) == 5.4);
    CHECK(round1(r.ci_low) == 2.8);
    CHECK(round1(r.ci_high) == 10.3);
    CHECK(r.significant);
}

TEST_CASE("symmetric table is exactly neutral") {
    auto r = odds_ratio(10, 10, 10, 10);
    CHECK(r.or_value == Catch::Approx(1.0));
    CHECK(!r.significant);
    CHECK(r.ci_low < 1.0);
    CHECK(r.ci_high > 1.0);
}

TEST_CASE("zero cells trigger the continuity correction") {
    auto r = odds_ratio(0, 20, 5, 15);
    CHECK(r.corrected);
    CHECK(r.or_value > 0.0);
    CHECK(r.ci_low <= r.or_value);
    CHECK(r.or_value <= r.ci_high);
}

TEST_CASE("degenerate margins are an error") {
    CHECK_THROWS_AS(odds_ratio(0, 0, 5, 5), DataError);
    CHECK_THROWS_AS(odds_ratio(5, 5, 0, 0), DataError);
}

TEST_CASE("odds ratio properties over random tables") {
    Rng rng(20240901);
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t a = 1 + rng.below(500), b = 1 + rng.below(500);
        std::uint64_t c = 1 + rng.below(500), d = 1 + rng.below(500);
        auto r = odds_ratio(a, b, c, d);
        auto swapped = odds_ratio(b, a, d, c);

        // Reciprocity: OR * OR_swapped = 1, CIs are mutual reciprocals.
        CHECK(std::abs(r.or_value * swapped.or_value - 1.0) < 1e-9);
        CHECK(r.ci_low * swapped.ci_high == Catch::Approx(1.0).epsilon(1e-9));
        CHECK(r.ci_high * swapped.ci_low == Catch::Approx(1.0).epsilon(1e-9));

        // CI contains the point estimate; significance is CI-exclusion of 1.
        CHECK(r.ci_low <= r.or_value);
        CHECK(r.or_value <= r.ci_high);
        CHECK(r.significant == (r.ci_low > 1.0 || r.ci_high < 1.0));

        // Row-scale invariance of the point estimate.
        std::uint64_t k = 2 + rng.below(5);
        auto scaled = odds_ratio(a * k, b * k, c, d);
        CHECK(scaled.or_value == Catch::Approx(r.or_value).epsilon(1e-12));
    }
}

namespace {

CrashRecord rec_with_config(MaidsConfig cfg) {
    CrashRecord r;
    r.case_id = "x";
    r.maids_config = cfg;
    return r;
}

}  // namespace

TEST_CASE("frequency table matches a naive counting loop") {
    Rng rng(7);
    const auto& rb = default_rulebook();
    for (int round = 0; round < 20; ++round) {
        std::vector<CrashRecord> records;
        std::size_t n = round == 0 ? 10000 : 1 + rng.below(500);
        for (std::size_t i = 0; i < n; ++i) {
            auto r = rec_with_config(static_cast<MaidsConfig>(rng.below(kMaidsConfigCount)));
            r.mais = static_cast<int>(rng.below(7));
            records.push_back(r);
        }
        auto part = partition(records, rb);
        auto severe = [](const CrashRecord& r) { return is_severe(r) == std::optional<bool>(true); };
        auto table = frequency_table(part, severe, "severe");

        // Naive loop, no partition involved.
        std::map<std::string, std::size_t> naive;
        std::size_t total = 0;
        for (const auto& r : records) {
            if (!severe(r)) continue;
            ++naive[std::string(display_label(rb.map(r.maids_config)))];
            ++total;
        }
        CHECK(table.column_n == total);
        double pct_sum = 0.0;
        for (const auto& row : table.rows) {
            CHECK(row.count == naive[row.label]);
            if (row.pct) pct_sum += *row.pct;
        }
        if (total > 0) CHECK(pct_sum == Catch::Approx(100.0).margin(1e-9));
    }
}

TEST_CASE("empty segment yields a flagged table, not NaNs") {
    auto part = partition({}, default_rulebook());
    auto t = frequency_table(part, [](const CrashRecord&) { return true; }, "all");
    CHECK(t.undefined());
    CHECK(t.column_n == 0);
    for (const auto& row : t.rows) CHECK(!row.pct.has_value());
}

TEST_CASE("single-record table is 100%") {
    std::vector<CrashRecord> records{rec_with_config(MaidsConfig::PtwFallNoOv)};
    auto part = partition(records, default_rulebook());
    auto t = frequency_table(part, [](const CrashRecord&) { return true; }, "all");
    for (const auto& row : t.rows) {
        if (row.label == "SV") CHECK(row.pct == Catch::Approx(100.0));
        else CHECK(row.count == 0);
    }
}

TEST_CASE("quartiles use linear interpolation between closest ranks") {
    auto s = summarize_values({1, 2, 3, 4});
    CHECK(s.mean == Catch::Approx(2.5));
    CHECK(s.q1 == Catch::Approx(1.75));
    CHECK(s.q3 == Catch::Approx(3.25));
    CHECK(s.n == 4);
}

TEST_CASE("summaries use pairwise deletion") {
    std::vector<CrashRecord> records;
    for (double v : {30.0, 40.0, 50.0}) {
        CrashRecord r;
        r.impact_speed_kmh = v;
        records.push_back(r);
    }
    auto before = summarize_numeric(records, NumericField::ImpactSpeed);
    CHECK(before.n == 3);
    CHECK(before.mean == Catch::Approx(40.0));

    // A record missing the field leaves the summary untouched.
    records.push_back(CrashRecord{});
    auto after = summarize_numeric(records, NumericField::ImpactSpeed);
    CHECK(after == before);

    auto empty = summarize_numeric({}, NumericField::Tpei);
    CHECK(!empty.defined());
    CHECK(empty.n == 0);
    CHECK(!empty.mean.has_value());
}

TEST_CASE("pairwise deletion never counts missing values (random)") {
    Rng rng(99);
    for (int round = 0; round < 50; ++round) {
        std::vector<CrashRecord> records;
        std::size_t present = 0;
        std::size_t n = rng.below(60);
        for (std::size_t i = 0; i < n; ++i) {
            CrashRecord r;
            if (rng.below(2)) {
                r.tpei_s = 0.1 + rng.uniform01() * 5.0;
                ++present;
            }
            records.push_back(r);
        }
        auto s = summarize_numeric(records, NumericField::Tpei);
        CHECK(s.n == present);
        if (s.defined()) CHECK(*s.q1 <= *s.q3);
    }
}

TEST_CASE("speeding rule is strict at exactly 120%") {
    CHECK(speeding_flag(61.0, 50.0) == std::optional<bool>(true));
    CHECK(speeding_flag(60.0, 50.0) == std::optional<bool>(false));
    CHECK(!speeding_flag(std::nullopt, 50.0).has_value());
    CHECK(!speeding_flag(61.0, std::nullopt).has_value());
}

TEST_CASE("speeding boundary behavior over a grid of limits") {
    for (int posted = 5; posted <= 200; posted += 5) {
        double limit = static_cast<double>(posted);
        double boundary = limit * 6.0 / 5.0;  // exactly 120%
        CHECK(speeding_flag(boundary, limit) == std::optional<bool>(false));
        CHECK(speeding_flag(std::nextafter(boundary, 1e9), limit) == std::optional<bool>(true));
        CHECK(speeding_flag(boundary - 0.1, limit) == std::optional<bool>(false));
    }
}

TEST_CASE("required deceleration reproduces the emergency braking bound") {
    CHECK(required_deceleration(50.0, 2.0) == Catch::Approx(6.944).margin(0.005));
    CHECK(required_deceleration(0.0, 2.0) == 0.0);
    CHECK(required_deceleration(100.0, 2.0) == Catch::Approx(13.889).margin(0.005));
    CHECK_THROWS_AS(required_deceleration(50.0, 0.0), DataError);
}

TEST_CASE("required deceleration monotonicity") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        double speed = rng.uniform01() * 150.0;
        double tpei = 0.1 + rng.uniform01() * 5.0;
        double base = required_deceleration(speed, tpei);
        CHECK(required_deceleration(speed + 1.0, tpei) > base);
        CHECK(required_deceleration(speed + 1.0, tpei + 0.5) <
              required_deceleration(speed + 1.0, tpei));
    }
}

TEST_CASE("config association applies pairwise deletion and detects degeneracy") {
    std::vector<CrashRecord> records;
    auto add = [&](MaidsConfig cfg, std::optional<int> mais, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            auto r = rec_with_config(cfg);
            r.mais = mais;
            records.push_back(r);
        }
    };
    add(MaidsConfig::PtwRearEndingOv, 4, 6);
    add(MaidsConfig::PtwRearEndingOv, 1, 4);
    add(MaidsConfig::PtwRearEndingOv, std::nullopt, 3);  // dropped pairwise
    add(MaidsConfig::HeadOnCollision, 4, 2);
    add(MaidsConfig::HeadOnCollision, 1, 8);
    auto part = partition(records, default_rulebook());
    auto severe = [](const CrashRecord& r) { return is_severe(r); };
    auto r = config_association(part, MergedConfig::ReSd, severe);
    CHECK(r.a == 6);
    CHECK(r.b == 4);
    CHECK(r.c == 2);
    CHECK(r.d == 8);

    auto constant_true = [](const CrashRecord&) { return std::optional<bool>(true); };
    CHECK_THROWS_AS(config_association(part, MergedConfig::ReSd, constant_true), DataError);
}
