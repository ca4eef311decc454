#pragma once

// Maps the 25 MAIDS crash-group configurations onto the seven merged
// trajectory-based configurations (or the residual bucket). The mapping is
// data: it ships as a rulebook file and is validated against fixed preimage
// sizes at load time.

#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crashlens/common.hpp"
#include "crashlens/crash_model.hpp"

namespace crashlens {

/// Total mapping from MAIDS configuration tokens to merged configurations.
struct ConfigRulebook {
    std::array<MergedConfig, kMaidsConfigCount> mapping{};

    MergedConfig map(MaidsConfig c) const {
        if (c == MaidsConfig::Unknown) return MergedConfig::OtherBucket;
        return mapping[static_cast<std::size_t>(c)];
    }

    std::array<std::size_t, 8> preimage_sizes() const {
        std::array<std::size_t, 8> sizes{};
        for (auto m : mapping) sizes[static_cast<std::size_t>(m)]++;
        return sizes;
    }

    auto operator<=>(const ConfigRulebook&) const = default;
};

// Required preimage sizes, in merged-config order.
inline constexpr std::array<std::size_t, 8> kRulebookPreimageSizes = {2, 2, 2, 4, 1, 2, 3, 9};

inline constexpr std::string_view kDefaultRulebookText = R"(# MAIDS crash-group configuration -> merged crash configuration
ptw_into_ov_at_intersection = scp_ld
ov_into_ptw_at_intersection = scp_ld
ov_turning_left_in_front_of_ptw = tip_ld
ov_turning_right_in_front_of_ptw = tip_ld
ov_turns_across_ptw_ptw_impacting = tap_od
ov_turns_across_ptw_ov_impacting = tap_od
ptw_overtaking_ov_turning_left = tap_sd
ov_u_turn_ahead_of_ptw = tap_sd
sideswipe_same_direction = tap_sd
ptw_overtaking_ov_turning_right = tap_sd
ptw_rear_ending_ov = re_sd
head_on_collision = hs_od
sideswipe_opposite_direction = hs_od
ptw_fall_no_ov = sv
ptw_runoff_no_ov = sv
ptw_other_no_ov = sv
ptw_fall_avoiding_ov = other
ov_rear_ending_ptw = other
ptw_into_environmental_object = other
ptw_into_pedestrian_or_animal = other
ptw_turning_left_across_ov = other
ov_entering_roadway_failing_to_yield = other
ptw_runoff_avoiding_ov = other
ptw_turning_right_across_ov = other
other_unspecified = other
)";

/// Parses a rulebook from `maids_token = merged_token` lines ('#' comments).
/// Throws ParseError on malformed input and on any violation of the fixed
/// preimage sizes; a bad rulebook must abort the run, not skew an analysis.
inline ConfigRulebook parse_rulebook(std::string_view text) {
    std::array<bool, kMaidsConfigCount> seen{};
    ConfigRulebook rb;
    std::size_t line_no = 0;
    for (const auto& raw_line : split(text, '\n')) {
        ++line_no;
        std::string line = trim(raw_line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("rulebook line " + std::to_string(line_no) + ": expected 'maids_token = merged_token'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        auto maids = maids_config_from_token(key);
        if (!maids || *maids == MaidsConfig::Unknown)
            throw ParseError("rulebook line " + std::to_string(line_no) + ": unknown MAIDS token '" + key + "'");
        auto merged = merged_config_from_token(val);
        if (!merged)
            throw ParseError("rulebook line " + std::to_string(line_no) + ": unknown merged token '" + val + "'");
        auto idx = static_cast<std::size_t>(*maids);
        if (seen[idx])
            throw ParseError("rulebook line " + std::to_string(line_no) + ": duplicate MAIDS token '" + key + "'");
        seen[idx] = true;
        rb.mapping[idx] = *merged;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            throw ParseError("rulebook incomplete: missing MAIDS token '" +
                             std::string(to_token(static_cast<MaidsConfig>(i))) + "'");
    auto sizes = rb.preimage_sizes();
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] != kRulebookPreimageSizes[i])
            throw ParseError("rulebook preimage size for '" +
                             std::string(to_token(static_cast<MergedConfig>(i))) + "' is " +
                             std::to_string(sizes[i]) + ", expected " +
                             std::to_string(kRulebookPreimageSizes[i]));
    }
    return rb;
}

inline ConfigRulebook load_rulebook(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open rulebook file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_rulebook(ss.str());
}

inline const ConfigRulebook& default_rulebook() {
    static const ConfigRulebook rb = parse_rulebook(kDefaultRulebookText);
    return rb;
}

/// Pure function of the record's MAIDS configuration only.
inline MergedConfig classify(const CrashRecord& record, const ConfigRulebook& rulebook) {
    return rulebook.map(record.maids_config);
}

/// Disjoint decomposition of a record set into the eight merged buckets.
struct Partition {
    std::array<std::vector<CrashRecord>, 8> buckets;

    const std::vector<CrashRecord>& bucket(MergedConfig c) const {
        return buckets[static_cast<std::size_t>(c)];
    }
    std::vector<CrashRecord>& bucket(MergedConfig c) {
        return buckets[static_cast<std::size_t>(c)];
    }
    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& b : buckets) n += b.size();
        return n;
    }
};

inline Partition partition(const std::vector<CrashRecord>& records, const ConfigRulebook& rulebook) {
    Partition p;
    for (const auto& r : records) p.bucket(classify(r, rulebook)).push_back(r);
    return p;
}

/// Splits study-population records into the 16 selected configurations vs
/// the residual bucket (which also absorbs Unknown codes).
inline std::pair<std::vector<CrashRecord>, std::vector<CrashRecord>> split_selected_vs_other(
    const std::vector<CrashRecord>& records, const ConfigRulebook& rulebook = default_rulebook()) {
    std::vector<CrashRecord> selected;
    std::vector<CrashRecord> other;
    for (const auto& r : records) {
        if (classify(r, rulebook) == MergedConfig::OtherBucket) other.push_back(r);
        else selected.push_back(r);
    }
    return {std::move(selected), std::move(other)};
}

}  // namespace crashlens
