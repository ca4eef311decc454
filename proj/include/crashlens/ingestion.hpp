#pragma once

// Record file ingestion: CSV and JSON-lines readers, the matching writers,
// and the study-population filter applied before any analysis.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crashlens/common.hpp"
#include "crashlens/crash_model.hpp"
#include "crashlens/csv.hpp"

namespace crashlens {

enum class RecordFormat { Csv, JsonLines };

inline std::optional<RecordFormat> record_format_from_token(std::string_view s) {
    std::string t = lower(s);
    if (t == "csv") return RecordFormat::Csv;
    if (t == "jsonl" || t == "json_lines" || t == "jsonlines") return RecordFormat::JsonLines;
    return std::nullopt;
}

inline constexpr std::array<std::string_view, 16> kRecordColumns = {
    "case_id",          "ptw_class",        "mais",
    "maids_config",     "factor_actor",     "factor_stage",
    "factor_detail",    "evasive_action",   "evasive_selection",
    "evasive_execution", "alignment",       "posted_speed_kmh",
    "impact_speed_kmh", "tpei_s",           "rider_impairment_primary",
    "mechanical_primary",
};

struct RejectedRow {
    std::size_t row_number = 0;  // 1-based line number in the source
    std::string reason;
};

struct ParseResult {
    std::vector<CrashRecord> records;
    std::vector<RejectedRow> rejects;
};

/// Counts of the data-selection pipeline. Reconciles exactly at every stage.
/// The filter fills the first four fields; the two split fields are completed
/// once the classifier has separated selected configurations from the
/// residual bucket.
struct FilterReport {
    std::size_t n_input = 0;
    std::size_t n_excluded_impairment_mechanical = 0;
    std::size_t n_excluded_mofa = 0;
    std::size_t n_study_population = 0;
    std::size_t n_selected_configs = 0;
    std::size_t n_other_bucket = 0;

    auto operator<=>(const FilterReport&) const = default;
};

namespace detail {

struct FieldReader {
    // One raw field per column, already positionally resolved.
    std::array<std::string, 16> raw;

    // Builds the record, or an error string naming the offending field.
    std::optional<std::string> build(CrashRecord& r) const {
        r.case_id = trim(raw[0]);
        if (r.case_id.empty()) return "missing case_id";

        auto cls = ptw_class_from_token(trim(raw[1]));
        if (!cls) return "unknown ptw_class '" + trim(raw[1]) + "'";
        r.ptw_class = *cls;

        if (!trim(raw[2]).empty()) {
            auto m = parse_int(raw[2]);
            if (!m) return "mais is not an integer";
            r.mais = static_cast<int>(*m);
        }

        auto cfg = maids_config_from_token(trim(raw[3]));
        if (!cfg) return "unknown maids_config '" + trim(raw[3]) + "'";
        r.maids_config = *cfg;

        std::string actor_s = trim(raw[4]);
        std::string stage_s = trim(raw[5]);
        std::string detail_s = trim(raw[6]);
        if (!actor_s.empty()) {
            ContributingFactor f;
            auto actor = factor_actor_from_token(actor_s);
            if (!actor) return "unknown factor_actor '" + actor_s + "'";
            f.actor = *actor;
            if (!stage_s.empty()) {
                auto st = factor_stage_from_token(stage_s);
                if (!st) return "unknown factor_stage '" + stage_s + "'";
                f.stage = *st;
            }
            if (!detail_s.empty()) {
                auto d = factor_detail_from_token(detail_s);
                if (!d) return "unknown factor_detail '" + detail_s + "'";
                f.detail = *d;
            }
            r.primary_factor = f;
        } else if (!stage_s.empty() || !detail_s.empty()) {
            return "factor stage/detail given without an actor";
        }

        std::string act_s = trim(raw[7]);
        if (!act_s.empty()) {
            EvasiveResponse e;
            auto act = evasive_action_from_token(act_s);
            if (!act) return "unknown evasive_action '" + act_s + "'";
            e.action = *act;
            if (!trim(raw[8]).empty()) {
                auto q = quality_from_token(trim(raw[8]));
                if (!q) return "unknown evasive_selection '" + trim(raw[8]) + "'";
                e.selection_quality = *q;
            }
            if (!trim(raw[9]).empty()) {
                auto q = quality_from_token(trim(raw[9]));
                if (!q) return "unknown evasive_execution '" + trim(raw[9]) + "'";
                e.execution_quality = *q;
            }
            r.evasive = e;
        } else if (!trim(raw[8]).empty() || !trim(raw[9]).empty()) {
            return "evasive qualities given without an action";
        }

        std::string align_s = trim(raw[10]);
        if (align_s.empty()) {
            r.alignment = Alignment::Unknown;
        } else {
            auto a = alignment_from_token(align_s);
            if (!a) return "unknown alignment '" + align_s + "'";
            r.alignment = *a;
        }

        auto num = [&](int idx, std::optional<double>& dst) -> std::optional<std::string> {
            if (trim(raw[idx]).empty()) return std::nullopt;
            auto v = parse_double(raw[idx]);
            if (!v) return std::string(kRecordColumns[idx]) + " is not a number";
            dst = *v;
            return std::nullopt;
        };
        if (auto e = num(11, r.posted_speed_kmh)) return e;
        if (auto e = num(12, r.impact_speed_kmh)) return e;
        if (auto e = num(13, r.tpei_s)) return e;

        auto flag = [&](int idx, bool& dst) -> std::optional<std::string> {
            std::string v = lower(trim(raw[idx]));
            if (v.empty() || v == "false") { dst = false; return std::nullopt; }
            if (v == "true") { dst = true; return std::nullopt; }
            return std::string(kRecordColumns[idx]) + " must be true/false";
        };
        if (auto e = flag(14, r.rider_impairment_primary)) return e;
        if (auto e = flag(15, r.mechanical_primary)) return e;

        auto violations = validate_record(r);
        if (!violations.empty()) return violations.front().reason;
        return std::nullopt;
    }
};

}  // namespace detail

/// Parses a CSV document with the documented 16-column header.
/// Malformed rows land in `rejects` with their line number; they never
/// abort the batch.
inline ParseResult parse_records_csv(std::string_view text) {
    auto rows = csv::parse(text);
    if (rows.empty()) throw DataError("empty input: missing header row");

    const auto& header = rows.front();
    if (header.size() != kRecordColumns.size())
        throw DataError("header mismatch: expected " + std::to_string(kRecordColumns.size()) +
                        " columns, got " + std::to_string(header.size()));
    std::array<int, 16> order{};
    std::array<bool, 16> taken{};
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name = lower(trim(header[i]));
        int found = -1;
        for (std::size_t k = 0; k < kRecordColumns.size(); ++k)
            if (name == kRecordColumns[k]) { found = static_cast<int>(k); break; }
        if (found < 0) throw DataError("header mismatch: unknown column '" + name + "'");
        if (taken[found]) throw DataError("header mismatch: duplicate column '" + name + "'");
        taken[found] = true;
        order[i] = found;
    }

    ParseResult out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::size_t line = i + 1;
        if (row.size() != kRecordColumns.size()) {
            out.rejects.push_back({line, "expected " + std::to_string(kRecordColumns.size()) +
                                             " fields, got " + std::to_string(row.size())});
            continue;
        }
        detail::FieldReader fr;
        for (std::size_t k = 0; k < row.size(); ++k) fr.raw[order[k]] = row[k];
        CrashRecord r;
        if (auto err = fr.build(r)) {
            out.rejects.push_back({line, *err});
            continue;
        }
        out.records.push_back(std::move(r));
    }
    return out;
}

/// Parses JSON-lines: one object per line, same field names as the CSV.
inline ParseResult parse_records_jsonl(std::string_view text) {
    ParseResult out;
    std::size_t line_no = 0;
    for (const auto& line : split(text, '\n')) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(t, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            out.rejects.push_back({line_no, "not a JSON object"});
            continue;
        }
        detail::FieldReader fr;
        bool bad_field = false;
        for (std::size_t k = 0; k < kRecordColumns.size(); ++k) {
            auto it = j.find(std::string(kRecordColumns[k]));
            if (it == j.end() || it->is_null()) continue;
            if (it->is_string()) fr.raw[k] = it->get<std::string>();
            else if (it->is_number_integer()) fr.raw[k] = std::to_string(it->get<long long>());
            else if (it->is_number_float()) fr.raw[k] = format_shortest(it->get<double>());
            else if (it->is_boolean()) fr.raw[k] = it->get<bool>() ? "true" : "false";
            else {
                out.rejects.push_back({line_no, "field '" + std::string(kRecordColumns[k]) +
                                                    "' has an unsupported JSON type"});
                bad_field = true;
                break;
            }
        }
        if (bad_field) continue;
        CrashRecord r;
        if (auto err = fr.build(r)) {
            out.rejects.push_back({line_no, *err});
            continue;
        }
        out.records.push_back(std::move(r));
    }
    return out;
}

inline ParseResult parse_records(std::string_view text, RecordFormat format) {
    return format == RecordFormat::Csv ? parse_records_csv(text) : parse_records_jsonl(text);
}

// ---------------------------------------------------------------------------
// Serialization (the canonical forms re-parsed by the readers)
// ---------------------------------------------------------------------------

inline std::vector<std::string> record_to_fields(const CrashRecord& r) {
    std::vector<std::string> f(16);
    f[0] = r.case_id;
    f[1] = to_token(r.ptw_class);
    if (r.mais) f[2] = std::to_string(*r.mais);
    f[3] = r.maids_config == MaidsConfig::Unknown ? "" : std::string(to_token(r.maids_config));
    if (r.primary_factor) {
        f[4] = to_token(r.primary_factor->actor);
        if (r.primary_factor->stage) f[5] = to_token(*r.primary_factor->stage);
        if (r.primary_factor->detail) f[6] = to_token(*r.primary_factor->detail);
    }
    if (r.evasive) {
        f[7] = to_token(r.evasive->action);
        f[8] = to_token(r.evasive->selection_quality);
        f[9] = to_token(r.evasive->execution_quality);
    }
    f[10] = r.alignment == Alignment::Unknown ? "" : std::string(to_token(r.alignment));
    if (r.posted_speed_kmh) f[11] = format_fixed(*r.posted_speed_kmh, 1);
    if (r.impact_speed_kmh) f[12] = format_fixed(*r.impact_speed_kmh, 1);
    if (r.tpei_s) f[13] = format_fixed(*r.tpei_s, 2);
    f[14] = r.rider_impairment_primary ? "true" : "false";
    f[15] = r.mechanical_primary ? "true" : "false";
    return f;
}

inline std::string records_to_csv(const std::vector<CrashRecord>& records) {
    std::string out;
    std::vector<std::string> header;
    header.reserve(kRecordColumns.size());
    for (auto c : kRecordColumns) header.emplace_back(c);
    out += csv::join_row(header);
    for (const auto& r : records) out += csv::join_row(record_to_fields(r));
    return out;
}

inline std::string records_to_jsonl(const std::vector<CrashRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::json j;
        auto fields = record_to_fields(r);
        j["case_id"] = fields[0];
        j["ptw_class"] = fields[1];
        if (r.mais) j["mais"] = *r.mais;
        if (!fields[3].empty()) j["maids_config"] = fields[3];
        if (r.primary_factor) {
            j["factor_actor"] = fields[4];
            if (!fields[5].empty()) j["factor_stage"] = fields[5];
            if (!fields[6].empty()) j["factor_detail"] = fields[6];
        }
        if (r.evasive) {
            j["evasive_action"] = fields[7];
            j["evasive_selection"] = fields[8];
            j["evasive_execution"] = fields[9];
        }
        if (!fields[10].empty()) j["alignment"] = fields[10];
        if (r.posted_speed_kmh) j["posted_speed_kmh"] = *r.posted_speed_kmh;
        if (r.impact_speed_kmh) j["impact_speed_kmh"] = *r.impact_speed_kmh;
        if (r.tpei_s) j["tpei_s"] = *r.tpei_s;
        j["rider_impairment_primary"] = r.rider_impairment_primary;
        j["mechanical_primary"] = r.mechanical_primary;
        out += j.dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Study-population filter
// ---------------------------------------------------------------------------

/// Applies the data-selection pipeline: drop crashes generated by rider
/// impairment or a mechanical problem, then drop mofa-class PTWs.
/// The report's counts reconcile exactly with the input size.
inline std::pair<std::vector<CrashRecord>, FilterReport> filter_study_population(
    const std::vector<CrashRecord>& records) {
    FilterReport rep;
    rep.n_input = records.size();
    std::vector<CrashRecord> retained;
    retained.reserve(records.size());
    for (const auto& r : records) {
        if (r.rider_impairment_primary || r.mechanical_primary) {
            ++rep.n_excluded_impairment_mechanical;
            continue;
        }
        if (r.ptw_class == PtwClass::Mofa) {
            ++rep.n_excluded_mofa;
            continue;
        }
        retained.push_back(r);
    }
    rep.n_study_population = retained.size();
    return {std::move(retained), rep};
}

}  // namespace crashlens
