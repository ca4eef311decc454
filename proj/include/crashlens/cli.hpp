#pragma once

// Command-line surface: ingest, analyze, synth, verify.
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#if !defined(_WIN32)
#include <unistd.h>
#endif

#include "crashlens/classifier.hpp"
#include "crashlens/common.hpp"
#include "crashlens/ingestion.hpp"
#include "crashlens/profiler.hpp"
#include "crashlens/report.hpp"
#include "crashlens/synth.hpp"
#include "crashlens/verify.hpp"

namespace crashlens::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline bool color_enabled() {
    if (std::getenv("CRASHLENS_NO_COLOR") != nullptr) return false;
#if defined(_WIN32)
    return false;
#else
    return isatty(fileno(stdout)) != 0;
#endif
}

inline std::string paint(const std::string& text, const char* code, bool enabled) {
    if (!enabled) return text;
    return std::string("\033[") + code + "m" + text + "\033[0m";
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
}

inline void print_rejects(const std::vector<RejectedRow>& rejects) {
    for (const auto& r : rejects)
        std::cerr << "row " << r.row_number << ": " << r.reason << "\n";
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
    CLI::App app{"crashlens: trajectory-based crash configuration analytics"};
    app.require_subcommand(1);

    // --- ingest ---
    std::string in_path, in_format = "csv", out_path;
    bool strict = false;
    auto* ingest = app.add_subcommand("ingest", "Parse and validate a record file");
    ingest->add_option("--input", in_path, "input file")->required();
    ingest->add_option("--format", in_format, "csv|jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    ingest->add_flag("--strict", strict, "treat any rejected row as a failure");
    ingest->add_option("--out", out_path, "normalized CSV output path")->required();

    // --- analyze ---
    std::string an_records, an_rulebook, an_skills, an_report_dir, an_format = "csv";
    auto* analyze = app.add_subcommand("analyze", "Run the full analysis pipeline");
    analyze->add_option("--records", an_records, "record CSV file")->required();
    analyze->add_option("--rulebook", an_rulebook, "configuration rulebook file")->required();
    analyze->add_option("--skills", an_skills, "skill rulebook file")->required();
    analyze->add_option("--report-dir", an_report_dir, "output directory")->required();
    analyze->add_option("--report-format", an_format, "csv|md|json")
        ->check(CLI::IsMember({"csv", "md", "json"}));

    // --- synth ---
    std::string sy_profile, sy_out;
    std::uint64_t sy_seed = 0;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset from a profile");
    synth->add_option("--profile", sy_profile, "marginal profile file")->required();
    synth->add_option("--seed", sy_seed, "generation seed")->required();
    synth->add_option("--out", sy_out, "output CSV path")->required();

    // --- verify ---
    std::string ve_records, ve_expect, ve_rulebook;
    auto* verify = app.add_subcommand("verify", "Check a record file against a profile");
    verify->add_option("--records", ve_records, "record CSV file")->required();
    verify->add_option("--expect", ve_expect, "marginal profile to verify against")->required();
    verify->add_option("--rulebook", ve_rulebook, "configuration rulebook file (default built-in)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            app.exit(e);
            return kExitOk;
        }
        std::cerr << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*ingest) {
            auto format = record_format_from_token(in_format);
            auto result = parse_records(detail::read_file(in_path), *format);
            detail::print_rejects(result.rejects);
            if (strict && !result.rejects.empty()) {
                std::cerr << "strict mode: " << result.rejects.size() << " rejected row(s)\n";
                return kExitDataError;
            }
            detail::write_file(out_path, records_to_csv(result.records));
            std::cout << "parsed " << result.records.size() << " record(s), rejected "
                      << result.rejects.size() << "\n";
            return kExitOk;
        }

        if (*analyze) {
            auto parsed = parse_records_csv(detail::read_file(an_records));
            if (!parsed.rejects.empty()) {
                detail::print_rejects(parsed.rejects);
                std::cerr << "analyze requires a clean record file ("
                          << parsed.rejects.size() << " rejected row(s))\n";
                return kExitDataError;
            }
            auto rulebook = load_rulebook(an_rulebook);
            auto skills = load_skill_rulebook(an_skills);
            auto bundle = build_report_bundle(parsed.records, rulebook, skills);
            auto format = report_format_from_token(an_format);
            auto written = render(bundle, *format, an_report_dir);
            for (const auto& f : written) std::cout << "wrote " << f << "\n";
            return kExitOk;
        }

        if (*synth) {
            auto profile = load_marginal_profile(sy_profile);
            auto records = generate(profile, sy_seed);
            detail::write_file(sy_out, records_to_csv(records));
            std::cout << "generated " << records.size() << " record(s)\n";
            return kExitOk;
        }

        if (*verify) {
            auto parsed = parse_records_csv(detail::read_file(ve_records));
            if (!parsed.rejects.empty()) {
                detail::print_rejects(parsed.rejects);
                return kExitDataError;
            }
            auto profile = load_marginal_profile(ve_expect);
            ConfigRulebook rb = ve_rulebook.empty() ? default_rulebook() : load_rulebook(ve_rulebook);
            auto outcome = verify_against_profile(parsed.records, profile, rb);
            bool color = detail::color_enabled();
            std::size_t passed = 0;
            for (const auto& c : outcome.checks) {
                if (c.pass) {
                    ++passed;
                    std::cout << detail::paint("PASS", "32", color) << " " << c.name << "\n";
                } else {
                    std::cout << detail::paint("FAIL", "31", color) << " " << c.name << " ("
                              << c.detail << ")\n";
                }
            }
            std::cout << passed << "/" << outcome.checks.size() << " checks passed\n";
            return outcome.all_pass() ? kExitOk : kExitDataError;
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}

}  // namespace crashlens::cli
