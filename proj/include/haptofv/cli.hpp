#pragma once

// Command-line surface.  cli_main is stream-parameterized so tests can drive
// it in-process; the argc/argv adapter below is what tools/main.cpp calls.
//
// Exit codes: 0 success, 1 validation failure (bad config, inadmissible
// initial data, missing input file), 2 solver failure, 3 envelope-check
// failure, 64 usage error (unknown flag or subcommand, missing flag value).

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "haptofv/config.hpp"
#include "haptofv/csv.hpp"
#include "haptofv/diagnostics.hpp"
#include "haptofv/experiments.hpp"
#include "haptofv/run.hpp"

namespace haptofv {

namespace cli {

inline const char* usage_text() {
    return
        "usage: haptofv <subcommand> --config <path> [--out <dir>]"
        " [--seed <u64>] [--quiet]\n"
        "\n"
        "subcommands:\n"
        "  run            simulate one configuration; write fields,"
        " diagnostics, envelopes\n"
        "  delta-sweep    regularization sweep delta -> 0; write sweep.csv\n"
        "  perturb-sweep  initial-data perturbation sweep eps -> 0;"
        " write sweep.csv\n"
        "  refine         grid refinement study; write sweep.csv\n"
        "  check          re-run envelope checks on an existing"
        " diagnostics.csv\n"
        "\n"
        "flags:\n"
        "  --config <path>  configuration file (required)\n"
        "  --out <dir>      output directory (overrides output.dir)\n"
        "  --seed <u64>     random seed (overrides seed)\n"
        "  --quiet          suppress normal stdout reporting\n"
        "\n"
        "exit codes: 0 ok, 1 validation failure, 2 solver failure,"
        " 3 envelope-check failure, 64 usage\n";
}

struct Options {
    std::string subcommand;
    std::optional<std::string> config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

inline std::string describe_grid(const GridSpec& g) {
    std::string s = std::to_string(g.dim) + "d n=" + format_int(g.n0);
    if (g.dim == 2) s += "x" + format_int(g.n1);
    s += " box=[" + format_double(g.lo0) + "," + format_double(g.hi0) + "]";
    if (g.dim == 2)
        s += "x[" + format_double(g.lo1) + "," + format_double(g.hi1) + "]";
    return s;
}

inline Metadata base_metadata(const RunConfig& cfg) {
    Metadata m;
    m.emplace_back("config", hash_hex(cfg.config_hash));
    m.emplace_back("seed", std::to_string(cfg.seed));
    m.emplace_back("grid", describe_grid(cfg.grid));
    m.emplace_back("t_end", format_double(cfg.scheme.t_end));
    if (cfg.model.delta == 0.0) m.emplace_back("regularization", "formal");
    return m;
}

inline int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err,
                   bool quiet) {
    const InitialData init = build_initial_data(cfg);
    const ValidationReport admissible = validate_initial_data(init);
    if (!admissible.passed()) {
        for (const auto& issue : admissible.failures)
            err << "initial data rejected: " << issue.check << ": "
                << issue.message << "\n";
        return 1;
    }

    const RunResult result = simulate(cfg, init);
    std::filesystem::create_directories(cfg.output.dir);

    Metadata meta = base_metadata(cfg);
    meta.emplace_back("stride", format_int(cfg.output.stride));
    meta.emplace_back("tail_tolerance",
                      format_double(cfg.output.tail_tolerance));
    meta.emplace_back("steps", format_int(result.steps));
    meta.emplace_back("status", result.solver_failed
                                    ? "solver_failure: " + result.failure
                                    : "ok");
    if (!result.tail_ok)
        meta.emplace_back(
            "tail_warning",
            "boundary tail " +
                format_double(result.record.back().boundary_tail) +
                " exceeds tolerance " +
                format_double(cfg.output.tail_tolerance) +
                " at t_end; the no-flux box is too small for this run");

    for (const State& snap : result.snapshots) {
        Metadata m = meta;
        m.emplace_back("time", format_double(snap.time));
        write_fields_csv(cfg.output.dir + "/fields_t" +
                             format_double(snap.time) + ".csv",
                         snap.psi, snap.phi, m);
    }
    write_diagnostics_csv(cfg.output.dir + "/diagnostics.csv", result.record,
                          meta);
    write_envelopes_csv(cfg.output.dir + "/envelopes.csv", result.envelopes,
                        meta);

    if (!result.tail_ok)
        err << "warning: boundary tail exceeds tail_tolerance at t_end "
               "(recorded in metadata)\n";
    if (!quiet) {
        out << format_envelope_report(result.envelopes);
        out << "output written to " << cfg.output.dir << "\n";
    }
    if (result.solver_failed) {
        err << "solver failure: " << result.failure << "\n";
        return 2;
    }
    return result.envelopes.passed() ? 0 : 3;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out,
                     std::ostream& err, bool quiet,
                     const std::string& which) {
    SweepResult result;
    if (which == "delta-sweep") result = delta_sweep(cfg);
    else if (which == "perturb-sweep") result = perturbation_sweep(cfg);
    else result = refinement_study(cfg);

    std::filesystem::create_directories(cfg.output.dir);
    write_sweep_csv(cfg.output.dir + "/sweep.csv", result,
                    base_metadata(cfg));
    if (result.extrapolated) {
        Metadata m = base_metadata(cfg);
        m.emplace_back("content", "linear extrapolation of the two smallest"
                                  " regularization levels to 0");
        m.emplace_back("time", format_double(result.extrapolated->time));
        write_fields_csv(cfg.output.dir + "/fields_extrapolated.csv",
                         result.extrapolated->psi, result.extrapolated->phi,
                         m);
    }

    if (!quiet) {
        for (const auto& [name, order] : result.orders)
            out << "order " << name << " = " << format_double(order) << "\n";
        for (const auto& a : result.assertions)
            out << (a.pass ? "pass" : "FAIL") << "  " << a.name << "\n";
        out << "output written to " << cfg.output.dir << "\n";
    }
    if (result.failed) {
        err << "solver failure: " << result.failure << "\n";
        return 2;
    }
    return 0;
}

inline int cmd_check(const RunConfig& cfg, std::ostream& out,
                     std::ostream& err, bool quiet) {
    const std::string diag_path = cfg.output.dir + "/diagnostics.csv";
    if (!std::filesystem::exists(diag_path)) {
        err << "diagnostics file not found: " << diag_path << "\n";
        return 1;
    }
    const DiagnosticsRecord record = read_diagnostics_csv(diag_path);
    const InitialData init = build_initial_data(cfg);
    const EnvelopeReport report = check_envelopes(record, cfg.model, init);
    write_envelopes_csv(cfg.output.dir + "/envelopes.csv", report,
                        base_metadata(cfg));
    if (!quiet) out << format_envelope_report(report);
    return report.passed() ? 0 : 3;
}

}  // namespace cli

inline int cli_main(const std::vector<std::string>& args, std::ostream& out,
                    std::ostream& err) {
    cli::Options opt;
    std::vector<std::string> positional;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--quiet") {
            opt.quiet = true;
        } else if (a == "--config" || a == "--out" || a == "--seed") {
            if (i + 1 >= args.size()) {
                err << "missing value for " << a << "\n" << cli::usage_text();
                return 64;
            }
            const std::string value = args[++i];
            if (a == "--config") {
                opt.config_path = value;
            } else if (a == "--out") {
                opt.out_dir = value;
            } else {
                std::uint64_t seed = 0;
                const char* begin = value.c_str();
                const char* end = begin + value.size();
                const auto res = std::from_chars(begin, end, seed);
                if (res.ec != std::errc{} || res.ptr != end) {
                    err << "invalid --seed value: " << value << "\n";
                    return 1;
                }
                opt.seed = seed;
            }
        } else if (a.rfind("--", 0) == 0) {
            err << "unknown flag: " << a << "\n" << cli::usage_text();
            return 64;
        } else {
            positional.push_back(a);
        }
    }

    if (positional.size() != 1) {
        err << (positional.empty() ? "missing subcommand\n"
                                   : "too many positional arguments\n")
            << cli::usage_text();
        return 64;
    }
    opt.subcommand = positional.front();
    const bool known = opt.subcommand == "run" ||
                       opt.subcommand == "delta-sweep" ||
                       opt.subcommand == "perturb-sweep" ||
                       opt.subcommand == "refine" ||
                       opt.subcommand == "check";
    if (!known) {
        err << "unknown subcommand: " << opt.subcommand << "\n"
            << cli::usage_text();
        return 64;
    }

    if (!opt.config_path) {
        err << "missing required flag --config <path>\n";
        return 1;
    }

    try {
        RunConfig cfg = parse_config_file(*opt.config_path);
        if (opt.seed) cfg.seed = *opt.seed;
        if (opt.out_dir) cfg.output.dir = *opt.out_dir;

        if (opt.subcommand == "run")
            return cli::cmd_run(cfg, out, err, opt.quiet);
        if (opt.subcommand == "check")
            return cli::cmd_check(cfg, out, err, opt.quiet);
        return cli::cmd_sweep(cfg, out, err, opt.quiet, opt.subcommand);
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return 2;
    }
}

inline int cli_main(int argc, char** argv, std::ostream& out,
                    std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args, out, err);
}

}  // namespace haptofv
