#pragma once

// Command-line front end: configuration parsing and subcommand execution.
// Needs CLI11.hpp on the include path.

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "erw/analytics.hpp"
#include "erw/error.hpp"
#include "erw/model.hpp"
#include "erw/montecarlo.hpp"
#include "erw/oracle.hpp"
#include "erw/report_io.hpp"
#include "erw/verify.hpp"

namespace erw::cli {

enum ExitCode : int {
    ok = 0,
    verify_failed = 1,
    usage = 2,
    unknown_kernel = 3,
    invalid_probabilities = 4,
    missing_seed = 5,
    io_error = 6,
    config_error = 7,
};

struct CliError : std::runtime_error {
    CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
    int code;
};

enum class Subcommand { simulate, exact, oracle, verify };
enum class Format { csv, json };

struct RunConfig {
    Subcommand subcommand = Subcommand::simulate;
    MemoryKernel kernel = MemoryKernel::full();
    ProbTriple params = ProbTriple::symmetric(0.5);
    bool r_given = false;
    std::int64_t n = 0;
    std::int64_t replicates = 10000;
    std::optional<std::uint64_t> seed;
    std::vector<std::int64_t> checkpoints;
    std::string output;  // empty: standard output
    Format format = Format::csv;
    std::string suite = "all";
    unsigned workers = 0;
    std::int64_t max_steps = 0;
    bool rational = false;
    bool replicates_given = false;
};

namespace detail {

// Raw values before validation; file first, then flags on top.
struct RawConfig {
    std::optional<std::string> kernel;
    std::optional<double> p, q, r;
    std::optional<std::int64_t> n, reps, max_steps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> checkpoints, output, format, suite;
    std::optional<unsigned> workers;
    std::optional<bool> rational;

    void overlay(const RawConfig& o) {
        auto take = [](auto& dst, const auto& src) {
            if (src) dst = src;
        };
        take(kernel, o.kernel);
        take(p, o.p);
        take(q, o.q);
        take(r, o.r);
        take(n, o.n);
        take(reps, o.reps);
        take(max_steps, o.max_steps);
        take(seed, o.seed);
        take(checkpoints, o.checkpoints);
        take(output, o.output);
        take(format, o.format);
        take(suite, o.suite);
        take(workers, o.workers);
        take(rational, o.rational);
    }
};

inline RawConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError(io_error, "cannot open config file '" + path + "': " + std::strerror(errno));
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CliError(config_error, "config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw CliError(config_error, "config file must hold a flat JSON object");
    RawConfig c;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "kernel") c.kernel = v.get<std::string>();
            else if (key == "p") c.p = v.get<double>();
            else if (key == "q") c.q = v.get<double>();
            else if (key == "r") c.r = v.get<double>();
            else if (key == "n") c.n = v.get<std::int64_t>();
            else if (key == "reps" || key == "replicates") c.reps = v.get<std::int64_t>();
            else if (key == "max_steps") c.max_steps = v.get<std::int64_t>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "checkpoints") {
                if (v.is_array()) {
                    std::string s;
                    for (const auto& x : v) s += (s.empty() ? "" : ",") + std::to_string(x.get<std::int64_t>());
                    c.checkpoints = s;
                } else {
                    c.checkpoints = v.get<std::string>();
                }
            } else if (key == "output") c.output = v.get<std::string>();
            else if (key == "format") c.format = v.get<std::string>();
            else if (key == "suite" || key == "theorem") c.suite = v.get<std::string>();
            else if (key == "workers") c.workers = v.get<unsigned>();
            else if (key == "rational") c.rational = v.get<bool>();
            else throw CliError(config_error, "unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw CliError(config_error, std::string("config value has the wrong type: ") + e.what());
    }
    return c;
}

inline std::vector<std::int64_t> parse_checkpoints(const std::string& s) {
    std::vector<std::int64_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v < 1) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw CliError(usage, "bad checkpoint '" + item + "'");
        }
    }
    return out;
}

inline ProbTriple resolve_params(const RawConfig& c) {
    if (!c.r) throw CliError(usage, "--r is required");
    const double r = *c.r;
    try {
        if (c.p && c.q) return ProbTriple(*c.p, *c.q, r);
        if (c.p) return ProbTriple(*c.p, 1.0 - *c.p - r, r);
        if (c.q) return ProbTriple(1.0 - *c.q - r, *c.q, r);
        return ProbTriple::symmetric(r);
    } catch (const InvalidProbabilities& e) {
        throw CliError(invalid_probabilities, e.what());
    }
}

}  // namespace detail

/*!
 * Parses `erw <subcommand> [flags]`. Values from --config (flat JSON whose
 * keys mirror the flags) are applied first and flags override them. Throws
 * CliError carrying the exit code; --help prints and throws with code 0.
 */
inline RunConfig parse_config(std::vector<std::string> args) {
    CLI::App app{"Random walks with delays and memory kernels", "erw"};
    app.require_subcommand(1);
    detail::RawConfig flags;
    std::string config_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat JSON file with default values");
        sub->add_option("--r", flags.r, "probability of a delay");
        sub->add_option("--out,-o", flags.output, "output file (default: standard output)");
        sub->add_option("--format", flags.format, "csv | json");
        sub->add_option("--workers", flags.workers, "worker threads (default: ERW_THREADS or all cores)");
    };
    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--kernel,-k", flags.kernel, "full | first | last | first-last | window:<m>");
        sub->add_option("--p", flags.p, "probability of repeating the remembered step");
        sub->add_option("--q", flags.q, "probability of reversing the remembered step");
        sub->add_option("--n", flags.n, "number of steps");
    };

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble summary");
    add_common(simulate);
    add_model(simulate);
    simulate->add_option("--reps", flags.reps, "replicates");
    simulate->add_option("--seed", flags.seed, "master seed (default 0)");
    simulate->add_option("--checkpoints", flags.checkpoints, "comma-separated n values (default: powers of two)");
    simulate->add_option("--max-steps", flags.max_steps, "total step budget; truncates and flags partial output");

    auto* exact = app.add_subcommand("exact", "moment table and limit constants");
    add_common(exact);
    add_model(exact);

    auto* orc = app.add_subcommand("oracle", "exact law of the nonzero-step count");
    add_common(orc);
    add_model(orc);
    bool rational_flag = false;
    orc->add_flag("--rational", rational_flag, "exact rational arithmetic");

    auto* ver = app.add_subcommand("verify", "run verification suites");
    add_common(ver);
    ver->add_option("--theorem,--suite", flags.suite, "suite name or alias (default: all)");
    ver->add_option("--seed", flags.seed, "master seed (required)");
    ver->add_option("--reps", flags.reps, "override ensemble sizes");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw CliError(ok, app.help());
    } catch (const CLI::ParseError& e) {
        throw CliError(usage, e.what());
    }
    if (rational_flag) flags.rational = true;

    detail::RawConfig c;
    if (!config_path.empty()) c = detail::read_config_file(config_path);
    c.overlay(flags);

    RunConfig cfg;
    if (app.got_subcommand(simulate)) cfg.subcommand = Subcommand::simulate;
    else if (app.got_subcommand(exact)) cfg.subcommand = Subcommand::exact;
    else if (app.got_subcommand(orc)) cfg.subcommand = Subcommand::oracle;
    else cfg.subcommand = Subcommand::verify;

    if (c.format) {
        if (*c.format == "csv") cfg.format = Format::csv;
        else if (*c.format == "json") cfg.format = Format::json;
        else throw CliError(usage, "format must be csv or json");
    }
    if (c.output) cfg.output = *c.output;
    if (c.workers) cfg.workers = *c.workers;

    if (cfg.subcommand == Subcommand::verify) {
        if (!c.seed) throw CliError(missing_seed, "verify needs an explicit --seed");
        cfg.seed = c.seed;
        cfg.suite = c.suite.value_or("all");
        try {
            (void)verify::find_suite(cfg.suite);
        } catch (const std::invalid_argument& e) {
            throw CliError(usage, e.what());
        }
        if (c.r) {
            cfg.params = detail::resolve_params(c);
            cfg.r_given = true;
        }
        if (c.reps) {
            cfg.replicates = *c.reps;
            cfg.replicates_given = true;
        }
        return cfg;
    }

    try {
        cfg.kernel = MemoryKernel::parse(c.kernel.value_or("full"));
    } catch (const std::invalid_argument& e) {
        throw CliError(unknown_kernel, e.what());
    }
    cfg.params = detail::resolve_params(c);
    cfg.r_given = true;
    if (!c.n) throw CliError(usage, "--n is required");
    if (*c.n < 1) throw CliError(usage, "--n must be at least 1");
    cfg.n = *c.n;
    if (c.reps) {
        if (*c.reps < 1) throw CliError(usage, "--reps must be at least 1");
        cfg.replicates = *c.reps;
        cfg.replicates_given = true;
    }
    cfg.seed = c.seed.value_or(0);
    if (c.checkpoints) cfg.checkpoints = detail::parse_checkpoints(*c.checkpoints);
    if (c.max_steps) cfg.max_steps = *c.max_steps;
    cfg.rational = c.rational.value_or(false);
    return cfg;
}

namespace detail {

template <class Emit>
void emit(const RunConfig& cfg, std::ostream& stdout_, Emit&& body) {
    if (cfg.output.empty()) {
        body(stdout_);
        return;
    }
    std::ofstream out(cfg.output, std::ios::binary);
    if (!out) throw CliError(io_error, "cannot open '" + cfg.output + "': " + std::strerror(errno));
    body(out);
    out.flush();
    if (!out) throw CliError(io_error, "write to '" + cfg.output + "' failed: " + std::strerror(errno));
}

inline analytics::MomentTable oracle_table(const MemoryKernel& kernel, std::int64_t n, double r) {
    analytics::MomentTable t{kernel, r, false, {}};
    for (std::int64_t k = 1; k <= n; ++k) {
        const auto pmf = oracle::exact_distribution(kernel, k, r);
        analytics::MomentRow row{k, pmf.mean(), pmf.moment(2), 0.0, 0.0};
        row.variance = row.second - row.mean * row.mean;
        t.rows.push_back(row);
    }
    return t;
}

}  // namespace detail

// Executes a parsed configuration. Returns the process exit code.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    const double r = cfg.params.r();
    switch (cfg.subcommand) {
    case Subcommand::simulate: {
        montecarlo::EnsembleSpec spec;
        spec.kernel = cfg.kernel;
        spec.params = cfg.params;
        spec.horizon = cfg.n;
        spec.replicates = cfg.replicates;
        spec.seed = *cfg.seed;
        spec.checkpoints = cfg.checkpoints;
        spec.workers = cfg.workers;
        spec.max_total_steps = cfg.max_steps;
        const auto summary = montecarlo::run_ensemble(spec);
        if (summary.partial)
            err << "warning: step budget reached; " << summary.completed_replicates << " of "
                << summary.requested_replicates << " replicates completed\n";
        detail::emit(cfg, out, [&](std::ostream& os) {
            if (cfg.format == Format::csv) io::write_csv(os, summary);
            else os << io::to_json(summary).dump(2) << '\n';
        });
        return ok;
    }
    case Subcommand::exact: {
        const bool window = cfg.kernel.kind() == KernelKind::last_window;
        const auto table = window ? detail::oracle_table(cfg.kernel, cfg.n, r) : analytics::moment_table(cfg.kernel, cfg.n, r);
        const auto lc = analytics::limit_constants(r);
        detail::emit(cfg, out, [&](std::ostream& os) {
            if (cfg.format == Format::csv) io::write_csv(os, table, lc);
            else os << io::to_json(table, lc).dump(2) << '\n';
        });
        return ok;
    }
    case Subcommand::oracle: {
        auto body = [&](const auto& law) {
            detail::emit(cfg, out, [&](std::ostream& os) {
                if (cfg.format == Format::csv) io::write_csv(os, cfg.kernel, r, cfg.n, law);
                else os << io::to_json(cfg.kernel, r, cfg.n, law).dump(2) << '\n';
            });
        };
        if (cfg.rational) body(oracle::exact_joint(cfg.kernel, cfg.n, Rational(r)));
        else body(oracle::exact_joint(cfg.kernel, cfg.n, r));
        return ok;
    }
    case Subcommand::verify: {
        verify::VerifyOptions opt;
        opt.seed = *cfg.seed;
        if (cfg.r_given) opt.r = r;
        if (cfg.replicates_given) opt.replicates = cfg.replicates;
        opt.workers = cfg.workers;
        const auto results = verify::run_suite(verify::find_suite(cfg.suite), opt);
        io::print_table(out, results);
        if (!cfg.output.empty()) {
            detail::emit(cfg, out,
                         [&](std::ostream& os) { os << io::to_json(results, opt, cfg.suite).dump(2) << '\n'; });
        }
        bool all = true;
        for (const auto& c : results) all = all && c.pass();
        out << (all ? "verify: all checks passed\n" : "verify: some checks FAILED\n");
        return all ? ok : verify_failed;
    }
    }
    return usage;
}

// argv-style entry point used by the erw binary.
inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const RunConfig cfg = parse_config(args);
        return run(cfg, out, err);
    } catch (const CliError& e) {
        if (e.code == ok)
            out << e.what();
        else
            err << "error: " << e.what() << '\n';
        return e.code;
    } catch (const InvalidProbabilities& e) {
        err << "error: " << e.what() << '\n';
        return invalid_probabilities;
    } catch (const BudgetError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    }
}

}  // namespace erw::cli
