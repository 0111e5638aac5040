#pragma once

// Tidy CSV and versioned JSON for summaries, tables and test reports.

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "erw/analytics.hpp"
#include "erw/montecarlo.hpp"
#include "erw/oracle.hpp"
#include "erw/stat_tests.hpp"
#include "erw/verify.hpp"

namespace erw::io {

inline constexpr const char* schema_version = "erw/1";
inline constexpr const char* csv_header = "kernel,r,n,branch,statistic,value,stderr";

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// RFC 4180: quote when the field holds a comma, quote, CR or LF.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

struct CsvRow {
    std::string kernel;
    double r = 0.0;
    std::optional<std::int64_t> n;
    std::string branch;
    std::string statistic;
    std::string value;
    std::optional<double> std_error;
};

class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& os) : os_(os) { os_ << csv_header << "\r\n"; }

    void row(const CsvRow& r) {
        os_ << csv_field(r.kernel) << ',' << format_double(r.r) << ',' << (r.n ? std::to_string(*r.n) : "") << ','
            << csv_field(r.branch) << ',' << csv_field(r.statistic) << ',' << csv_field(r.value) << ','
            << (r.std_error ? format_double(*r.std_error) : "") << "\r\n";
    }

  private:
    std::ostream& os_;
};

//---------------------------------------------------------------------------//
// simulate

inline void write_csv(std::ostream& os, const montecarlo::EnsembleSummary& s) {
    CsvWriter w(os);
    const std::string k = s.kernel.name();
    const double r = s.params.r();
    w.row({k, r, s.horizon, "all", "replicates", std::to_string(s.completed_replicates), {}});
    w.row({k, r, s.horizon, "all", "partial", s.partial ? "1" : "0", {}});
    for (const auto& c : s.checkpoints) {
        const std::pair<const char*, const montecarlo::FunctionalStats*> branches[] = {
            {"all", &c.all}, {"first_zero", &c.first_zero}, {"first_nonzero", &c.first_nonzero}};
        for (const auto& [name, f] : branches) {
            if (f->count.count == 0) continue;
            auto mean_row = [&](const char* stat, const montecarlo::RunningStats& rs) {
                w.row({k, r, c.n, name, stat, format_double(rs.mean), rs.std_error()});
            };
            w.row({k, r, c.n, name, "samples", std::to_string(f->count.count), {}});
            mean_row("mean_count", f->count);
            w.row({k, r, c.n, name, "var_count", format_double(f->count.variance()), {}});
            mean_row("mean_fraction", f->fraction);
            mean_row("mean_scaled", f->scaled);
            w.row({k, r, c.n, name, "var_scaled", format_double(f->scaled.variance()), {}});
            mean_row("mean_centered", f->centered);
            w.row({k, r, c.n, name, "var_centered", format_double(f->centered.variance()), {}});
            w.row({k, r, c.n, name, "zero_share_centered",
                   format_double(static_cast<double>(f->centered_hist.exact_zero) /
                                 static_cast<double>(f->count.count)),
                   {}});
        }
    }
}

inline nlohmann::json to_json(const montecarlo::RunningStats& s) {
    return {{"count", s.count}, {"mean", s.mean}, {"variance", s.variance()}, {"stderr", s.std_error()},
            {"min", s.min}, {"max", s.max}};
}

inline nlohmann::json to_json(const montecarlo::FunctionalStats& f) {
    const auto& h = f.centered_hist;
    return {{"count", to_json(f.count)},
            {"fraction", to_json(f.fraction)},
            {"scaled", to_json(f.scaled)},
            {"centered", to_json(f.centered)},
            {"centered_histogram",
             {{"lo", montecarlo::Histogram::lo},
              {"width", montecarlo::Histogram::width},
              {"counts", h.counts},
              {"underflow", h.underflow},
              {"overflow", h.overflow},
              {"exact_zero", h.exact_zero}}}};
}

inline nlohmann::json to_json(const montecarlo::EnsembleSummary& s) {
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& c : s.checkpoints)
        cps.push_back({{"n", c.n},
                       {"all", to_json(c.all)},
                       {"first_zero", to_json(c.first_zero)},
                       {"first_nonzero", to_json(c.first_nonzero)}});
    return {{"schema", schema_version},
            {"kind", "ensemble"},
            {"kernel", s.kernel.name()},
            {"p", s.params.p()},
            {"q", s.params.q()},
            {"r", s.params.r()},
            {"n", s.horizon},
            {"seed", s.seed},
            {"requested_replicates", s.requested_replicates},
            {"completed_replicates", s.completed_replicates},
            {"partial", s.partial},
            {"checkpoints", cps}};
}

//---------------------------------------------------------------------------//
// exact

inline void write_csv(std::ostream& os, const analytics::MomentTable& t,
                      const std::optional<analytics::LimitConstants>& lc) {
    CsvWriter w(os);
    const std::string k = t.kernel.name();
    const std::string branch = t.conditioned_on_first_nonzero ? "first_nonzero" : "all";
    for (const auto& row : t.rows) {
        w.row({k, t.r, row.n, branch, "mean", format_double(row.mean), {}});
        w.row({k, t.r, row.n, branch, "second_moment", format_double(row.second), {}});
        w.row({k, t.r, row.n, branch, "variance", format_double(row.variance), {}});
        w.row({k, t.r, row.n, branch, "mixed_moment", format_double(row.mixed), {}});
    }
    if (!lc) return;
    const std::pair<const char*, double> consts[] = {
        {"c_r", lc->c_r},
        {"d_r", lc->d_r},
        {"mean_limit", lc->mean_limit},
        {"var_limit", lc->var_limit},
        {"var_y_rescaled", lc->var_y_rescaled},
        {"var_y_remark", lc->var_y_remark},
        {"sigma_star_sq", lc->sigma_star_sq},
        {"chain_variance_rate", lc->chain_variance_rate},
        {"first_only_fraction", lc->first_only_fraction},
        {"first_last_fraction", lc->first_last_fraction},
        {"first_last_branch_fraction", lc->first_last_branch_fraction},
        {"first_last_mean_offset", lc->first_last_mean_offset},
        {"geometric_mean", lc->geometric_mean},
    };
    for (const auto& [name, v] : consts) w.row({k, t.r, std::nullopt, "limit", name, format_double(v), {}});
}

inline nlohmann::json to_json(const analytics::LimitConstants& c) {
    return {{"r", c.r},
            {"c_r", c.c_r},
            {"c_r_tail", c.c_r_tail},
            {"d_r", c.d_r},
            {"mean_limit", c.mean_limit},
            {"var_limit", c.var_limit},
            {"var_y_rescaled", c.var_y_rescaled},
            {"var_y_remark", c.var_y_remark},
            {"sigma_star_sq", c.sigma_star_sq},
            {"chain_variance_rate", c.chain_variance_rate},
            {"first_only_fraction", c.first_only_fraction},
            {"first_only_zero_fraction", c.first_only_zero_fraction},
            {"first_only_branch_variance", c.first_only_branch_variance},
            {"first_last_fraction", c.first_last_fraction},
            {"first_last_zero_fraction", c.first_last_zero_fraction},
            {"first_last_branch_fraction", c.first_last_branch_fraction},
            {"first_last_mean_offset", c.first_last_mean_offset},
            {"geometric_mean", c.geometric_mean}};
}

inline nlohmann::json to_json(const analytics::MomentTable& t, const std::optional<analytics::LimitConstants>& lc) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : t.rows)
        rows.push_back({{"n", row.n},
                        {"mean", row.mean},
                        {"second_moment", row.second},
                        {"variance", row.variance},
                        {"mixed_moment", row.mixed}});
    nlohmann::json out = {{"schema", schema_version},
                          {"kind", "moment_table"},
                          {"kernel", t.kernel.name()},
                          {"r", t.r},
                          {"conditioned_on_first_nonzero", t.conditioned_on_first_nonzero},
                          {"rows", rows}};
    if (lc) out["limit_constants"] = to_json(*lc);
    return out;
}

//---------------------------------------------------------------------------//
// oracle

template <class T>
std::string value_string(const T& v) {
    if constexpr (std::is_floating_point_v<T>)
        return format_double(static_cast<double>(v));
    else
        return v.str();
}

template <class T>
void write_csv(std::ostream& os, const MemoryKernel& kernel, double r, std::int64_t n, const oracle::JointLaw<T>& law) {
    CsvWriter w(os);
    const std::pair<const char*, const Pmf<T>*> parts[] = {
        {"all", &law.count}, {"first_zero", &law.count_first_zero}, {"first_nonzero", &law.count_first_nonzero}};
    for (const auto& [branch, pmf] : parts)
        for (std::size_t i = 0; i < pmf->size(); ++i)
            w.row({kernel.name(), r, n, branch, "pmf[" + std::to_string(pmf->first + static_cast<std::int64_t>(i)) + "]",
                   value_string(pmf->probs[i]), {}});
}

template <class T>
nlohmann::json to_json(const MemoryKernel& kernel, double r, std::int64_t n, const oracle::JointLaw<T>& law) {
    auto pmf_json = [](const Pmf<T>& p) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& v : p.probs) {
            if constexpr (std::is_floating_point_v<T>)
                a.push_back(static_cast<double>(v));
            else
                a.push_back(v.str());
        }
        return nlohmann::json{{"first", p.first}, {"probs", a}};
    };
    return {{"schema", schema_version},
            {"kind", "pmf"},
            {"kernel", kernel.name()},
            {"r", r},
            {"n", n},
            {"exact_rational", !std::is_floating_point_v<T>},
            {"first_nonzero_probability", value_string(law.first_nonzero)},
            {"all", pmf_json(law.count)},
            {"first_zero", pmf_json(law.count_first_zero)},
            {"first_nonzero", pmf_json(law.count_first_nonzero)}};
}

//---------------------------------------------------------------------------//
// verify

inline nlohmann::json to_json(const stat_tests::TestReport& r) {
    return {{"name", r.name},
            {"statistic", stat_tests::to_string(r.statistic)},
            {"value", r.value},
            {"threshold", r.threshold},
            {"pass", r.pass},
            {"informational", r.informational},
            {"sample_size", r.sample_size},
            {"n", r.checkpoint},
            {"detail", r.detail}};
}

// Deterministic given the seed: wall-clock timings are left out.
inline nlohmann::json to_json(const std::vector<verify::CheckResult>& checks, const verify::VerifyOptions& opt,
                              const std::string& suite) {
    nlohmann::json arr = nlohmann::json::array();
    bool all = true;
    for (const auto& c : checks) {
        nlohmann::json reports = nlohmann::json::array();
        for (const auto& r : c.reports) reports.push_back(to_json(r));
        nlohmann::json entry = {{"id", c.id}, {"title", c.title}, {"pass", c.pass()}, {"reports", reports}};
        if (c.time_budget) entry["time_budget_seconds"] = *c.time_budget;
        arr.push_back(entry);
        all = all && c.pass();
    }
    nlohmann::json out = {{"schema", schema_version}, {"kind", "verify"}, {"suite", suite},
                          {"seed", opt.seed},         {"pass", all},      {"checks", arr}};
    if (opt.r) out["r"] = *opt.r;
    if (opt.replicates) out["replicates"] = *opt.replicates;
    return out;
}

inline void print_table(std::ostream& os, const std::vector<verify::CheckResult>& checks) {
    for (const auto& c : checks) {
        char head[160];
        std::snprintf(head, sizeof head, "[%s] %-3s %s (%.2fs%s)\n", c.pass() ? "PASS" : "FAIL", c.id.c_str(),
                      c.title.c_str(), c.seconds, c.within_budget() ? "" : ", over time budget");
        os << head;
        for (const auto& r : c.reports) {
            char line[512];
            std::snprintf(line, sizeof line, "    %-4s %-12s %12.6g <= %-10.4g %s%s%s\n",
                          r.informational ? "info" : (r.pass ? "ok" : "FAIL"), stat_tests::to_string(r.statistic),
                          r.value, r.threshold, r.name.c_str(), r.detail.empty() ? "" : "  | ", r.detail.c_str());
            os << line;
        }
    }
}

}  // namespace erw::io
