// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance                 all criteria
//   acceptance --criterion k   only criterion k (exit status 1 if it fails)
//   acceptance --verbose ...   also print every report

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "erw/report_io.hpp"
#include "erw/verify.hpp"

namespace {

using namespace erw;

constexpr std::uint64_t seed = 20240611;

verify::VerifyOptions base_options() {
    verify::VerifyOptions o;
    o.seed = seed;
    return o;
}

std::string summarize(const verify::CheckResult& c) {
    std::ostringstream os;
    os.precision(4);
    bool first = true;
    for (const auto& r : c.reports) {
        if (r.informational || r.pass) continue;
        os << (first ? "" : "; ") << r.name << ": " << r.value << " > " << r.threshold;
        first = false;
    }
    if (!c.within_budget()) os << (first ? "" : "; ") << "runtime " << c.seconds << "s over " << *c.time_budget << "s";
    return first && c.within_budget() ? "" : os.str();
}

// Criterion 10 end to end: the same verify run on 1 and 4 workers must write
// byte-identical report files.
verify::CheckResult determinism_files() {
    verify::CheckResult out = verify::check_determinism(base_options());
    const auto dir = std::filesystem::temp_directory_path() / ("erw_accept_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    std::string bytes[2];
    const unsigned workers[2] = {1, 4};
    for (int i = 0; i < 2; ++i) {
        auto opt = base_options();
        opt.workers = workers[i];
        std::vector<verify::CheckResult> results;
        for (auto* check : {verify::check_full, verify::check_last_only, verify::check_window}) {
            auto o = opt;
            o.replicates = 20000;
            results.push_back(check(o));
        }
        const auto path = dir / ("report_" + std::to_string(i) + ".json");
        std::ofstream(path, std::ios::binary) << io::to_json(results, opt, "determinism").dump(2) << '\n';
        std::ifstream in(path, std::ios::binary);
        bytes[i].assign(std::istreambuf_iterator<char>(in), {});
    }
    std::filesystem::remove_all(dir);
    out.reports.push_back(stat_tests::make_report("report files differ between 1 and 4 workers",
                                                  stat_tests::Statistic::exact_gap,
                                                  bytes[0] == bytes[1] && !bytes[0].empty() ? 0.0 : 1.0, 0.0));
    return out;
}

verify::CheckResult run_criterion(int k) {
    const auto opt = base_options();
    switch (k) {
    case 1: return verify::check_oracle(opt);
    case 2: return verify::check_martingale(opt);
    case 3: return verify::check_full(opt);
    case 4: return verify::check_first_only(opt);
    case 5: return verify::check_last_only(opt);
    case 6: return verify::check_first_and_last(opt);
    case 7: return verify::check_gamma(opt);
    case 8: return verify::check_window(opt);
    case 9: return verify::check_var_y(opt);
    case 10: return determinism_files();
    }
    throw std::invalid_argument("criterion must be 1..10");
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    bool verbose = false;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--criterion" && i + 1 < argc) {
            which.push_back(std::atoi(argv[++i]));
        } else if (a == "--verbose") {
            verbose = true;
        } else {
            std::cerr << "usage: acceptance [--criterion k]... [--verbose]\n";
            return 2;
        }
    }
    if (which.empty())
        for (int k = 1; k <= 10; ++k) which.push_back(k);

    bool all = true;
    for (int k : which) {
        try {
            const auto c = run_criterion(k);
            const auto why = summarize(c);
            std::printf("criterion %2d %s: %s (%.1fs)%s%s\n", k, c.pass() ? "PASS" : "FAIL", c.title.c_str(), c.seconds,
                        why.empty() ? "" : " | ", why.c_str());
            if (verbose) io::print_table(std::cout, {c});
            all = all && c.pass();
        } catch (const std::exception& e) {
            std::printf("criterion %2d FAIL: error: %s\n", k, e.what());
            all = false;
        }
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
