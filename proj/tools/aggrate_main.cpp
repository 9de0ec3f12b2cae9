// aggrate: achievable-rate and shaping optimizer for an aggregated
// optical/RF link pair. Subcommands: rate, optimize, sweep, selftest.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "aggrate/scenario.hpp"
#include "aggrate/simd/kernels.hpp"

using namespace aggrate;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitSolver = 4;

std::string fmt(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf, buf + len);
}

struct CommonOpts {
    std::string scenario_path;
    std::string out_dir;
    std::string quadrature;
    std::string kernel = "auto";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

Scenario load_scenario(const CommonOpts& o) {
    Scenario s = o.scenario_path.empty() ? Scenario::table1_default()
                                         : Scenario::load(o.scenario_path);
    if (o.seed_set) s.seed = o.seed;
    if (!o.quadrature.empty()) s.quad.method = parse_quad_method(o.quadrature);
    s.quad.seed = s.seed;
    s.validate();
    return s;
}

void apply_kernel(const std::string& name) {
    if (!simd::select(name))
        throw ConfigError("kernel '" + name + "' is not available on this host");
}

json report_json(const Scenario& s, const RateReport& rep, const PowerAllocation& alloc) {
    json j;
    j["snr1"] = rep.snr1;
    j["snr2"] = rep.snr2;
    j["rate_lifi_bps"] = rep.rate_lifi;
    j["rate_wifi_bps"] = rep.rate_wifi;
    j["rate_total_bps"] = rep.rate_total;
    j["lower_bps"] = rep.lower_total;
    j["upper_bps"] = rep.upper_total;
    j["mc_std_lifi_bps"] = rep.mc_std_lifi;
    j["mc_std_wifi_bps"] = rep.mc_std_wifi;
    j["q1_sq"] = alloc.q1_sq;
    j["q2_sq"] = alloc.q2_sq;
    j["quadrature"] = to_string(s.quad.method);
    j["kernel"] = simd::active().name;
    if (!rep.quad_warning.empty()) j["warning"] = rep.quad_warning;
    return j;
}

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (fs::path(dir) / name).string());
    out << text;
}

int cmd_rate(const CommonOpts& o) {
    const Scenario s = load_scenario(o);
    const LinkPhysics p1 = s.lifi_physics();
    const LinkPhysics p2 = s.wifi_physics();
    const PowerAllocation alloc = s.fixed_allocation();
    const GaussianExpectation quad(s.quad);
    const RateReport rep =
        rate_aggregate(s.c1, s.c2, alloc.q1_sq, alloc.q2_sq, p1, p2, quad);
    std::string csv = "# schema=1\n" + RateReport::csv_header() + "\n" + rep.csv_row() + "\n";
    std::cout << csv;
    if (!o.out_dir.empty()) {
        write_file(o.out_dir, "rate.csv", csv);
        write_file(o.out_dir, "report.json", report_json(s, rep, alloc).dump(2) + "\n");
    }
    return kExitOk;
}

json solution_json(const Scenario& s, const Solution& sol, const std::string& objective) {
    json j;
    j["objective"] = objective;
    j["objective_bps"] = sol.objective;
    j["converged"] = sol.converged;
    j["q1_sq"] = sol.alloc.q1_sq;
    j["q2_sq"] = sol.alloc.q2_sq;
    j["gamma"] = sol.alloc.gamma;
    j["nu"] = sol.alloc.nu;
    json p1 = json::array();
    for (std::size_t i = 0; i < sol.c1.size(); ++i)
        p1.push_back({sol.c1.points[i], sol.c1.probs[i]});
    json p2 = json::array();
    for (std::size_t i = 0; i < sol.c2.size(); ++i)
        p2.push_back({{sol.c2.points[i].real(), sol.c2.points[i].imag()}, sol.c2.probs[i]});
    j["lifi_constellation"] = p1;
    j["wifi_constellation"] = p2;
    j["outer_trace_bps"] = sol.outer_trace;
    // invariant echoes
    const double tau2 = s.budget.tau(sol.c1) * s.budget.tau(sol.c1);
    j["checks"]["budget_slack_w"] = sol.budget_slack;
    j["checks"]["budget_tight"] = std::abs(sol.budget_slack) <= 1e-6 * std::max(1.0, s.budget.total_elec);
    j["checks"]["q1_within_amplitude_cap"] = sol.alloc.q1_sq <= tau2 * (1.0 + 1e-9) + 1e-12;
    j["kernel"] = simd::active().name;
    return j;
}

Solution run_pipeline(const Scenario& s, const std::string& objective) {
    const LinkPhysics p1 = s.lifi_physics();
    const LinkPhysics p2 = s.wifi_physics();
    if (objective == "exact")
        return optimize_exact(s.c1, s.c2, p1, p2, s.budget, s.quad, s.solver);
    if (objective == "lower")
        return optimize_lower_bound(s.c1, s.c2, p1, p2, s.budget, s.solver);
    throw ConfigError("objective must be exact or lower");
}

int cmd_optimize(const CommonOpts& o, const std::string& objective) {
    const Scenario s = load_scenario(o);
    const Solution sol = run_pipeline(s, objective);
    const std::string dir = o.out_dir.empty() ? "." : o.out_dir;
    write_file(dir, "solution.json", solution_json(s, sol, objective).dump(2) + "\n");
    write_file(dir, "trace.csv", sol.trace_csv());
    write_file(dir, "summary.csv",
               "# schema=1\n" + Solution::summary_csv_header() + "\n" + sol.summary_csv_row() +
                   "\n");
    std::cout << "objective_bps=" << fmt(sol.objective)
              << " converged=" << (sol.converged ? "true" : "false")
              << " q1_sq=" << fmt(sol.alloc.q1_sq) << " q2_sq=" << fmt(sol.alloc.q2_sq) << "\n";
    return sol.converged ? kExitOk : kExitSolver;
}

struct SweepRow {
    std::string method;
    double value = 0.0;
    RateReport rep;
    double q1_sq = 0.0, q2_sq = 0.0;
    bool converged = true;
};

Scenario scenario_at(const Scenario& base, const std::string& axis, double v) {
    Scenario s = base;
    if (axis == "P_T") {
        s.budget.total_elec = v;
    } else if (axis == "P_ins") {
        // coupled sweep: average-optical cap trails the instant cap and the
        // constellation mean cap sits at half the peak
        s.budget.max_inst_optical = v;
        s.budget.max_avg_optical = 0.8 * v;
        s.c1.mean_cap = 0.5 * s.c1.peak;
    } else if (axis == "B1") {
        s.b1_hz = v;
    } else if (axis == "snr") {
        // handled per-method below
    } else {
        throw ConfigError("axis must be one of P_T|P_ins|B1|snr");
    }
    return s;
}

std::vector<SweepRow> sweep_point(const Scenario& base, const std::string& axis, double v,
                                  const std::string& objective) {
    Scenario s = scenario_at(base, axis, v);
    // the baseline rows are equiprobable regardless of the configured start
    if (s.c1.size() > 1) {
        std::vector<double> uni(s.c1.size(), 1.0 / s.c1.size());
        s.c1.probs = project_feasible(uni, FeasibleSet::optical(s.c1));
    }
    if (s.c2.size() > 1) {
        std::vector<double> uni(s.c2.size(), 1.0 / s.c2.size());
        s.c2.probs = project_feasible(uni, FeasibleSet::rf(s.c2));
    }
    const LinkPhysics p1 = s.lifi_physics();
    const LinkPhysics p2 = s.wifi_physics();
    const GaussianExpectation quad(s.quad);
    std::vector<SweepRow> rows;

    OpticalConstellation opt_c1 = s.c1;
    RFConstellation opt_c2 = s.c2;
    PowerAllocation opt_alloc, eq_alloc;
    bool converged = true;

    if (axis == "snr") {
        // per-link shaping study at a fixed operating SNR; no joint budget
        opt_alloc.q1_sq = qsq_for_snr_lifi(v, s.c1, p1);
        opt_alloc.q2_sq = qsq_for_snr_wifi(v, s.c2, p2);
        eq_alloc = opt_alloc;
        if (objective == "exact") {
            auto r1 = pgd_optimize_lifi(opt_c1, opt_alloc.q1_sq, p1, s.quad, s.solver.pgd);
            auto r2 = pgd_optimize_wifi(opt_c2, opt_alloc.q2_sq, p2, s.quad, s.solver.pgd);
            opt_c1.probs = r1.probs;
            opt_c2.probs = r2.probs;
            converged = r1.converged && r2.converged;
        } else {
            auto r1 = fw_optimize_lifi(opt_c1, opt_alloc.q1_sq, p1, s.solver.fw);
            auto r2 = fw_optimize_wifi(opt_c2, opt_alloc.q2_sq, p2, s.solver.fw);
            opt_c1.probs = r1.probs;
            opt_c2.probs = r2.probs;
            converged = r1.converged && r2.converged;
        }
    } else {
        const Solution sol = run_pipeline(s, objective);
        opt_c1 = sol.c1;
        opt_c2 = sol.c2;
        opt_alloc = sol.alloc;
        converged = sol.converged;
        eq_alloc = (objective == "exact")
                       ? allocate_power_exact(s.c1, s.c2, p1, p2, s.budget, s.solver.wf_tol)
                       : allocate_power_lb(s.c1, s.c2, p1, p2, s.budget, s.solver.root_tol);
    }

    const RateReport opt_rep =
        rate_aggregate(opt_c1, opt_c2, opt_alloc.q1_sq, opt_alloc.q2_sq, p1, p2, quad);
    const RateReport eq_rep =
        rate_aggregate(s.c1, s.c2, eq_alloc.q1_sq, eq_alloc.q2_sq, p1, p2, quad);

    rows.push_back({"optimized", v, opt_rep, opt_alloc.q1_sq, opt_alloc.q2_sq, converged});
    rows.push_back({"equiprobable", v, eq_rep, eq_alloc.q1_sq, eq_alloc.q2_sq, true});

    // bound curves at the optimized solution
    const RateBounds bl = bounds_lifi(opt_c1, opt_alloc.q1_sq, p1);
    const RateBounds bw = bounds_wifi(opt_c2, opt_alloc.q2_sq, p2);
    RateReport lo = opt_rep;
    lo.rate_lifi = bl.lower;
    lo.rate_wifi = bw.lower;
    lo.rate_total = bl.lower + bw.lower;
    RateReport up = opt_rep;
    up.rate_lifi = bl.upper;
    up.rate_wifi = bw.upper;
    up.rate_total = bl.upper + bw.upper;
    rows.push_back({"lower_bound", v, lo, opt_alloc.q1_sq, opt_alloc.q2_sq, converged});
    rows.push_back({"upper_bound", v, up, opt_alloc.q1_sq, opt_alloc.q2_sq, converged});
    return rows;
}

int cmd_sweep(const CommonOpts& o, const std::string& objective, const std::string& axis,
              const std::string& range, int jobs) {
    const Scenario base = load_scenario(o);
    double a = 0.0, b = 0.0;
    int n = 0;
    {
        if (std::sscanf(range.c_str(), "%lf:%lf:%d", &a, &b, &n) != 3)
            throw ConfigError("range must be a:b:n");
        if (!(a > 0) || !(b >= a) || n < 1)
            throw ConfigError("range must be monotone and positive");
    }
    std::vector<double> values(n);
    for (int i = 0; i < n; ++i)
        values[i] = (n == 1) ? a : a + (b - a) * i / (n - 1);

    std::vector<std::vector<SweepRow>> results(n);
    std::atomic<int> next{0};
    const int workers = std::max(1, std::min(jobs, n));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                    results[i] = sweep_point(base, axis, values[i], objective);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::string csv = "# schema=1\naxis,value,method,";
    csv += RateReport::csv_header();
    csv += ",q1_sq,q2_sq,converged\n";
    for (const auto& rows : results)
        for (const SweepRow& r : rows) {
            csv += axis + "," + fmt(r.value) + "," + r.method + "," + r.rep.csv_row() + "," +
                   fmt(r.q1_sq) + "," + fmt(r.q2_sq) + "," + (r.converged ? "1" : "0") + "\n";
        }
    std::cout << csv;
    if (!o.out_dir.empty()) write_file(o.out_dir, "sweep.csv", csv);
    return kExitOk;
}

bool check(const char* name, bool ok) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
    return ok;
}

int cmd_selftest() {
    bool all = true;
    {
        // kernel equivalence: active vs scalar reference
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-30.0, 3.0);
        const auto& act = simd::active();
        const auto& ref = simd::scalar_kernels();
        std::vector<double> x(257), ya(257), yr(257);
        for (auto& v : x) v = u(rng);
        act.vexp(x.data(), ya.data(), x.size());
        ref.vexp(x.data(), yr.data(), x.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            worst = std::max(worst, std::abs(ya[i] - yr[i]) / yr[i]);
        all &= check("kernel exp equivalence", worst < 1e-13);
    }
    {
        GaussianExpectation gh(QuadratureSpec{QuadMethod::gauss_hermite, 48, 8.0, 0});
        double m0 = 0, m2 = 0, m4 = 0;
        for (std::size_t i = 0; i < gh.nodes().size(); ++i) {
            const double s = gh.nodes()[i], w = gh.weights()[i];
            m0 += w;
            m2 += w * s * s;
            m4 += w * s * s * s * s;
        }
        all &= check("gauss-hermite moments", std::abs(m0 - 1) < 1e-12 &&
                                                  std::abs(m2 - 1) < 1e-10 &&
                                                  std::abs(m4 - 3) < 1e-9);
    }
    {
        // unit-parameter water-filling has the closed-form split (1, 3)
        OpticalConstellation c1;
        c1.points = {0.0, std::sqrt(2.0)};
        c1.probs = {0.5, 0.5};
        c1.peak = std::sqrt(2.0);
        c1.mean_cap = 1.0;
        c1.elec_cap = 1.0;
        RFConstellation c2;
        c2.points = {cplx(1.0, 0.0), cplx(-1.0, 0.0)};
        c2.probs = {0.5, 0.5};
        c2.elec_cap = 1.0;
        LinkPhysics p1, p2;
        PowerBudget budget{4.0, 1e9, 1e9};
        const PowerAllocation a = wf_allocate(c1, c2, p1, p2, budget, 1e-12);
        all &= check("water-filling analytic case",
                     std::abs(a.q1_sq - 1.0) < 1e-6 && std::abs(a.q2_sq - 3.0) < 1e-6);
    }
    {
        const double t = 2.0, x = 3.0;
        all &= check("lmmse round trip", std::abs(lmmse(t, lmmse_inv(t, lmmse(t, x))) -
                                                  lmmse(t, x)) < 1e-12);
    }
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-0.5, 1.5);
        bool ok = true;
        for (int rep = 0; rep < 20; ++rep) {
            OpticalConstellation c = make_pam(6, 2.0, 1.4, 3.0);
            const FeasibleSet set = FeasibleSet::optical(c);
            std::vector<double> p(6);
            for (auto& v : p) v = u(rng);
            const auto q1 = project_feasible(p, set);
            const auto q2 = project_feasible(q1, set);
            double d = 0;
            for (std::size_t i = 0; i < q1.size(); ++i) d += std::abs(q1[i] - q2[i]);
            ok &= set.contains(q1, 1e-8) && d < 1e-8;
        }
        all &= check("projection idempotence", ok);
    }
    {
        // bound sandwich on random scenarios
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.1, 3.0);
        GaussianExpectation gh(QuadratureSpec{});
        bool ok = true;
        for (int rep = 0; rep < 20; ++rep) {
            OpticalConstellation c1 = make_pam(4, 2.0, 1.0, 2.0);
            RFConstellation c2 = make_qam(4, 1.0);
            LinkPhysics p1, p2;
            const double q1 = u(rng), q2 = u(rng);
            const double r1 = rate_lifi(c1, q1, p1, gh);
            const double r2 = rate_wifi(c2, q2, p2, gh);
            const RateBounds b1 = bounds_lifi(c1, q1, p1);
            const RateBounds b2 = bounds_wifi(c2, q2, p2);
            ok &= b1.lower <= r1 + 1e-9 && r1 <= b1.upper + 1e-9;
            ok &= b2.lower <= r2 + 1e-9 && r2 <= b2.upper + 1e-9;
        }
        all &= check("bound sandwich", ok);
    }
    {
        WiFiGeometry g;
        const FadingSample s1 = sample_fading(42, g);
        const FadingSample s2 = sample_fading(42, g);
        all &= check("fading determinism",
                     s1.scatter == s2.scatter && s1.shadow_db == s2.shadow_db);
    }
    return all ? kExitOk : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"achievable rates and input shaping for an aggregated optical/RF link pair"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string objective = "exact";
    std::string axis = "P_T";
    std::string range = "1:4:4";
    int jobs = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", common.scenario_path, "scenario JSON file");
        cmd->add_option("--out", common.out_dir, "output directory");
        cmd->add_option("--quadrature", common.quadrature, "gh|grid|mc");
        cmd->add_option("--kernel", common.kernel, "auto|scalar|avx2");
        cmd->add_option("--seed", common.seed, "override the scenario seed")
            ->each([&](const std::string&) { common.seed_set = true; });
    };

    CLI::App* rate = app.add_subcommand("rate", "rates and bounds at a fixed allocation");
    add_common(rate);
    CLI::App* optimize = app.add_subcommand("optimize", "joint power and probability optimization");
    add_common(optimize);
    optimize->add_option("--objective", objective, "exact|lower");
    CLI::App* sweep = app.add_subcommand("sweep", "figure-style long-form CSV over an axis");
    add_common(sweep);
    sweep->add_option("--objective", objective, "exact|lower");
    sweep->add_option("--axis", axis, "P_T|P_ins|B1|snr");
    sweep->add_option("--range", range, "a:b:n inclusive");
    sweep->add_option("--jobs", jobs, "concurrent grid points");
    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");
    selftest->add_option("--kernel", common.kernel, "auto|scalar|avx2");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        apply_kernel(common.kernel);
        if (rate->parsed()) return cmd_rate(common);
        if (optimize->parsed()) return cmd_optimize(common, objective);
        if (sweep->parsed()) return cmd_sweep(common, objective, axis, range, jobs);
        if (selftest->parsed()) return cmd_selftest();
    } catch (const InfeasibleError& e) {
        std::cerr << "error (infeasible): " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const SolverError& e) {
        std::cerr << "error (solver): " << e.what() << "\n";
        return kExitSolver;
    } catch (const ConfigError& e) {
        std::cerr << "error (config): " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "error (config): " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
