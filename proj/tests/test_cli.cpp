#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// end-to-end checks against the installed binary (path from AGGRATE_BIN)

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out;
};

std::string binary() {
    const char* bin = std::getenv("AGGRATE_BIN");
    REQUIRE(bin != nullptr);
    return bin;
}

RunResult run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    std::array<char, 4096> buf;
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path write_scenario(const std::string& name, const std::string& text) {
    const fs::path dir = fs::temp_directory_path() / "aggrate_cli_test";
    fs::create_directories(dir);
    const fs::path file = dir / name;
    std::ofstream(file) << text;
    return file;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("rate emits the schema header and exits cleanly") {
    const RunResult r = run("rate");
    CHECK(r.exit_code == 0);
    CHECK(r.out.rfind("# schema=1\nsnr1,snr2,rate_lifi,rate_wifi,rate_total,lower,upper\n", 0) ==
          0);
    // exactly one data row
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);
}

TEST_CASE("monte carlo reruns are byte-identical") {
    const RunResult a = run("rate --quadrature mc --seed 7");
    const RunResult b = run("rate --quadrature mc --seed 7");
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    const RunResult c = run("rate --quadrature mc --seed 8");
    CHECK(c.out != a.out);
}

TEST_CASE("scalar and vector kernels give close rate rows") {
    const RunResult a = run("rate --kernel scalar");
    const RunResult b = run("rate --kernel auto");
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    // parse the rate_total column from both
    auto total = [](const std::string& out) {
        const auto row = out.substr(out.rfind('\n', out.size() - 2) + 1);
        double v[7];
        REQUIRE(std::sscanf(row.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2],
                            &v[3], &v[4], &v[5], &v[6]) == 7);
        return v[4];
    };
    CHECK(total(a.out) == doctest::Approx(total(b.out)).epsilon(1e-12));
}

TEST_CASE("config errors exit 2, infeasible scenarios exit 3") {
    CHECK(run("rate --scenario /does/not/exist.json").exit_code == 2);
    const fs::path bad = write_scenario("bad.json", R"({"lifi": {"bandwidth_hz": -4}})");
    CHECK(run("rate --scenario " + bad.string()).exit_code == 2);
    const fs::path infeasible = write_scenario(
        "infeasible.json",
        R"({"lifi": {"constellation": {"order": 8, "peak": 2.0, "mean_cap": 0.5,
            "elec_cap": 2.0}}})");
    CHECK(run("rate --scenario " + infeasible.string()).exit_code == 3);
    CHECK(run("sweep --range nonsense").exit_code == 2);
    CHECK(run("sweep --axis bogus --range 1:2:2").exit_code == 2);
}

TEST_CASE("optimize writes solution and trace files") {
    const fs::path small = write_scenario("small.json", R"({
        "lifi": {"constellation": {"order": 4, "peak": 2.0, "mean_cap": 1.1, "elec_cap": 2.0}},
        "wifi": {"constellation": {"order": 4, "elec_cap": 1.0}},
        "quadrature": {"order": 16}
    })");
    const fs::path out = fs::temp_directory_path() / "aggrate_cli_test" / "opt";
    fs::remove_all(out);
    const RunResult r =
        run("optimize --objective lower --scenario " + small.string() + " --out " + out.string());
    CHECK(r.exit_code == 0);
    const std::string sol = slurp(out / "solution.json");
    CHECK(sol.find("\"objective_bps\"") != std::string::npos);
    CHECK(sol.find("\"budget_tight\": true") != std::string::npos);
    const std::string trace = slurp(out / "trace.csv");
    CHECK(trace.rfind("# schema=1\niter,objective\n", 0) == 0);
}

TEST_CASE("sweeps are ordered, deterministic and parallel-safe") {
    const fs::path small = write_scenario("sweep.json", R"({
        "lifi": {"constellation": {"order": 4, "peak": 2.0, "mean_cap": 1.1, "elec_cap": 2.0}},
        "wifi": {"constellation": {"order": 4, "elec_cap": 1.0}},
        "quadrature": {"order": 16}
    })");
    const std::string base =
        "sweep --objective lower --axis P_T --range 1:4:4 --scenario " + small.string();
    const RunResult a = run(base + " --jobs 1 --seed 5");
    const RunResult b = run(base + " --jobs 3 --seed 5");
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("# schema=1\naxis,value,method,", 0) == 0);
    // 4 points x 4 methods + schema + header
    CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 18);
    CHECK(a.out.find("optimized") != std::string::npos);
    CHECK(a.out.find("equiprobable") != std::string::npos);
    CHECK(a.out.find("lower_bound") != std::string::npos);
    CHECK(a.out.find("upper_bound") != std::string::npos);
}

TEST_CASE("one-point sweep composes rate and optimize") {
    const fs::path small = write_scenario("one.json", R"({
        "lifi": {"constellation": {"order": 2, "peak": 2.0, "mean_cap": 1.1, "elec_cap": 2.1}},
        "wifi": {"constellation": {"order": 4, "elec_cap": 1.0}},
        "quadrature": {"order": 16}
    })");
    const RunResult r = run("sweep --objective lower --axis P_T --range 4:4:1 --scenario " +
                            small.string());
    CHECK(r.exit_code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 6);
}

TEST_CASE("non-convergence within the iteration cap exits 4") {
    const fs::path capped = write_scenario("capped.json", R"({
        "lifi": {"constellation": {"order": 4, "peak": 2.0, "mean_cap": 1.1, "elec_cap": 2.0}},
        "wifi": {"constellation": {"order": 4, "elec_cap": 1.0}},
        "quadrature": {"order": 16},
        "solver": {"max_outer": 1}
    })");
    const fs::path out = fs::temp_directory_path() / "aggrate_cli_test" / "capped";
    const RunResult r =
        run("optimize --objective exact --scenario " + capped.string() + " --out " + out.string());
    CHECK(r.exit_code == 4);
    CHECK(slurp(out / "solution.json").find("\"converged\": false") != std::string::npos);
}

TEST_CASE("sweep rows keep the rate between its bounds") {
    const RunResult r = run("sweep --objective lower --axis P_T --range 1:4:3");
    CHECK(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string line;
    int checked = 0;
    while (std::getline(lines, line)) {
        if (line.rfind("P_T,", 0) != 0) continue;
        if (line.find("optimized") == std::string::npos &&
            line.find("equiprobable") == std::string::npos)
            continue;
        // axis,value,method,snr1,snr2,rate_lifi,rate_wifi,rate_total,lower,upper,...
        std::vector<double> cols;
        std::size_t pos = line.find(',', line.find(',', line.find(',') + 1) + 1) + 1;
        std::istringstream rest(line.substr(pos));
        std::string tok;
        while (std::getline(rest, tok, ',') && cols.size() < 7)
            cols.push_back(std::strtod(tok.c_str(), nullptr));
        REQUIRE(cols.size() == 7);
        CHECK(cols[5] <= cols[4] + 1e-9);
        CHECK(cols[4] <= cols[6] + 1e-9);
        ++checked;
    }
    CHECK(checked == 6);
}

TEST_CASE("degenerate scenario collapses to a zero-rate row") {
    const fs::path degen = write_scenario("degen.json", R"({
        "lifi": {"constellation": {"order": 1, "peak": 1.0, "mean_cap": 1.0, "elec_cap": 1.0}},
        "wifi": {"constellation": {"order": 1, "elec_cap": 1.0}}
    })");
    const RunResult r = run("rate --scenario " + degen.string());
    CHECK(r.exit_code == 0);
    const std::string row = r.out.substr(r.out.rfind('\n', r.out.size() - 2) + 1);
    double v[7];
    REQUIRE(std::sscanf(row.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3],
                        &v[4], &v[5], &v[6]) == 7);
    CHECK(v[2] == 0.0); // rate_lifi
    CHECK(v[3] == 0.0); // rate_wifi
    CHECK(v[4] == 0.0); // rate_total
    CHECK(v[6] == 0.0); // upper collapses to zero as well
}

TEST_CASE("selftest passes") {
    const RunResult r = run("selftest");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
}
