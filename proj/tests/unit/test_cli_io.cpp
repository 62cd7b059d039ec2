#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "vcm/config.hpp"
#include "vcm/error.hpp"
#include "vcm/io.hpp"
#include "vcm/simulate.hpp"

using namespace vcm;
namespace fs = std::filesystem;
using Catch::Approx;

namespace {

struct RunResult {
    int status = -1;
    std::string out;
};

// Runs the CLI with stderr discarded.
RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(VCM_BINARY) + " " + args + " 2>/dev/null";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("vcm_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

DefaultSeries parse(const std::string& text) {
    std::istringstream in(text);
    return read_series_csv(in);
}

void expect_parse_error(const std::string& text, int row, int column) {
    try {
        parse(text);
        FAIL("no ParseError for:\n" << text);
    } catch (const ParseError& e) {
        INFO(e.what());
        CHECK(e.row() == row);
        CHECK(e.column() == column);
        CHECK(std::string(e.what()).find("row " + std::to_string(row)) != std::string::npos);
    }
}

const std::string kFast = " --warmup 300 --draws 300 --chains 2 --seed 3";

}  // namespace

TEST_CASE("series CSV: counts and rates") {
    const auto s = parse("period,n_credits,n_defaults\n1,100,3\n2,200,0\n\n5,50,50\n");
    REQUIRE(s.size() == 3);
    CHECK(s.periods[0] == Period{100, 3});
    CHECK(s.periods[2] == Period{50, 50});
    const auto r = parse("Period, N_Credits, Default_Rate\n1,1000,0.0125\n2,333,0.5\n3,10,0.04\n");
    CHECK(r.periods[0].n_defaults == 13);  // 12.5 rounds away from zero
    CHECK(r.periods[1].n_defaults == 167);
    CHECK(r.periods[2].n_defaults == 0);
}

TEST_CASE("series CSV: errors name the row and column") {
    expect_parse_error("", 1, 1);
    expect_parse_error("period,n,d\n1,2,3\n", 1, 1);
    expect_parse_error("period,n_credits,n_defaults\n1,100,3\n2,abc,1\n", 3, 2);
    expect_parse_error("period,n_credits,n_defaults\n1,100,3\n2,100\n", 3, 3);
    expect_parse_error("period,n_credits,n_defaults\n1,100,101\n", 2, 3);
    expect_parse_error("period,n_credits,n_defaults\n1,100,-1\n", 2, 3);
    expect_parse_error("period,n_credits,n_defaults\n1,0,0\n", 2, 2);
    expect_parse_error("period,n_credits,n_defaults\n2,10,0\n1,10,0\n", 3, 1);
    expect_parse_error("period,n_credits,default_rate\n1,10,nan\n", 2, 3);
    expect_parse_error("period,n_credits,default_rate\n1,10,1.5\n", 2, 3);
    expect_parse_error("period,n_credits,n_defaults\n1,10,2.5\n", 2, 3);
}

TEST_CASE("series CSV round trip") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto series = simulate_series(VasicekParams(0.05, 0.5), 30, {}, seed);
        std::ostringstream os;
        write_series_csv(os, series);
        CHECK(parse(os.str()) == series);
    }
    CHECK_THROWS_AS(read_series_file("/nonexistent/file.csv"), IoError);
}

TEST_CASE("format_double is shortest round-trip") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e-8, 5e-324}) {
        const auto s = format_double(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("draws CSV round trip") {
    PosteriorDraws d;
    d.names = {"p", "rho", "pi[1]"};
    d.chains = 2;
    d.draws_per_chain = 3;
    for (int i = 0; i < 18; ++i) d.values.push_back(1.0 / (i + 3.0));
    d.stats.resize(6);
    std::ostringstream os;
    write_draws_csv(os, d);
    std::istringstream in(os.str());
    const auto back = read_draws_csv(in);
    CHECK(back.names == d.names);
    CHECK(back.chains == 2);
    CHECK(back.draws_per_chain == 3);
    CHECK(back.values == d.values);

    std::istringstream bad("chain,iter,name,value\n1,1,p,0.1\n1,2,p,0.2\n2,1,p,0.1\n");
    CHECK_THROWS_AS(read_draws_csv(bad), ParseError);
    std::istringstream wrong("a,b\n");
    CHECK_THROWS_AS(read_draws_csv(wrong), ParseError);
}

TEST_CASE("autocorrelation") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const auto acf = autocorrelation(x, 2);
    REQUIRE(acf.size() == 3);
    CHECK(acf[0] == Approx(1.0));
    // Lag 1: sum (x_t - 3)(x_{t+1} - 3) / sum (x_t - 3)^2 = 4 / 10.
    CHECK(acf[1] == Approx(0.4));
    CHECK(acf[2] == Approx(-0.1));
}

TEST_CASE("config text parsing and precedence") {
    const auto entries = parse_config_text("# comment\nprior.mu_p = 0.1\n\n  sampler.seed=9 # trailing\n");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].first == "prior.mu_p");
    CHECK(entries[1].second == "9");
    CHECK_THROWS_AS(parse_config_text("no equals sign\n"), ParseError);

    RunConfig cfg;
    cfg.set("prior.preset", "corporate");
    CHECK(cfg.prior.mu_p == 0.1);
    cfg.set("sampler.parameterization", "noncentered");
    CHECK(cfg.sampler.parameterization == Parameterization::noncentered);
    CHECK_THROWS_AS(cfg.set("prior.nothing", "1"), ConfigError);
    CHECK_THROWS_AS(cfg.set("sampler.chains", "four"), ConfigError);
    CHECK_THROWS_AS(cfg.set("io.format", "xml"), ConfigError);

    // to_text reloads to the same configuration.
    const fs::path dir = scratch("config");
    write_text_file(dir / "run.cfg", cfg.to_text());
    const RunConfig back = load_config_file(dir / "run.cfg", RunConfig{});
    CHECK(back.entries() == cfg.entries());
    CHECK(cfg.to_json()["prior.mu_p"] == "0.1");

    RunConfig invalid;
    invalid.set("sampler.target_accept", "1.5");
    CHECK_THROWS_AS(invalid.validate(), ConfigError);
}

TEST_CASE("default config reads VCM_OUT_DIR") {
    ::setenv("VCM_OUT_DIR", "/tmp/somewhere", 1);
    CHECK(default_run_config().io.out_dir == "/tmp/somewhere");
    ::unsetenv("VCM_OUT_DIR");
    CHECK(default_run_config().io.out_dir == "out");
}

// ---------------------------------------------------------------------------
// The command-line tool, run as a subprocess.

TEST_CASE("cli: simulate is deterministic and records the preset") {
    const fs::path dir = scratch("simulate");
    const auto a = run_cli("simulate --preset HH --seed 7 --out " + (dir / "a.csv").string());
    const auto b = run_cli("simulate --preset HH --seed 7 --out " + (dir / "b.csv").string());
    REQUIRE(a.status == 0);
    REQUIRE(b.status == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(read_series_file(dir / "a.csv").periods == simulate_series(VasicekParams(0.05, 0.5), 20, {}, 7).periods);

    REQUIRE(run_cli("simulate --preset ll --seed 1 --out-dir " + dir.string()).status == 0);
    const auto manifest = Json::parse(slurp(dir / "LL_seed1.manifest.json"));
    CHECK(manifest["command"] == "simulate");
    CHECK(manifest["inputs"]["p"] == 0.01);
    CHECK(manifest["inputs"]["rho"] == 0.1);
    CHECK(manifest["config"]["sampler.seed"] == "1");

    REQUIRE(run_cli("simulate --p 0.02 --rho 0.2 --sigma 0 --horizon 5 --seed 1 --out " +
                    (dir / "lin.csv").string())
                .status == 0);
    const auto lin = read_series_file(dir / "lin.csv");
    for (std::size_t t = 0; t < lin.size(); ++t) {
        CHECK(lin.periods[t].n_credits == static_cast<std::int64_t>(500 * (t + 1) + 1000));
    }
}

TEST_CASE("cli: exit codes") {
    const fs::path dir = scratch("exit");
    CHECK(run_cli("simulate --preset XX --out " + (dir / "x.csv").string()).status == 1);
    CHECK(run_cli("simulate --preset HH --out /dev/null/x.csv").status == 1);
    CHECK(run_cli("estimate --data /nonexistent.csv").status == 1);
    CHECK(run_cli("nonsense").status == 1);
    CHECK(run_cli("--help").status == 0);

    write_text_file(dir / "short.csv", "period,n_credits,n_defaults\n1,100,3\n2,100,4\n");
    CHECK(run_cli("estimate --data " + (dir / "short.csv").string() + " --out-dir " + dir.string()).status == 1);
    write_text_file(dir / "bad.csv", "period,n_credits,n_defaults\n1,100,3\n2,x,4\n");
    CHECK(run_cli("estimate --data " + (dir / "bad.csv").string() + " --out-dir " + dir.string()).status == 1);

    // Chains stuck far apart: R-hat > 1.05 gives the soft-fail code 2.
    write_series_file(dir / "hh.csv", simulate_series(VasicekParams(0.05, 0.5), 20, {}, 42));
    const auto soft = run_cli("fit --data " + (dir / "hh.csv").string() + " --out-dir " + dir.string() +
                              " --warmup 3 --draws 20 --chains 4 --seed 1 --format csv");
    CHECK(soft.status == 2);
    const auto summary = Json::parse(slurp(dir / "summary.json"));
    CHECK_FALSE(summary["warnings"].empty());
}

TEST_CASE("cli: estimate writes a byte-identical report for the same seed") {
    const fs::path dir = scratch("estimate");
    write_series_file(dir / "hh.csv", simulate_series(VasicekParams(0.05, 0.5), 20, {}, 42));
    const std::string common = "estimate --data " + (dir / "hh.csv").string() + " --method amle --bootstrap --n-rep 500";
    REQUIRE(run_cli(common + " --seed 4 --out-dir " + (dir / "a").string()).status == 0);
    REQUIRE(run_cli(common + " --seed 4 --threads 3 --out-dir " + (dir / "b").string()).status == 0);
    CHECK(slurp(dir / "a/estimate.json") == slurp(dir / "b/estimate.json"));
    CHECK(slurp(dir / "a/replicates.csv") == slurp(dir / "b/replicates.csv"));
    const auto report = Json::parse(slurp(dir / "a/estimate.json"));
    CHECK(report["method"] == "AMLE");
    CHECK(report["n_bootstrap"] == 500);
    CHECK(report.contains("rate_acf"));
    CHECK(report.contains("convergence_flag"));
}

TEST_CASE("cli: config file, flags override it") {
    const fs::path dir = scratch("config_cli");
    write_series_file(dir / "hh.csv", simulate_series(VasicekParams(0.05, 0.5), 20, {}, 42));
    write_text_file(dir / "run.cfg", "prior.mu_p = 0.1\nsampler.seed = 11\nmle.quad_order = 32\n");
    REQUIRE(run_cli("estimate --data " + (dir / "hh.csv").string() + " --method mm --config " +
                    (dir / "run.cfg").string() + " --seed 12 --out-dir " + dir.string())
                .status == 0);
    const auto manifest = Json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["config"]["prior.mu_p"] == "0.1");
    CHECK(manifest["config"]["sampler.seed"] == "12");
    CHECK(manifest["config"]["mle.quad_order"] == "32");
}

TEST_CASE("cli: fit, ppc, forecast, replay") {
    const fs::path dir = scratch("pipeline");
    const auto series = simulate_series(VasicekParams(0.05, 0.5), 12, {}, 42);
    write_series_file(dir / "hh.csv", series);
    const std::string data = " --data " + (dir / "hh.csv").string() + " --out-dir " + dir.string();

    // ppc without draws: actionable error.
    CHECK(run_cli("ppc" + data).status == 1);

    REQUIRE(run_cli("fit" + data + kFast).status == 0);
    const auto draws = read_draws_file(dir / "draws.csv");
    CHECK(draws.chains == 2);
    CHECK(draws.draws_per_chain == 300);
    CHECK(draws.names.size() == 14);
    const std::string fit_draws = slurp(dir / "draws.csv");

    const auto ppc = run_cli("ppc" + data + " --s-rep 200 --seed 3 --format csv");
    REQUIRE(ppc.status == 0);
    const auto pj = Json::parse(slurp(dir / "ppc.json"));
    CHECK(pj["pvalue_median"].get<double>() >= 0.0);
    CHECK(pj["pvalue_iqr"].get<double>() <= 1.0);
    CHECK(fs::exists(dir / "overlay_observed.csv"));

    const auto fc = run_cli("forecast" + data + " --row 12" + kFast + " --refit");
    REQUIRE(fc.status == 0);
    const auto fj = Json::parse(slurp(dir / "forecast.json"));
    CHECK(fj["horizon_exposure"] == series.periods[11].n_credits);
    CHECK(fj["interval90"]["lo"].get<double>() <= fj["interval50"]["lo"].get<double>());
    CHECK(fj["interval50"]["hi"].get<double>() <= fj["interval90"]["hi"].get<double>());
    const std::string forecast_text = slurp(dir / "forecast.json");

    // Replaying the manifest regenerates the same bundle.
    fs::copy_file(dir / "manifest.json", dir / "forecast_manifest.json");
    fs::remove(dir / "forecast.json");
    REQUIRE(run_cli("replay " + (dir / "forecast_manifest.json").string()).status == 0);
    CHECK(slurp(dir / "forecast.json") == forecast_text);

    // Refitting with the same seed reproduces the draws byte for byte.
    REQUIRE(run_cli("fit" + data + kFast + " --threads 1").status == 0);
    CHECK(slurp(dir / "draws.csv") == fit_draws);
}

TEST_CASE("cli: compare, prior predictive, sweep and cumulative bundles") {
    const fs::path dir = scratch("bundles");
    write_series_file(dir / "a.csv", simulate_series(VasicekParams(0.01, 0.3), 10, {}, 1));
    write_series_file(dir / "b.csv", simulate_series(VasicekParams(0.05, 0.3), 10, {}, 2));
    const std::string out = " --out-dir " + dir.string();

    REQUIRE(run_cli("fit --data " + (dir / "a.csv").string() + " --compare " + (dir / "b.csv").string() + out + kFast)
                .status == 0);
    const auto cmp = Json::parse(slurp(dir / "comparison.json"));
    CHECK(cmp["prob_p_a_gt_b"].get<double>() < 0.2);
    CHECK(fs::exists(dir / "compare_draws.csv"));

    REQUIRE(run_cli("fit --prior-predictive --horizon 5" + out + kFast).status == 0);
    CHECK(fs::exists(dir / "prior_density_rho.csv"));
    CHECK(fs::exists(dir / "prior_density_pi1.csv"));

    REQUIRE(run_cli("sweep-priors --data " + (dir / "a.csv").string() + " --phi-grid 1,50 --a-grid 10,20,200" + out +
                    kFast)
                .status == 0);
    std::ifstream sweep(dir / "sweep.csv");
    std::string line;
    int rows = 0;
    while (std::getline(sweep, line)) ++rows;
    CHECK(rows == 1 + 6);

    REQUIRE(run_cli("cumulative --data " + (dir / "b.csv").string() + " --t-start 3 --n-rep 200" + out).status == 0);
    std::ifstream trace(dir / "trace.csv");
    rows = 0;
    while (std::getline(trace, line)) ++rows;
    CHECK(rows == 1 + 8);
    const auto manifest = Json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["config"]["bootstrap.trace_n_rep"] == "200");
}
