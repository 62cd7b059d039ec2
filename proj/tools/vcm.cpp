// vcm: simulate, estimate and fit Vasicek default-rate models.

#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vcm/bayes.hpp"
#include "vcm/bootstrap.hpp"
#include "vcm/classical.hpp"
#include "vcm/config.hpp"
#include "vcm/error.hpp"
#include "vcm/experiments.hpp"
#include "vcm/io.hpp"
#include "vcm/predictive.hpp"
#include "vcm/simulate.hpp"

namespace fs = std::filesystem;
using namespace vcm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitHard = 1;
constexpr int kExitSoft = 2;

// Stream ids for command-level randomness; sampler chains use 0..C-1.
constexpr std::uint64_t kBootstrapStream = 0x424f4f54;
constexpr std::uint64_t kPredictiveStream = 0x50524544;
constexpr std::uint64_t kForecastStream = 0x464f5245;

// Flags that map onto RunConfig keys. Only flags actually given override the
// config file.
class ConfigFlags {
public:
    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        values_.emplace_back();
        CLI::Option* opt = app->add_option(flag, values_.back(), help);
        bound_.push_back({opt, key, &values_.back()});
    }

    void add_common(CLI::App* app) {
        app->add_option("--config", config_file_, "flat 'section.key = value' config file");
        add(app, "--seed", "sampler.seed", "master seed");
        add(app, "--out-dir", "io.out_dir", "output directory (default $VCM_OUT_DIR or ./out)");
        add(app, "--format", "io.format", "stdout report format: json or csv");
        add(app, "--threads", "run.threads", "worker threads (0 = all cores); never changes output");
    }

    void add_prior(CLI::App* app) {
        add(app, "--mu-p", "prior.mu_p", "prior mean of p");
        add(app, "--mu-rho", "prior.mu_rho", "prior mean of rho");
        add(app, "--phi-rho", "prior.phi_rho", "prior precision of rho");
        add(app, "--a", "prior.a", "precision scale of p given rho");
        add(app, "--prior-preset", "prior.preset", "default or corporate (mu_p = 0.1)");
    }

    void add_sampler(CLI::App* app) {
        add(app, "--chains", "sampler.chains", "number of chains");
        add(app, "--warmup", "sampler.warmup", "warmup iterations per chain");
        add(app, "--draws", "sampler.draws", "post-warmup draws per chain");
        add(app, "--target-accept", "sampler.target_accept", "step-size adaptation target");
        add(app, "--max-depth", "sampler.max_depth", "maximum tree depth");
        add(app, "--parameterization", "sampler.parameterization", "auto (default), centered or noncentered");
    }

    void add_classical(CLI::App* app) {
        add(app, "--n-rep", "bootstrap.n_rep", "bootstrap replicates");
        add(app, "--level", "bootstrap.level", "interval level");
        add(app, "--quad-order", "mle.quad_order", "Gauss-Hermite order for the MLE");
        add(app, "--mle-tol", "mle.tol", "MLE tolerance");
    }

    RunConfig resolve() const {
        RunConfig cfg = default_run_config();
        if (!config_file_.empty()) cfg = load_config_file(config_file_, cfg);
        for (const Bound& b : bound_) {
            if (b.option->count() > 0) cfg.set(b.key, *b.value);
        }
        cfg.sampler.threads = cfg.threads;
        cfg.bootstrap.threads = cfg.threads;
        cfg.validate();
        return cfg;
    }

private:
    struct Bound {
        CLI::Option* option;
        std::string key;
        std::string* value;
    };
    std::deque<std::string> values_;
    std::vector<Bound> bound_;
    std::string config_file_;
};

struct Context {
    std::vector<std::string> args;  // without program name
    bool replaying = false;
};

Json manifest(const Context& ctx, const std::string& command, const RunConfig& cfg, Json inputs,
              const std::vector<std::string>& outputs) {
    Json j;
    j["tool"] = "vcm";
    j["version"] = VCM_VERSION;
    j["command"] = command;
    j["argv"] = ctx.args;
    j["config"] = cfg.to_json();
    j["inputs"] = std::move(inputs);
    j["outputs"] = outputs;
    return j;
}

void write_json(const fs::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

template <class Writer>
void write_csv(const fs::path& path, Writer&& writer) {
    std::ostringstream os;
    writer(os);
    write_text_file(path, os.str());
}

void echo(const RunConfig& cfg, const Json& report, const std::string& csv_line) {
    if (cfg.io.format == "csv") {
        std::cout << csv_line << '\n';
    } else {
        std::cout << report.dump(2) << '\n';
    }
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": cannot parse '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError(std::string(what) + " is empty");
    return out;
}

std::string join(const std::vector<std::string>& items, char sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

Json input_json(const fs::path& path, const DefaultSeries& series) {
    return Json{{"path", path.string()}, {"label", series.label}, {"periods", series.size()}};
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string preset;
    double p = -1.0;
    double rho = -1.0;
    int horizon = kPresetHorizon;
    double a = 500.0;
    double b = 1000.0;
    double sigma = 500.0;
    std::string out;
};

int cmd_simulate(const Context& ctx, const SimulateArgs& args, const RunConfig& cfg) {
    double p = args.p;
    double rho = args.rho;
    std::string name = "sim";
    if (!args.preset.empty()) {
        const Preset& preset = find_preset(args.preset);
        name = preset.name;
        if (p < 0.0) p = preset.p;
        if (rho < 0.0) rho = preset.rho;
    }
    if (p < 0.0 || rho < 0.0) throw ConfigError("simulate: give --preset or both --p and --rho");
    const VasicekParams params(p, rho);
    const ExposureModel exposure{args.a, args.b, args.sigma};
    DefaultSeries series = simulate_series(params, args.horizon, exposure, cfg.sampler.seed);
    series.label = name;

    const fs::path out = args.out.empty()
                             ? fs::path(cfg.io.out_dir) / (name + "_seed" + std::to_string(cfg.sampler.seed) + ".csv")
                             : fs::path(args.out);
    write_series_file(out, series);
    fs::path man = out;
    man.replace_extension(".manifest.json");
    Json params_json{{"preset", args.preset.empty() ? Json(nullptr) : Json(name)},
                     {"p", p},
                     {"rho", rho},
                     {"horizon", args.horizon},
                     {"exposure", {{"a", args.a}, {"b", args.b}, {"sigma_n", args.sigma}}},
                     {"seed", cfg.sampler.seed},
                     {"stream_id", kSimulationStream}};
    write_json(man, manifest(ctx, "simulate", cfg, params_json, {out.string(), man.string()}));
    echo(cfg, Json{{"series", out.string()}, {"p", p}, {"rho", rho}, {"periods", series.size()}},
         out.string());
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
    std::string data;
    std::string method = "amle";
    bool bootstrap = false;
};

int cmd_estimate(const Context& ctx, const EstimateArgs& args, const RunConfig& cfg) {
    const DefaultSeries series = read_series_file(args.data);
    const Method method = parse_method(args.method);
    if (method == Method::BAYES) throw ConfigError("estimate: use 'vcm fit' for the Bayesian posterior");
    const fs::path dir = cfg.io.out_dir;

    EstimateReport report;
    std::vector<std::string> outputs;
    if (args.bootstrap) {
        BootstrapSettings bs = cfg.bootstrap;
        bs.mle = cfg.mle;
        report = bootstrap_estimate(series, method, bs, RngStream(cfg.sampler.seed, kBootstrapStream));
        const fs::path reps = dir / "replicates.csv";
        write_csv(reps, [&](std::ostream& os) {
            os << "replicate,p,rho\n";
            for (std::size_t i = 0; i < report.replicates_p.size(); ++i) {
                os << i + 1 << ',' << format_double(report.replicates_p[i]) << ','
                   << format_double(report.replicates_rho[i]) << '\n';
            }
        });
        outputs.push_back(reps.string());
    } else {
        report = estimate(series, method, cfg.mle);
    }

    Json j = to_json(report);
    const auto rates = default_rates(series);
    j["rate_acf"] = autocorrelation(rates, std::min<std::size_t>(10, rates.size() - 1));
    j["input"] = input_json(args.data, series);
    const fs::path est = dir / "estimate.json";
    write_json(est, j);
    outputs.push_back(est.string());
    const fs::path man = dir / "manifest.json";
    outputs.push_back(man.string());
    write_json(man, manifest(ctx, "estimate", cfg, input_json(args.data, series), outputs));

    std::ostringstream line;
    line << to_string(report.method) << ',' << format_double(report.p_hat) << ',' << format_double(report.rho_hat)
         << ',' << (report.convergence_flag ? "converged" : "flagged");
    echo(cfg, j, line.str());
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string data;
    std::string compare;
    bool prior_predictive = false;
    int horizon = kPresetHorizon;
};

// Writes draws, stats and summary with file prefix; returns worst R-hat.
double write_fit_bundle(const PosteriorDraws& draws, const fs::path& dir, const std::string& prefix,
                        std::vector<std::string>& outputs, Json& summary) {
    const fs::path draws_path = dir / (prefix + "draws.csv");
    const fs::path stats_path = dir / (prefix + "sampler_stats.csv");
    write_csv(draws_path, [&](std::ostream& os) { write_draws_csv(os, draws); });
    write_csv(stats_path, [&](std::ostream& os) { write_sampler_stats_csv(os, draws); });
    summary = draws_summary_json(draws);

    double worst = 0.0;
    std::vector<std::string> warnings;
    for (const auto& [name, pj] : summary["parameters"].items()) {
        if (pj["rhat"].is_number()) {
            const double r = pj["rhat"].get<double>();
            worst = std::max(worst, r);
            if (r > 1.05) warnings.push_back("R-hat " + format_double(r) + " > 1.05 for " + name);
        }
    }
    if (draws.divergence_warning) {
        warnings.push_back(std::to_string(draws.divergences()) + " divergent transitions (> 1% of draws)");
    }
    summary["warnings"] = warnings;
    const fs::path summary_path = dir / (prefix + "summary.json");
    write_json(summary_path, summary);
    outputs.insert(outputs.end(), {draws_path.string(), stats_path.string(), summary_path.string()});
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return worst;
}

int cmd_fit(const Context& ctx, const FitArgs& args, const RunConfig& cfg) {
    const fs::path dir = cfg.io.out_dir;
    SamplerConfig sampler = cfg.sampler;
    DefaultSeries series;
    Json inputs = Json::object();
    if (!args.data.empty()) {
        series = read_series_file(args.data);
        inputs["data"] = input_json(args.data, series);
    } else if (!args.prior_predictive) {
        throw ConfigError("fit: --data is required (or use --prior-predictive)");
    }
    if (args.prior_predictive) {
        sampler.include_likelihood = false;
        if (series.empty()) {
            // Exposures are irrelevant without the likelihood; only T matters.
            series.periods.assign(static_cast<std::size_t>(args.horizon), Period{1, 0});
            series.label = "prior";
        }
    }

    std::vector<std::string> outputs;
    const PosteriorDraws draws = nuts_sample(series, cfg.prior, sampler);
    Json summary;
    double worst = write_fit_bundle(draws, dir, "", outputs, summary);
    Json report{{"summary", dir / "summary.json"}, {"p", summary["parameters"]["p"]},
                {"rho", summary["parameters"]["rho"]}};

    if (args.prior_predictive) {
        for (const char* name : {"p", "rho"}) {
            const fs::path path = dir / (std::string("prior_density_") + name + ".csv");
            write_csv(path, [&](std::ostream& os) { write_density_csv(os, kernel_density(draws.column(name))); });
            outputs.push_back(path.string());
        }
        if (!series.empty()) {
            const fs::path path = dir / "prior_density_pi1.csv";
            write_csv(path, [&](std::ostream& os) { write_density_csv(os, kernel_density(draws.column("pi[1]"))); });
            outputs.push_back(path.string());
        }
    }

    if (!args.compare.empty()) {
        const DefaultSeries other = read_series_file(args.compare);
        inputs["compare"] = input_json(args.compare, other);
        const PosteriorDraws draws_b = nuts_sample(other, cfg.prior, sampler);
        Json summary_b;
        worst = std::max(worst, write_fit_bundle(draws_b, dir, "compare_", outputs, summary_b));
        Json cmp{{"a", series.label},
                 {"b", other.label},
                 {"prob_p_a_gt_b", posterior_event_prob(draws, draws_b, EventParam::p)},
                 {"prob_rho_a_gt_b", posterior_event_prob(draws, draws_b, EventParam::rho)}};
        const fs::path path = dir / "comparison.json";
        write_json(path, cmp);
        outputs.push_back(path.string());
        report["comparison"] = cmp;
    }

    const fs::path man = dir / "manifest.json";
    outputs.push_back(man.string());
    write_json(man, manifest(ctx, "fit", cfg, inputs, outputs));

    std::ostringstream line;
    line << format_double(summary["parameters"]["p"]["mean"].get<double>()) << ','
         << format_double(summary["parameters"]["rho"]["mean"].get<double>()) << ',' << format_double(worst);
    echo(cfg, report, line.str());
    return worst > 1.05 ? kExitSoft : kExitOk;
}

// ---------------------------------------------------------------------------

PosteriorDraws load_or_refit(const std::string& draws_file, bool refit, const DefaultSeries& series,
                             const RunConfig& cfg, const char* command) {
    if (refit) return nuts_sample(series, cfg.prior, cfg.sampler);
    const fs::path path = draws_file.empty() ? fs::path(cfg.io.out_dir) / "draws.csv" : fs::path(draws_file);
    if (!fs::exists(path)) {
        throw IoError("draws file '" + path.string() + "' not found; run 'vcm fit --data <file> --out-dir " +
                      path.parent_path().string() + "' first, or pass --refit to " + command);
    }
    return read_draws_file(path);
}

struct PpcArgs {
    std::string data;
    std::string draws;
    bool refit = false;
    std::size_t s_rep = 500;
    std::string latent = "redraw";
};

int cmd_ppc(const Context& ctx, const PpcArgs& args, const RunConfig& cfg) {
    const DefaultSeries series = read_series_file(args.data);
    const PosteriorDraws draws = load_or_refit(args.draws, args.refit, series, cfg, "ppc");
    LatentMode mode;
    if (args.latent == "redraw") mode = LatentMode::redraw;
    else if (args.latent == "fitted") mode = LatentMode::fitted;
    else throw ConfigError("ppc: --latent must be redraw or fitted");

    const PredictiveDraws pred =
        posterior_predictive(draws, series, args.s_rep, RngStream(cfg.sampler.seed, kPredictiveStream), mode);
    const auto observed = default_rates(series);

    Json j;
    j["s_rep"] = args.s_rep;
    j["latent"] = args.latent;
    for (PpcStatistic stat : {PpcStatistic::median, PpcStatistic::iqr}) {
        const std::string name(to_string(stat));
        j["observed_" + name] = ppc_statistic(observed, stat);
        j["pvalue_" + name] = ppc_pvalue(pred, series, stat);
    }

    const fs::path dir = cfg.io.out_dir;
    std::vector<std::string> outputs;
    const fs::path reps = dir / "ppc_replicates.csv";
    write_csv(reps, [&](std::ostream& os) {
        os << "replicate,period,n_credits,n_defaults\n";
        for (std::size_t s = 0; s < pred.replicates; ++s) {
            for (std::size_t t = 0; t < pred.periods(); ++t) {
                os << s + 1 << ',' << t + 1 << ',' << pred.exposures[t] << ',' << pred.at(s, t) << '\n';
            }
        }
    });
    // Density overlay on a grid shared by the observed and replicated rates.
    double hi = *std::max_element(observed.begin(), observed.end());
    for (std::size_t s = 0; s < pred.replicates; ++s) {
        const auto r = pred.rates(s);
        hi = std::max(hi, *std::max_element(r.begin(), r.end()));
    }
    const Interval range{0.0, hi > 0.0 ? 1.2 * hi : 1.0};
    const fs::path obs_path = dir / "overlay_observed.csv";
    write_csv(obs_path, [&](std::ostream& os) { write_density_csv(os, kernel_density(observed, 512, range)); });
    const fs::path rep_path = dir / "overlay_replicates.csv";
    write_csv(rep_path, [&](std::ostream& os) {
        os << "replicate,x,density\n";
        for (std::size_t s = 0; s < pred.replicates; ++s) {
            const DensityGrid g = kernel_density(pred.rates(s), 512, range);
            for (std::size_t i = 0; i < g.x.size(); ++i) {
                os << s + 1 << ',' << format_double(g.x[i]) << ',' << format_double(g.density[i]) << '\n';
            }
        }
    });
    const fs::path ppc_path = dir / "ppc.json";
    write_json(ppc_path, j);
    const fs::path man = dir / "manifest.json";
    outputs = {reps.string(), obs_path.string(), rep_path.string(), ppc_path.string(), man.string()};
    Json inputs{{"data", input_json(args.data, series)},
                {"draws", args.refit ? Json("refit") : Json(args.draws.empty() ? "default" : args.draws)}};
    write_json(man, manifest(ctx, "ppc", cfg, inputs, outputs));

    std::ostringstream line;
    line << format_double(j["pvalue_median"].get<double>()) << ',' << format_double(j["pvalue_iqr"].get<double>());
    echo(cfg, j, line.str());
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ForecastArgs {
    std::string data;
    std::string draws;
    bool refit = false;
    std::int64_t next_exposure = 0;
    std::size_t row = 0;
};

int cmd_forecast(const Context& ctx, const ForecastArgs& args, const RunConfig& cfg) {
    DefaultSeries series = read_series_file(args.data);
    std::int64_t next = args.next_exposure;
    std::optional<double> realized;
    DefaultSeries fit_series = series;
    if (args.row > 0) {
        if (args.row < kMinEstimationLength + 1 || args.row > series.size()) {
            throw ConfigError("forecast: --row must lie in [4, number of rows]");
        }
        const Period& target = series.periods[args.row - 1];
        next = target.n_credits;
        realized = static_cast<double>(target.n_defaults) / static_cast<double>(target.n_credits);
        fit_series = series.prefix(args.row - 1);
    }
    if (next < 1) throw ConfigError("forecast: give --next-exposure N or --row t");
    const PosteriorDraws draws = load_or_refit(args.draws, args.refit, fit_series, cfg, "forecast");
    const ForecastResult f = forecast_one_step(draws, next, RngStream(cfg.sampler.seed, kForecastStream));

    Json j = to_json(f);
    j["realized_rate"] = realized ? Json(*realized) : Json(nullptr);
    if (realized) j["realized_inside_90"] = f.interval90.contains(*realized);
    const fs::path dir = cfg.io.out_dir;
    const fs::path fpath = dir / "forecast.json";
    const fs::path dpath = dir / "forecast_draws.csv";
    write_json(fpath, j);
    write_csv(dpath, [&](std::ostream& os) {
        os << "draw,n_defaults,rate\n";
        for (std::size_t i = 0; i < f.draws.size(); ++i) {
            os << i + 1 << ',' << f.draws[i] << ',' << format_double(static_cast<double>(f.draws[i]) / next) << '\n';
        }
    });
    const fs::path man = dir / "manifest.json";
    Json inputs{{"data", input_json(args.data, series)}, {"fit_periods", fit_series.size()}};
    write_json(man, manifest(ctx, "forecast", cfg, inputs, {fpath.string(), dpath.string(), man.string()}));

    std::ostringstream line;
    line << format_double(f.interval90.lo) << ',' << format_double(f.interval50.lo) << ','
         << format_double(f.median_rate) << ',' << format_double(f.interval50.hi) << ','
         << format_double(f.interval90.hi);
    echo(cfg, j, line.str());
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string data;
    std::string phi_grid = "1,5,10,15,20,25,30,35,40,45,50";
    std::string a_grid = "10,20,40,60,80,100,120,140,160,180,200";
};

int cmd_sweep(const Context& ctx, const SweepArgs& args, const RunConfig& cfg) {
    const DefaultSeries series = read_series_file(args.data);
    const auto phis = parse_list(args.phi_grid, "--phi-grid");
    const auto as = parse_list(args.a_grid, "--a-grid");
    SamplerConfig sampler = cfg.sampler;
    const auto cells = sweep_priors(series, phis, as, sampler, cfg.prior);

    const fs::path dir = cfg.io.out_dir;
    const fs::path sweep = dir / "sweep.csv";
    write_csv(sweep, [&](std::ostream& os) {
        os << "phi_rho,a,ok,p_mean,p_q05,p_q50,p_q95,rho_mean,rho_q05,rho_q50,rho_q95,rhat_p,rhat_rho,ess_p,ess_rho,"
              "divergences,error\n";
        for (const auto& c : cells) {
            os << format_double(c.phi_rho) << ',' << format_double(c.a) << ',' << (c.ok ? 1 : 0) << ','
               << format_double(c.p.mean) << ',' << format_double(c.p.q05) << ',' << format_double(c.p.q50) << ','
               << format_double(c.p.q95) << ',' << format_double(c.rho.mean) << ',' << format_double(c.rho.q05)
               << ',' << format_double(c.rho.q50) << ',' << format_double(c.rho.q95) << ','
               << format_double(c.rhat_p) << ',' << format_double(c.rhat_rho) << ',' << format_double(c.ess_p)
               << ',' << format_double(c.ess_rho) << ',' << c.divergences << ",\"" << c.error << "\"\n";
        }
    });
    const fs::path dens = dir / "sweep_densities.csv";
    write_csv(dens, [&](std::ostream& os) {
        os << "phi_rho,a,param,x,density\n";
        for (const auto& c : cells) {
            if (!c.ok) continue;
            for (const auto& [name, grid] : {std::pair{"p", &c.density_p}, std::pair{"rho", &c.density_rho}}) {
                for (std::size_t i = 0; i < grid->x.size(); ++i) {
                    os << format_double(c.phi_rho) << ',' << format_double(c.a) << ',' << name << ','
                       << format_double(grid->x[i]) << ',' << format_double(grid->density[i]) << '\n';
                }
            }
        }
    });
    const fs::path man = dir / "manifest.json";
    Json inputs{{"data", input_json(args.data, series)}, {"phi_grid", phis}, {"a_grid", as}};
    write_json(man, manifest(ctx, "sweep-priors", cfg, inputs, {sweep.string(), dens.string(), man.string()}));

    const auto failed = std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.ok; });
    echo(cfg, Json{{"cells", cells.size()}, {"failed", failed}, {"summary", sweep.string()}},
         std::to_string(cells.size()) + "," + std::to_string(failed));
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct CumulativeArgs {
    std::string data;
    std::string mode = "bootstrap_amle";
    std::size_t t_start = 3;
    std::size_t t_end = 0;
};

int cmd_cumulative(const Context& ctx, const CumulativeArgs& args, const RunConfig& cfg) {
    const DefaultSeries series = read_series_file(args.data);
    CumulativeSettings s;
    s.mode = parse_cumulative_mode(args.mode);
    s.t_start = args.t_start;
    s.t_end = args.t_end;
    s.sampler = cfg.sampler;
    s.prior = cfg.prior;
    s.bootstrap = cfg.bootstrap;
    s.bootstrap.n_rep = cfg.trace_n_rep;
    s.bootstrap.mle = cfg.mle;
    s.seed = cfg.sampler.seed;
    s.threads = cfg.threads;
    const auto steps = cumulative_study(series, s);

    const fs::path dir = cfg.io.out_dir;
    const fs::path trace = dir / "trace.csv";
    auto num = [](const std::optional<Interval>& iv, bool lo) {
        return iv ? format_double(lo ? iv->lo : iv->hi) : std::string("nan");
    };
    write_csv(trace, [&](std::ostream& os) {
        os << "t,ok,p_hat,rho_hat,p_lo,p_hi,rho_lo,rho_hi,median_p,median_rho,converged,flags,next_exposure,"
              "lo90,lo50,median_rate,hi50,hi90,realized_rate,error\n";
        for (const auto& st : steps) {
            const auto& r = st.report;
            os << st.t << ',' << (st.ok ? 1 : 0) << ',' << format_double(r.p_hat) << ',' << format_double(r.rho_hat)
               << ',' << num(r.interval_p, true) << ',' << num(r.interval_p, false) << ','
               << num(r.interval_rho, true) << ',' << num(r.interval_rho, false) << ','
               << format_double(st.median_p) << ',' << format_double(st.median_rho) << ','
               << (r.convergence_flag ? 1 : 0) << ',' << join(r.flags, ';') << ',';
            if (st.forecast) {
                const auto& f = *st.forecast;
                os << f.horizon_exposure << ',' << format_double(f.interval90.lo) << ','
                   << format_double(f.interval50.lo) << ',' << format_double(f.median_rate) << ','
                   << format_double(f.interval50.hi) << ',' << format_double(f.interval90.hi) << ','
                   << format_double(*st.realized_rate);
            } else {
                os << ",,,,,,";
            }
            os << ",\"" << st.error << "\"\n";
        }
    });
    const fs::path man = dir / "manifest.json";
    Json inputs{{"data", input_json(args.data, series)},
                {"mode", std::string(to_string(s.mode))},
                {"t_start", s.t_start},
                {"t_end", s.t_end == 0 ? series.size() : s.t_end}};
    write_json(man, manifest(ctx, "cumulative", cfg, inputs, {trace.string(), man.string()}));
    const auto failed = std::count_if(steps.begin(), steps.end(), [](const auto& st) { return !st.ok; });
    echo(cfg, Json{{"steps", steps.size()}, {"failed", failed}, {"trace", trace.string()}},
         std::to_string(steps.size()) + "," + std::to_string(failed));
    return kExitOk;
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, bool replaying);

int cmd_replay(const std::string& manifest_path, bool replaying) {
    if (replaying) throw ConfigError("replay: a manifest cannot replay another replay");
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest '" + manifest_path + "'");
    const Json j = Json::parse(in);
    if (!j.contains("argv") || !j["argv"].is_array()) throw ConfigError("replay: manifest has no argv");
    return run(j["argv"].get<std::vector<std::string>>(), true);
}

int run(const std::vector<std::string>& args, bool replaying) {
    CLI::App app{"Vasicek default-rate models: simulation, classical estimators, Bayesian fits"};
    app.require_subcommand(1);
    app.set_version_flag("--version", VCM_VERSION);
    Context ctx{args, replaying};

    ConfigFlags sim_flags, est_flags, fit_flags, ppc_flags, fc_flags, sweep_flags, cum_flags;

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "simulate a default series");
    simulate->add_option("--preset", sim.preset, "LL, LH, HL or HH");
    simulate->add_option("--p", sim.p, "default probability");
    simulate->add_option("--rho", sim.rho, "asset correlation");
    simulate->add_option("--horizon", sim.horizon, "number of periods")->check(CLI::PositiveNumber);
    simulate->add_option("--exposure-a", sim.a, "exposure slope a in N_t = a t + b + e_t");
    simulate->add_option("--exposure-b", sim.b, "exposure intercept b");
    simulate->add_option("--sigma", sim.sigma, "exposure noise sd");
    simulate->add_option("--out", sim.out, "output CSV path");
    sim_flags.add_common(simulate);

    EstimateArgs est;
    auto* estimate_cmd = app.add_subcommand("estimate", "classical point estimate, optionally bootstrapped");
    estimate_cmd->add_option("--data", est.data, "series CSV")->required()->check(CLI::ExistingFile);
    estimate_cmd->add_option("--method", est.method, "mm, cmm, amle or mle");
    estimate_cmd->add_flag("--bootstrap", est.bootstrap, "bias-corrected point and BCa intervals");
    est_flags.add_common(estimate_cmd);
    est_flags.add_classical(estimate_cmd);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Bayesian posterior by NUTS");
    fit_cmd->add_option("--data", fit.data, "series CSV")->check(CLI::ExistingFile);
    fit_cmd->add_option("--compare", fit.compare, "second series; reports P{p_a > p_b}, P{rho_a > rho_b}")
        ->check(CLI::ExistingFile);
    fit_cmd->add_flag("--prior-predictive", fit.prior_predictive, "sample the prior only");
    fit_cmd->add_option("--horizon", fit.horizon, "periods for --prior-predictive without --data");
    fit_flags.add_common(fit_cmd);
    fit_flags.add_prior(fit_cmd);
    fit_flags.add_sampler(fit_cmd);

    PpcArgs ppc;
    auto* ppc_cmd = app.add_subcommand("ppc", "posterior predictive checks");
    ppc_cmd->add_option("--data", ppc.data, "series CSV")->required()->check(CLI::ExistingFile);
    ppc_cmd->add_option("--draws-file", ppc.draws, "draws CSV from 'vcm fit' (default <out-dir>/draws.csv)");
    ppc_cmd->add_flag("--refit", ppc.refit, "fit the posterior instead of reading draws");
    ppc_cmd->add_option("--s-rep", ppc.s_rep, "replicated datasets");
    ppc_cmd->add_option("--latent", ppc.latent, "redraw (default) or fitted");
    ppc_flags.add_common(ppc_cmd);
    ppc_flags.add_prior(ppc_cmd);
    ppc_flags.add_sampler(ppc_cmd);

    ForecastArgs fc;
    auto* fc_cmd = app.add_subcommand("forecast", "one-step-ahead predictive intervals");
    fc_cmd->add_option("--data", fc.data, "series CSV")->required()->check(CLI::ExistingFile);
    fc_cmd->add_option("--draws-file", fc.draws, "draws CSV from 'vcm fit' (default <out-dir>/draws.csv)");
    fc_cmd->add_flag("--refit", fc.refit, "fit the posterior instead of reading draws");
    fc_cmd->add_option("--next-exposure", fc.next_exposure, "credits in the forecast period");
    fc_cmd->add_option("--row", fc.row, "forecast data row t from rows 1..t-1, using row t's exposure");
    fc_flags.add_common(fc_cmd);
    fc_flags.add_prior(fc_cmd);
    fc_flags.add_sampler(fc_cmd);

    SweepArgs sw;
    auto* sweep_cmd = app.add_subcommand("sweep-priors", "posterior over a (phi_rho, a) prior grid");
    sweep_cmd->add_option("--data", sw.data, "series CSV")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--phi-grid", sw.phi_grid, "comma-separated phi_rho values");
    sweep_cmd->add_option("--a-grid", sw.a_grid, "comma-separated a values");
    sweep_flags.add_common(sweep_cmd);
    sweep_flags.add_prior(sweep_cmd);
    sweep_flags.add_sampler(sweep_cmd);

    CumulativeArgs cum;
    auto* cum_cmd = app.add_subcommand("cumulative", "refit on growing prefixes of the series");
    cum_cmd->add_option("--data", cum.data, "series CSV")->required()->check(CLI::ExistingFile);
    cum_cmd->add_option("--mode", cum.mode, "bootstrap_amle or bayes_refit");
    cum_cmd->add_option("--t-start", cum.t_start, "first prefix length (>= 3)");
    cum_cmd->add_option("--t-end", cum.t_end, "last prefix length (default: all rows)");
    cum_flags.add_common(cum_cmd);
    cum_flags.add_prior(cum_cmd);
    cum_flags.add_sampler(cum_cmd);
    cum_flags.add(cum_cmd, "--n-rep", "bootstrap.trace_n_rep", "bootstrap replicates per prefix");
    cum_flags.add(cum_cmd, "--level", "bootstrap.level", "interval level");

    std::string replay_path;
    auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    replay->add_option("manifest", replay_path, "manifest.json")->required()->check(CLI::ExistingFile);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitHard;
    }

    if (*simulate) return cmd_simulate(ctx, sim, sim_flags.resolve());
    if (*estimate_cmd) return cmd_estimate(ctx, est, est_flags.resolve());
    if (*fit_cmd) return cmd_fit(ctx, fit, fit_flags.resolve());
    if (*ppc_cmd) return cmd_ppc(ctx, ppc, ppc_flags.resolve());
    if (*fc_cmd) return cmd_forecast(ctx, fc, fc_flags.resolve());
    if (*sweep_cmd) return cmd_sweep(ctx, sw, sweep_flags.resolve());
    if (*cum_cmd) return cmd_cumulative(ctx, cum, cum_flags.resolve());
    if (*replay) return cmd_replay(replay_path, replaying);
    return kExitHard;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run(args, false);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return kExitHard;
}
