#include "vcm/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "vcm/error.hpp"

namespace vcm {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                             : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::int64_t parse_int(const std::string& field, int row, int column, const char* what) {
    std::int64_t v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what +
                             " '" + field + "' is not an integer",
                         row, column);
    }
    return v;
}

double parse_real(const std::string& field, int row, int column, const char* what) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what +
                             " '" + field + "' is not a finite number",
                         row, column);
    }
    return v;
}

[[noreturn]] void fail(int row, int column, const std::string& msg) {
    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + msg, row, column);
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

}  // namespace

DefaultSeries read_series_csv(std::istream& in, std::string label) {
    std::string line;
    int row = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++row;
        if (!blank(line)) {
            header = split_fields(line);
            break;
        }
    }
    if (header.empty()) throw ParseError("row 1, column 1: empty file, expected a header row", 1, 1);
    for (auto& h : header) h = lower(h);
    if (header.size() != 3 || header[0] != "period" || header[1] != "n_credits" ||
        (header[2] != "n_defaults" && header[2] != "default_rate")) {
        throw ParseError("row " + std::to_string(row) +
                             ": header must be 'period,n_credits,n_defaults' or 'period,n_credits,default_rate'",
                         row, 1);
    }
    const bool rates = header[2] == "default_rate";

    DefaultSeries series;
    series.label = std::move(label);
    bool have_previous = false;
    std::int64_t previous = 0;
    while (std::getline(in, line)) {
        ++row;
        if (blank(line)) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 3) {
            fail(row, static_cast<int>(std::min<std::size_t>(fields.size(), 3) + 1),
                 "expected 3 fields, found " + std::to_string(fields.size()));
        }
        const std::int64_t period = parse_int(fields[0], row, 1, "period");
        if (have_previous && period <= previous) fail(row, 1, "periods must be strictly increasing");
        have_previous = true;
        previous = period;
        const std::int64_t n = parse_int(fields[1], row, 2, "n_credits");
        if (n < 1) fail(row, 2, "n_credits must be >= 1");
        std::int64_t d = 0;
        if (rates) {
            const double rate = parse_real(fields[2], row, 3, "default_rate");
            if (rate < 0.0 || rate > 1.0) fail(row, 3, "default_rate must lie in [0, 1]");
            d = std::llround(rate * static_cast<double>(n));
        } else {
            d = parse_int(fields[2], row, 3, "n_defaults");
        }
        if (d < 0) fail(row, 3, "n_defaults must be >= 0");
        if (d > n) fail(row, 3, "n_defaults exceeds n_credits");
        series.periods.push_back({n, d});
    }
    return series;
}

DefaultSeries read_series_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_series_csv(in, path.stem().string());
}

void write_series_csv(std::ostream& out, const DefaultSeries& series) {
    out << "period,n_credits,n_defaults\n";
    for (std::size_t t = 0; t < series.size(); ++t) {
        out << t + 1 << ',' << series.periods[t].n_credits << ',' << series.periods[t].n_defaults << '\n';
    }
}

void write_series_file(const std::filesystem::path& path, const DefaultSeries& series) {
    std::ostringstream os;
    write_series_csv(os, series);
    write_text_file(path, os.str());
}

void write_draws_csv(std::ostream& out, const PosteriorDraws& draws) {
    out << "chain,iter,name,value\n";
    for (std::size_t c = 0; c < draws.chains; ++c) {
        for (std::size_t s = 0; s < draws.draws_per_chain; ++s) {
            for (std::size_t j = 0; j < draws.num_params(); ++j) {
                out << c + 1 << ',' << s + 1 << ',' << draws.names[j] << ',' << format_double(draws.at(c, s, j))
                    << '\n';
            }
        }
    }
}

void write_sampler_stats_csv(std::ostream& out, const PosteriorDraws& draws) {
    out << "chain,iter,accept_stat,step_size,tree_depth,n_leapfrog,divergent,energy\n";
    for (std::size_t c = 0; c < draws.chains; ++c) {
        for (std::size_t s = 0; s < draws.draws_per_chain; ++s) {
            const SamplerStats& st = draws.stats[c * draws.draws_per_chain + s];
            out << c + 1 << ',' << s + 1 << ',' << format_double(st.accept_stat) << ','
                << format_double(st.step_size) << ',' << st.tree_depth << ',' << st.n_leapfrog << ','
                << (st.divergent ? 1 : 0) << ',' << format_double(st.energy) << '\n';
        }
    }
}

PosteriorDraws read_draws_csv(std::istream& in) {
    std::string line;
    int row = 1;
    if (!std::getline(in, line) || lower(trim(line)) != "chain,iter,name,value") {
        throw ParseError("draws file must start with header 'chain,iter,name,value'", 1, 1);
    }
    struct Entry {
        std::int64_t chain;
        std::int64_t iter;
        std::size_t name;
        double value;
    };
    std::vector<Entry> entries;
    std::vector<std::string> names;
    std::map<std::string, std::size_t> index;
    std::int64_t chains = 0;
    std::int64_t iters = 0;
    while (std::getline(in, line)) {
        ++row;
        if (blank(line)) continue;
        const auto f = split_fields(line);
        if (f.size() != 4) fail(row, 1, "expected 4 fields");
        const std::int64_t c = parse_int(f[0], row, 1, "chain");
        const std::int64_t s = parse_int(f[1], row, 2, "iter");
        if (c < 1) fail(row, 1, "chain must be >= 1");
        if (s < 1) fail(row, 2, "iter must be >= 1");
        if (f[2].empty()) fail(row, 3, "empty parameter name");
        auto [it, inserted] = index.try_emplace(f[2], names.size());
        if (inserted) names.push_back(f[2]);
        entries.push_back({c, s, it->second, parse_real(f[3], row, 4, "value")});
        chains = std::max(chains, c);
        iters = std::max(iters, s);
    }
    if (entries.empty()) throw ParseError("draws file has no rows", 2, 1);
    PosteriorDraws d;
    d.names = names;
    d.chains = static_cast<std::size_t>(chains);
    d.draws_per_chain = static_cast<std::size_t>(iters);
    const std::size_t K = names.size();
    if (entries.size() != d.chains * d.draws_per_chain * K) {
        throw ParseError("draws file is not a complete chain x iter x name grid", row, 1);
    }
    d.values.assign(entries.size(), std::numeric_limits<double>::quiet_NaN());
    for (const Entry& e : entries) {
        const std::size_t pos =
            ((static_cast<std::size_t>(e.chain) - 1) * d.draws_per_chain + static_cast<std::size_t>(e.iter) - 1) * K +
            e.name;
        d.values[pos] = e.value;
    }
    if (std::any_of(d.values.begin(), d.values.end(), [](double v) { return std::isnan(v); })) {
        throw ParseError("draws file has duplicate or missing entries", row, 1);
    }
    return d;
}

PosteriorDraws read_draws_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_draws_csv(in);
}

Json to_json(const Interval& interval) { return Json{{"lo", interval.lo}, {"hi", interval.hi}}; }

Json to_json(const EstimateReport& r, bool include_replicates) {
    Json j;
    j["method"] = std::string(to_string(r.method));
    j["p_hat"] = r.p_hat;
    j["rho_hat"] = r.rho_hat;
    j["interval_p"] = r.interval_p ? to_json(*r.interval_p) : Json(nullptr);
    j["interval_rho"] = r.interval_rho ? to_json(*r.interval_rho) : Json(nullptr);
    j["interval_level"] = r.interval_level;
    j["n_bootstrap"] = r.n_bootstrap;
    j["convergence_flag"] = r.convergence_flag;
    j["log_likelihood"] = r.log_likelihood ? Json(*r.log_likelihood) : Json(nullptr);
    j["flags"] = r.flags;
    j["failure_fraction"] = r.failure_fraction;
    if (include_replicates) {
        j["replicates_p"] = r.replicates_p;
        j["replicates_rho"] = r.replicates_rho;
    }
    return j;
}

Json to_json(const ParamSummary& s) {
    return Json{{"mean", s.mean}, {"sd", s.sd},   {"q025", s.q025}, {"q05", s.q05},  {"q25", s.q25},
                {"q50", s.q50},   {"q75", s.q75}, {"q95", s.q95},   {"q975", s.q975}};
}

Json to_json(const PriorConfig& p) {
    return Json{{"mu_p", p.mu_p}, {"mu_rho", p.mu_rho}, {"phi_rho", p.phi_rho}, {"a", p.a}};
}

Json to_json(const SamplerConfig& s) {
    return Json{{"chains", s.chains},
                {"warmup", s.warmup},
                {"draws", s.draws},
                {"target_accept", s.target_accept},
                {"max_depth", s.max_depth},
                {"seed", s.seed},
                {"parameterization", std::string(to_string(s.parameterization))},
                {"include_likelihood", s.include_likelihood}};
}

Json to_json(const ForecastResult& f) {
    return Json{{"horizon_exposure", f.horizon_exposure},
                {"median_rate", f.median_rate},
                {"interval50", to_json(f.interval50)},
                {"interval90", to_json(f.interval90)},
                {"n_draws", f.draws.size()}};
}

Json draws_summary_json(const PosteriorDraws& draws) {
    Json j;
    j["label"] = draws.meta.label;
    j["chains"] = draws.chains;
    j["draws_per_chain"] = draws.draws_per_chain;
    j["warmup"] = draws.meta.warmup;
    j["seed"] = draws.meta.seed;
    j["prior"] = to_json(draws.meta.prior);
    j["parameterization"] = std::string(to_string(draws.meta.parameterization));
    j["include_likelihood"] = draws.meta.include_likelihood;
    j["step_sizes"] = draws.step_sizes;

    const bool diag = draws.chains >= 2 && draws.draws_per_chain >= 4;
    Diagnostics d;
    if (diag) d = diagnostics(draws);
    Json params = Json::object();
    for (std::size_t k = 0; k < draws.num_params(); ++k) {
        Json pj = to_json(summarize(draws.column(k)));
        auto number_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
        pj["rhat"] = diag ? number_or_null(d.rhat[k]) : Json(nullptr);
        pj["ess_bulk"] = diag ? number_or_null(d.ess_bulk[k]) : Json(nullptr);
        params[draws.names[k]] = pj;
    }
    j["parameters"] = params;
    j["divergences"] = draws.divergences();
    j["divergence_warning"] = draws.divergence_warning;
    j["max_treedepth_hits"] = draws.max_treedepth_hits();
    if (diag) j["rhat_undefined"] = d.undefined;
    return j;
}

void write_density_csv(std::ostream& out, const DensityGrid& grid) {
    out << "x,density\n";
    for (std::size_t i = 0; i < grid.x.size(); ++i) {
        out << format_double(grid.x[i]) << ',' << format_double(grid.density[i]) << '\n';
    }
}

std::vector<double> autocorrelation(const std::vector<double>& x, std::size_t max_lag) {
    const std::size_t n = x.size();
    std::vector<double> acf;
    if (n == 0) return acf;
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double c0 = 0.0;
    for (double v : x) c0 += (v - mean) * (v - mean);
    for (std::size_t lag = 0; lag <= std::min(max_lag, n - 1); ++lag) {
        double c = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) c += (x[i] - mean) * (x[i + lag] - mean);
        acf.push_back(c0 > 0.0 ? c / c0 : (lag == 0 ? 1.0 : 0.0));
    }
    return acf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace vcm
