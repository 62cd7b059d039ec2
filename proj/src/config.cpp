#include "vcm/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "vcm/error.hpp"

namespace vcm {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
    T v{};
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw ConfigError(std::string(key) + ": cannot parse '" + std::string(value) + "'");
    }
    return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(value) + "'");
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view raw) {
    const std::string value = trim(raw);
    auto real = [&] { return parse_number<double>(key, value); };
    auto integer = [&] { return parse_number<int>(key, value); };

    if (key == "prior.mu_p") prior.mu_p = real();
    else if (key == "prior.mu_rho") prior.mu_rho = real();
    else if (key == "prior.phi_rho") prior.phi_rho = real();
    else if (key == "prior.a") prior.a = real();
    else if (key == "prior.preset") {
        if (value == "corporate") prior = PriorConfig::corporate();
        else if (value == "default") prior = PriorConfig{};
        else throw ConfigError("prior.preset: expected 'default' or 'corporate'");
    }
    else if (key == "sampler.chains") sampler.chains = integer();
    else if (key == "sampler.warmup") sampler.warmup = integer();
    else if (key == "sampler.draws") sampler.draws = integer();
    else if (key == "sampler.target_accept") sampler.target_accept = real();
    else if (key == "sampler.max_depth") sampler.max_depth = integer();
    else if (key == "sampler.seed") sampler.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "sampler.parameterization") sampler.parameterization = parse_parameterization(value);
    else if (key == "sampler.include_likelihood") sampler.include_likelihood = parse_bool(key, value);
    else if (key == "mle.quad_order") mle.quad_order = integer();
    else if (key == "mle.tol") mle.tol = real();
    else if (key == "mle.max_iter") mle.max_iter = integer();
    else if (key == "bootstrap.n_rep") bootstrap.n_rep = integer();
    else if (key == "bootstrap.level") bootstrap.level = real();
    else if (key == "bootstrap.trace_n_rep") trace_n_rep = integer();
    else if (key == "io.out_dir") io.out_dir = value;
    else if (key == "io.format") {
        if (value != "json" && value != "csv") throw ConfigError("io.format: expected 'json' or 'csv'");
        io.format = value;
    }
    else if (key == "run.threads") threads = parse_number<unsigned>(key, value);
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    return {
        {"prior.mu_p", format_double(prior.mu_p)},
        {"prior.mu_rho", format_double(prior.mu_rho)},
        {"prior.phi_rho", format_double(prior.phi_rho)},
        {"prior.a", format_double(prior.a)},
        {"sampler.chains", std::to_string(sampler.chains)},
        {"sampler.warmup", std::to_string(sampler.warmup)},
        {"sampler.draws", std::to_string(sampler.draws)},
        {"sampler.target_accept", format_double(sampler.target_accept)},
        {"sampler.max_depth", std::to_string(sampler.max_depth)},
        {"sampler.seed", std::to_string(sampler.seed)},
        {"sampler.parameterization", std::string(to_string(sampler.parameterization))},
        {"sampler.include_likelihood", sampler.include_likelihood ? "true" : "false"},
        {"mle.quad_order", std::to_string(mle.quad_order)},
        {"mle.tol", format_double(mle.tol)},
        {"mle.max_iter", std::to_string(mle.max_iter)},
        {"bootstrap.n_rep", std::to_string(bootstrap.n_rep)},
        {"bootstrap.level", format_double(bootstrap.level)},
        {"bootstrap.trace_n_rep", std::to_string(trace_n_rep)},
        {"io.out_dir", io.out_dir},
        {"io.format", io.format},
    };
}

std::string RunConfig::to_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : entries()) os << k << " = " << v << '\n';
    return os.str();
}

Json RunConfig::to_json() const {
    Json j = Json::object();
    for (const auto& [k, v] : entries()) j[k] = v;
    return j;
}

void RunConfig::validate() const {
    prior.validate();
    sampler.validate();
    if (mle.quad_order < 1 || mle.quad_order > kMaxQuadratureOrder) throw ConfigError("mle.quad_order out of range");
    if (!(mle.tol > 0.0)) throw ConfigError("mle.tol must be positive");
    if (mle.max_iter < 1) throw ConfigError("mle.max_iter must be >= 1");
    if (bootstrap.n_rep < 100) throw ConfigError("bootstrap.n_rep must be >= 100");
    if (trace_n_rep < 100) throw ConfigError("bootstrap.trace_n_rep must be >= 100");
    if (!(bootstrap.level > 0.0 && bootstrap.level < 1.0)) throw ConfigError("bootstrap.level must lie in (0, 1)");
}

RunConfig default_run_config() {
    RunConfig c;
    if (const char* dir = std::getenv("VCM_OUT_DIR"); dir && *dir) c.io.out_dir = dir;
    return c;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("line " + std::to_string(row) + ": expected 'key = value'", row, 1);
        std::string key = trim(std::string_view(t).substr(0, eq));
        std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw ParseError("line " + std::to_string(row) + ": empty key", row, 1);
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    for (const auto& [key, value] : parse_config_text(text.str())) base.set(key, value);
    return base;
}

}  // namespace vcm
