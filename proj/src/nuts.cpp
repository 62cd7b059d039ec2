#include "vcm/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vcm/error.hpp"
#include "vcm/special.hpp"

namespace vcm {

void NutsSettings::validate() const {
    if (warmup < 0) throw ConfigError("sampler.warmup must be >= 0");
    if (draws < 1) throw ConfigError("sampler.draws must be >= 1");
    if (!(target_accept > 0.0 && target_accept < 1.0)) throw ConfigError("sampler.target_accept must lie in (0, 1)");
    if (max_depth < 1 || max_depth > 30) throw ConfigError("sampler.max_depth must lie in [1, 30]");
    if (!(initial_step_size > 0.0) || !std::isfinite(initial_step_size)) {
        throw ConfigError("initial step size must be positive");
    }
}

double StandardNormalModel::log_density_gradient(std::span<const double> q, std::span<double> grad) const {
    double lp = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        lp -= 0.5 * q[i] * q[i];
        if (!grad.empty()) grad[i] = -q[i];
    }
    return lp;
}

PhasePoint make_phase_point(const LogDensityModel& model, std::vector<double> q, std::vector<double> p) {
    PhasePoint z;
    z.q = std::move(q);
    z.p = std::move(p);
    z.grad.assign(z.q.size(), 0.0);
    z.log_density = model.log_density_gradient(z.q, z.grad);
    return z;
}

void leapfrog(const LogDensityModel& model, PhasePoint& z, double step_size, std::span<const double> inv_metric) {
    const std::size_t n = z.q.size();
    const double half = 0.5 * step_size;
    for (std::size_t i = 0; i < n; ++i) z.p[i] += half * z.grad[i];
    for (std::size_t i = 0; i < n; ++i) z.q[i] += step_size * inv_metric[i] * z.p[i];
    z.log_density = model.log_density_gradient(z.q, z.grad);
    for (std::size_t i = 0; i < n; ++i) z.p[i] += half * z.grad[i];
}

double hamiltonian(const PhasePoint& z, std::span<const double> inv_metric) {
    double kinetic = 0.0;
    for (std::size_t i = 0; i < z.p.size(); ++i) kinetic += inv_metric[i] * z.p[i] * z.p[i];
    const double h = 0.5 * kinetic - z.log_density;
    return std::isnan(h) ? std::numeric_limits<double>::infinity() : h;
}

namespace {

using Vec = std::vector<double>;

constexpr double kMaxDeltaH = 1000.0;

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void add_to(Vec& acc, const Vec& x) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

Vec sum(const Vec& a, const Vec& b) {
    Vec out(a);
    add_to(out, b);
    return out;
}

// Generalised no-U-turn criterion.
bool no_u_turn(const Vec& p_sharp_minus, const Vec& p_sharp_plus, const Vec& rho) {
    return dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0;
}

class NutsKernel {
public:
    NutsKernel(const LogDensityModel& model, int max_depth, RngStream& rng)
        : model_(model), max_depth_(max_depth), rng_(rng), inv_metric_(model.dimension(), 1.0) {}

    Vec& inv_metric() { return inv_metric_; }
    double step_size = 1.0;

    SamplerStats transition(PhasePoint& z) {
        const std::size_t n = z.q.size();
        sample_momentum(z);
        const double H0 = hamiltonian(z, inv_metric_);

        PhasePoint z_fwd = z;
        PhasePoint z_bck = z;
        PhasePoint z_sample = z;
        PhasePoint z_propose = z;

        Vec p_fwd_fwd = z.p, p_fwd_bck = z.p, p_bck_fwd = z.p, p_bck_bck = z.p;
        const Vec sharp0 = p_sharp(z);
        Vec ps_fwd_fwd = sharp0, ps_fwd_bck = sharp0, ps_bck_fwd = sharp0, ps_bck_bck = sharp0;
        Vec rho = z.p;

        double log_sum_weight = 0.0;
        int n_leapfrog = 0;
        double sum_metro_prob = 0.0;
        int depth = 0;
        divergent_ = false;

        while (depth < max_depth_) {
            Vec rho_fwd(n, 0.0);
            Vec rho_bck(n, 0.0);
            bool valid_subtree = false;
            double log_sum_weight_subtree = kLogZero;

            if (rng_.uniform() > 0.5) {
                rho_bck = rho;
                p_bck_fwd = p_fwd_bck;
                ps_bck_fwd = ps_fwd_bck;
                valid_subtree = build_tree(depth, z_fwd, z_propose, ps_fwd_bck, ps_fwd_fwd, rho_fwd, p_fwd_bck,
                                           p_fwd_fwd, H0, 1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
            } else {
                rho_fwd = rho;
                p_fwd_bck = p_bck_fwd;
                ps_fwd_bck = ps_bck_fwd;
                valid_subtree = build_tree(depth, z_bck, z_propose, ps_bck_fwd, ps_bck_bck, rho_bck, p_bck_fwd,
                                           p_bck_bck, H0, -1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
            }
            if (!valid_subtree) break;
            ++depth;

            if (log_sum_weight_subtree > log_sum_weight) {
                z_sample = z_propose;
            } else if (rng_.uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
                z_sample = z_propose;
            }
            log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

            rho = sum(rho_bck, rho_fwd);
            bool persist = no_u_turn(ps_bck_bck, ps_fwd_fwd, rho);
            persist = persist && no_u_turn(ps_bck_bck, ps_fwd_bck, sum(rho_bck, p_fwd_bck));
            persist = persist && no_u_turn(ps_bck_fwd, ps_fwd_fwd, sum(rho_fwd, p_bck_fwd));
            if (!persist) break;
        }

        z = std::move(z_sample);
        SamplerStats stats;
        stats.accept_stat = n_leapfrog > 0 ? sum_metro_prob / n_leapfrog : 0.0;
        stats.step_size = step_size;
        stats.tree_depth = depth;
        stats.n_leapfrog = n_leapfrog;
        stats.divergent = divergent_;
        stats.energy = hamiltonian(z, inv_metric_);
        stats.log_density = z.log_density;
        return stats;
    }

    // Doubles or halves the step size until the one-step acceptance
    // probability crosses 0.8.
    void init_step_size(const PhasePoint& start) {
        PhasePoint z = start;
        sample_momentum(z);
        double H0 = hamiltonian(z, inv_metric_);
        leapfrog(model_, z, step_size, inv_metric_);
        double delta_H = H0 - hamiltonian(z, inv_metric_);
        const double threshold = std::log(0.8);
        const int direction = delta_H > threshold ? 1 : -1;

        for (int iter = 0; iter < 2000; ++iter) {
            z = start;
            sample_momentum(z);
            H0 = hamiltonian(z, inv_metric_);
            leapfrog(model_, z, step_size, inv_metric_);
            delta_H = H0 - hamiltonian(z, inv_metric_);
            if (direction == 1 && !(delta_H > threshold)) return;
            if (direction == -1 && !(delta_H < threshold)) return;
            step_size = direction == 1 ? 2.0 * step_size : 0.5 * step_size;
            if (step_size > 1e7) throw NumericalError("step size search diverged upward; posterior is improper?");
            if (step_size < 1e-300) throw NumericalError("step size search collapsed to zero");
        }
        throw NumericalError("step size search did not terminate");
    }

private:
    void sample_momentum(PhasePoint& z) {
        for (std::size_t i = 0; i < z.p.size(); ++i) z.p[i] = rng_.normal() / std::sqrt(inv_metric_[i]);
    }

    Vec p_sharp(const PhasePoint& z) const {
        Vec out(z.p.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = inv_metric_[i] * z.p[i];
        return out;
    }

    bool build_tree(int depth, PhasePoint& z, PhasePoint& z_propose, Vec& ps_beg, Vec& ps_end, Vec& rho,
                    Vec& p_beg, Vec& p_end, double H0, double sign, int& n_leapfrog, double& log_sum_weight,
                    double& sum_metro_prob) {
        const std::size_t n = z.q.size();
        if (depth == 0) {
            leapfrog(model_, z, sign * step_size, inv_metric_);
            ++n_leapfrog;
            const double h = hamiltonian(z, inv_metric_);
            if (h - H0 > kMaxDeltaH) divergent_ = true;
            log_sum_weight = log_sum_exp(log_sum_weight, H0 - h);
            sum_metro_prob += H0 - h > 0.0 ? 1.0 : std::exp(H0 - h);
            z_propose = z;
            ps_beg = p_sharp(z);
            ps_end = ps_beg;
            add_to(rho, z.p);
            p_beg = z.p;
            p_end = p_beg;
            return !divergent_;
        }

        // Left subtree
        double log_sum_weight_init = kLogZero;
        Vec p_init_end(n), ps_init_end(n), rho_init(n, 0.0);
        if (!build_tree(depth - 1, z, z_propose, ps_beg, ps_init_end, rho_init, p_beg, p_init_end, H0, sign,
                        n_leapfrog, log_sum_weight_init, sum_metro_prob)) {
            return false;
        }

        // Right subtree
        PhasePoint z_propose_final = z;
        double log_sum_weight_final = kLogZero;
        Vec p_final_beg(n), ps_final_beg(n), rho_final(n, 0.0);
        if (!build_tree(depth - 1, z, z_propose_final, ps_final_beg, ps_end, rho_final, p_final_beg, p_end, H0,
                        sign, n_leapfrog, log_sum_weight_final, sum_metro_prob)) {
            return false;
        }

        const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
        log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
        if (log_sum_weight_final > log_sum_weight_subtree) {
            z_propose = std::move(z_propose_final);
        } else if (rng_.uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
            z_propose = std::move(z_propose_final);
        }

        const Vec rho_subtree = sum(rho_init, rho_final);
        add_to(rho, rho_subtree);
        bool persist = no_u_turn(ps_beg, ps_end, rho_subtree);
        persist = persist && no_u_turn(ps_beg, ps_final_beg, sum(rho_init, p_final_beg));
        persist = persist && no_u_turn(ps_init_end, ps_end, sum(rho_final, p_init_end));
        return persist;
    }

    const LogDensityModel& model_;
    int max_depth_;
    RngStream& rng_;
    Vec inv_metric_;
    bool divergent_ = false;
};

// Nesterov dual averaging on log step size.
class DualAveraging {
public:
    DualAveraging(double delta, double mu) : delta_(delta), mu_(mu) {}
    void set_mu(double mu) { mu_ = mu; }
    void restart() {
        counter_ = 0.0;
        s_bar_ = 0.0;
        x_bar_ = 0.0;
    }
    double learn(double accept_stat) {
        counter_ += 1.0;
        accept_stat = std::min(1.0, accept_stat);
        const double eta = 1.0 / (counter_ + kT0);
        s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept_stat);
        const double x = mu_ - s_bar_ * std::sqrt(counter_) / kGamma;
        const double x_eta = std::pow(counter_, -kKappa);
        x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
        return std::exp(x);
    }
    double final_step_size() const { return std::exp(x_bar_); }

private:
    static constexpr double kGamma = 0.05;
    static constexpr double kKappa = 0.75;
    static constexpr double kT0 = 10.0;
    double delta_;
    double mu_;
    double counter_ = 0.0;
    double s_bar_ = 0.0;
    double x_bar_ = 0.0;
};

// Diagonal metric estimation in doubling windows between a fast initial
// buffer and a terminal buffer.
class MetricWindows {
public:
    explicit MetricWindows(int num_warmup, std::size_t dim) : num_warmup_(num_warmup), mean_(dim), m2_(dim) {
        enabled_ = num_warmup >= 20;
        if (init_buffer_ + base_window_ + term_buffer_ > num_warmup) {
            init_buffer_ = static_cast<int>(0.15 * num_warmup);
            term_buffer_ = static_cast<int>(0.1 * num_warmup);
            base_window_ = num_warmup - (init_buffer_ + term_buffer_);
        }
        window_size_ = base_window_;
        next_window_ = init_buffer_ + base_window_ - 1;
    }

    // Returns true when the metric was updated.
    bool learn(Vec& inv_metric, const Vec& q) {
        if (!enabled_) return false;
        if (in_window()) add_sample(q);
        if (end_of_window()) {
            compute_next_window();
            const double n = static_cast<double>(count_);
            for (std::size_t i = 0; i < inv_metric.size(); ++i) {
                const double var = count_ > 1 ? m2_[i] / (n - 1.0) : 1.0;
                inv_metric[i] = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
            }
            count_ = 0;
            std::fill(mean_.begin(), mean_.end(), 0.0);
            std::fill(m2_.begin(), m2_.end(), 0.0);
            ++counter_;
            return true;
        }
        ++counter_;
        return false;
    }

private:
    bool in_window() const {
        return counter_ >= init_buffer_ && counter_ < num_warmup_ - term_buffer_ && counter_ != num_warmup_;
    }
    bool end_of_window() const { return counter_ == next_window_ && counter_ != num_warmup_; }
    void compute_next_window() {
        const int last = num_warmup_ - term_buffer_ - 1;
        if (next_window_ == last) return;
        window_size_ *= 2;
        next_window_ = counter_ + window_size_;
        if (next_window_ != last && next_window_ + 2 * window_size_ >= num_warmup_ - term_buffer_) {
            next_window_ = last;
        }
    }
    void add_sample(const Vec& q) {
        ++count_;
        const double n = static_cast<double>(count_);
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double delta = q[i] - mean_[i];
            mean_[i] += delta / n;
            m2_[i] += delta * (q[i] - mean_[i]);
        }
    }

    int num_warmup_;
    bool enabled_ = true;
    int init_buffer_ = 75;
    int term_buffer_ = 50;
    int base_window_ = 25;
    int window_size_ = 0;
    int next_window_ = 0;
    int counter_ = 0;
    std::size_t count_ = 0;
    Vec mean_;
    Vec m2_;
};

}  // namespace

ChainResult run_nuts_chain(const LogDensityModel& model, std::vector<double> init, const NutsSettings& settings,
                           RngStream& rng) {
    settings.validate();
    const std::size_t dim = model.dimension();
    if (init.size() != dim) throw DomainError("initial point has wrong dimension");

    PhasePoint z = make_phase_point(model, std::move(init), Vec(dim, 0.0));
    if (!std::isfinite(z.log_density)) throw NumericalError("initial point has non-finite log density");

    NutsKernel kernel(model, settings.max_depth, rng);
    kernel.step_size = settings.initial_step_size;
    kernel.init_step_size(z);

    DualAveraging adapt(settings.target_accept, std::log(10.0 * settings.initial_step_size));
    MetricWindows windows(settings.warmup, dim);

    for (int it = 0; it < settings.warmup; ++it) {
        const SamplerStats s = kernel.transition(z);
        kernel.step_size = adapt.learn(s.accept_stat);
        if (windows.learn(kernel.inv_metric(), z.q)) {
            kernel.init_step_size(z);
            adapt.set_mu(std::log(10.0 * kernel.step_size));
            adapt.restart();
        }
    }
    if (settings.warmup > 0) kernel.step_size = adapt.final_step_size();

    ChainResult out;
    out.dimension = dim;
    out.draws.reserve(static_cast<std::size_t>(settings.draws) * dim);
    out.stats.reserve(static_cast<std::size_t>(settings.draws));
    for (int it = 0; it < settings.draws; ++it) {
        out.stats.push_back(kernel.transition(z));
        out.draws.insert(out.draws.end(), z.q.begin(), z.q.end());
    }
    out.inv_metric = kernel.inv_metric();
    out.step_size = kernel.step_size;
    return out;
}

}  // namespace vcm
