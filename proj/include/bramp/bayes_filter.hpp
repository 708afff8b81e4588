#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bramp/dynamics.hpp"
#include "bramp/random.hpp"

namespace bramp {

/// Weighted sample approximation of the parameter posterior.
template <int NP>
struct ParticleSet {
    using Theta = Vec<NP>;

    std::vector<Theta> thetas;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const { return thetas.size(); }

    void validate() const {
        if (thetas.empty()) throw std::invalid_argument("ParticleSet: no particles");
        if (thetas.size() != weights.size()) throw std::invalid_argument("ParticleSet: size mismatch");
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw std::invalid_argument("ParticleSet: negative weight");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("ParticleSet: weights do not sum to 1");
    }
};

template <int NP>
ParticleSet<NP> init_particles(const Vec<NP>& lo, const Vec<NP>& hi, std::size_t n, RandomStream& rng) {
    if (n == 0) throw std::invalid_argument("init_particles: n must be >= 1");
    for (int d = 0; d < NP; ++d) {
        if (!(lo[d] <= hi[d])) throw std::invalid_argument("init_particles: empty parameter box");
    }
    ParticleSet<NP> ps;
    ps.thetas.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec<NP> th;
        for (int d = 0; d < NP; ++d) th[d] = rng.uniform(lo[d], hi[d]);
        ps.thetas.push_back(th);
    }
    ps.weights.assign(n, 1.0 / static_cast<double>(n));
    return ps;
}

/// Equal-weight particle set over a fixed list of candidates, `per_candidate` copies each.
template <int NP>
ParticleSet<NP> init_particles_on(const std::vector<Vec<NP>>& candidates, std::size_t per_candidate) {
    if (candidates.empty() || per_candidate == 0) throw std::invalid_argument("init_particles_on: empty");
    ParticleSet<NP> ps;
    for (const auto& c : candidates) {
        for (std::size_t i = 0; i < per_candidate; ++i) ps.thetas.push_back(c);
    }
    ps.weights.assign(ps.thetas.size(), 1.0 / static_cast<double>(ps.thetas.size()));
    return ps;
}

/// theta <- clip(theta + e), e ~ N(0, diag(jitter_std^2)). Weights are untouched.
template <int NP>
ParticleSet<NP> propagate(const ParticleSet<NP>& ps, const In<NP>& jitter_std, const In<NP>& lo,
                          const In<NP>& hi, RandomStream& rng) {
    ParticleSet<NP> out = ps;
    if ((jitter_std.array() == 0.0).all()) return out;
    for (auto& th : out.thetas) {
        for (int d = 0; d < NP; ++d) {
            if (jitter_std[d] > 0.0) th[d] = std::clamp(th[d] + jitter_std[d] * rng.normal(), lo[d], hi[d]);
        }
    }
    return out;
}

template <int NP>
struct ReweightResult {
    ParticleSet<NP> particles;
    /// Every likelihood underflowed; weights were reset to uniform.
    bool degenerate = false;
};

/// w_i <- w_i q(x_new; theta_i, x_prev, u_prev) / sum_j (...).
///
/// For an equal-weighted input this is exactly the normalized likelihood ratio.
/// Computed in the log domain with the largest term factored out.
template <int NX, int NU, int NP>
ReweightResult<NP> reweight(const ParticleSet<NP>& ps, const In<NX>& x_prev, const In<NU>& u_prev,
                            const In<NX>& x_new, const SystemModel<NX, NU, NP>& model) {
    const std::size_t n = ps.size();
    std::vector<double> log_w(n);
    double max_log = -std::numeric_limits<double>::infinity();
    double max_lq = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double lq = log_transition_density(model, x_new, x_prev, u_prev, ps.thetas[i]);
        log_w[i] = ps.weights[i] > 0.0 ? lq + std::log(ps.weights[i]) : -std::numeric_limits<double>::infinity();
        max_log = std::max(max_log, log_w[i]);
        if (ps.weights[i] > 0.0) max_lq = std::max(max_lq, lq);
    }

    ReweightResult<NP> result{ps, false};
    auto& w = result.particles.weights;
    if (!std::isfinite(max_log) || std::exp(max_lq) == 0.0) {
        w.assign(n, 1.0 / static_cast<double>(n));
        result.degenerate = true;
        return result;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(log_w[i] - max_log);
        total += w[i];
    }
    for (auto& wi : w) wi /= total;
    return result;
}

template <int NP>
double effective_sample_size(const ParticleSet<NP>& ps) {
    double sq = 0.0;
    for (double w : ps.weights) sq += w * w;
    return 1.0 / sq;
}

/// Multinomial resampling: each draw s ~ U(0,1) picks the first j with
/// cumulative weight >= s.
template <int NP>
ParticleSet<NP> resample_inverse_transform(const ParticleSet<NP>& ps, RandomStream& rng) {
    const std::size_t n = ps.size();
    std::vector<double> cdf(n);
    std::partial_sum(ps.weights.begin(), ps.weights.end(), cdf.begin());
    cdf.back() = std::max(cdf.back(), 1.0);

    ParticleSet<NP> out;
    out.thetas.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = rng.uniform();
        auto it = std::lower_bound(cdf.begin(), cdf.end(), s);
        auto j = std::min(static_cast<std::size_t>(std::distance(cdf.begin(), it)), n - 1);
        // rounding at the top of the cdf can land on a trailing zero-weight entry
        while (j > 0 && ps.weights[j] == 0.0) --j;
        out.thetas.push_back(ps.thetas[j]);
    }
    out.weights.assign(n, 1.0 / static_cast<double>(n));
    return out;
}

/// Weighted mean plus a per-dimension weighted quantile function.
template <int NP>
class PosteriorSummary {
  public:
    explicit PosteriorSummary(const ParticleSet<NP>& ps) {
        ps.validate();
        mean_.setZero();
        for (std::size_t i = 0; i < ps.size(); ++i) mean_ += ps.weights[i] * ps.thetas[i];
        for (int d = 0; d < NP; ++d) {
            auto& col = sorted_[d];
            col.resize(ps.size());
            for (std::size_t i = 0; i < ps.size(); ++i) col[i] = {ps.thetas[i][d], ps.weights[i]};
            std::stable_sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            double var = 0.0;
            for (std::size_t i = 0; i < ps.size(); ++i) {
                const double dev = ps.thetas[i][d] - mean_[d];
                var += ps.weights[i] * dev * dev;
            }
            std_[d] = std::sqrt(var);
        }
    }

    [[nodiscard]] const Vec<NP>& mean() const { return mean_; }
    [[nodiscard]] const Vec<NP>& stddev() const { return std_; }

    /// Smallest value in dimension d whose cumulative weight reaches p.
    [[nodiscard]] double quantile(int d, double p) const {
        const auto& col = sorted_.at(static_cast<std::size_t>(d));
        double cum = 0.0;
        for (const auto& [value, weight] : col) {
            if (weight <= 0.0) continue;
            cum += weight;
            if (cum >= p - 1e-12) return value;
        }
        return col.back().first;
    }

    /// (value, weight) pairs of dimension d sorted by value.
    [[nodiscard]] const std::vector<std::pair<double, double>>& sorted(int d) const {
        return sorted_.at(static_cast<std::size_t>(d));
    }

  private:
    Vec<NP> mean_;
    Vec<NP> std_;
    std::array<std::vector<std::pair<double, double>>, NP> sorted_;
};

template <int NP>
PosteriorSummary<NP> posterior_summary(const ParticleSet<NP>& ps) {
    return PosteriorSummary<NP>(ps);
}

/// Filter knobs. The jitter default is half a percent of the box width per dimension.
struct FilterSettings {
    std::size_t particles = 1000;
    double jitter_fraction = 0.005;
    /// Resample only when ESS / N falls below this; 0 disables the gate (resample every step).
    double ess_threshold = 0.0;
};

template <int NP>
struct FilterStepResult {
    ParticleSet<NP> particles;
    bool degenerate = false;
    bool resampled = false;
};

/// One estimation step: propagate, reweight on (x_prev, u_prev) -> x_new, resample.
template <int NX, int NU, int NP>
FilterStepResult<NP> filter_step(const ParticleSet<NP>& ps, const In<NX>& x_prev, const In<NU>& u_prev,
                                         const In<NX>& x_new, const SystemModel<NX, NU, NP>& model,
                                         const FilterSettings& settings, RandomStream& rng) {
    const Vec<NP> jitter = settings.jitter_fraction * (model.param_hi - model.param_lo);
    auto moved = propagate(ps, jitter, model.param_lo, model.param_hi, rng);
    auto rw = reweight(moved, x_prev, u_prev, x_new, model);
    FilterStepResult<NP> out{std::move(rw.particles), rw.degenerate, false};
    const double n = static_cast<double>(out.particles.size());
    if (settings.ess_threshold <= 0.0 || effective_sample_size(out.particles) < settings.ess_threshold * n) {
        out.particles = resample_inverse_transform(out.particles, rng);
        out.resampled = true;
    }
    return out;
}

}  // namespace bramp
