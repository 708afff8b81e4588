#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "bramp/diagnostics.hpp"
#include "bramp/harness/benchmark.hpp"

namespace bramp {

struct ConsistencyReport {
    BlindRegion first;     // blind region at the first context alone
    BlindRegion second;    // at the second context alone
    BlindRegion combined;  // both contexts
    /// Member sharing a blind zone with the true theta at the first context.
    std::optional<std::size_t> partner;
    /// Per seed, final posterior mass on the true theta with inputs alternating between both contexts.
    std::vector<double> visiting_true_mass;
    /// Per seed, final posterior mass on the partner with the input held at the first context.
    std::vector<double> stuck_partner_mass;

    [[nodiscard]] double visiting_success_rate(double threshold = 0.95) const {
        if (visiting_true_mass.empty()) return 0.0;
        const auto hits = std::count_if(visiting_true_mass.begin(), visiting_true_mass.end(),
                                        [threshold](double m) { return m > threshold; });
        return static_cast<double>(hits) / static_cast<double>(visiting_true_mass.size());
    }
};

inline AffineInputModel consistency_model(const ConsistencyConfig& c) {
    Vec<2> lo = c.thetas.front();
    Vec<2> hi = c.thetas.front();
    for (const auto& th : c.thetas) {
        lo = lo.cwiseMin(th);
        hi = hi.cwiseMax(th);
    }
    return make_affine_input_model(lo, hi, c.noise_std, c.dt);
}

/// Likelihood matrix at context (x = 0, u) on a grid spanning every candidate mean +- 8 sigma.
inline LikelihoodMatrix consistency_likelihoods(const ConsistencyConfig& c, double u) {
    const auto model = consistency_model(c);
    const Vec<1> x = Vec<1>::Zero();
    const Vec<1> uv = Vec<1>::Constant(u);
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < c.thetas.size(); ++i) {
        const double mean = rk4_step(model, x, uv, c.thetas[i])[0];
        lo = i == 0 ? mean : std::min(lo, mean);
        hi = i == 0 ? mean : std::max(hi, mean);
    }
    lo -= 8.0 * c.noise_std;
    hi += 8.0 * c.noise_std;
    const int n = static_cast<int>(c.grid_points);
    const auto grid = observation_slice<1>(x, 0, lo, hi, n);
    return likelihood_matrix(model, c.thetas, x, uv, grid, (hi - lo) / (n - 1));
}

/// Posterior mass on candidate `index` after `steps` transitions; `input(k)` gives u_k.
template <typename Input>
double candidate_mass_after(const ConsistencyConfig& c, std::uint64_t seed, std::size_t index, Input&& input) {
    const auto model = consistency_model(c);
    RandomStream process(seed, kProcessStream);
    RandomStream filter_rng(seed, kFilterStream);
    FilterSettings fs;
    fs.jitter_fraction = 0.0;
    fs.ess_threshold = c.ess_threshold;
    auto ps = init_particles_on(c.thetas, c.particles_per_theta);
    const Vec<2> truth = c.thetas[c.true_index];
    Vec<1> x = Vec<1>::Zero();
    for (std::size_t k = 0; k < c.steps; ++k) {
        const Vec<1> u = Vec<1>::Constant(input(k));
        const Vec<1> w = Vec<1>::Constant(process.normal());
        const Vec<1> x_next = step_stochastic(model, x, u, truth, w);
        ps = filter_step(ps, x, u, x_next, model, fs, filter_rng).particles;
        x = x_next;
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps.thetas[i] == c.thetas[index]) mass += ps.weights[i];
    }
    return mass;
}

inline ConsistencyReport run_consistency(const ConsistencyConfig& c, std::uint64_t base_seed) {
    ConsistencyReport rep;
    const auto lm1 = consistency_likelihoods(c, c.contexts[0]);
    const auto lm2 = consistency_likelihoods(c, c.contexts[1]);
    rep.first = blind_regions(lm1, c.tol);
    rep.second = blind_regions(lm2, c.tol);
    rep.combined = combine_regions(rep.first, rep.second, stack(lm1, lm2), c.tol);

    const int t = static_cast<int>(c.true_index);
    for (const auto& zone : rep.first.zones) {
        if (std::find(zone.begin(), zone.end(), t) == zone.end()) continue;
        for (int i : zone) {
            if (i != t) {
                rep.partner = static_cast<std::size_t>(i);
                break;
            }
        }
    }

    rep.visiting_true_mass.resize(c.seeds);
    rep.stuck_partner_mass.resize(c.seeds);
    parallel_for(c.seeds, [&](std::size_t s) {
        const std::uint64_t seed = base_seed + s;
        rep.visiting_true_mass[s] =
            candidate_mass_after(c, seed, c.true_index, [&c](std::size_t k) { return c.contexts[k % 2]; });
        if (rep.partner) {
            rep.stuck_partner_mass[s] =
                candidate_mass_after(c, seed, *rep.partner, [&c](std::size_t) { return c.contexts[0]; });
        }
    });
    return rep;
}

inline std::string zones_to_string(const BlindRegion& br) {
    if (br.empty()) return "{}";
    std::string s = "{";
    for (std::size_t z = 0; z < br.zones.size(); ++z) {
        s += z ? ", {" : "{";
        for (std::size_t i = 0; i < br.zones[z].size(); ++i) s += (i ? "," : "") + std::to_string(br.zones[z][i]);
        s += "}";
    }
    return s + "}";
}

}  // namespace bramp
