#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "bramp/ambiguity.hpp"
#include "bramp/rollout.hpp"

namespace bramp {

namespace detail {

inline std::vector<double> sorted_copy(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("risk measure of an empty sample");
    std::vector<double> z(samples.begin(), samples.end());
    std::sort(z.begin(), z.end());
    return z;
}

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

}  // namespace detail

/// VaR_alpha(Z) = inf { z : F(z) >= alpha } for the empirical CDF F.
inline double empirical_var(std::span<const double> samples, double alpha) {
    detail::check_alpha(alpha);
    const auto z = detail::sorted_copy(samples);
    const double n = static_cast<double>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        // F(z_i) counts ties, so step to the last duplicate first
        if (i + 1 < z.size() && z[i + 1] == z[i]) continue;
        if (static_cast<double>(i + 1) / n >= alpha - 1e-12) return z[i];
    }
    return z.back();
}

/// CVaR_alpha(Z) = inf_t { t + E[(Z - t)_+] / alpha }, alpha the upper-tail mass.
///
/// The objective is convex piecewise linear with kinks at the samples, so the
/// infimum is attained at one of them; all n candidates are scanned with prefix sums.
inline double empirical_cvar(std::span<const double> samples, double alpha) {
    detail::check_alpha(alpha);
    const auto z = detail::sorted_copy(samples);
    const std::size_t n = z.size();
    std::vector<double> suffix(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + z[i];

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double t = z[i];
        // samples strictly above index i contribute (z_j - t)
        const double excess = suffix[i + 1] - static_cast<double>(n - i - 1) * t;
        best = std::min(best, t + excess / (alpha * static_cast<double>(n)));
    }
    return best;
}

/// Finite candidate rule for sup over a box: corners, center, and an optional
/// regular grid with `grid_points` per dimension, plus any explicit extras
/// that fall inside the box.
template <int NP>
struct CandidateRule {
    int grid_points = 3;
    std::vector<Vec<NP>> extra;

    [[nodiscard]] std::vector<Vec<NP>> candidates(const Box<NP>& box) const {
        std::vector<Vec<NP>> out;
        auto push_unique = [&out](const Vec<NP>& th) {
            if (std::find(out.begin(), out.end(), th) == out.end()) out.push_back(th);
        };
        for (int mask = 0; mask < (1 << NP); ++mask) {
            Vec<NP> c;
            for (int d = 0; d < NP; ++d) c[d] = (mask >> d) & 1 ? box.hi[d] : box.lo[d];
            push_unique(c);
        }
        push_unique(box.center());
        if (grid_points >= 2) {
            std::array<int, NP> idx{};
            while (true) {
                Vec<NP> c;
                for (int d = 0; d < NP; ++d) {
                    const double frac = static_cast<double>(idx[d]) / static_cast<double>(grid_points - 1);
                    c[d] = idx[d] == grid_points - 1 ? box.hi[d] : box.lo[d] + frac * (box.hi[d] - box.lo[d]);
                }
                push_unique(c);
                int d = 0;
                while (d < NP && ++idx[d] == grid_points) idx[d++] = 0;
                if (d == NP) break;
            }
        }
        for (const auto& th : extra) {
            if (box.contains(th)) push_unique(th);
        }
        return out;
    }
};

template <int NP>
struct WorstCase {
    double value = -std::numeric_limits<double>::infinity();
    Vec<NP> theta = Vec<NP>::Zero();
};

/// max over a finite theta list of expected_cost. Ties keep the first candidate.
template <int NX, int NU, int NP>
WorstCase<NP> worst_case_over(const SystemModel<NX, NU, NP>& model, const CostSpec<NX>& cost, const In<NX>& x0,
                              const PolicySequence<NU>& v, std::span<const Vec<NP>> thetas,
                              const ScenarioSet<NX>& scen) {
    if (thetas.empty()) throw std::invalid_argument("worst_case_value: empty candidate set");
    WorstCase<NP> best;
    for (const auto& th : thetas) {
        const double val = expected_cost(model, cost, x0, v, th, scen);
        if (val > best.value) best = {val, th};
    }
    return best;
}

/// sup over the ambiguity box of E_w[V_N], approximated on the candidate rule.
template <int NX, int NU, int NP>
WorstCase<NP> worst_case_value(const SystemModel<NX, NU, NP>& model, const CostSpec<NX>& cost, const In<NX>& x0,
                               const PolicySequence<NU>& v, const Box<NP>& box, const ScenarioSet<NX>& scen,
                               const CandidateRule<NP>& rule = {}) {
    const auto cands = rule.candidates(box);
    return worst_case_over(model, cost, x0, v, std::span<const Vec<NP>>(cands), scen);
}

}  // namespace bramp
