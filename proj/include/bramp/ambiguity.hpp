#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bramp/bayes_filter.hpp"

namespace bramp {

/// Axis-aligned box [lo, hi] in parameter space.
template <int NP>
struct Box {
    Vec<NP> lo = Vec<NP>::Zero();
    Vec<NP> hi = Vec<NP>::Zero();

    [[nodiscard]] Vec<NP> center() const { return 0.5 * (lo + hi); }
    [[nodiscard]] Vec<NP> width() const { return hi - lo; }

    [[nodiscard]] bool contains(const Vec<NP>& th, double tol = 0.0) const {
        return ((th.array() >= lo.array() - tol).all()) && ((th.array() <= hi.array() + tol).all());
    }

    /// Every interval of `inner` lies inside the matching interval of this box.
    [[nodiscard]] bool contains(const Box& inner, double tol = 0.0) const {
        return ((inner.lo.array() >= lo.array() - tol).all()) && ((inner.hi.array() <= hi.array() + tol).all());
    }

    void validate() const {
        for (int d = 0; d < NP; ++d) {
            if (!(lo[d] <= hi[d])) throw std::invalid_argument("Box: lo > hi");
        }
    }

    bool operator==(const Box& o) const { return lo == o.lo && hi == o.hi; }
};

/// Half the largest pairwise Euclidean distance inside the box.
template <int NP>
double radius(const Box<NP>& box) {
    return 0.5 * (box.hi - box.lo).norm();
}

/// Forward-shrinking ambiguity set A_k.
template <int NP>
struct AmbiguitySet {
    Box<NP> box;
    int step = 0;
    double eps = 0.0;
};

inline constexpr double kNestTolerance = 1e-12;

inline void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("credible level must lie in (0, 1)");
}

/// Equal-tail credible box: per dimension [Q((1-l)/2), Q((1+l)/2)].
template <int NP>
Box<NP> credible_interval_eti(const ParticleSet<NP>& ps, double level) {
    check_level(level);
    const auto summary = posterior_summary(ps);
    Box<NP> box;
    for (int d = 0; d < NP; ++d) {
        box.lo[d] = summary.quantile(d, 0.5 * (1.0 - level));
        box.hi[d] = summary.quantile(d, 0.5 * (1.0 + level));
    }
    return box;
}

/// Shortest contiguous window of sorted samples carrying weight >= level, per dimension.
/// Ties go to the leftmost window.
template <int NP>
Box<NP> credible_interval_hpdi(const ParticleSet<NP>& ps, double level) {
    check_level(level);
    const auto summary = posterior_summary(ps);
    Box<NP> box;
    for (int d = 0; d < NP; ++d) {
        const auto& col = summary.sorted(d);
        const std::size_t n = col.size();
        std::vector<double> prefix(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + col[i].second;
        double best_width = std::numeric_limits<double>::infinity();
        std::size_t best_lo = 0;
        std::size_t best_hi = n - 1;
        for (std::size_t lo = 0; lo < n; ++lo) {
            const double target = prefix[lo] + level - 1e-12;
            auto it = std::lower_bound(prefix.begin() + static_cast<std::ptrdiff_t>(lo) + 1, prefix.end(), target);
            if (it == prefix.end()) break;
            const auto hi = static_cast<std::size_t>(std::distance(prefix.begin(), it)) - 1;
            const double width = col[hi].first - col[lo].first;
            if (width < best_width) {
                best_width = width;
                best_lo = lo;
                best_hi = hi;
            }
        }
        box.lo[d] = col[best_lo].first;
        box.hi[d] = col[best_hi].first;
    }
    return box;
}

enum class IntervalKind { equal_tail, highest_density };

template <int NP>
Box<NP> credible_box(const ParticleSet<NP>& ps, double level, IntervalKind kind) {
    return kind == IntervalKind::equal_tail ? credible_interval_eti(ps, level) : credible_interval_hpdi(ps, level);
}

/// A_0 = C_0.
template <int NP>
AmbiguitySet<NP> make_ambiguity(const Box<NP>& ci) {
    ci.validate();
    return {ci, 0, radius(ci)};
}

/// A_k = C_k if C_k is nested in A_{k-1}, else A_{k-1}.
template <int NP>
AmbiguitySet<NP> update_ambiguity(const AmbiguitySet<NP>& prev, const Box<NP>& ci) {
    ci.validate();
    AmbiguitySet<NP> next = prev;
    next.step = prev.step + 1;
    if (prev.box.contains(ci, kNestTolerance)) {
        // clamp away the tolerance so nesting holds exactly
        next.box.lo = ci.lo.cwiseMax(prev.box.lo);
        next.box.hi = ci.hi.cwiseMin(prev.box.hi);
    }
    next.eps = radius(next.box);
    return next;
}

}  // namespace bramp
