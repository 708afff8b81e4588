#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bramp/dynamics.hpp"

namespace bramp {

/// Discretized likelihoods: entry (g, i) = q(grid_g; theta_i, x, u) * cell volume.
struct LikelihoodMatrix {
    Eigen::MatrixXd entries;
    double cell_volume = 1.0;

    [[nodiscard]] Eigen::Index grid_size() const { return entries.rows(); }
    [[nodiscard]] Eigen::Index theta_count() const { return entries.cols(); }
};

/// One blind zone is a set of theta indices; zones are disjoint.
struct BlindRegion {
    std::vector<std::vector<int>> zones;

    [[nodiscard]] bool empty() const { return zones.empty(); }
    [[nodiscard]] std::vector<int> members() const {
        std::vector<int> all;
        for (const auto& z : zones) all.insert(all.end(), z.begin(), z.end());
        std::sort(all.begin(), all.end());
        return all;
    }
};

/// Points along state coordinate `dim` through `center`, spanning [lo, hi].
template <int NX>
std::vector<Vec<NX>> observation_slice(const Vec<NX>& center, int dim, double lo, double hi, int points) {
    if (points < 2 || !(hi > lo)) throw std::invalid_argument("observation_slice: need >= 2 points and hi > lo");
    std::vector<Vec<NX>> grid;
    grid.reserve(static_cast<std::size_t>(points));
    for (int g = 0; g < points; ++g) {
        Vec<NX> x = center;
        x[dim] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(points - 1);
        grid.push_back(x);
    }
    return grid;
}

template <int NX, int NU, int NP>
LikelihoodMatrix likelihood_matrix(const SystemModel<NX, NU, NP>& model, const std::vector<Vec<NP>>& thetas,
                                   const In<NX>& x, const In<NU>& u, const std::vector<Vec<NX>>& obs_grid,
                                   double cell_volume) {
    if (thetas.size() < 2) throw std::invalid_argument("likelihood_matrix: need at least two thetas");
    if (obs_grid.size() < 2) throw std::invalid_argument("likelihood_matrix: need at least two grid points");
    LikelihoodMatrix lm;
    lm.cell_volume = cell_volume;
    lm.entries.resize(static_cast<Eigen::Index>(obs_grid.size()), static_cast<Eigen::Index>(thetas.size()));
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        for (std::size_t g = 0; g < obs_grid.size(); ++g) {
            lm.entries(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(i)) =
                transition_density(model, obs_grid[g], x, u, thetas[i]) * cell_volume;
        }
    }
    return lm;
}

/// Rows of `a` followed by rows of `b`: the joint-context model.
inline LikelihoodMatrix stack(const LikelihoodMatrix& a, const LikelihoodMatrix& b) {
    if (a.theta_count() != b.theta_count()) throw std::invalid_argument("stack: theta count mismatch");
    LikelihoodMatrix out;
    out.cell_volume = a.cell_volume;
    out.entries.resize(a.grid_size() + b.grid_size(), a.theta_count());
    out.entries << a.entries, b.entries;
    return out;
}

namespace detail {

inline double largest_singular_value(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

/// Columns `idx` of m are linearly dependent at threshold `cutoff`.
inline bool columns_dependent(const Eigen::MatrixXd& m, const std::vector<int>& idx, double cutoff) {
    Eigen::MatrixXd sub(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
    if (sub.rows() < sub.cols()) return true;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1) < cutoff;
}

class DisjointSets {
  public:
    explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int i) {
        while (parent_[static_cast<std::size_t>(i)] != i) {
            parent_[static_cast<std::size_t>(i)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(i)])];
            i = parent_[static_cast<std::size_t>(i)];
        }
        return i;
    }
    void unite(int a, int b) { parent_[static_cast<std::size_t>(find(a))] = find(b); }

  private:
    std::vector<int> parent_;
};

inline BlindRegion zones_from_groups(int n, const std::vector<std::vector<int>>& groups) {
    DisjointSets ds(n);
    std::vector<bool> touched(static_cast<std::size_t>(n), false);
    for (const auto& g : groups) {
        for (int i : g) {
            touched[static_cast<std::size_t>(i)] = true;
            ds.unite(g.front(), i);
        }
    }
    std::vector<std::vector<int>> by_root(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (touched[static_cast<std::size_t>(i)]) by_root[static_cast<std::size_t>(ds.find(i))].push_back(i);
    }
    BlindRegion br;
    for (auto& z : by_root) {
        if (z.size() >= 2) br.zones.push_back(std::move(z));
    }
    std::sort(br.zones.begin(), br.zones.end());
    return br;
}

}  // namespace detail

/// Largest column set handled by exact subset enumeration.
inline constexpr int kExactBlindZoneColumns = 6;

/// Blind zones of a finite statistical model.
///
/// A set of columns is dependent when its smallest singular value falls below
/// tol times the largest singular value of the whole matrix. Up to six columns,
/// every minimal dependent subset is found by enumeration; overlapping minimal
/// sets are merged into one zone. Above that, supports of the numerical
/// null-space vectors are merged greedily.
inline BlindRegion blind_regions(const LikelihoodMatrix& lm, double tol = 1e-8) {
    if (!(tol > 0.0)) throw std::invalid_argument("blind_regions: tol must be > 0");
    const int n = static_cast<int>(lm.theta_count());
    if (n < 2 || lm.grid_size() < 2) throw std::invalid_argument("blind_regions: need at least a 2x2 matrix");
    const double cutoff = tol * detail::largest_singular_value(lm.entries);

    std::vector<std::vector<int>> groups;
    if (n <= kExactBlindZoneColumns) {
        std::vector<unsigned> circuits;
        std::vector<unsigned> masks;
        for (unsigned mask = 1; mask < (1u << n); ++mask) masks.push_back(mask);
        std::stable_sort(masks.begin(), masks.end(),
                         [](unsigned a, unsigned b) { return __builtin_popcount(a) < __builtin_popcount(b); });
        for (unsigned mask : masks) {
            if (__builtin_popcount(mask) < 2) continue;
            const bool has_circuit =
                std::any_of(circuits.begin(), circuits.end(), [mask](unsigned c) { return (c & mask) == c; });
            if (has_circuit) continue;
            std::vector<int> idx;
            for (int i = 0; i < n; ++i) {
                if (mask & (1u << i)) idx.push_back(i);
            }
            if (detail::columns_dependent(lm.entries, idx, cutoff)) {
                circuits.push_back(mask);
                groups.push_back(std::move(idx));
            }
        }
    } else {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(lm.entries, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const Eigen::MatrixXd& V = svd.matrixV();
        for (Eigen::Index k = 0; k < V.cols(); ++k) {
            const double s = k < sv.size() ? sv(k) : 0.0;
            if (s >= cutoff) continue;
            const Eigen::VectorXd c = V.col(k);
            const double cmax = c.cwiseAbs().maxCoeff();
            std::vector<int> support;
            for (int i = 0; i < n; ++i) {
                if (std::abs(c(i)) > 1e-6 * cmax) support.push_back(i);
            }
            if (support.size() >= 2) groups.push_back(std::move(support));
        }
    }
    return detail::zones_from_groups(n, groups);
}

/// Blind region of the joint context from the regions of two single contexts:
/// pairwise zone intersections that stay dependent in the stacked matrix.
inline BlindRegion combine_regions(const BlindRegion& br1, const BlindRegion& br2, const LikelihoodMatrix& lm_joint,
                                   double tol = 1e-8) {
    if (!(tol > 0.0)) throw std::invalid_argument("combine_regions: tol must be > 0");
    const int n = static_cast<int>(lm_joint.theta_count());
    for (const auto* br : {&br1, &br2}) {
        for (const auto& z : br->zones) {
            for (int i : z) {
                if (i < 0 || i >= n) throw std::invalid_argument("combine_regions: zone index out of range");
            }
        }
    }
    const double cutoff = tol * detail::largest_singular_value(lm_joint.entries);
    BlindRegion out;
    for (const auto& z1 : br1.zones) {
        for (const auto& z2 : br2.zones) {
            std::vector<int> a(z1), b(z2), cand;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(cand));
            if (cand.size() < 2) continue;
            if (detail::columns_dependent(lm_joint.entries, cand, cutoff)) out.zones.push_back(std::move(cand));
        }
    }
    std::sort(out.zones.begin(), out.zones.end());
    return out;
}

/// Relative entropy sum p log(p/q) * cell_volume on a grid, 0 log 0 = 0.
/// Returns +infinity when q vanishes where p does not.
inline double kl_step(const std::vector<double>& p_true, const std::vector<double>& p_marginal, double cell_volume) {
    if (p_true.size() != p_marginal.size() || p_true.empty())
        throw std::invalid_argument("kl_step: grids differ in size");
    double mass_p = 0.0;
    double mass_q = 0.0;
    for (std::size_t i = 0; i < p_true.size(); ++i) {
        if (p_true[i] < 0.0 || p_marginal[i] < 0.0) throw std::invalid_argument("kl_step: negative density");
        mass_p += p_true[i] * cell_volume;
        mass_q += p_marginal[i] * cell_volume;
    }
    if (std::abs(mass_p - 1.0) > 1e-6 || std::abs(mass_q - 1.0) > 1e-6)
        throw std::invalid_argument("kl_step: densities must integrate to 1");
    double kl = 0.0;
    for (std::size_t i = 0; i < p_true.size(); ++i) {
        if (p_true[i] == 0.0) continue;
        if (p_marginal[i] == 0.0) return std::numeric_limits<double>::infinity();
        kl += p_true[i] * std::log(p_true[i] / p_marginal[i]) * cell_volume;
    }
    return std::max(kl, 0.0);
}

struct DescentStep {
    double delta_value = 0.0;  // V_{k+1} - V_k
    double neg_cost = 0.0;     // -l_k
    bool violated = false;
};

struct DescentReport {
    std::vector<DescentStep> steps;

    [[nodiscard]] std::size_t violations(std::size_t begin = 0,
                                         std::size_t end = std::numeric_limits<std::size_t>::max()) const {
        end = std::min(end, steps.size());
        std::size_t c = 0;
        for (std::size_t k = begin; k < end; ++k) c += steps[k].violated ? 1 : 0;
        return c;
    }
    [[nodiscard]] double violation_rate(std::size_t begin = 0,
                                        std::size_t end = std::numeric_limits<std::size_t>::max()) const {
        end = std::min(end, steps.size());
        if (begin >= end) return 0.0;
        return static_cast<double>(violations(begin, end)) / static_cast<double>(end - begin);
    }
};

/// Flags steps where V_{k+1} - V_k > -l_k + slack.
inline DescentReport descent_audit(const std::vector<double>& values, const std::vector<double>& stage_costs,
                                   double slack = 0.0) {
    if (values.size() != stage_costs.size()) throw std::invalid_argument("descent_audit: length mismatch");
    if (values.size() < 2) throw std::invalid_argument("descent_audit: need at least two steps");
    DescentReport rep;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        DescentStep s;
        s.delta_value = values[k + 1] - values[k];
        s.neg_cost = -stage_costs[k];
        s.violated = s.delta_value > s.neg_cost + slack;
        rep.steps.push_back(s);
    }
    return rep;
}

}  // namespace bramp
