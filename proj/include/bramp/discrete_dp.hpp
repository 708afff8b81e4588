#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bramp/random.hpp"

namespace bramp {

/// Finite risk-averse MDP used to check the nested dynamic program.
///
/// Transition probabilities are indexed [theta][action][state][next state].
/// Costs are indexed [state][action]; the terminal cost by state.
struct DiscreteRiskMDP {
    std::string name;
    std::size_t states = 0;
    std::size_t actions = 0;
    std::size_t thetas = 0;
    std::size_t horizon = 0;
    std::vector<double> transition;
    std::vector<double> stage_cost;
    std::vector<double> terminal_cost;

    DiscreteRiskMDP() = default;
    DiscreteRiskMDP(std::size_t s, std::size_t a, std::size_t t, std::size_t n)
        : states(s), actions(a), thetas(t), horizon(n), transition(t * a * s * s, 0.0), stage_cost(s * a, 0.0),
          terminal_cost(s, 0.0) {}

    double& p(std::size_t th, std::size_t a, std::size_t x, std::size_t y) {
        return transition[((th * actions + a) * states + x) * states + y];
    }
    [[nodiscard]] double p(std::size_t th, std::size_t a, std::size_t x, std::size_t y) const {
        return transition[((th * actions + a) * states + x) * states + y];
    }
    double& cost(std::size_t x, std::size_t a) { return stage_cost[x * actions + a]; }
    [[nodiscard]] double cost(std::size_t x, std::size_t a) const { return stage_cost[x * actions + a]; }

    /// E_theta[ g(next) | x, a ]
    [[nodiscard]] double expect(std::size_t th, std::size_t a, std::size_t x, const std::vector<double>& g) const {
        double acc = 0.0;
        for (std::size_t y = 0; y < states; ++y) acc += p(th, a, x, y) * g[y];
        return acc;
    }

    void validate() const {
        if (states == 0 || actions == 0 || thetas == 0) throw std::invalid_argument("DiscreteRiskMDP: empty dimension");
        if (transition.size() != thetas * actions * states * states || stage_cost.size() != states * actions ||
            terminal_cost.size() != states)
            throw std::invalid_argument("DiscreteRiskMDP: table sizes do not match dimensions");
        for (std::size_t th = 0; th < thetas; ++th) {
            for (std::size_t a = 0; a < actions; ++a) {
                for (std::size_t x = 0; x < states; ++x) {
                    double row = 0.0;
                    for (std::size_t y = 0; y < states; ++y) {
                        if (p(th, a, x, y) < 0.0) throw std::invalid_argument("DiscreteRiskMDP: negative probability");
                        row += p(th, a, x, y);
                    }
                    if (std::abs(row - 1.0) > 1e-9)
                        throw std::invalid_argument("DiscreteRiskMDP: transition row does not sum to 1");
                }
            }
        }
    }
};

enum class DpMode { nested, joint };

/// Enumeration bound for joint mode.
struct JointCap {
    std::size_t states = 4;
    std::size_t actions = 3;
    std::size_t thetas = 3;
    std::size_t horizon = 3;
};

/// value[i][x] = V_i*(x) for time-to-go i = 0..N; policy[i][x] is the first-stage
/// action achieving it (policy[0] is empty).
struct DpSolution {
    std::vector<std::vector<double>> value;
    std::vector<std::vector<std::size_t>> policy;
};

namespace detail {

inline DpSolution solve_nested(const DiscreteRiskMDP& m) {
    DpSolution sol;
    sol.value.push_back(m.terminal_cost);
    sol.policy.emplace_back();
    for (std::size_t i = 1; i <= m.horizon; ++i) {
        const auto& prev = sol.value.back();
        std::vector<double> v(m.states);
        std::vector<std::size_t> pol(m.states, 0);
        for (std::size_t x = 0; x < m.states; ++x) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < m.actions; ++a) {
                double worst = -std::numeric_limits<double>::infinity();
                for (std::size_t th = 0; th < m.thetas; ++th) worst = std::max(worst, m.expect(th, a, x, prev));
                const double q = m.cost(x, a) + worst;
                if (q < best) {
                    best = q;
                    pol[x] = a;
                }
            }
            v[x] = best;
        }
        sol.value.push_back(std::move(v));
        sol.policy.push_back(std::move(pol));
    }
    return sol;
}

/// min over deterministic Markov policies of max_theta of the exact expected cost,
/// for horizon h and every initial state.
inline void solve_joint_horizon(const DiscreteRiskMDP& m, std::size_t h, std::vector<double>& value,
                                std::vector<std::size_t>& first_action) {
    const std::size_t S = m.states;
    value.assign(S, std::numeric_limits<double>::infinity());
    first_action.assign(S, 0);
    // decision digits: stage t (0 = first) and state x -> digit t * S + x
    std::vector<std::size_t> digits(h * S, 0);
    std::vector<double> w(S);
    std::vector<double> next(S);
    std::vector<double> worst(S);
    while (true) {
        std::fill(worst.begin(), worst.end(), -std::numeric_limits<double>::infinity());
        for (std::size_t th = 0; th < m.thetas; ++th) {
            w = m.terminal_cost;
            for (std::size_t t = h; t-- > 0;) {
                for (std::size_t x = 0; x < S; ++x) {
                    const std::size_t a = digits[t * S + x];
                    next[x] = m.cost(x, a) + m.expect(th, a, x, w);
                }
                w.swap(next);
            }
            for (std::size_t x = 0; x < S; ++x) worst[x] = std::max(worst[x], w[x]);
        }
        for (std::size_t x = 0; x < S; ++x) {
            if (worst[x] < value[x]) {
                value[x] = worst[x];
                first_action[x] = digits[x];
            }
        }
        std::size_t k = 0;
        while (k < digits.size() && ++digits[k] == m.actions) digits[k++] = 0;
        if (k == digits.size()) break;
    }
}

}  // namespace detail

inline bool within_cap(const DiscreteRiskMDP& m, const JointCap& cap = {}) {
    return m.states <= cap.states && m.actions <= cap.actions && m.thetas <= cap.thetas && m.horizon <= cap.horizon;
}

/// Nested mode: V_i(x) = min_u l(x,u) + max_theta E[V_{i-1}(x')], V_0 = V_f.
/// Joint mode: exhaustive enumeration; rejected above the cap.
inline DpSolution dp_solve_discrete(const DiscreteRiskMDP& m, DpMode mode, const JointCap& cap = {}) {
    m.validate();
    if (mode == DpMode::nested) return detail::solve_nested(m);
    if (!within_cap(m, cap)) throw std::invalid_argument("dp_solve_discrete: instance exceeds the joint enumeration cap");
    DpSolution sol;
    sol.value.push_back(m.terminal_cost);
    sol.policy.emplace_back();
    for (std::size_t i = 1; i <= m.horizon; ++i) {
        std::vector<double> v;
        std::vector<std::size_t> pol;
        detail::solve_joint_horizon(m, i, v, pol);
        sol.value.push_back(std::move(v));
        sol.policy.push_back(std::move(pol));
    }
    return sol;
}

/// Per state: min_u max_theta ( E[V_f(x')] - V_f(x) + l(x,u) ).
inline std::vector<double> terminal_decrease_margin(const DiscreteRiskMDP& m) {
    std::vector<double> out(m.states);
    for (std::size_t x = 0; x < m.states; ++x) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < m.actions; ++a) {
            double worst = -std::numeric_limits<double>::infinity();
            for (std::size_t th = 0; th < m.thetas; ++th) worst = std::max(worst, m.expect(th, a, x, m.terminal_cost));
            best = std::min(best, worst - m.terminal_cost[x] + m.cost(x, a));
        }
        out[x] = best;
    }
    return out;
}

/// Terminal-cost descent condition: every state has a control with
/// max_theta E[V_f(x')] - V_f(x) <= -l(x,u). The terminal set is the whole grid.
inline bool terminal_descent_holds(const DiscreteRiskMDP& m, double tol = 1e-12) {
    const auto margin = terminal_decrease_margin(m);
    return std::all_of(margin.begin(), margin.end(), [tol](double d) { return d <= tol; });
}

/// Relaxed bound delta = max_x min_u max_theta (E[V_f(x')] - V_f(x) + l(x,u)).
inline double relaxed_delta(const DiscreteRiskMDP& m) {
    const auto margin = terminal_decrease_margin(m);
    return *std::max_element(margin.begin(), margin.end());
}

/// Largest V_{i+1}(x) - V_i(x) over all states and i.
inline double max_value_increment(const DpSolution& sol) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < sol.value.size(); ++i) {
        for (std::size_t x = 0; x < sol.value[i].size(); ++x)
            worst = std::max(worst, sol.value[i + 1][x] - sol.value[i][x]);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Instance generators

inline void random_row(RandomStream& rng, std::vector<double>& row) {
    double total = 0.0;
    for (auto& r : row) {
        // exponential draws give a uniform point on the simplex
        r = -std::log(rng.uniform());
        total += r;
    }
    for (auto& r : row) r /= total;
}

/// Uniformly random instance with dimensions drawn inside `cap`.
inline DiscreteRiskMDP random_discrete_mdp(RandomStream& rng, const JointCap& cap = {}) {
    auto pick = [&rng](std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
    };
    DiscreteRiskMDP m(pick(2, cap.states), pick(1, cap.actions), pick(1, cap.thetas), pick(1, cap.horizon));
    m.name = "random";
    std::vector<double> row(m.states);
    for (std::size_t th = 0; th < m.thetas; ++th) {
        for (std::size_t a = 0; a < m.actions; ++a) {
            for (std::size_t x = 0; x < m.states; ++x) {
                random_row(rng, row);
                for (std::size_t y = 0; y < m.states; ++y) m.p(th, a, x, y) = row[y];
            }
        }
    }
    for (auto& c : m.stage_cost) c = rng.uniform(0.0, 2.0);
    for (auto& c : m.terminal_cost) c = rng.uniform(0.0, 4.0);
    return m;
}

/// Random instance whose terminal cost satisfies the descent condition.
///
/// State 0 is absorbing and free under action 0. From x > 0, action 0 moves
/// strictly down under every theta, so the worst-case cost-to-go of that policy
/// is computed exactly in one upward pass; V_f is that value scaled by `slack`.
inline DiscreteRiskMDP random_lyapunov_mdp(RandomStream& rng, std::size_t states, std::size_t actions,
                                           std::size_t thetas, std::size_t horizon, double slack = 1.5) {
    DiscreteRiskMDP m(states, actions, thetas, horizon);
    m.name = "lyapunov";
    std::vector<double> row(states);
    for (std::size_t th = 0; th < thetas; ++th) {
        for (std::size_t a = 0; a < actions; ++a) {
            for (std::size_t x = 0; x < states; ++x) {
                if (a == 0) {
                    if (x == 0) {
                        row.assign(states, 0.0);
                        row[0] = 1.0;
                    } else {
                        std::vector<double> lower(x);
                        random_row(rng, lower);
                        row.assign(states, 0.0);
                        std::copy(lower.begin(), lower.end(), row.begin());
                    }
                } else {
                    random_row(rng, row);
                }
                for (std::size_t y = 0; y < states; ++y) m.p(th, a, x, y) = row[y];
            }
        }
    }
    for (std::size_t x = 0; x < states; ++x) {
        for (std::size_t a = 0; a < actions; ++a) m.cost(x, a) = (x == 0 && a == 0) ? 0.0 : rng.uniform(0.1, 2.0);
    }
    std::vector<double> togo(states, 0.0);
    for (std::size_t x = 1; x < states; ++x) {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t th = 0; th < thetas; ++th) worst = std::max(worst, m.expect(th, 0, x, togo));
        togo[x] = m.cost(x, 0) + worst;
    }
    for (std::size_t x = 0; x < states; ++x) m.terminal_cost[x] = slack * togo[x];
    return m;
}

/// Three-state instance where the worst theta depends on the noise outcome.
///
/// From state 0 the system lands in 1 or 2 with equal probability. Theta 0 sends
/// state 1 to the costly sink and state 2 home; theta 1 does the reverse. The
/// joint problem commits to one theta (expected cost 5); the nested problem
/// picks the bad theta after each outcome (cost 10).
inline DiscreteRiskMDP noise_dependent_worst_case_mdp() {
    DiscreteRiskMDP m(4, 1, 2, 2);
    m.name = "noise_dependent_worst_case";
    for (std::size_t th = 0; th < 2; ++th) {
        m.p(th, 0, 0, 1) = 0.5;
        m.p(th, 0, 0, 2) = 0.5;
        m.p(th, 0, 3, 3) = 1.0;
    }
    m.p(0, 0, 1, 3) = 1.0;
    m.p(0, 0, 2, 0) = 1.0;
    m.p(1, 0, 1, 0) = 1.0;
    m.p(1, 0, 2, 3) = 1.0;
    m.terminal_cost = {0.0, 0.0, 0.0, 10.0};
    return m;
}

/// Instance with zero terminal cost and positive stage costs: the descent
/// condition fails and only the relaxed bound applies.
inline DiscreteRiskMDP zero_terminal_mdp(std::uint64_t seed) {
    RandomStream rng(seed, 77);
    auto m = random_discrete_mdp(rng, JointCap{4, 3, 3, 3});
    m.name = "zero_terminal";
    for (auto& c : m.stage_cost) c = rng.uniform(0.2, 1.5);
    std::fill(m.terminal_cost.begin(), m.terminal_cost.end(), 0.0);
    return m;
}

/// Fixed instance suite for the command line report and acceptance checks.
inline std::vector<DiscreteRiskMDP> builtin_discrete_instances() {
    std::vector<DiscreteRiskMDP> out;
    out.push_back(noise_dependent_worst_case_mdp());
    for (std::uint64_t s = 0; s < 3; ++s) {
        RandomStream rng(1000 + s, 11);
        auto m = random_lyapunov_mdp(rng, 4, 3, 3, 3);
        m.name = "lyapunov_" + std::to_string(s);
        out.push_back(std::move(m));
    }
    for (std::uint64_t s = 0; s < 2; ++s) {
        auto m = zero_terminal_mdp(2000 + s);
        m.name = "zero_terminal_" + std::to_string(s);
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace bramp
