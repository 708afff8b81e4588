#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bramp/discrete_dp.hpp"
#include "bramp/harness/report.hpp"

namespace bramp {

struct DpInstanceCheck {
    std::string name;
    /// min over states and horizons of V_nested - V_joint.
    double min_gap = 0.0;
    double max_gap = 0.0;
    bool descent_condition = false;
    /// max V_{i+1} - V_i over states and i.
    double max_increment = 0.0;
    /// Allowed increment: 0 with the descent condition, delta otherwise.
    double bound = 0.0;

    [[nodiscard]] bool nested_dominates(double tol = 1e-9) const { return min_gap >= -tol; }
    [[nodiscard]] bool monotone(double tol = 1e-9) const { return max_increment <= bound + tol; }
};

inline DpInstanceCheck check_instance(const DiscreteRiskMDP& m) {
    DpInstanceCheck c;
    c.name = m.name;
    const auto nested = dp_solve_discrete(m, DpMode::nested);
    const auto joint = dp_solve_discrete(m, DpMode::joint);
    c.min_gap = std::numeric_limits<double>::infinity();
    c.max_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nested.value.size(); ++i) {
        for (std::size_t x = 0; x < m.states; ++x) {
            const double g = nested.value[i][x] - joint.value[i][x];
            c.min_gap = std::min(c.min_gap, g);
            c.max_gap = std::max(c.max_gap, g);
        }
    }
    c.descent_condition = terminal_descent_holds(m);
    c.max_increment = max_value_increment(nested);
    c.bound = c.descent_condition ? 0.0 : std::max(0.0, relaxed_delta(m));
    return c;
}

struct DpReport {
    std::vector<DpInstanceCheck> instances;

    [[nodiscard]] bool all_pass() const {
        return std::all_of(instances.begin(), instances.end(),
                           [](const auto& c) { return c.nested_dominates() && c.monotone(); });
    }
    [[nodiscard]] double largest_gap() const {
        double g = 0.0;
        for (const auto& c : instances) g = std::max(g, c.max_gap);
        return g;
    }

    [[nodiscard]] std::string text() const {
        std::string s = "instance,min_gap,max_gap,descent_condition,max_increment,bound,nested_ge_joint,monotone\n";
        for (const auto& c : instances) {
            s += c.name + ',' + fmt12(c.min_gap) + ',' + fmt12(c.max_gap) + ',' +
                 (c.descent_condition ? "yes" : "no") + ',' + fmt12(c.max_increment) + ',' + fmt12(c.bound) + ',' +
                 (c.nested_dominates() ? "PASS" : "FAIL") + ',' + (c.monotone() ? "PASS" : "FAIL") + '\n';
        }
        return s;
    }
};

inline DpReport validate_dp(const std::vector<DiscreteRiskMDP>& instances = builtin_discrete_instances()) {
    DpReport r;
    for (const auto& m : instances) r.instances.push_back(check_instance(m));
    return r;
}

}  // namespace bramp
