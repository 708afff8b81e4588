// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "bramp/harness/consistency.hpp"
#include "bramp/harness/dp_report.hpp"
#include "bramp/harness/report.hpp"
#include "oracles.hpp"

using namespace bramp;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double median_of(std::vector<double> v) { return summarize(std::move(v)).median; }

std::vector<double> metric_column(const Campaign& c, std::size_t kind_index, std::size_t metric) {
    std::vector<double> out;
    for (const auto& rec : c.records[kind_index]) {
        if (!rec.aborted) out.push_back(metric_value(rec.metrics, metric));
    }
    return out;
}

std::size_t kind_index(ControllerKind k) {
    for (std::size_t i = 0; i < std::size(kAllControllers); ++i) {
        if (kAllControllers[i] == k) return i;
    }
    return 0;
}

std::string fmt(double v) { return fmt12(v); }

// Criterion 1
Verdict forward_shrinkage(const Campaign& c) {
    std::size_t episodes = 0, steps = 0, bad = 0;
    for (const auto& runs : c.records) {
        for (const auto& rec : runs) {
            ++episodes;
            for (std::size_t k = 1; k < rec.steps.size(); ++k) {
                ++steps;
                bad += rec.steps[k].eps > rec.steps[k - 1].eps ? 1 : 0;
            }
        }
    }
    return {bad == 0 && steps > 0, std::to_string(episodes) + " episodes, " + std::to_string(steps) +
                                       " step pairs, " + std::to_string(bad) + " increases"};
}

// Criterion 2
Verdict nested_dominates_joint() {
    RandomStream rng(20240501, 9);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 50; ++i) {
        const auto m = random_discrete_mdp(rng);
        const auto nested = dp_solve_discrete(m, DpMode::nested);
        const auto joint = dp_solve_discrete(m, DpMode::joint);
        for (std::size_t h = 0; h < nested.value.size(); ++h)
            for (std::size_t x = 0; x < m.states; ++x) worst = std::min(worst, nested.value[h][x] - joint.value[h][x]);
    }
    const auto rep = validate_dp();
    double best_gap = 0.0;
    std::string best_name;
    for (const auto& inst : rep.instances) {
        if (inst.max_gap > best_gap) {
            best_gap = inst.max_gap;
            best_name = inst.name;
        }
    }
    return {worst >= -1e-9 && best_gap > 1e-3,
            "min(V_nested - V_joint) over 50 random instances = " + fmt(worst) + "; largest built-in gap " +
                fmt(best_gap) + " (" + best_name + ")"};
}

// Criterion 3
Verdict dp_monotonicity() {
    std::size_t with = 0, without = 0;
    bool ok = true;
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (const auto& m : builtin_discrete_instances()) {
        const auto sol = dp_solve_discrete(m, DpMode::nested);
        const double inc = max_value_increment(sol);
        if (m.horizon < 1) continue;
        if (terminal_descent_holds(m)) {
            ++with;
            ok = ok && inc <= 1e-9;
            worst_excess = std::max(worst_excess, inc);
        } else {
            ++without;
            const double delta = relaxed_delta(m);
            ok = ok && inc <= delta + 1e-9;
            worst_excess = std::max(worst_excess, inc - delta);
        }
    }
    return {ok && with > 0 && without > 0, std::to_string(with) + " instances with the descent condition, " +
                                               std::to_string(without) + " with the relaxed bound; max excess " +
                                               fmt(worst_excess)};
}

// Criterion 4
Verdict cvar_coherence() {
    RandomStream rng(77, 4);
    auto sample = [&rng](std::size_t n) {
        std::vector<double> z(n);
        for (auto& v : z) v = rng.normal() * rng.uniform(0.2, 4.0) + (rng.uniform() < 0.1 ? 6.0 : 0.0);
        return z;
    };
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 60);
        const auto x = sample(n), y = sample(n);
        const double alpha = rng.uniform(0.01, 0.99), a = rng.uniform(-10, 10), lambda = rng.uniform(0.05, 10);
        std::vector<double> sum(n), dom(n), shift(n), scale(n);
        for (std::size_t i = 0; i < n; ++i) {
            sum[i] = x[i] + y[i];
            dom[i] = x[i] + std::abs(y[i]);
            shift[i] = x[i] + a;
            scale[i] = lambda * x[i];
        }
        const double cx = empirical_cvar(x, alpha), cy = empirical_cvar(y, alpha);
        worst = std::max(worst, empirical_cvar(sum, alpha) - (cx + cy));
        worst = std::max(worst, cx - empirical_cvar(dom, alpha));
        worst = std::max(worst, std::abs(empirical_cvar(shift, alpha) - (cx + a)));
        worst = std::max(worst, std::abs(empirical_cvar(scale, alpha) - lambda * cx));
    }
    double oracle_gap = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto z = sample(1 + static_cast<std::size_t>(rng.uniform() * 80));
        const double alpha = rng.uniform(0.01, 0.99);
        oracle_gap = std::max(oracle_gap, std::abs(empirical_cvar(z, alpha) - oracle::cvar_grid(z, alpha)));
    }
    return {worst <= 1e-9 && oracle_gap <= 1e-9,
            "max axiom violation " + fmt(worst) + " over 1000 pairs; max grid-oracle gap " + fmt(oracle_gap)};
}

// Criterion 5
Verdict filter_consistency() {
    const auto model = make_scalar_model(&scalar_decay_rhs, 0.5, 2.0, 0.01, 0.1);
    const Vec<1> truth = Vec<1>::Constant(1.2);
    const std::size_t seeds = 20;
    std::vector<double> ratio(seeds);
    parallel_for(seeds, [&](std::size_t s) {
        RandomStream filter_rng(1000 + s, kFilterStream), process(1000 + s, kProcessStream);
        auto ps = init_particles<1>(model.param_lo, model.param_hi, 1000, filter_rng);
        const double prior_sd = posterior_summary(ps).stddev()[0];
        Vec<1> x = Vec<1>::Zero();
        double best = 1.0;
        for (std::size_t k = 0; k < 200; ++k) {
            // square wave, ten steps per half period
            const Vec<1> u = Vec<1>::Constant((k / 10) % 2 ? -2.0 : 2.0);
            const Vec<1> xn = step_stochastic(model, x, u, truth, Vec<1>(Vec<1>::Constant(process.normal())));
            ps = filter_step(ps, x, u, xn, model, FilterSettings{}, filter_rng).particles;
            x = xn;
            best = std::min(best, posterior_summary(ps).stddev()[0] / prior_sd);
        }
        ratio[s] = best;
    });
    const auto hits = std::count_if(ratio.begin(), ratio.end(), [](double r) { return r < 0.1; });
    return {static_cast<double>(hits) >= 0.9 * static_cast<double>(seeds),
            std::to_string(hits) + "/" + std::to_string(seeds) + " seeds below 10% of prior std; median ratio " +
                fmt(median_of(ratio))};
}

// Criterion 6
Verdict blind_region_behavior() {
    const ConsistencyConfig c;
    const auto rep = run_consistency(c, 1);
    const bool blind_first = !rep.first.empty() && rep.partner.has_value();
    const auto stuck_hits = std::count_if(rep.stuck_partner_mass.begin(), rep.stuck_partner_mass.end(),
                                          [](double m) { return m > 0.2; });
    const bool stuck_ok = static_cast<double>(stuck_hits) >= 0.9 * static_cast<double>(rep.stuck_partner_mass.size());
    const bool visit_ok = rep.visiting_success_rate(0.95) >= 0.9;
    return {blind_first && rep.combined.empty() && visit_ok && stuck_ok,
            "input " + fmt(c.contexts[0]) + " region " + zones_to_string(rep.first) + ", combined " +
                zones_to_string(rep.combined) + "; visiting: mass > 0.95 on truth in " +
                fmt(100 * rep.visiting_success_rate(0.95)) + "% of seeds; held: partner mass > 0.2 in " +
                std::to_string(stuck_hits) + "/" + std::to_string(rep.stuck_partner_mass.size()) + " seeds"};
}

// Criterion 7
Verdict benchmark_ordering(const Campaign& c) {
    const auto nom = kind_index(ControllerKind::nominal), tube = kind_index(ControllerKind::tube),
               sto = kind_index(ControllerKind::stochastic), ra = kind_index(ControllerKind::risk_averse);
    double med[4][4];
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t m = 0; m < 4; ++m) med[k][m] = median_of(metric_column(c, k, m));
    const bool cost_ok = med[tube][0] > med[ra][0];
    const bool param_ok = med[tube][2] > med[nom][2] && med[tube][2] > med[sto][2] && med[tube][2] > med[ra][2];
    const bool viol_ok = med[ra][3] <= med[nom][3] && med[ra][3] <= med[sto][3];
    std::string d = "median total_cost";
    for (std::size_t k = 0; k < 4; ++k) d += " " + std::string(to_string(kAllControllers[k])) + "=" + fmt(med[k][0]);
    d += "; median param_error";
    for (std::size_t k = 0; k < 4; ++k) d += " " + std::string(to_string(kAllControllers[k])) + "=" + fmt(med[k][2]);
    d += "; median violations";
    for (std::size_t k = 0; k < 4; ++k) d += " " + std::string(to_string(kAllControllers[k])) + "=" + fmt(med[k][3]);
    d += std::string(" [cost ") + (cost_ok ? "ok" : "FAIL") + ", param " + (param_ok ? "ok" : "FAIL") +
         ", violations " + (viol_ok ? "ok" : "FAIL") + "]";
    return {cost_ok && param_ok && viol_ok, d};
}

// Criterion 8
Verdict warm_start_dominance(const Campaign& c) {
    std::size_t calls = 0, bad = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& runs : c.records) {
        for (const auto& rec : runs) {
            for (const auto& s : rec.steps) {
                ++calls;
                worst = std::max(worst, s.planned_value - s.warm_value);
                bad += s.planned_value <= s.warm_value + 1e-12 ? 0 : 1;
            }
        }
    }
    return {bad == 0 && calls > 0, std::to_string(calls) + " planning calls, " + std::to_string(bad) +
                                       " above the warm start; max(value - warm) = " + fmt(worst)};
}

// Criterion 9
Verdict rk4_order() {
    const auto model = make_scalar_model(&scalar_decay_rhs, 0.5, 2.0, 0.01, 0.1);
    std::vector<double> hs, errs, oracle_errs;
    for (int n : {10, 20, 40, 80}) {
        const double h = 1.0 / n;
        Vec<1> x = Vec<1>::Constant(1.0);
        for (int i = 0; i < n; ++i) x = rk4_step(model, x, Vec<1>(Vec<1>::Zero()), Vec<1>(Vec<1>::Constant(1.0)), h);
        hs.push_back(h);
        errs.push_back(std::abs(x[0] - std::exp(-1.0)));
        oracle_errs.push_back(static_cast<double>(oracle::rk4_decay_error(n)));
    }
    const double slope = oracle::loglog_slope(hs, errs);
    bool agrees = true;
    for (std::size_t i = 0; i < errs.size(); ++i) agrees = agrees && std::abs(errs[i] - oracle_errs[i]) < 1e-12;
    return {std::abs(slope - 4.0) <= 0.2 && agrees,
            "log-log slope " + fmt(slope) + " over h = 1/10 .. 1/80; errors match long-double reference: " +
                (agrees ? "yes" : "no")};
}

// Criterion 10
Verdict determinism(const ExperimentConfig& desk) {
    const auto a = run_episode(desk, ControllerKind::risk_averse, desk.run.seed);
    const auto b = run_episode(desk, ControllerKind::risk_averse, desk.run.seed);
    const bool episode_same = steps_csv({a}) == steps_csv({b});

    auto small = desk;
    small.run.runs = 2;
    small.run.steps = 20;
    small.filter.particles = 100;
    const auto c1 = run_campaign(small), c2 = run_campaign(small);
    auto flatten = [](const Campaign& c) {
        std::vector<EpisodeRecord> all;
        for (const auto& r : c.records) all.insert(all.end(), r.begin(), r.end());
        return steps_csv(all) + summary_csv(c.table) + svg_summary(c.table);
    };
    const bool campaign_same = flatten(c1) == flatten(c2);
    return {episode_same && campaign_same, std::string("episode CSV identical: ") + (episode_same ? "yes" : "no") +
                                               "; campaign CSV and SVG identical: " + (campaign_same ? "yes" : "no")};
}

}  // namespace

int main() {
    const auto desk = load_config(std::string(BRAMP_SOURCE_DIR) + "/configs/bench.yaml");
    int failures = 0;
    auto report = [&failures](int id, const char* name, const std::function<Verdict()>& check) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += v.pass ? 0 : 1;
        std::printf("%s %2d %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str(), secs);
        std::fflush(stdout);
    };

    const auto t0 = std::chrono::steady_clock::now();
    const auto campaign = run_campaign(desk);
    const double campaign_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("desk campaign: %zu runs x %zu kinds x %zu steps, %zu particles, %zu scenarios, horizon %zu in %.1f s\n",
                desk.run.runs, campaign.records.size(), desk.run.steps, desk.filter.particles,
                desk.controller.scenarios, desk.controller.horizon, campaign_secs);

    report(1, "forward shrinkage", [&] { return forward_shrinkage(campaign); });
    report(2, "nested dominates joint", nested_dominates_joint);
    report(3, "DP monotonicity", dp_monotonicity);
    report(4, "CVaR coherence", cvar_coherence);
    report(5, "filter consistency", filter_consistency);
    report(6, "blind-region behavior", blind_region_behavior);
    report(7, "benchmark ordering", [&] { return benchmark_ordering(campaign); });
    report(8, "warm-start dominance", [&] { return warm_start_dominance(campaign); });
    report(9, "RK4 order", rk4_order);
    report(10, "determinism", [&] { return determinism(desk); });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
