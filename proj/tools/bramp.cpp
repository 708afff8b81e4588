// Command line front end: simulate, benchmark, consistency, validate-dp.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bramp/harness/consistency.hpp"
#include "bramp/harness/dp_report.hpp"
#include "bramp/harness/report.hpp"

namespace {

enum Exit : int { kOk = 0, kInvalid = 1, kAbort = 2 };

struct Flags {
    std::string config;
    std::optional<std::string> kind;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> steps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> particles;
    std::optional<std::size_t> horizon;
    std::optional<double> level;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "YAML experiment configuration");
    cmd->add_option("--kind", f.kind, "nominal | tube | stochastic | risk_averse");
    cmd->add_option("--runs", f.runs, "Monte Carlo runs per controller");
    cmd->add_option("--steps", f.steps, "closed-loop steps per episode");
    cmd->add_option("--seed", f.seed, "base seed");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--particles", f.particles, "particle count");
    cmd->add_option("--horizon", f.horizon, "planning horizon");
    cmd->add_option("--level", f.level, "credible level");
}

bramp::ExperimentConfig resolve(const Flags& f) {
    auto cfg = f.config.empty() ? bramp::ExperimentConfig{} : bramp::load_config(f.config);
    if (f.kind) {
        try {
            cfg.controller.kind = bramp::controller_from_string(*f.kind);
        } catch (const std::invalid_argument& e) {
            throw bramp::ConfigError("kind", e.what());
        }
    }
    if (f.runs) cfg.run.runs = *f.runs;
    if (f.steps) cfg.run.steps = *f.steps;
    if (f.seed) cfg.run.seed = *f.seed;
    if (f.out) cfg.run.out = *f.out;
    if (f.particles) cfg.filter.particles = *f.particles;
    if (f.horizon) cfg.controller.horizon = *f.horizon;
    if (f.level) cfg.controller.level = *f.level;
    cfg.validate();
    return cfg;
}

std::string output_path(const bramp::ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.run.out);
    return (std::filesystem::path(cfg.run.out) / name).string();
}

int simulate(const Flags& f) {
    const auto cfg = resolve(f);
    const auto kind = cfg.controller.kind;
    const auto rec = bramp::run_episode(cfg, kind, cfg.run.seed);
    const auto path = output_path(cfg, "episode_" + std::string(bramp::to_string(kind)) + ".csv");
    bramp::write_csv(std::vector<bramp::EpisodeRecord>{rec}, path);
    std::printf("kind=%s seed=%llu steps=%zu total_cost=%s tracking_error=%s param_error=%s violations=%s\n",
                std::string(bramp::to_string(kind)).c_str(), static_cast<unsigned long long>(rec.seed),
                rec.steps.size(), bramp::fmt12(rec.metrics.total_cost).c_str(),
                bramp::fmt12(rec.metrics.tracking_error).c_str(), bramp::fmt12(rec.metrics.param_error).c_str(),
                bramp::fmt12(rec.metrics.violations).c_str());
    std::printf("wrote %s\n", path.c_str());
    if (rec.aborted) {
        std::fprintf(stderr, "episode aborted: %s\n", rec.abort_reason.c_str());
        return kAbort;
    }
    return kOk;
}

int benchmark(const Flags& f) {
    const auto cfg = resolve(f);
    std::vector<bramp::ControllerKind> kinds(std::begin(bramp::kAllControllers), std::end(bramp::kAllControllers));
    if (f.kind) kinds = {cfg.controller.kind};
    const auto campaign = bramp::run_campaign(cfg, kinds);

    std::vector<bramp::EpisodeRecord> all;
    for (const auto& runs : campaign.records) all.insert(all.end(), runs.begin(), runs.end());
    const auto steps_path = output_path(cfg, "steps.csv");
    const auto summary_path = output_path(cfg, "summary.csv");
    const auto svg_path = output_path(cfg, "summary.svg");
    bramp::write_csv(all, steps_path);
    bramp::write_csv(campaign.table, summary_path);
    bramp::render_svg_summary(campaign.table, svg_path);

    std::cout << bramp::summary_csv(campaign.table);
    for (const auto& row : campaign.table.rows) {
        if (row.aborted > 0)
            std::printf("%s: %zu aborted episode(s) excluded\n", std::string(bramp::to_string(row.kind)).c_str(),
                        row.aborted);
    }
    std::printf("wrote %s, %s, %s\n", summary_path.c_str(), svg_path.c_str(), steps_path.c_str());
    return kOk;
}

int consistency(const Flags& f) {
    const auto cfg = resolve(f);
    const auto& c = cfg.consistency;
    const auto rep = bramp::run_consistency(c, cfg.run.seed);
    std::printf("blind region, input %s: %s\n", bramp::fmt12(c.contexts[0]).c_str(),
                bramp::zones_to_string(rep.first).c_str());
    std::printf("blind region, input %s: %s\n", bramp::fmt12(c.contexts[1]).c_str(),
                bramp::zones_to_string(rep.second).c_str());
    std::printf("combined blind region: %s\n", bramp::zones_to_string(rep.combined).c_str());
    const std::size_t seeds = rep.visiting_true_mass.size();
    const auto hits = static_cast<std::size_t>(std::llround(rep.visiting_success_rate() * static_cast<double>(seeds)));
    std::printf("visiting schedule: mass on true theta > 0.95 in %zu of %zu seeds\n", hits, seeds);
    if (rep.partner) {
        auto masses = rep.stuck_partner_mass;
        std::printf("held input: median mass on blind partner %zu = %s\n", *rep.partner,
                    bramp::fmt12(bramp::summarize(masses).median).c_str());
    } else {
        std::printf("held input: true theta has no blind partner\n");
    }
    return kOk;
}

int validate_dp_cmd() {
    const auto rep = bramp::validate_dp();
    std::cout << rep.text();
    std::printf("largest nested-joint gap: %s\n", bramp::fmt12(rep.largest_gap()).c_str());
    std::printf("%s\n", rep.all_pass() ? "all checks passed" : "checks FAILED");
    return rep.all_pass() ? kOk : kAbort;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian risk-averse MPC experiments"};
    app.require_subcommand(1);
    Flags flags;
    auto* sim = app.add_subcommand("simulate", "run one episode and write its per-step CSV");
    auto* bench = app.add_subcommand("benchmark", "run a paired campaign and write summary CSV and SVG");
    auto* cons = app.add_subcommand("consistency", "blind-region and posterior concentration report");
    auto* vdp = app.add_subcommand("validate-dp", "nested vs joint and monotonicity checks on discrete instances");
    for (auto* cmd : {sim, bench, cons, vdp}) add_flags(cmd, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kInvalid;
    }

    try {
        if (sim->parsed()) return simulate(flags);
        if (bench->parsed()) return benchmark(flags);
        if (cons->parsed()) return consistency(flags);
        if (vdp->parsed()) return validate_dp_cmd();
    } catch (const bramp::ConfigError& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "aborted: " << e.what() << '\n';
        return kAbort;
    }
    return kInvalid;
}
