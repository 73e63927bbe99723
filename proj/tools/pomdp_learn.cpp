#include "pomdp_learn/experiments.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

using namespace pomdp_learn;

namespace {

struct Overrides {
    std::string config_path;
    std::string domain;
    std::vector<std::size_t> sizes;
    std::size_t num_seeds = 0;
    std::size_t hist_len = 0, test_len = 0;
    double rcond = 0.0, sigma_min = -1.0, tau_obs = -1.0;
    std::size_t max_components = 0;
    std::size_t simulations = 0, episode_steps = 0;
    std::string sampling, reward_scenario, output_dir, cache_dir;
    std::size_t threads = 0;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config_path, "experiment JSON config")->check(CLI::ExistingFile);
    app->add_option("--domain", o.domain, "tiger, tmaze, sense_float_reset, directional_hallway, noisy_hallway");
    app->add_option("--sizes", o.sizes, "data sizes");
    app->add_option("--seeds", o.num_seeds, "number of seeds (0..k-1)");
    app->add_option("--hist-len", o.hist_len, "max history length");
    app->add_option("--test-len", o.test_len, "max test length");
    app->add_option("--rcond", o.rcond, "rank threshold 1/kappa");
    app->add_option("--sigma-min", o.sigma_min, "full-rank action threshold");
    app->add_option("--tau-obs", o.tau_obs, "partition threshold");
    app->add_option("--max-components", o.max_components, "SVD component cap");
    app->add_option("--simulations", o.simulations, "planner simulations per step");
    app->add_option("--episode-steps", o.episode_steps, "evaluation episode length");
    app->add_option("--sampling", o.sampling, "belief or partition");
    app->add_option("--reward-scenario", o.reward_scenario, "directional_hallway, noisy_hallway or both");
    app->add_option("--output-dir", o.output_dir, "where CSV and JSON files go");
    app->add_option("--cache-dir", o.cache_dir, "Hankel cache directory");
    app->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

ExperimentConfig resolve(const Overrides& o, const std::string& default_domain) {
    Json j = o.config_path.empty() ? Json::object() : read_json(o.config_path);
    if (!o.domain.empty()) {
        if (j.contains("domain") && j["domain"] != o.domain) j.erase("domain_params");
        j["domain"] = o.domain;
    }
    if (!j.contains("domain")) j["domain"] = default_domain;
    if (!o.sizes.empty()) j["sizes"] = o.sizes;
    if (o.num_seeds) j["seeds"] = o.num_seeds;
    if (o.hist_len) j["hist_len"] = o.hist_len;
    if (o.test_len) j["test_len"] = o.test_len;
    if (o.rcond > 0.0) j["rcond_threshold"] = o.rcond;
    if (o.sigma_min >= 0.0) j["sigma_min"] = o.sigma_min;
    if (o.tau_obs >= 0.0) j["tau_obs"] = o.tau_obs;
    if (o.max_components) j["max_components"] = o.max_components;
    if (o.simulations) j["planner"]["simulations"] = o.simulations;
    if (o.episode_steps) j["episode_steps"] = o.episode_steps;
    if (!o.sampling.empty()) j["sampling"] = o.sampling;
    if (!o.reward_scenario.empty()) j["reward_scenario"] = o.reward_scenario;
    if (!o.output_dir.empty()) j["output_dir"] = o.output_dir;
    if (!o.cache_dir.empty()) j["cache_dir"] = o.cache_dir;
    if (o.threads) j["threads"] = o.threads;
    return ExperimentConfig::from_json(j);
}

void print_stats(const PlanningReport& report) {
    std::cout << std::left << std::setw(34) << "backend" << std::setw(12) << "n" << std::setw(14) << "mean" << "sd\n";
    for (const auto& [backend, per_n] : report.stats)
        for (const auto& [n, s] : per_n)
            std::cout << std::left << std::setw(34) << backend << std::setw(12) << n << std::setw(14) << s.mean << s.sd
                      << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn POMDPs from a single trajectory via spectral PSRs"};
    app.require_subcommand(1);

    Overrides conv, plan_eval, reward, sens;
    auto* c_conv = app.add_subcommand("convergence", "state count and error curves over data sizes");
    add_common(c_conv, conv);
    auto* c_plan = app.add_subcommand("plan-eval", "planning with ground-truth, PSR and recovered models");
    add_common(c_plan, plan_eval);
    auto* c_reward = app.add_subcommand("reward-spec", "observation- vs state-based rewards on the hallways");
    add_common(c_reward, reward);
    auto* c_sens = app.add_subcommand("sensitivity", "estimated rank over Hankel sizes and thresholds on T-Maze");
    add_common(c_sens, sens);

    auto* c_counter = app.add_subcommand("counterexample", "check the perturbed sense-float-reset pair");
    std::uint64_t counter_seed = 0;
    c_counter->add_option("--seed", counter_seed, "seed for the random strings");

    Overrides lrn;
    std::string traj_path, model_path, psr_path;
    bool use_em = false;
    std::size_t em_restarts = 5, em_iters = 200;
    auto* c_learn = app.add_subcommand("learn", "learn a model from a trajectory file");
    add_common(c_learn, lrn);
    c_learn->add_option("--trajectory", traj_path, "trajectory JSON")->required()->check(CLI::ExistingFile);
    c_learn->add_option("--output", model_path, "model JSON")->required();
    c_learn->add_option("--psr-output", psr_path, "also write the PSR");
    c_learn->add_flag("--em", use_em, "fit with EM using the estimated rank as the state count");
    c_learn->add_option("--em-restarts", em_restarts, "EM restarts");
    c_learn->add_option("--em-iters", em_iters, "EM iterations per restart");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_conv->parsed()) {
            const auto report = run_convergence(resolve(conv, "tiger"));
            std::cout << report.summary["points"].dump(2) << '\n';
        } else if (c_plan->parsed()) {
            print_stats(run_planning_eval(resolve(plan_eval, "tiger")));
        } else if (c_reward->parsed()) {
            print_stats(run_reward_spec(resolve(reward, "noisy_hallway")));
        } else if (c_sens->parsed()) {
            const auto rows = run_sensitivity(resolve(sens, "tmaze"));
            std::cout << "states  lengths  1/kappa  exact  rank mean  sd\n";
            for (const auto& r : rows)
                std::cout << std::left << std::setw(8) << r.states << '(' << r.hist_len << ',' << r.test_len << ")    "
                          << std::setw(9) << r.rcond << std::setw(7) << r.exact_rank << std::setw(11) << r.stats.mean
                          << r.stats.sd << '\n';
        } else if (c_counter->parsed()) {
            const auto report = run_counterexample(counter_seed);
            std::cout << "hankel max |diff|      " << report.hankel_max_diff << (report.hankel_ok ? "  ok\n" : "  FAIL\n");
            std::cout << "float' transition L1   " << report.transition_l1 << (report.transition_ok ? "  ok\n" : "  FAIL\n");
            std::cout << "prediction max |diff|  " << report.prediction_max_diff
                      << (report.prediction_ok ? "  ok\n" : "  FAIL\n");
            return report.passed() ? 0 : 1;
        } else if (c_learn->parsed()) {
            const auto config = resolve(lrn, "tiger");
            const auto traj = trajectory_from_json(read_json(traj_path));
            auto out = learn(traj, config, config.seeds.front());
            for (const auto& d : out.diagnostics) std::cerr << "note: " << d << '\n';
            if (out.psr && !psr_path.empty()) write_json(psr_path, to_json(*out.psr));
            if (use_em) {
                if (!out.psr) throw Error("learn: no rank estimate for EM (" + out.failed_stage + " failed)");
                EmConfig em;
                em.num_states = out.psr->dim();
                em.restarts = em_restarts;
                em.max_iters = em_iters;
                em.seed = config.seeds.front();
                write_json(model_path, to_json(em_fit(traj, em).model));
            } else {
                if (!out.model) throw Error("learn: " + out.failed_stage + " stage failed");
                write_json(model_path, to_json(*out.model));
            }
            std::cout << "wrote " << model_path << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
