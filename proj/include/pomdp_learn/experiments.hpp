#pragma once

#include "pomdp_learn/em.hpp"
#include "pomdp_learn/planner.hpp"
#include "pomdp_learn/serialization.hpp"

#include <filesystem>
#include <functional>
#include <map>

namespace pomdp_learn {

struct ExperimentConfig {
    std::string domain = "tiger";
    Json domain_params = Json::object();
    std::vector<std::size_t> sizes;
    std::vector<std::uint64_t> seeds;
    std::size_t hist_len = 2;
    std::size_t test_len = 1;
    double rcond_threshold = 0.34;  // 1/kappa
    double sigma_min = 0.1;
    double tau_obs = 0.1;
    std::size_t max_components = 20;
    bool dense_variant = true;
    SamplingStrategy sampling = SamplingStrategy::partition;

    PlannerConfig planner;
    std::size_t episode_steps = 500;
    // directional_hallway, noisy_hallway or both
    std::string reward_scenario = "both";

    std::filesystem::path output_dir;   // empty: no files written
    std::filesystem::path cache_dir;    // empty: Hankel estimates are not cached
    std::size_t threads = 0;            // 0: hardware concurrency

    // Sensitivity grid (T-Maze).
    std::vector<std::size_t> sensitivity_states{4, 6};
    std::vector<std::pair<std::size_t, std::size_t>> sensitivity_lengths{{2, 1}, {3, 2}};
    std::vector<double> sensitivity_rconds{1e-1, 1e-2, 1e-3};
    std::size_t sensitivity_size = 1'000'000;

    // Per-domain learning parameters; reward-observation variants for the
    // domains that carry rewards.
    static ExperimentConfig for_domain(const std::string& domain, const Json& params = Json::object());
    // Starts from for_domain(j["domain"]) and overrides the keys present.
    static ExperimentConfig from_json(const Json& j);
    Json to_json() const;
    std::string hash() const;
    void validate() const;

    SvdOptions svd_options(std::uint64_t seed) const;
    RecoveryConfig recovery_config(std::uint64_t seed) const;
};

struct StageTimes {
    double simulate = 0.0;
    double hankel = 0.0;
    double svd = 0.0;
    double psr = 0.0;
    double recover = 0.0;
    double align = 0.0;
    double plan = 0.0;
};

struct SummaryStats {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t count = 0;
};
SummaryStats summarize(const std::vector<double>& xs);

struct ExperimentRecord {
    std::string config_hash;
    std::string domain;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::optional<std::size_t> estimated_rank;
    std::optional<double> obs_error;
    std::optional<double> partition_transition_error;
    std::optional<std::size_t> partitions;
    std::map<std::string, double> returns;  // per backend, one episode per seed
    StageTimes times;
    bool failed = false;
    std::string failed_stage;
    std::vector<std::string> diagnostics;
};
Json to_json(const ExperimentRecord& r);

// Learning pipeline shared by the experiments and the learn subcommand.
struct LearnOutcome {
    std::optional<HankelEstimate> hankel;
    std::optional<LinearPsr> psr;
    std::optional<RecoveredModel> model;  // projected
    StageTimes times;
    std::string failed_stage;             // empty on success
    std::vector<std::string> diagnostics;
};
LearnOutcome learn(const HankelEstimate& hankel, const ExperimentConfig& config, std::uint64_t seed);
LearnOutcome learn(const Trajectory& traj, const ExperimentConfig& config, std::uint64_t seed);

// Hankel estimates keyed by (domain, seed, n, lengths); a pure cache.
class HankelCache {
public:
    explicit HankelCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
    HankelEstimate get_or_estimate(const ExperimentConfig& config, std::uint64_t seed, const Trajectory& traj,
                                   std::size_t hist_len, std::size_t test_len) const;
    std::filesystem::path path_for(const ExperimentConfig& config, std::uint64_t seed, std::size_t n,
                                   std::size_t hist_len, std::size_t test_len) const;

private:
    std::filesystem::path dir_;
};

struct ConvergenceReport {
    std::vector<ExperimentRecord> records;  // sorted by (n, seed)
    Json summary;
};
ConvergenceReport run_convergence(const ExperimentConfig& config);

struct PlanningReport {
    std::vector<ExperimentRecord> records;
    // backend -> n -> stats over seeds
    std::map<std::string, std::map<std::size_t, SummaryStats>> stats;
    Json summary;
};
// Backends: ground_truth, psr, pomdp, random.
PlanningReport run_planning_eval(const ExperimentConfig& config);

// Scenarios: gt_state and gt_obs (ground truth with the goal-state or the
// observation reward), obs_psr, obs_pomdp, state_pomdp, random. The score is the discounted return of +1 per
// step spent in the hallway's middle state.
PlanningReport run_reward_spec(const ExperimentConfig& config);

struct CounterexampleReport {
    double hankel_max_diff = 0.0;
    double transition_l1 = 0.0;
    double prediction_max_diff = 0.0;
    bool hankel_ok = false;
    bool transition_ok = false;
    bool prediction_ok = false;
    bool passed() const { return hankel_ok && transition_ok && prediction_ok; }
    Json to_json() const;
};
CounterexampleReport run_counterexample(std::uint64_t seed = 0);

struct SensitivityRow {
    std::size_t states = 0;
    std::size_t hist_len = 0;
    std::size_t test_len = 0;
    double rcond = 0.0;
    std::size_t exact_rank = 0;
    std::vector<std::size_t> ranks;  // per seed
    SummaryStats stats;
};
std::vector<SensitivityRow> run_sensitivity(const ExperimentConfig& config);

// Writes domain,n,seed,value rows.
void write_metric_csv(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records,
                      const std::function<std::optional<double>(const ExperimentRecord&)>& metric);

// Runs fn(i) for i in [0, count) on a pool; results must be written by index.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace pomdp_learn
