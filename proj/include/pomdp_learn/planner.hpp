#pragma once

#include "pomdp_learn/recovery.hpp"

#include <memory>

namespace pomdp_learn {

struct PlannerConfig {
    double ucb_constant = 2.0;
    std::size_t max_depth = 3;
    std::size_t simulations = 1000;
    // Polynomial bonus c * N^e / sqrt(n_a); log_bonus switches to c * sqrt(ln N / n_a).
    double exploration_exponent = 0.5;
    bool log_bonus = false;
    double discount = 0.95;

    void validate() const;
};

struct RewardSpec {
    enum class Mode { observation, state };
    Mode mode = Mode::observation;
    Matrix observation_rewards;  // |A| x |O|
    Vector state_rewards;        // per model state

    static RewardSpec observations(Matrix table);
    static RewardSpec states(Vector values);
    void validate() const;
};

struct StepSample {
    RowVector next;
    std::size_t observation = 0;
    double reward = 0.0;
    std::optional<std::size_t> partition;
};

// One-step generative interface used by the search.
class GenerativeModel {
public:
    virtual ~GenerativeModel() = default;
    virtual std::size_t num_actions() const = 0;
    virtual std::size_t num_observations() const = 0;
    virtual RowVector initial_state() const = 0;
    virtual bool supports_state_rewards() const = 0;
    virtual StepSample sample_step(const RowVector& state, std::size_t a, const RewardSpec& reward, Rng& rng) const = 0;
    // Projected one-step observation distribution.
    virtual Vector observation_distribution(const RowVector& state, std::size_t a) const = 0;
    // Filter on a real observation; nullopt when it has no support.
    virtual std::optional<RowVector> update(const RowVector& state, std::size_t a, std::size_t o) const = 0;
};

enum class SamplingStrategy { belief, partition };

// Belief-space backend for ground-truth POMDPs and projected recovered models.
class BeliefBackend : public GenerativeModel {
public:
    explicit BeliefBackend(const DiscretePomdp& model, SamplingStrategy strategy = SamplingStrategy::belief);
    BeliefBackend(const RecoveredModel& model, SamplingStrategy strategy);

    std::size_t num_actions() const override { return transitions_.size(); }
    std::size_t num_observations() const override { return static_cast<std::size_t>(emissions_.front().cols()); }
    RowVector initial_state() const override { return initial_; }
    bool supports_state_rewards() const override { return true; }
    StepSample sample_step(const RowVector& state, std::size_t a, const RewardSpec& reward, Rng& rng) const override;
    Vector observation_distribution(const RowVector& state, std::size_t a) const override;
    std::optional<RowVector> update(const RowVector& state, std::size_t a, std::size_t o) const override;

    // Strategy-1 step: propagate the whole belief.
    StepSample sample_step_belief(const RowVector& state, std::size_t a, const RewardSpec& reward, Rng& rng) const;
    // Strategy-2 step: draw a partition block first, then observe from it.
    StepSample sample_step_partition(const RowVector& state, std::size_t a, const RewardSpec& reward, Rng& rng) const;
    // Observation distribution implied by strategy 2 (average over blocks).
    Vector partition_observation_distribution(const RowVector& state, std::size_t a) const;

private:
    std::vector<Matrix> transitions_;
    std::vector<Matrix> emissions_;
    RowVector initial_;
    Partition partition_;
    SamplingStrategy strategy_;
};

class PsrBackend : public GenerativeModel {
public:
    explicit PsrBackend(const LinearPsr& psr);

    std::size_t num_actions() const override { return psr_.num_actions(); }
    std::size_t num_observations() const override { return psr_.num_observations(); }
    RowVector initial_state() const override { return psr_.initial; }
    bool supports_state_rewards() const override { return false; }
    StepSample sample_step(const RowVector& state, std::size_t a, const RewardSpec& reward, Rng& rng) const override;
    Vector observation_distribution(const RowVector& state, std::size_t a) const override;
    std::optional<RowVector> update(const RowVector& state, std::size_t a, std::size_t o) const override;

private:
    LinearPsr psr_;
    std::vector<Matrix> predictors_;  // per action, columns M^{ao} m_inf
};

struct PlanResult {
    std::size_t action = 0;
    Vector values;                   // mean return per root action
    std::vector<std::size_t> visits;
};

PlanResult plan(const GenerativeModel& model, const RowVector& state, const PlannerConfig& config,
                const RewardSpec& reward, std::uint64_t seed);

// Ties broken by lowest index; `tied` lists every state that attained the maximum.
struct DerivedStateReward {
    RewardSpec spec;
    std::size_t state = 0;
    std::vector<std::size_t> tied;
};
enum class StateRewardRule { max_entropy, ml_ends };
DerivedStateReward derive_state_rewards(const RecoveredModel& model, StateRewardRule rule);

struct EpisodeResult {
    double discounted_return = 0.0;
    double total_reward = 0.0;
    std::size_t resets = 0;  // agent states reset after unsupported observations
};

// Runs a continuing episode in env. The agent plans with `agent` (uniform
// random actions when null) under planning_reward; the score uses
// evaluation_reward (states x actions) on the true latent state.
EpisodeResult run_episode(const DiscretePomdp& env, const GenerativeModel* agent, const RewardSpec& planning_reward,
                          const Matrix& evaluation_reward, const PlannerConfig& config, std::size_t steps,
                          std::uint64_t seed);

}  // namespace pomdp_learn
