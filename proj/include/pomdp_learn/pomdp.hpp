#pragma once

#include "pomdp_learn/linalg.hpp"
#include "pomdp_learn/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pomdp_learn {

// Discrete POMDP. Observations are emitted when leaving a state, so a one-step
// update multiplies diag(O^{ao}) before T^a.
struct DiscretePomdp {
    std::vector<std::string> actions;
    std::vector<std::string> observations;
    std::vector<Matrix> transitions;  // per action, n x n, row-stochastic
    std::vector<Matrix> emissions;    // per action, n x |O|; column o is the diagonal of O^{ao}
    Belief initial;
    std::optional<Matrix> reward;     // n x |A|
    double discount = 0.95;

    std::size_t num_states() const { return static_cast<std::size_t>(initial.size()); }
    std::size_t num_actions() const { return actions.size(); }
    std::size_t num_observations() const { return observations.size(); }

    Vector obs_diagonal(std::size_t a, std::size_t o) const;
    // diag(O^{ao}) T^a
    Matrix product(std::size_t a, std::size_t o) const;

    std::size_t action_index(const std::string& label) const;
    std::size_t observation_index(const std::string& label) const;

    // Throws InvalidModel with the first violated invariant.
    void validate(double tol = 1e-12) const;
};

struct Policy {
    Vector probs;

    static Policy uniform(std::size_t num_actions);
    void validate(std::size_t num_actions) const;
};

struct Trajectory {
    std::vector<std::string> actions;
    std::vector<std::string> observations;
    std::vector<ActionObservation> steps;
    std::uint64_t seed = 0;

    std::size_t size() const { return steps.size(); }
    // The first n steps, same alphabets and seed.
    Trajectory prefix(std::size_t n) const;
};

struct LatentTrajectory {
    Trajectory trajectory;
    std::vector<std::uint32_t> states;  // state occupied before each step
};

Trajectory simulate(const DiscretePomdp& model, const Policy& policy, std::size_t n_steps,
                    std::uint64_t seed);
LatentTrajectory simulate_latent(const DiscretePomdp& model, const Policy& policy,
                                 std::size_t n_steps, std::uint64_t seed);

struct BeliefStep {
    Belief belief;
    double likelihood = 0.0;
};

// nullopt when the observation has zero likelihood under b.
std::optional<BeliefStep> belief_update(const DiscretePomdp& model, const Belief& b, std::size_t a,
                                        std::size_t o);

Matrix averaged_transition(const DiscretePomdp& model, const Policy& policy);

// Throws NotErgodic for reducible or periodic averaged chains.
Belief stationary_distribution(const DiscretePomdp& model, const Policy& policy);
Belief stationary_distribution(const DiscretePomdp& model);

struct ConjugateResult {
    Belief initial;
    std::vector<Matrix> transitions;                // P T^a P^-1
    std::vector<std::vector<Matrix>> obs_matrices;  // P O^{ao} P^-1
    bool valid = false;
    std::vector<std::string> violations;
    std::optional<DiscretePomdp> model;             // set when valid
    double condition = 0.0;
};

ConjugateResult conjugate(const DiscretePomdp& model, const Matrix& p, double tol = 1e-12);

// Likelihood of the observations in seq given its actions, starting from b.
double string_likelihood(const DiscretePomdp& model, const Belief& b, const Sequence& seq);

}  // namespace pomdp_learn
