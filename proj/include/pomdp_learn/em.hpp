#pragma once

#include "pomdp_learn/pomdp.hpp"

namespace pomdp_learn {

struct EmConfig {
    std::size_t num_states = 2;
    std::size_t max_iters = 200;
    // Stop when the log-likelihood gain per observed step falls below this.
    double tolerance = 1e-6;
    std::size_t restarts = 5;
    std::uint64_t seed = 0;
    // Allowed log-likelihood decrease, relative to |LL|, before monotonicity is declared broken.
    double monotonic_slack = 1e-9;
};

struct EmRun {
    std::vector<double> log_likelihoods;  // after each E-step
    bool converged = false;
};

struct EmResult {
    DiscretePomdp model;
    double log_likelihood = 0.0;
    std::size_t best_restart = 0;
    std::vector<EmRun> runs;
};

// Baum-Welch over one action-conditioned sequence, observations emitted on
// leaving a state. Throws NumericalFailure if the log-likelihood decreases.
EmResult em_fit(const Trajectory& traj, const EmConfig& config);

// Log-likelihood of the observations given the actions under a model.
double sequence_log_likelihood(const DiscretePomdp& model, const Trajectory& traj);

}  // namespace pomdp_learn
