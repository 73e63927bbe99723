#pragma once

#include "pomdp_learn/pomdp.hpp"

#include <json.hpp>

namespace pomdp_learn {

// Canonical Tiger: listen -1, correct door +10, wrong door -100, doors reset uniformly.
DiscretePomdp tiger(double listen_accuracy = 0.85);

// Two mirrored corridors of k states each, entered from a top or bottom map
// state; the last corridor state is the junction where up/down are scored.
// 2(k+1) states.
DiscretePomdp tmaze(std::size_t k = 1, double forward_success = 0.9, double map_accuracy = 0.95);

DiscretePomdp sense_float_reset(std::size_t n = 3);

DiscretePomdp directional_hallway();
DiscretePomdp noisy_hallway();

// Sense-float-reset with float replaced by float', plus its conjugate under P.
struct CounterexamplePair {
    DiscretePomdp original;
    DiscretePomdp transformed;
    Matrix transform;
};
CounterexamplePair perturbed_sfr();

// Joint observation alphabet O x R; label "obs|reward".
DiscretePomdp rewards_as_observations(const DiscretePomdp& model);

// Reward carried by each joint observation of a wrapped alphabet; nullopt if
// any label lacks a parsable "|reward" suffix.
std::optional<std::vector<double>> observation_reward_values(const std::vector<std::string>& observations);

// name: tiger, tmaze, sense_float_reset, directional_hallway, noisy_hallway,
// perturbed_sfr. Common params: rewards_as_observations (bool), discount.
DiscretePomdp make_domain(const std::string& name, const nlohmann::json& params = nlohmann::json::object());

}  // namespace pomdp_learn
