#include "oracles.hpp"
#include "pomdp_learn/domains.hpp"

#include <doctest.h>

#include <map>

using namespace pomdp_learn;

namespace {

std::vector<DiscretePomdp> benchmark_domains() {
    return {tiger(), tmaze(1), tmaze(2), sense_float_reset(3), sense_float_reset(4), directional_hallway(),
            noisy_hallway(), rewards_as_observations(tiger()), rewards_as_observations(tmaze(1)),
            rewards_as_observations(sense_float_reset(3))};
}

}  // namespace

TEST_CASE("every domain passes validation") {
    for (const auto& m : benchmark_domains()) CHECK_NOTHROW(m.validate());
    const auto pair = perturbed_sfr();
    CHECK_NOTHROW(pair.original.validate());
    CHECK_NOTHROW(pair.transformed.validate());
}

TEST_CASE("validation rejects broken models") {
    auto m = tiger();
    m.transitions[0](0, 0) = 0.9;
    CHECK_THROWS_AS(m.validate(), InvalidModel);
    m = tiger();
    m.emissions[1](1, 0) = -0.1;
    m.emissions[1](1, 1) = 1.1;
    CHECK_THROWS_AS(m.validate(), InvalidModel);
    m = tiger();
    m.initial(0) = 0.7;
    CHECK_THROWS_AS(m.validate(), InvalidModel);
}

TEST_CASE("sense-float-reset structure") {
    const auto m = sense_float_reset(3);
    const auto f = m.action_index("float"), r = m.action_index("reset"), s = m.action_index("sense");
    CHECK(m.transitions[f](0, 0) == 0.5);
    CHECK(m.transitions[f](0, 1) == 0.5);
    CHECK(m.transitions[f](1, 0) == 0.5);
    CHECK(m.transitions[f](1, 2) == 0.5);
    CHECK(m.transitions[s].isIdentity());
    for (int i = 0; i < 3; ++i) CHECK(m.transitions[r](i, 0) == 1.0);
    const auto one = m.observation_index("1");
    CHECK(m.emissions[s](0, one) == 1.0);
    CHECK(m.emissions[r](0, one) == 1.0);
    CHECK(m.emissions[s](1, one) == 0.0);
    CHECK(m.emissions[s](2, one) == 0.0);
    REQUIRE(m.reward);
    CHECK((*m.reward)(1, 0) == 1.0);
    CHECK(m.reward->sum() == doctest::Approx(3.0));
    CHECK_THROWS(sense_float_reset(2));
}

TEST_CASE("noisy hallway emissions") {
    const auto m = noisy_hallway();
    const auto el = m.observation_index("end-left");
    for (const auto* a : {"stay", "reset"})
        for (int i = 0; i < 3; ++i) CHECK(m.emissions[m.action_index(a)](i, el) == 0.5);
    for (const auto* a : {"left", "right"}) {
        CHECK(m.emissions[m.action_index(a)](0, el) == 0.8);
        CHECK(m.emissions[m.action_index(a)](1, el) == 0.5);
        CHECK(m.emissions[m.action_index(a)](2, el) == doctest::Approx(0.2));
    }
}

TEST_CASE("t-maze map states") {
    const auto m = tmaze(1);
    CHECK(m.num_states() == 4);
    CHECK(tmaze(6).num_states() == 14);
    const auto u = m.observation_index("U"), d = m.observation_index("D");
    int top = -1, bottom = -1;
    for (int i = 0; i < 4; ++i) {
        if (m.emissions[0](i, u) == 0.95 && m.emissions[0](i, d) == doctest::Approx(0.05)) top = i;
        if (m.emissions[0](i, d) == 0.95 && m.emissions[0](i, u) == doctest::Approx(0.05)) bottom = i;
    }
    CHECK(top >= 0);
    CHECK(bottom >= 0);
    CHECK(m.initial(top) == 0.5);
    CHECK(m.initial(bottom) == 0.5);
}

TEST_CASE("rewards-as-observations keeps both signals") {
    const auto base = tiger();
    const auto m = rewards_as_observations(base);
    const auto values = observation_reward_values(m.observations);
    REQUIRE(values);
    CHECK_FALSE(observation_reward_values(base.observations));
    // Marginalizing the reward part gives back the original emissions.
    for (std::size_t a = 0; a < m.num_actions(); ++a)
        for (int s = 0; s < 2; ++s) {
            std::map<std::string, double> marginal;
            double expected_reward = 0.0;
            for (std::size_t o = 0; o < m.num_observations(); ++o) {
                const auto& label = m.observations[o];
                marginal[label.substr(0, label.rfind('|'))] += m.emissions[a](s, o);
                expected_reward += m.emissions[a](s, o) * (*values)[o];
            }
            for (std::size_t o = 0; o < base.num_observations(); ++o)
                CHECK(marginal[base.observations[o]] == doctest::Approx(base.emissions[a](s, o)));
            CHECK(expected_reward == doctest::Approx((*base.reward)(s, a)));
        }
}

TEST_CASE("make_domain by name") {
    CHECK(make_domain("tiger").num_states() == 2);
    CHECK(make_domain("tmaze", {{"states", 6}}).num_states() == 6);
    CHECK(make_domain("sense_float_reset", {{"states", 4}}).num_states() == 4);
    CHECK(make_domain("tiger", {{"rewards_as_observations", true}}).num_observations() > 2);
    CHECK(make_domain("perturbed_sfr", {{"variant", "transformed"}}).num_states() == 3);
    CHECK_THROWS(make_domain("maze"));
    CHECK_THROWS(make_domain("tmaze", {{"states", 5}}));
}

TEST_CASE("belief normalizers multiply to the path-sum likelihood") {
    Rng rng(17);
    for (const auto& m : {tiger(), sense_float_reset(3), tmaze(1), noisy_hallway()}) {
        std::vector<double> b0(m.initial.data(), m.initial.data() + m.num_states());
        for (int trial = 0; trial < 30; ++trial) {
            const auto traj = simulate(m, Policy::uniform(m.num_actions()), 1 + trial % 5, rng());
            double product = 1.0;
            Belief b = m.initial;
            for (const auto& s : traj.steps) {
                const auto step = belief_update(m, b, s.action, s.observation);
                REQUIRE(step);
                product *= step->likelihood;
                b = step->belief;
            }
            const double brute = oracle::path_sum(m, b0, traj.steps);
            CHECK(product == doctest::Approx(brute).epsilon(1e-10));
            CHECK(string_likelihood(m, m.initial, traj.steps) == doctest::Approx(brute).epsilon(1e-10));
        }
    }
}

TEST_CASE("unsupported observation gives no belief") {
    const auto m = sense_float_reset(3);
    Belief b = Belief::Zero(3);
    b(1) = 1.0;
    CHECK_FALSE(belief_update(m, b, m.action_index("sense"), m.observation_index("1")));
}

TEST_CASE("simulation is reproducible") {
    const auto m = tiger();
    const auto a = simulate(m, Policy::uniform(3), 1000, 42);
    const auto b = simulate(m, Policy::uniform(3), 1000, 42);
    const auto c = simulate(m, Policy::uniform(3), 1000, 43);
    CHECK(a.steps == b.steps);
    CHECK(a.steps != c.steps);
    CHECK(a.prefix(10).steps == std::vector<ActionObservation>(a.steps.begin(), a.steps.begin() + 10));
}

TEST_CASE("stationary distribution matches power iteration") {
    for (const auto& m : {tiger(), sense_float_reset(3), sense_float_reset(4), tmaze(2), directional_hallway()}) {
        const auto b = stationary_distribution(m);
        const auto ref = oracle::stationary(m);
        for (std::size_t i = 0; i < m.num_states(); ++i) CHECK(b(i) == doctest::Approx(ref[i]).epsilon(1e-9));
    }
}

TEST_CASE("reducible chains are rejected") {
    auto m = tiger();
    m.transitions[1].setIdentity();
    m.transitions[2].setIdentity();
    CHECK_THROWS_AS(stationary_distribution(m), NotErgodic);
}

TEST_CASE("window-2 frequencies follow the stationary product form") {
    const auto m = sense_float_reset(3);
    const std::size_t n = 1'000'000;
    const auto lt = simulate_latent(m, Policy::uniform(3), n, 9);
    const auto b = stationary_distribution(m);
    Matrix freq = Matrix::Zero(3, 3);
    for (std::size_t t = 0; t + 1 < n; ++t) freq(lt.states[t], lt.states[t + 1]) += 1.0;
    freq /= static_cast<double>(n - 1);
    const Matrix expect = b.transpose().asDiagonal() * averaged_transition(m, Policy::uniform(3));
    CHECK((freq - expect).cwiseAbs().sum() < 0.02);
}

TEST_CASE("conjugation by the counterexample transform") {
    const auto pair = perturbed_sfr();
    CHECK(pair.transform.rowwise().sum().isOnes(1e-12));
    const auto c = conjugate(pair.original, pair.transform);
    CHECK(c.valid);
    REQUIRE(c.model);
    const auto f = pair.original.action_index("float'");
    CHECK((c.model->transitions[f] - pair.transformed.transitions[f]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((pair.original.transitions[f] - pair.transformed.transitions[f]).rowwise().lpNorm<1>().maxCoeff() > 0.1);
}

TEST_CASE("conjugation reports invalid results") {
    Matrix p(2, 2);
    p << 2.0, -1.0, 0.0, 1.0;
    const auto c = conjugate(tiger(), p);
    CHECK_FALSE(c.valid);
    CHECK_FALSE(c.violations.empty());
}
