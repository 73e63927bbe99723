#include "fixtures.hpp"
#include "oracles.hpp"
#include "pomdp_learn/domains.hpp"
#include "pomdp_learn/serialization.hpp"

#include <doctest.h>

#include <filesystem>

using namespace pomdp_learn;

namespace {

double max_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("pomdp round trip") {
    for (const auto& m : {tiger(), noisy_hallway(), tmaze(2)}) {
        const auto back = pomdp_from_json(Json::parse(to_json(m).dump()));
        CHECK(back.actions == m.actions);
        CHECK(back.observations == m.observations);
        CHECK(back.discount == m.discount);
        CHECK(max_diff(back.initial, m.initial) == 0.0);
        for (std::size_t a = 0; a < m.num_actions(); ++a) {
            CHECK(max_diff(back.transitions[a], m.transitions[a]) == 0.0);
            CHECK(max_diff(back.emissions[a], m.emissions[a]) == 0.0);
        }
        CHECK(back.reward.has_value() == m.reward.has_value());
    }
}

TEST_CASE("malformed pomdp json is rejected") {
    auto j = to_json(tiger());
    j["transitions"][0][0] = Json::array({0.3, 0.3});
    CHECK_THROWS(pomdp_from_json(j));
    CHECK_THROWS(pomdp_from_json(Json::object()));
}

TEST_CASE("trajectory round trip and integer steps") {
    const auto t = simulate(tiger(), Policy::uniform(3), 50, 1);
    const auto j = to_json(t);
    CHECK(j["steps"][0][0].is_string());
    const auto back = trajectory_from_json(j);
    CHECK(back.steps == t.steps);
    CHECK(back.actions == t.actions);

    Json k = {{"actions", {"go"}}, {"observations", {"p", "q"}}, {"steps", {{0, 1}, {"go", "p"}}}};
    const auto mixed = trajectory_from_json(k);
    REQUIRE(mixed.size() == 2);
    CHECK(mixed.steps[0].observation == 1);
    CHECK(mixed.steps[1].observation == 0);
    k["steps"] = {{"stop", "p"}};
    CHECK_THROWS(trajectory_from_json(k));
}

TEST_CASE("hankel round trip") {
    const auto traj = simulate(tiger(), Policy::uniform(3), 2000, 2);
    const auto h = estimate_hankel(traj, 2, 1);
    const auto back = hankel_from_json(Json::parse(to_json(h).dump()));
    CHECK(back.source == HankelSource::empirical);
    CHECK(max_diff(back.values, h.values) == 0.0);
    CHECK(back.hist_len() == 2);
    CHECK(back.test_len() == 1);
    CHECK(back.window_counts == h.window_counts);
    CHECK(back.action_counts == h.action_counts);
    CHECK(back.trajectory_length == h.trajectory_length);
}

TEST_CASE("psr round trip keeps predictions") {
    const auto m = sense_float_reset(3);
    const auto psr = fixture::exact_psr(m, 3, 2);
    const auto back = psr_from_json(Json::parse(to_json(psr).dump()));
    CHECK(back.dim() == psr.dim());
    for (const auto& s : oracle::all_strings(3, 2, 3))
        CHECK(psr_predict(back, s).raw == doctest::Approx(psr_predict(psr, s).raw).epsilon(1e-14));
    CHECK(back.factorization.rank == psr.factorization.rank);
}

TEST_CASE("recovered model round trip") {
    RecoveryConfig rc;
    rc.sigma_min = 0.01;
    const auto rec = project_probabilities(recover(fixture::exact_psr(sense_float_reset(3), 3, 2), rc));
    const auto back = recovered_from_json(Json::parse(to_json(rec).dump()));
    CHECK(back.partition == rec.partition);
    CHECK(back.projected);
    CHECK(max_diff(back.belief, rec.belief) == 0.0);
    for (const auto& s : oracle::all_strings(3, 2, 2))
        CHECK(recovered_likelihood(back, s) == doctest::Approx(recovered_likelihood(rec, s)));
}

TEST_CASE("json files") {
    const auto dir = std::filesystem::temp_directory_path() / "pomdp_learn_test_io" / "nested";
    std::filesystem::remove_all(dir.parent_path());
    write_json(dir / "m.json", to_json(tiger()));
    CHECK(pomdp_from_json(read_json(dir / "m.json")).num_states() == 2);
    CHECK_THROWS(read_json(dir / "missing.json"));
    std::filesystem::remove_all(dir.parent_path());
}
