// One PASS/FAIL line per acceptance criterion. Pass criterion numbers as
// arguments to run a subset.

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pomdp_learn/domains.hpp"
#include "pomdp_learn/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace pomdp_learn;

namespace {

// Pinned tolerances.
constexpr double kExactStateL1 = 1e-6;
constexpr double kPartitionSum = 1e-8;
constexpr double kPsrFidelity = 1e-10;
constexpr double kHankelAgree = 1e-12;
constexpr double kCounterL1 = 0.1;
constexpr double kEigenGap = 1e-6;
constexpr double kEigenCoincide = 1e-8;
constexpr double kSingular = 1e-12;
constexpr double kConvergenceL1 = 0.05;
constexpr double kRandomSigmas = 3.0;
constexpr double kRewardSigmas = 2.0;
constexpr double kEmTv = 0.02;
constexpr double kEmTransitionL1 = 0.1;
constexpr std::size_t kSeeds = 20;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<std::uint64_t> seeds(std::size_t n) {
    std::vector<std::uint64_t> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = i;
    return s;
}

std::string fmt(double x) {
    std::ostringstream o;
    o.precision(3);
    o << x;
    return o.str();
}

// z-score of a difference of means from their standard errors.
double z_score(const SummaryStats& a, const SummaryStats& b) {
    const double se = std::sqrt(a.sd * a.sd / static_cast<double>(a.count) + b.sd * b.sd / static_cast<double>(b.count));
    return se > 0.0 ? (a.mean - b.mean) / se : (a.mean > b.mean ? INFINITY : -INFINITY);
}

std::pair<std::size_t, std::size_t> table_lengths(const std::string& domain, const Json& params = Json::object()) {
    const auto c = ExperimentConfig::for_domain(domain, params);
    return {c.hist_len, c.test_len};
}

RecoveryConfig exact_recovery(std::uint64_t seed) {
    RecoveryConfig rc;
    rc.sigma_min = 0.01;
    rc.tau_obs = 0.05;
    rc.seed = seed;
    return rc;
}

Outcome criterion1() {
    double worst_state = 0.0, worst_partition = 0.0;
    bool shape_ok = true;
    for (const auto& name : {"tiger", "directional_hallway", "noisy_hallway"}) {
        const auto truth = make_domain(name);
        const auto [hl, tl] = table_lengths(name);
        const auto rec = project_probabilities(recover(fixture::exact_psr(truth, hl, tl), exact_recovery(1)));
        if (rec.num_states() != truth.num_states()) {
            shape_ok = false;
            continue;
        }
        const auto d = oracle::permuted_distance(truth, rec.to_pomdp());
        worst_state = std::max({worst_state, d.emission_l1, d.transition_l1});
    }
    for (std::size_t n : {3, 4}) {
        const auto truth = sense_float_reset(n);
        const auto [hl, tl] = table_lengths("sense_float_reset", {{"states", n}});
        const auto rec = recover(fixture::exact_psr(truth, hl, tl), exact_recovery(n));
        if (rec.num_states() != n || rec.partition.size() != 2) {
            shape_ok = false;
            continue;
        }
        // Blocks are told apart by whether sensing reports 1.
        const auto sense = truth.action_index("sense"), one = truth.observation_index("1");
        std::vector<std::vector<bool>> masks;
        for (const auto& block : rec.partition) {
            const bool start = rec.emissions[sense](static_cast<long>(block.front()), static_cast<long>(one)) > 0.5;
            std::vector<bool> m(n, !start);
            m[0] = start;
            masks.push_back(m);
        }
        const auto b = oracle::stationary(truth);
        for (std::size_t len = 0; len <= 3; ++len)
            for (const auto& s : oracle::all_strings(truth.num_actions(), truth.num_observations(), len)) {
                RowVector st = rec.belief;
                for (const auto& step : s) st = st * rec.products[step.action][step.observation];
                for (std::size_t k = 0; k < rec.partition.size(); ++k) {
                    double mass = 0.0;
                    for (auto i : rec.partition[k]) mass += st(static_cast<long>(i));
                    worst_partition = std::max(worst_partition, std::abs(mass - oracle::path_sum(truth, b, s, &masks[k])));
                }
            }
    }
    return {shape_ok && worst_state < kExactStateL1 && worst_partition < kPartitionSum,
            "state-level max L1 " + fmt(worst_state) + " (< 1e-6), SFR partition sums max diff " +
                fmt(worst_partition) + " (< 1e-8)"};
}

Outcome criterion2() {
    std::vector<std::pair<std::string, Json>> domains = {
        {"tiger", {{"rewards_as_observations", false}}},
        {"tiger", {{"rewards_as_observations", true}}},
        {"tmaze", {{"states", 4}, {"rewards_as_observations", false}}},
        {"tmaze", {{"states", 4}, {"rewards_as_observations", true}}},
        {"tmaze", {{"states", 6}, {"rewards_as_observations", false}}},
        {"sense_float_reset", {{"states", 3}, {"rewards_as_observations", false}}},
        {"sense_float_reset", {{"states", 3}, {"rewards_as_observations", true}}},
        {"sense_float_reset", {{"states", 4}, {"rewards_as_observations", false}}},
        {"directional_hallway", Json::object()},
        {"noisy_hallway", Json::object()},
    };
    double worst = 0.0;
    std::size_t strings = 0;
    for (const auto& [name, params] : domains) {
        const auto truth = make_domain(name, params);
        const auto [hl, tl] = table_lengths(name, params);
        const auto psr = fixture::exact_psr(truth, hl, tl);
        const auto b = oracle::stationary(truth);
        for (std::size_t len = 0; len <= 4; ++len)
            for (const auto& s : oracle::all_strings(truth.num_actions(), truth.num_observations(), len)) {
                worst = std::max(worst, std::abs(psr_predict(psr, s).raw - oracle::path_sum(truth, b, s)));
                ++strings;
            }
    }
    return {worst < kPsrFidelity,
            std::to_string(domains.size()) + " domains, " + std::to_string(strings) + " strings, max |diff| " +
                fmt(worst) + " (< 1e-10)"};
}

Outcome criterion3() {
    const auto pair = perturbed_sfr();
    const auto& a = pair.original;
    const auto& t = pair.transformed;
    // Hankel entries as path sums from each model's own stationary belief.
    const auto ba = oracle::stationary(a), bt = oracle::stationary(t);
    double worst = 0.0;
    for (std::size_t len = 0; len <= 5; ++len)
        for (const auto& s : oracle::all_strings(a.num_actions(), a.num_observations(), len))
            worst = std::max(worst, std::abs(oracle::path_sum(a, ba, s) - oracle::path_sum(t, bt, s)));
    const auto f = a.action_index("float'");
    double l1 = 0.0;
    for (Eigen::Index i = 0; i < a.transitions[f].rows(); ++i)
        l1 = std::max(l1, (a.transitions[f].row(i) - t.transitions[f].row(i)).cwiseAbs().sum());
    const auto report = run_counterexample(0);
    return {worst < kHankelAgree && l1 > kCounterL1 && report.passed(),
            "strings up to length 5 max |diff| " + fmt(worst) + " (< 1e-12), float' max row L1 " + fmt(l1) +
                " (> 0.1), library check " + (report.passed() ? "ok" : "failed")};
}

Outcome criterion4() {
    const auto truth = sense_float_reset(3);
    const auto psr = fixture::exact_psr(truth, 3, 2);
    const auto ms = marginalize_actions(psr);
    const auto full = detect_full_rank(ms, 0.01).actions;
    std::vector<std::vector<Matrix>> sim;
    for (auto a : full) {
        const Matrix inv = ms[a].inverse();
        std::vector<Matrix> per_obs;
        for (std::size_t o = 0; o < psr.num_observations(); ++o) per_obs.push_back(psr.updates[a][o] * inv);
        sim.push_back(per_obs);
    }
    // Truth partitions: state 0 alone, states 1 and 2 aliased.
    const std::vector<int> block{0, 1, 1};
    Rng rng(2024);
    int good = 0;
    double min_gap = INFINITY, max_within = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const Vector w = sample_unit_sphere(full.size() * psr.num_observations(), rng);
        Eigen::EigenSolver<Matrix> es(weighted_similarity(sim, w), false);
        std::vector<double> got;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) got.push_back(es.eigenvalues()(i).real());
        // Oracle eigenvalue of state s: sum over (action, obs) of w * O(s, a, o).
        std::vector<double> expect(3, 0.0);
        for (std::size_t s = 0; s < 3; ++s) {
            Eigen::Index k = 0;
            for (auto a : full)
                for (std::size_t o = 0; o < truth.num_observations(); ++o)
                    expect[s] += w(k++) * truth.emissions[a](static_cast<long>(s), static_cast<long>(o));
        }
        // Assign each computed eigenvalue to the nearest oracle value.
        std::vector<int> owner(got.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            std::size_t best = 0;
            for (std::size_t s = 1; s < 3; ++s)
                if (std::abs(got[i] - expect[s]) < std::abs(got[i] - expect[best])) best = s;
            owner[i] = block[best];
        }
        double gap = INFINITY, within = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i)
            for (std::size_t j = i + 1; j < got.size(); ++j) {
                const double d = std::abs(got[i] - got[j]);
                if (owner[i] == owner[j]) within = std::max(within, d);
                else gap = std::min(gap, d);
            }
        const bool both_blocks = std::set<int>(owner.begin(), owner.end()).size() == 2;
        min_gap = std::min(min_gap, gap);
        max_within = std::max(max_within, within);
        if (both_blocks && gap > kEigenGap && within < kEigenCoincide &&
            es.eigenvalues().imag().cwiseAbs().maxCoeff() < kEigenCoincide)
            ++good;
    }
    return {good == 100, std::to_string(good) + "/100 draws separate the partitions; min cross gap " + fmt(min_gap) +
                             " (> 1e-6), max within-partition spread " + fmt(max_within) + " (< 1e-8)"};
}

Outcome criterion5() {
    Rng rng(55);
    int nonsingular = 0, checks = 0;
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<int> size(1, 6);
        const int n = size(rng);
        std::uniform_int_distribution<int> col(0, n - 1);
        Matrix t = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i) t(i, col(rng)) = 1.0;
        for (int k = 1; k <= 9; ++k) {
            if (k == 5) continue;
            ++checks;
            const double p = 0.1 * k;
            // Independent check through a full-pivot LU determinant.
            const Matrix c = p * t + (1.0 - p) * Matrix::Identity(n, n);
            const bool lib = check_convex_combination_rank(t, p).nonsingular;
            if (lib && std::abs(c.fullPivLu().determinant()) > kSingular) ++nonsingular;
        }
    }
    Matrix swap(2, 2);
    swap << 0, 1, 1, 0;
    const auto half = check_convex_combination_rank(swap, 0.5);
    const bool singular = !half.nonsingular && std::abs(half.determinant) < kSingular;
    return {nonsingular == checks && singular, std::to_string(nonsingular) + "/" + std::to_string(checks) +
                                                   " combinations nonsingular; swap at p=0.5 " +
                                                   (singular ? "singular" : "NOT singular")};
}

Outcome criterion6() {
    auto c = ExperimentConfig::for_domain("tiger");
    c.sizes = {1'000'000};
    c.seeds = seeds(kSeeds);
    const auto report = run_convergence(c);
    std::size_t rank2 = 0;
    std::vector<double> obs, trans;
    for (const auto& r : report.records) {
        if (r.estimated_rank == std::optional<std::size_t>{2}) ++rank2;
        if (r.obs_error) obs.push_back(*r.obs_error);
        if (r.partition_transition_error) trans.push_back(*r.partition_transition_error);
    }
    const auto so = summarize(obs), st = summarize(trans);
    const bool ok = rank2 >= 19 && !obs.empty() && so.mean < kConvergenceL1 && st.mean < kConvergenceL1;
    return {ok, "rank 2 in " + std::to_string(rank2) + "/20 (>= 19), mean obs L1 " + fmt(so.mean) +
                    ", mean transition L1 " + fmt(st.mean) + " (< 0.05)"};
}

Outcome criterion7() {
    auto c = ExperimentConfig::for_domain("tmaze");
    c.seeds = seeds(5);
    c.sensitivity_states = {4};
    c.sensitivity_lengths = {{2, 1}};
    c.sensitivity_rconds = {1e-1, 1e-2};
    c.sensitivity_size = 1'000'000;
    const auto rows = run_sensitivity(c);
    bool ok = rows.size() == 2;
    std::string detail;
    for (const auto& r : rows) {
        ok = ok && r.stats.mean == 4.0 && r.stats.sd == 0.0;
        detail += "1/kappa " + fmt(r.rcond) + ": " + fmt(r.stats.mean) + " +- " + fmt(r.stats.sd) + "; ";
    }
    return {ok, detail + "expected 4 +- 0"};
}

Outcome criterion8() {
    auto c = ExperimentConfig::for_domain("tiger");
    c.sizes = {1'000'000};
    c.seeds = seeds(kSeeds);
    const auto report = run_planning_eval(c);
    const std::size_t n = c.sizes.front();
    const std::vector<std::string> learned{"ground_truth", "psr", "pomdp"};
    bool ok = true;
    std::string detail;
    for (const auto& b : learned) {
        const auto& s = report.stats.at(b).at(n);
        detail += b + " " + fmt(s.mean) + " +- " + fmt(s.sd) + "; ";
    }
    for (std::size_t i = 0; i < learned.size(); ++i)
        for (std::size_t j = i + 1; j < learned.size(); ++j) {
            const auto& a = report.stats.at(learned[i]).at(n);
            const auto& b = report.stats.at(learned[j]).at(n);
            if (std::abs(a.mean - b.mean) > std::min(a.sd, b.sd)) ok = false;
        }
    const auto& random = report.stats.at("random").at(n);
    double min_z = INFINITY;
    for (const auto& b : learned) min_z = std::min(min_z, z_score(report.stats.at(b).at(n), random));
    ok = ok && min_z > kRandomSigmas;
    return {ok, detail + "random " + fmt(random.mean) + " +- " + fmt(random.sd) + "; min z over random " + fmt(min_z) +
                    " (> 3)"};
}

Outcome criterion9() {
    auto c = ExperimentConfig::for_domain("noisy_hallway");
    c.sizes = {100'000, 10'000'000};
    c.seeds = seeds(kSeeds);
    c.reward_scenario = "both";
    const auto report = run_reward_spec(c);
    const auto at = [&](const std::string& key, std::size_t n) { return report.stats.at(key).at(n); };

    const auto big = c.sizes.back(), small = c.sizes.front();
    const auto state = at("noisy_hallway/state_pomdp", big);
    const double z_pomdp = z_score(state, at("noisy_hallway/obs_pomdp", big));
    const double z_psr = z_score(state, at("noisy_hallway/obs_psr", big));
    const bool noisy_ok = z_pomdp > kRewardSigmas && z_psr > kRewardSigmas;

    const auto gt = at("directional_hallway/gt_state", small);
    const auto obs = at("directional_hallway/obs_psr", small);
    const auto dstate = at("directional_hallway/state_pomdp", small);
    const bool directional_ok = std::abs(obs.mean - gt.mean) <= gt.sd && dstate.mean < obs.mean;

    return {noisy_ok && directional_ok,
            "noisy n=1e7: state " + fmt(state.mean) + ", z vs obs_pomdp " + fmt(z_pomdp) + ", z vs obs_psr " +
                fmt(z_psr) + " (> 2) " + (noisy_ok ? "ok" : "FAIL") + "; directional n=1e5: obs_psr " +
                fmt(obs.mean) + " vs ground truth " + fmt(gt.mean) + " +- " + fmt(gt.sd) + ", state_pomdp " +
                fmt(dstate.mean) + " " + (directional_ok ? "ok" : "FAIL")};
}

Outcome criterion10() {
    const auto truth = make_domain("tiger", ExperimentConfig::for_domain("tiger").domain_params);
    std::vector<double> tv(kSeeds), l1(kSeeds);
    parallel_for(kSeeds, 0, [&](std::size_t i) {
        const auto traj = simulate(truth, Policy::uniform(truth.num_actions()), 1'000'000, i);
        EmConfig cfg;
        cfg.num_states = truth.num_states();
        cfg.seed = i;
        const auto fit = em_fit(traj, cfg);
        const auto test = simulate(truth, Policy::uniform(truth.num_actions()), 20'000, mix_seed(i, 0x7e57));
        tv[i] = oracle::predictive_tv(truth, fit.model, test.steps);
        l1[i] = oracle::permuted_distance(truth, fit.model).transition_l1;
    });
    std::size_t both = 0, good_tv = 0;
    double max_l1 = 0.0;
    for (std::size_t i = 0; i < kSeeds; ++i) {
        if (tv[i] < kEmTv) ++good_tv;
        if (tv[i] < kEmTv && l1[i] > kEmTransitionL1) ++both;
        max_l1 = std::max(max_l1, l1[i]);
    }
    return {both * 2 > kSeeds, std::to_string(good_tv) + "/20 seeds with TV < 0.02, " + std::to_string(both) +
                                   "/20 also with transition L1 > 0.1 (need a majority); largest L1 " + fmt(max_l1)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                         criterion6, criterion7, criterion8, criterion9, criterion10};
    std::set<std::size_t> chosen;
    for (int i = 1; i < argc; ++i) chosen.insert(std::stoul(argv[i]));
    int failures = 0;
    for (std::size_t k = 1; k <= criteria.size(); ++k) {
        if (!chosen.empty() && !chosen.count(k)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[k - 1]();
        } catch (const std::exception& e) {
            out = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2zu: %s  %s  [%.1fs]\n", k, out.pass ? "PASS" : "FAIL", out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
