#include "pomdp_learn/experiments.hpp"

#include "pomdp_learn/domains.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace pomdp_learn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::size_t> default_sizes() { return {1000, 3000, 10000, 30000, 100000, 300000, 1000000}; }

std::vector<std::uint64_t> default_seeds(std::size_t count) {
    std::vector<std::uint64_t> s(count);
    for (std::size_t i = 0; i < count; ++i) s[i] = i;
    return s;
}

std::string sampling_name(SamplingStrategy s) { return s == SamplingStrategy::belief ? "belief" : "partition"; }

SamplingStrategy sampling_from(const std::string& s) {
    if (s == "belief") return SamplingStrategy::belief;
    if (s == "partition") return SamplingStrategy::partition;
    throw Error("sampling must be belief or partition, got " + s);
}

Json planner_to_json(const PlannerConfig& p) {
    return {{"ucb_constant", p.ucb_constant},
            {"max_depth", p.max_depth},
            {"simulations", p.simulations},
            {"exploration_exponent", p.exploration_exponent},
            {"log_bonus", p.log_bonus},
            {"discount", p.discount}};
}

PlannerConfig planner_from_json(const Json& j, PlannerConfig p) {
    p.ucb_constant = j.value("ucb_constant", p.ucb_constant);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.simulations = j.value("simulations", p.simulations);
    p.exploration_exponent = j.value("exploration_exponent", p.exploration_exponent);
    p.log_bonus = j.value("log_bonus", p.log_bonus);
    p.discount = j.value("discount", p.discount);
    return p;
}

std::string fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

DiscretePomdp build_domain(const ExperimentConfig& c) { return make_domain(c.domain, c.domain_params); }

Json optional_json(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

Json stats_json(const SummaryStats& s) { return {{"mean", s.mean}, {"sd", s.sd}, {"count", s.count}}; }

Json times_json(const StageTimes& t) {
    return {{"simulate", t.simulate}, {"hankel", t.hankel}, {"svd", t.svd},     {"psr", t.psr},
            {"recover", t.recover},   {"align", t.align},   {"plan", t.plan}};
}

void sort_records(std::vector<ExperimentRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.domain, a.n, a.seed) < std::tie(b.domain, b.n, b.seed);
    });
}

void write_records(const std::filesystem::path& dir, const std::vector<ExperimentRecord>& records,
                   const Json& summary) {
    std::filesystem::create_directories(dir);
    Json all = Json::array();
    for (const auto& r : records) all.push_back(to_json(r));
    write_json(dir / "records.json", all);
    write_json(dir / "summary.json", summary);
}

Matrix reward_table(const DiscretePomdp& m) {
    const auto values = observation_reward_values(m.observations);
    if (!values) throw Error("observations carry no reward values; use a rewards_as_observations variant");
    Matrix table(m.num_actions(), m.num_observations());
    for (Eigen::Index a = 0; a < table.rows(); ++a)
        for (Eigen::Index o = 0; o < table.cols(); ++o) table(a, o) = (*values)[static_cast<std::size_t>(o)];
    return table;
}

std::size_t effective_threads(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Trajectories at the largest size, one per seed, reused through prefixes.
Trajectory simulate_seed(const DiscretePomdp& model, std::size_t n, std::uint64_t seed) {
    return simulate(model, Policy::uniform(model.num_actions()), n, seed);
}

}  // namespace

SummaryStats summarize(const std::vector<double>& xs) {
    SummaryStats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

ExperimentConfig ExperimentConfig::for_domain(const std::string& domain, const Json& params) {
    ExperimentConfig c;
    c.domain = domain;
    c.domain_params = params.is_object() ? params : Json::object();
    c.sizes = default_sizes();
    c.seeds = default_seeds(20);
    if (domain == "tiger") {
        c.hist_len = 2, c.test_len = 1, c.rcond_threshold = 0.34, c.sigma_min = 0.1, c.tau_obs = 0.1;
    } else if (domain == "tmaze") {
        c.hist_len = 2, c.test_len = 1, c.rcond_threshold = 0.1, c.sigma_min = 0.01, c.tau_obs = 0.1;
    } else if (domain == "sense_float_reset") {
        if (c.domain_params.value("states", 3) == 4) {
            c.hist_len = 4, c.test_len = 3, c.rcond_threshold = 0.015, c.sigma_min = 0.1, c.tau_obs = 0.5;
        } else {
            c.hist_len = 3, c.test_len = 2, c.rcond_threshold = 0.1, c.sigma_min = 0.1, c.tau_obs = 0.1;
        }
    } else if (domain == "directional_hallway" || domain == "noisy_hallway") {
        c.hist_len = 3, c.test_len = 2, c.sigma_min = 0.02, c.tau_obs = 0.1;
        c.rcond_threshold = domain == "noisy_hallway" ? 0.02 : 0.08;
        c.sizes = {100000, 1000000, 10000000};
    } else if (domain != "perturbed_sfr") {
        throw Error("unknown domain: " + domain);
    }
    if ((domain == "tiger" || domain == "tmaze" || domain == "sense_float_reset") &&
        !c.domain_params.contains("rewards_as_observations"))
        c.domain_params["rewards_as_observations"] = true;
    return c;
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    auto c = for_domain(j.value("domain", std::string("tiger")), j.value("domain_params", Json::object()));
    if (j.contains("sizes")) c.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    if (j.contains("seeds")) {
        const auto& s = j.at("seeds");
        c.seeds = s.is_number_integer() ? default_seeds(s.get<std::size_t>()) : s.get<std::vector<std::uint64_t>>();
    }
    c.hist_len = j.value("hist_len", c.hist_len);
    c.test_len = j.value("test_len", c.test_len);
    c.rcond_threshold = j.value("rcond_threshold", c.rcond_threshold);
    c.sigma_min = j.value("sigma_min", c.sigma_min);
    c.tau_obs = j.value("tau_obs", c.tau_obs);
    c.max_components = j.value("max_components", c.max_components);
    c.dense_variant = j.value("dense_variant", c.dense_variant);
    if (j.contains("sampling")) c.sampling = sampling_from(j.at("sampling").get<std::string>());
    if (j.contains("planner")) c.planner = planner_from_json(j.at("planner"), c.planner);
    c.episode_steps = j.value("episode_steps", c.episode_steps);
    c.reward_scenario = j.value("reward_scenario", c.reward_scenario);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
    c.threads = j.value("threads", c.threads);
    if (j.contains("sensitivity")) {
        const auto& s = j.at("sensitivity");
        if (s.contains("states")) c.sensitivity_states = s.at("states").get<std::vector<std::size_t>>();
        if (s.contains("lengths"))
            c.sensitivity_lengths = s.at("lengths").get<std::vector<std::pair<std::size_t, std::size_t>>>();
        if (s.contains("rconds")) c.sensitivity_rconds = s.at("rconds").get<std::vector<double>>();
        c.sensitivity_size = s.value("size", c.sensitivity_size);
    }
    c.validate();
    return c;
}

Json ExperimentConfig::to_json() const {
    return {{"domain", domain},
            {"domain_params", domain_params},
            {"sizes", sizes},
            {"seeds", seeds},
            {"hist_len", hist_len},
            {"test_len", test_len},
            {"rcond_threshold", rcond_threshold},
            {"sigma_min", sigma_min},
            {"tau_obs", tau_obs},
            {"max_components", max_components},
            {"dense_variant", dense_variant},
            {"sampling", sampling_name(sampling)},
            {"planner", planner_to_json(planner)},
            {"episode_steps", episode_steps},
            {"reward_scenario", reward_scenario},
            {"output_dir", output_dir.string()},
            {"cache_dir", cache_dir.string()},
            {"threads", threads},
            {"sensitivity",
             {{"states", sensitivity_states},
              {"lengths", sensitivity_lengths},
              {"rconds", sensitivity_rconds},
              {"size", sensitivity_size}}}};
}

std::string ExperimentConfig::hash() const {
    Json j = to_json();
    j.erase("output_dir");
    j.erase("cache_dir");
    j.erase("threads");
    return fnv1a(j.dump());
}

void ExperimentConfig::validate() const {
    if (sizes.empty()) throw Error("config: sizes must not be empty");
    if (seeds.empty()) throw Error("config: seeds must not be empty");
    if (std::find(sizes.begin(), sizes.end(), std::size_t{0}) != sizes.end()) throw Error("config: sizes must be positive");
    if (hist_len < 1 || test_len < 1) throw Error("config: Hankel lengths must be at least (1,1)");
    if (!(rcond_threshold > 0.0 && rcond_threshold <= 1.0)) throw Error("config: rcond_threshold must be in (0,1]");
    if (!(sigma_min >= 0.0)) throw Error("config: sigma_min must be nonnegative");
    if (!(tau_obs >= 0.0)) throw Error("config: tau_obs must be nonnegative");
    if (max_components == 0) throw Error("config: max_components must be positive");
    if (episode_steps == 0) throw Error("config: episode_steps must be positive");
    if (reward_scenario != "both" && reward_scenario != "directional_hallway" && reward_scenario != "noisy_hallway")
        throw Error("config: reward_scenario must be directional_hallway, noisy_hallway or both");
    for (const auto& [h, t] : sensitivity_lengths)
        if (h < 1 || t < 1) throw Error("config: sensitivity lengths must be at least (1,1)");
    planner.validate();
}

SvdOptions ExperimentConfig::svd_options(std::uint64_t seed) const {
    SvdOptions o;
    o.rcond_threshold = rcond_threshold;
    o.max_components = max_components;
    o.rotation_seed = mix_seed(seed, 0x5d);
    return o;
}

RecoveryConfig ExperimentConfig::recovery_config(std::uint64_t seed) const {
    RecoveryConfig r;
    r.sigma_min = sigma_min;
    r.tau_obs = tau_obs;
    r.dense_variant = dense_variant;
    r.seed = mix_seed(seed, 0x7e);
    return r;
}

Json to_json(const ExperimentRecord& r) {
    Json j = {{"config_hash", r.config_hash},
              {"domain", r.domain},
              {"seed", r.seed},
              {"n", r.n},
              {"estimated_rank", r.estimated_rank ? Json(*r.estimated_rank) : Json(nullptr)},
              {"obs_error", optional_json(r.obs_error)},
              {"partition_transition_error", optional_json(r.partition_transition_error)},
              {"partitions", r.partitions ? Json(*r.partitions) : Json(nullptr)},
              {"returns", r.returns},
              {"times", times_json(r.times)},
              {"failed", r.failed},
              {"failed_stage", r.failed_stage},
              {"diagnostics", r.diagnostics}};
    return j;
}

LearnOutcome learn(const HankelEstimate& hankel, const ExperimentConfig& config, std::uint64_t seed) {
    LearnOutcome out;
    out.hankel = hankel;
    out.diagnostics = hankel.warnings;
    std::string stage = "svd";
    try {
        auto t0 = Clock::now();
        const auto f = truncated_svd(hankel, config.svd_options(seed));
        out.times.svd = seconds_since(t0);
        stage = "psr";
        t0 = Clock::now();
        out.psr = extract_psr(hankel, f);
        out.times.psr = seconds_since(t0);
        out.diagnostics.insert(out.diagnostics.end(), out.psr->diagnostics.begin(), out.psr->diagnostics.end());
        stage = "recover";
        t0 = Clock::now();
        out.model = project_probabilities(recover(*out.psr, config.recovery_config(seed)));
        out.times.recover = seconds_since(t0);
        out.diagnostics.insert(out.diagnostics.end(), out.model->diagnostics.begin(), out.model->diagnostics.end());
    } catch (const Error& e) {
        out.failed_stage = stage;
        out.diagnostics.push_back(stage + ": " + e.what());
    }
    return out;
}

LearnOutcome learn(const Trajectory& traj, const ExperimentConfig& config, std::uint64_t seed) {
    const auto t0 = Clock::now();
    const auto h = estimate_hankel(traj, config.hist_len, config.test_len);
    const double th = seconds_since(t0);
    auto out = learn(h, config, seed);
    out.times.hankel = th;
    return out;
}

std::filesystem::path HankelCache::path_for(const ExperimentConfig& config, std::uint64_t seed, std::size_t n,
                                            std::size_t hist_len, std::size_t test_len) const {
    const std::string key = config.domain + config.domain_params.dump();
    std::ostringstream name;
    name << config.domain << '-' << fnv1a(key) << "-s" << seed << "-n" << n << "-L" << hist_len << '_' << test_len
         << ".json";
    return dir_ / name.str();
}

HankelEstimate HankelCache::get_or_estimate(const ExperimentConfig& config, std::uint64_t seed, const Trajectory& traj,
                                            std::size_t hist_len, std::size_t test_len) const {
    if (dir_.empty()) return estimate_hankel(traj, hist_len, test_len);
    const auto path = path_for(config, seed, traj.size(), hist_len, test_len);
    if (std::filesystem::exists(path)) return hankel_from_json(read_json(path));
    auto h = estimate_hankel(traj, hist_len, test_len);
    write_json(path, to_json(h));
    return h;
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::min(effective_threads(threads), count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

void write_metric_csv(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records,
                      const std::function<std::optional<double>(const ExperimentRecord&)>& metric) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "domain,n,seed,value\n" << std::setprecision(17);
    for (const auto& r : records) {
        const auto v = metric(r);
        out << r.domain << ',' << r.n << ',' << r.seed << ',';
        if (v) out << *v;
        out << '\n';
    }
}

ConvergenceReport run_convergence(const ExperimentConfig& config) {
    config.validate();
    const auto truth = build_domain(config);
    const std::size_t max_n = *std::max_element(config.sizes.begin(), config.sizes.end());
    const HankelCache cache(config.cache_dir);
    const auto hash = config.hash();

    const std::size_t ns = config.sizes.size();
    std::vector<ExperimentRecord> records(config.seeds.size() * ns);
    parallel_for(config.seeds.size(), config.threads, [&](std::size_t si) {
        const auto seed = config.seeds[si];
        auto t0 = Clock::now();
        const auto full = simulate_seed(truth, max_n, seed);
        const double tsim = seconds_since(t0);
        for (std::size_t k = 0; k < ns; ++k) {
            auto& r = records[si * ns + k];
            r.config_hash = hash;
            r.domain = config.domain;
            r.seed = seed;
            r.n = config.sizes[k];
            r.times.simulate = tsim;
            const auto traj = full.prefix(r.n);
            t0 = Clock::now();
            const auto h = cache.get_or_estimate(config, seed, traj, config.hist_len, config.test_len);
            const double th = seconds_since(t0);
            auto out = learn(h, config, seed);
            r.times = out.times;
            r.times.simulate = tsim;
            r.times.hankel = th;
            r.diagnostics = out.diagnostics;
            if (out.psr) r.estimated_rank = out.psr->dim();
            if (!out.failed_stage.empty()) {
                r.failed = true;
                r.failed_stage = out.failed_stage;
                continue;
            }
            r.partitions = out.model->partition.size();
            t0 = Clock::now();
            const auto al = align_to_ground_truth(*out.model, truth, config.tau_obs);
            r.times.align = seconds_since(t0);
            if (r.estimated_rank == truth.num_states()) {
                r.obs_error = al.obs_error;
                r.partition_transition_error = al.transition_error;
            }
        }
    });
    sort_records(records);

    ConvergenceReport report;
    report.summary = {{"config_hash", hash}, {"config", config.to_json()}, {"points", Json::array()}};
    for (const auto n : config.sizes) {
        std::vector<double> ranks, obs, trans;
        std::size_t failures = 0, rank_matches = 0;
        for (const auto& r : records) {
            if (r.n != n) continue;
            if (r.estimated_rank) {
                ranks.push_back(static_cast<double>(*r.estimated_rank));
                if (*r.estimated_rank == truth.num_states()) ++rank_matches;
            }
            if (r.obs_error) obs.push_back(*r.obs_error);
            if (r.partition_transition_error) trans.push_back(*r.partition_transition_error);
            failures += r.failed ? 1 : 0;
        }
        report.summary["points"].push_back({{"n", n},
                                            {"estimated_rank", stats_json(summarize(ranks))},
                                            {"rank_matches", rank_matches},
                                            {"obs_error", stats_json(summarize(obs))},
                                            {"partition_transition_error", stats_json(summarize(trans))},
                                            {"failures", failures}});
    }
    report.records = std::move(records);

    if (!config.output_dir.empty()) {
        const auto dir = config.output_dir / "convergence" / config.domain;
        write_metric_csv(dir / "estimated_rank.csv", report.records, [](const auto& r) -> std::optional<double> {
            if (!r.estimated_rank) return std::nullopt;
            return static_cast<double>(*r.estimated_rank);
        });
        write_metric_csv(dir / "obs_error.csv", report.records, [](const auto& r) { return r.obs_error; });
        write_metric_csv(dir / "transition_error.csv", report.records,
                         [](const auto& r) { return r.partition_transition_error; });
        write_records(dir, report.records, report.summary);
    }
    return report;
}

namespace {

void fill_stats(PlanningReport& report, const std::vector<std::size_t>& sizes) {
    for (const auto n : sizes) {
        std::map<std::string, std::vector<double>> by_backend;
        for (const auto& r : report.records)
            if (r.n == n)
                for (const auto& [backend, value] : r.returns) by_backend[backend].push_back(value);
        for (const auto& [backend, values] : by_backend) report.stats[backend][n] = summarize(values);
    }
    Json stats = Json::object();
    for (const auto& [backend, per_n] : report.stats) {
        Json rows = Json::array();
        for (const auto& [n, s] : per_n) {
            Json row = stats_json(s);
            row["n"] = n;
            rows.push_back(row);
        }
        stats[backend] = rows;
    }
    report.summary["returns"] = stats;
}

void write_planning(const std::filesystem::path& dir, const PlanningReport& report) {
    std::set<std::string> backends;
    for (const auto& r : report.records)
        for (const auto& [b, v] : r.returns) backends.insert(b);
    for (const auto& b : backends)
        write_metric_csv(dir / ("return_" + b + ".csv"), report.records, [&](const auto& r) -> std::optional<double> {
            auto it = r.returns.find(b);
            if (it == r.returns.end()) return std::nullopt;
            return it->second;
        });
    write_records(dir, report.records, report.summary);
}

double episode(const DiscretePomdp& env, const GenerativeModel* agent, const RewardSpec& reward,
               const Matrix& evaluation, const ExperimentConfig& config, std::uint64_t seed) {
    return run_episode(env, agent, reward, evaluation, config.planner, config.episode_steps, mix_seed(seed, 0x5eed))
        .discounted_return;
}

}  // namespace

PlanningReport run_planning_eval(const ExperimentConfig& config) {
    config.validate();
    const auto env = build_domain(config);
    if (!env.reward) throw Error("plan-eval: domain has no reward table");
    const auto reward = RewardSpec::observations(reward_table(env));
    const std::size_t max_n = *std::max_element(config.sizes.begin(), config.sizes.end());
    const HankelCache cache(config.cache_dir);
    const auto hash = config.hash();
    const BeliefBackend truth_backend(env);

    const std::size_t ns = config.sizes.size();
    std::vector<ExperimentRecord> records(config.seeds.size() * ns);
    parallel_for(config.seeds.size(), config.threads, [&](std::size_t si) {
        const auto seed = config.seeds[si];
        auto t0 = Clock::now();
        const double gt = episode(env, &truth_backend, reward, *env.reward, config, seed);
        const double random = episode(env, nullptr, reward, *env.reward, config, seed);
        const double t_reference = seconds_since(t0);
        const auto full = simulate_seed(env, max_n, seed);
        for (std::size_t k = 0; k < ns; ++k) {
            auto& r = records[si * ns + k];
            r.config_hash = hash;
            r.domain = config.domain;
            r.seed = seed;
            r.n = config.sizes[k];
            r.returns["ground_truth"] = gt;
            r.returns["random"] = random;
            const auto h = cache.get_or_estimate(config, seed, full.prefix(r.n), config.hist_len, config.test_len);
            auto out = learn(h, config, seed);
            r.times = out.times;
            r.diagnostics = out.diagnostics;
            t0 = Clock::now();
            if (out.psr) {
                r.estimated_rank = out.psr->dim();
                const PsrBackend psr(*out.psr);
                r.returns["psr"] = episode(env, &psr, reward, *env.reward, config, seed);
            } else {
                r.returns["psr"] = random;
            }
            if (out.model) {
                r.partitions = out.model->partition.size();
                const BeliefBackend pomdp(*out.model, config.sampling);
                r.returns["pomdp"] = episode(env, &pomdp, reward, *env.reward, config, seed);
            } else {
                r.returns["pomdp"] = random;
            }
            r.times.plan = seconds_since(t0) + t_reference;
            if (!out.failed_stage.empty()) {
                r.failed = true;
                r.failed_stage = out.failed_stage;
                r.diagnostics.push_back("failed models act uniformly at random");
            }
        }
    });
    sort_records(records);

    PlanningReport report;
    report.records = std::move(records);
    report.summary = {{"config_hash", hash}, {"config", config.to_json()}};
    fill_stats(report, config.sizes);
    if (!config.output_dir.empty()) write_planning(config.output_dir / "plan_eval" / config.domain, report);
    return report;
}

PlanningReport run_reward_spec(const ExperimentConfig& config) {
    config.validate();
    std::vector<std::string> domains;
    if (config.reward_scenario == "both") domains = {"directional_hallway", "noisy_hallway"};
    else domains = {config.reward_scenario};

    PlanningReport report;
    report.summary = {{"config_hash", config.hash()}, {"config", config.to_json()}};
    for (const auto& domain : domains) {
        ExperimentConfig c = config;
        if (config.domain != domain) {
            c = ExperimentConfig::for_domain(domain);
            c.sizes = config.sizes;
            c.seeds = config.seeds;
            c.planner = config.planner;
            c.episode_steps = config.episode_steps;
            c.sampling = config.sampling;
            c.threads = config.threads;
            c.cache_dir = config.cache_dir;
        }
        const auto env = build_domain(c);
        const auto middle = static_cast<Eigen::Index>(1);
        Matrix evaluation = Matrix::Zero(env.num_states(), env.num_actions());
        evaluation.row(middle).setOnes();
        Vector goal = Vector::Zero(env.num_states());
        goal(middle) = 1.0;
        const auto gt_reward = RewardSpec::states(goal);

        const bool noisy = domain == "noisy_hallway";
        const auto left = env.action_index("left"), right = env.action_index("right");
        const auto el = env.observation_index("end-left"), er = env.observation_index("end-right");
        Matrix table = Matrix::Zero(env.num_actions(), env.num_observations());
        table(left, el) = table(right, er) = 1.0;
        if (noisy) table(left, er) = table(right, el) = 1.0;
        const auto obs_reward = RewardSpec::observations(table);
        const auto rule = noisy ? StateRewardRule::max_entropy : StateRewardRule::ml_ends;

        const std::size_t max_n = *std::max_element(c.sizes.begin(), c.sizes.end());
        const HankelCache cache(c.cache_dir);
        const auto hash = c.hash();
        const BeliefBackend truth_backend(env);
        const std::size_t ns = c.sizes.size();
        std::vector<ExperimentRecord> records(c.seeds.size() * ns);
        parallel_for(c.seeds.size(), c.threads, [&](std::size_t si) {
            const auto seed = c.seeds[si];
            const double gt = episode(env, &truth_backend, gt_reward, evaluation, c, seed);
            const double gt_obs = episode(env, &truth_backend, obs_reward, evaluation, c, seed);
            const double random = episode(env, nullptr, gt_reward, evaluation, c, seed);
            const auto full = simulate_seed(env, max_n, seed);
            for (std::size_t k = 0; k < ns; ++k) {
                auto& r = records[si * ns + k];
                r.config_hash = hash;
                r.domain = domain;
                r.seed = seed;
                r.n = c.sizes[k];
                r.returns["gt_state"] = gt;
                r.returns["gt_obs"] = gt_obs;
                r.returns["random"] = random;
                const auto h = cache.get_or_estimate(c, seed, full.prefix(r.n), c.hist_len, c.test_len);
                auto out = learn(h, c, seed);
                r.times = out.times;
                r.diagnostics = out.diagnostics;
                const auto t0 = Clock::now();
                if (out.psr) {
                    r.estimated_rank = out.psr->dim();
                    const PsrBackend psr(*out.psr);
                    r.returns["obs_psr"] = episode(env, &psr, obs_reward, evaluation, c, seed);
                } else {
                    r.returns["obs_psr"] = random;
                }
                if (out.model) {
                    r.partitions = out.model->partition.size();
                    const BeliefBackend pomdp(*out.model, c.sampling);
                    r.returns["obs_pomdp"] = episode(env, &pomdp, obs_reward, evaluation, c, seed);
                    const auto derived = derive_state_rewards(*out.model, rule);
                    if (derived.tied.size() > 1)
                        r.diagnostics.push_back("state reward tie among " + std::to_string(derived.tied.size()) +
                                                " states");
                    r.returns["state_pomdp"] = episode(env, &pomdp, derived.spec, evaluation, c, seed);
                    const auto al = align_to_ground_truth(*out.model, env, c.tau_obs);
                    r.obs_error = al.obs_error;
                    r.partition_transition_error = al.transition_error;
                } else {
                    r.returns["obs_pomdp"] = random;
                    r.returns["state_pomdp"] = random;
                }
                r.times.plan = seconds_since(t0);
                if (!out.failed_stage.empty()) {
                    r.failed = true;
                    r.failed_stage = out.failed_stage;
                    r.diagnostics.push_back("failed models act uniformly at random");
                }
            }
        });
        PlanningReport part;
        part.records = std::move(records);
        sort_records(part.records);
        part.summary = {{"config_hash", hash}, {"config", c.to_json()}};
        fill_stats(part, c.sizes);
        if (!config.output_dir.empty()) write_planning(config.output_dir / "reward_spec" / domain, part);
        for (const auto& [backend, per_n] : part.stats)
            for (const auto& [n, s] : per_n) report.stats[domain + "/" + backend][n] = s;
        report.summary[domain] = part.summary;
        report.records.insert(report.records.end(), part.records.begin(), part.records.end());
    }
    return report;
}

Json CounterexampleReport::to_json() const {
    return {{"hankel_max_diff", hankel_max_diff},   {"hankel_ok", hankel_ok},
            {"transition_l1", transition_l1},       {"transition_ok", transition_ok},
            {"prediction_max_diff", prediction_max_diff}, {"prediction_ok", prediction_ok},
            {"passed", passed()}};
}

CounterexampleReport run_counterexample(std::uint64_t seed) {
    const auto pair = perturbed_sfr();
    CounterexampleReport report;
    const auto h1 = exact_hankel(pair.original, 3, 2);
    const auto h2 = exact_hankel(pair.transformed, 3, 2);
    report.hankel_max_diff = (h1.values - h2.values).cwiseAbs().maxCoeff();
    report.hankel_ok = report.hankel_max_diff < 1e-12;

    const auto a = pair.original.action_index("float'");
    report.transition_l1 =
        (pair.original.transitions[a] - pair.transformed.transitions[a]).rowwise().lpNorm<1>().maxCoeff();
    report.transition_ok = report.transition_l1 > 0.1;

    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> len(1, 6);
    std::uniform_int_distribution<std::uint32_t> act(0, static_cast<std::uint32_t>(pair.original.num_actions() - 1));
    std::uniform_int_distribution<std::uint32_t> obs(0,
                                                     static_cast<std::uint32_t>(pair.original.num_observations() - 1));
    const auto b1 = stationary_distribution(pair.original), b2 = stationary_distribution(pair.transformed);
    for (int i = 0; i < 100; ++i) {
        Sequence s(len(rng));
        for (auto& step : s) step = {act(rng), obs(rng)};
        report.prediction_max_diff =
            std::max(report.prediction_max_diff,
                     std::abs(string_likelihood(pair.original, b1, s) - string_likelihood(pair.transformed, b2, s)));
    }
    report.prediction_ok = report.prediction_max_diff < 1e-12;
    return report;
}

std::vector<SensitivityRow> run_sensitivity(const ExperimentConfig& config) {
    config.validate();
    std::vector<SensitivityRow> rows;
    for (const auto states : config.sensitivity_states) {
        ExperimentConfig c = ExperimentConfig::for_domain("tmaze", {{"states", states}});
        c.cache_dir = config.cache_dir;
        const auto model = build_domain(c);
        for (const auto& [hl, tl] : config.sensitivity_lengths) {
            const auto exact = exact_hankel(model, hl, tl);
            const auto exact_rank = truncated_svd(exact, 1e-10, 1000).rank;
            std::vector<std::vector<std::size_t>> ranks(config.sensitivity_rconds.size(),
                                                        std::vector<std::size_t>(config.seeds.size()));
            parallel_for(config.seeds.size(), config.threads, [&](std::size_t si) {
                const auto seed = config.seeds[si];
                const auto traj = simulate_seed(model, config.sensitivity_size, seed);
                const HankelCache cache(c.cache_dir);
                const auto h = cache.get_or_estimate(c, seed, traj, hl, tl);
                for (std::size_t k = 0; k < config.sensitivity_rconds.size(); ++k) {
                    SvdOptions o = c.svd_options(seed);
                    o.rcond_threshold = config.sensitivity_rconds[k];
                    o.max_components = config.max_components;
                    ranks[k][si] = truncated_svd(h, o).rank;
                }
            });
            for (std::size_t k = 0; k < config.sensitivity_rconds.size(); ++k) {
                SensitivityRow row;
                row.states = model.num_states();
                row.hist_len = hl;
                row.test_len = tl;
                row.rcond = config.sensitivity_rconds[k];
                row.exact_rank = exact_rank;
                row.ranks = ranks[k];
                std::vector<double> xs(ranks[k].begin(), ranks[k].end());
                row.stats = summarize(xs);
                rows.push_back(row);
            }
        }
    }
    if (!config.output_dir.empty()) {
        const auto dir = config.output_dir / "sensitivity";
        std::filesystem::create_directories(dir);
        std::ofstream out(dir / "estimated_rank.csv");
        out << "states,hist_len,test_len,rcond,seed,value\n";
        Json summary = Json::array();
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.ranks.size(); ++i)
                out << r.states << ',' << r.hist_len << ',' << r.test_len << ',' << r.rcond << ',' << config.seeds[i]
                    << ',' << r.ranks[i] << '\n';
            summary.push_back({{"states", r.states},
                               {"lengths", {r.hist_len, r.test_len}},
                               {"rcond", r.rcond},
                               {"exact_rank", r.exact_rank},
                               {"estimated_rank", stats_json(r.stats)}});
        }
        write_json(dir / "summary.json", summary);
    }
    return rows;
}

}  // namespace pomdp_learn
