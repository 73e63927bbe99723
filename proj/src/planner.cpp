#include "pomdp_learn/planner.hpp"

#include <algorithm>
#include <cmath>

namespace pomdp_learn {

namespace {

std::size_t sample_index(const Vector& p, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double total = p.sum();
    double u = unif(rng) * total, acc = 0.0;
    std::size_t last = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p(i) <= 0.0) continue;
        acc += p(i);
        last = static_cast<std::size_t>(i);
        if (u < acc) return last;
    }
    return last;
}


RowVector normalized_or(const RowVector& v, const RowVector& fallback) {
    const double s = v.sum();
    return s > 1e-300 ? RowVector(v / s) : fallback;
}

}  // namespace

void PlannerConfig::validate() const {
    if (!(ucb_constant >= 0.0)) throw Error("planner: UCB constant must be nonnegative");
    if (max_depth < 1 || simulations < 1) throw Error("planner: depth and simulations must be positive");
    if (!(discount > 0.0 && discount < 1.0)) throw Error("planner: discount must lie in (0,1)");
}

RewardSpec RewardSpec::observations(Matrix table) {
    RewardSpec r;
    r.mode = Mode::observation;
    r.observation_rewards = std::move(table);
    return r;
}

RewardSpec RewardSpec::states(Vector values) {
    RewardSpec r;
    r.mode = Mode::state;
    r.state_rewards = std::move(values);
    return r;
}

void RewardSpec::validate() const {
    const auto& v = mode == Mode::observation ? observation_rewards : Matrix(state_rewards);
    if (v.size() == 0) throw Error("reward spec is empty");
    if (!v.allFinite()) throw Error("reward spec has non-finite values");
    if (v.cwiseAbs().maxCoeff() == 0.0) throw Error("reward spec has no nonzero entry");
}

BeliefBackend::BeliefBackend(const DiscretePomdp& model, SamplingStrategy strategy)
    : transitions_(model.transitions), emissions_(model.emissions), initial_(model.initial), strategy_(strategy) {
    for (std::size_t i = 0; i < model.num_states(); ++i) partition_.push_back({i});
}

BeliefBackend::BeliefBackend(const RecoveredModel& model, SamplingStrategy strategy)
    : transitions_(model.transitions),
      emissions_(model.emissions),
      initial_(model.belief),
      partition_(model.partition),
      strategy_(strategy) {
    if (!model.projected) throw Error("planning on a recovered model requires projected probabilities");
}

Vector BeliefBackend::observation_distribution(const RowVector& state, std::size_t a) const {
    return project_to_simplex((state * emissions_[a]).transpose());
}

namespace {

double state_reward(const RewardSpec& reward, const RowVector& belief) {
    return belief.dot(reward.state_rewards.transpose());
}

}  // namespace

StepSample BeliefBackend::sample_step_belief(const RowVector& state, std::size_t a, const RewardSpec& reward,
                                             Rng& rng) const {
    StepSample s;
    s.observation = sample_index(observation_distribution(state, a), rng);
    const RowVector weighted = state.cwiseProduct(emissions_[a].col(static_cast<Eigen::Index>(s.observation)).transpose());
    s.next = normalized_or(weighted * transitions_[a], normalized_or(state * transitions_[a], initial_));
    s.reward = reward.mode == RewardSpec::Mode::observation
                   ? reward.observation_rewards(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(s.observation))
                   : state_reward(reward, state);
    return s;
}

namespace {

Vector block_masses(const RowVector& state, const Partition& partition) {
    Vector m(static_cast<Eigen::Index>(partition.size()));
    for (std::size_t b = 0; b < partition.size(); ++b) {
        double s = 0.0;
        for (std::size_t i : partition[b]) s += state(static_cast<Eigen::Index>(i));
        m(static_cast<Eigen::Index>(b)) = s;
    }
    return m;
}

RowVector restrict_to(const RowVector& state, const std::vector<std::size_t>& block) {
    RowVector r = RowVector::Zero(state.size());
    double s = 0.0;
    for (std::size_t i : block) s += state(static_cast<Eigen::Index>(i));
    for (std::size_t i : block)
        r(static_cast<Eigen::Index>(i)) =
            s > 0.0 ? state(static_cast<Eigen::Index>(i)) / s : 1.0 / static_cast<double>(block.size());
    return r;
}

}  // namespace

StepSample BeliefBackend::sample_step_partition(const RowVector& state, std::size_t a, const RewardSpec& reward,
                                                Rng& rng) const {
    const Vector masses = block_masses(state, partition_);
    if (!(masses.cwiseMax(0.0).sum() > 0.0)) throw Error("sample_step_partition: zero partition mass");
    StepSample s;
    const std::size_t block = sample_index(project_to_simplex(masses), rng);
    s.partition = block;
    const RowVector conditional = restrict_to(state, partition_[block]);
    s.observation = sample_index(observation_distribution(conditional, a), rng);
    const RowVector weighted =
        conditional.cwiseProduct(emissions_[a].col(static_cast<Eigen::Index>(s.observation)).transpose());
    s.next = normalized_or(weighted * transitions_[a], normalized_or(conditional * transitions_[a], initial_));
    s.reward = reward.mode == RewardSpec::Mode::observation
                   ? reward.observation_rewards(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(s.observation))
                   : state_reward(reward, conditional);
    return s;
}

Vector BeliefBackend::partition_observation_distribution(const RowVector& state, std::size_t a) const {
    const Vector masses = project_to_simplex(block_masses(state, partition_));
    Vector out = Vector::Zero(static_cast<Eigen::Index>(num_observations()));
    for (std::size_t b = 0; b < partition_.size(); ++b)
        if (masses(static_cast<Eigen::Index>(b)) > 0.0)
            out += masses(static_cast<Eigen::Index>(b)) * observation_distribution(restrict_to(state, partition_[b]), a);
    return out;
}

StepSample BeliefBackend::sample_step(const RowVector& state, std::size_t a, const RewardSpec& reward, Rng& rng) const {
    return strategy_ == SamplingStrategy::belief ? sample_step_belief(state, a, reward, rng)
                                                 : sample_step_partition(state, a, reward, rng);
}

std::optional<RowVector> BeliefBackend::update(const RowVector& state, std::size_t a, std::size_t o) const {
    const RowVector weighted = state.cwiseProduct(emissions_[a].col(static_cast<Eigen::Index>(o)).transpose());
    if (!(weighted.sum() > 0.0)) return std::nullopt;
    const RowVector next = weighted * transitions_[a];
    const double s = next.sum();
    if (!(s > 0.0)) return std::nullopt;
    return RowVector(next / s);
}

PsrBackend::PsrBackend(const LinearPsr& psr) : psr_(psr) {
    for (std::size_t a = 0; a < psr.num_actions(); ++a) {
        Matrix g(static_cast<Eigen::Index>(psr.dim()), static_cast<Eigen::Index>(psr.num_observations()));
        for (std::size_t o = 0; o < psr.num_observations(); ++o)
            g.col(static_cast<Eigen::Index>(o)) = psr.updates[a][o] * psr.final;
        predictors_.push_back(std::move(g));
    }
}

Vector PsrBackend::observation_distribution(const RowVector& state, std::size_t a) const {
    return project_to_simplex((state * predictors_[a]).transpose());
}

StepSample PsrBackend::sample_step(const RowVector& state, std::size_t a, const RewardSpec& reward, Rng& rng) const {
    if (reward.mode != RewardSpec::Mode::observation) throw Error("PSR backend accepts observation rewards only");
    StepSample s;
    s.observation = sample_index(observation_distribution(state, a), rng);
    s.next = update(state, a, s.observation).value_or(psr_.initial);
    s.reward = reward.observation_rewards(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(s.observation));
    return s;
}

std::optional<RowVector> PsrBackend::update(const RowVector& state, std::size_t a, std::size_t o) const {
    const RowVector next = state * psr_.updates[a][o];
    const double likelihood = next.dot(psr_.final.transpose());
    if (!(likelihood > 1e-12)) return std::nullopt;
    return RowVector(next / likelihood);
}

namespace {

class Search {
public:
    Search(const GenerativeModel& model, const PlannerConfig& config, const RewardSpec& reward, std::uint64_t seed)
        : model_(model), config_(config), reward_(reward), rng_(seed), na_(model.num_actions()),
          no_(model.num_observations()) {}

    PlanResult run(const RowVector& root) {
        nodes_.clear();
        new_node();
        for (std::size_t i = 0; i < config_.simulations; ++i) simulate(root, 0, 0);
        const Node& n = nodes_[0];
        PlanResult r;
        r.values = Vector::Constant(static_cast<Eigen::Index>(na_), -std::numeric_limits<double>::infinity());
        r.visits = n.count;
        for (std::size_t a = 0; a < na_; ++a)
            if (n.count[a] > 0) r.values(static_cast<Eigen::Index>(a)) = n.value[a];
        Eigen::Index best = 0;
        r.values.maxCoeff(&best);
        r.action = static_cast<std::size_t>(best);
        return r;
    }

private:
    struct Node {
        std::size_t visits = 0;
        std::vector<std::size_t> count;
        std::vector<double> value;
        std::vector<long> child;
    };

    std::size_t new_node() {
        nodes_.push_back({0, std::vector<std::size_t>(na_, 0), std::vector<double>(na_, 0.0),
                          std::vector<long>(na_ * no_, -1)});
        return nodes_.size() - 1;
    }

    std::size_t select(const Node& n) const {
        for (std::size_t a = 0; a < na_; ++a)
            if (n.count[a] == 0) return a;
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        const auto big_n = static_cast<double>(n.visits);
        for (std::size_t a = 0; a < na_; ++a) {
            const auto na = static_cast<double>(n.count[a]);
            const double bonus = config_.log_bonus
                                     ? config_.ucb_constant * std::sqrt(std::log(big_n) / na)
                                     : config_.ucb_constant * std::pow(big_n, config_.exploration_exponent) / std::sqrt(na);
            const double score = n.value[a] + bonus;
            if (score > best_score) {
                best_score = score;
                best = a;
            }
        }
        return best;
    }

    double rollout(RowVector state, std::size_t depth) {
        std::uniform_int_distribution<std::size_t> pick(0, na_ - 1);
        double total = 0.0, scale = 1.0;
        for (std::size_t d = depth; d < config_.max_depth; ++d) {
            const auto s = model_.sample_step(state, pick(rng_), reward_, rng_);
            total += scale * s.reward;
            scale *= config_.discount;
            state = s.next;
        }
        return total;
    }

    double simulate(const RowVector& state, std::size_t node, std::size_t depth) {
        if (depth >= config_.max_depth) return 0.0;
        const std::size_t a = select(nodes_[node]);
        const auto s = model_.sample_step(state, a, reward_, rng_);
        const std::size_t slot = a * no_ + s.observation;
        double ret;
        if (nodes_[node].child[slot] < 0) {
            const auto c = new_node();
            nodes_[node].child[slot] = static_cast<long>(c);
            ret = s.reward + config_.discount * rollout(s.next, depth + 1);
        } else {
            ret = s.reward +
                  config_.discount * simulate(s.next, static_cast<std::size_t>(nodes_[node].child[slot]), depth + 1);
        }
        Node& n = nodes_[node];
        ++n.visits;
        ++n.count[a];
        n.value[a] += (ret - n.value[a]) / static_cast<double>(n.count[a]);
        return ret;
    }

    const GenerativeModel& model_;
    const PlannerConfig& config_;
    const RewardSpec& reward_;
    Rng rng_;
    std::size_t na_, no_;
    std::vector<Node> nodes_;
};

}  // namespace

PlanResult plan(const GenerativeModel& model, const RowVector& state, const PlannerConfig& config,
                const RewardSpec& reward, std::uint64_t seed) {
    config.validate();
    if (reward.mode == RewardSpec::Mode::state && !model.supports_state_rewards())
        throw Error("plan: this backend does not accept state rewards");
    if (!(std::abs(state.sum()) > 0.0) && state.cwiseAbs().maxCoeff() == 0.0) throw Error("plan: zero root state");
    Search search(model, config, reward, seed);
    return search.run(state);
}

DerivedStateReward derive_state_rewards(const RecoveredModel& model, StateRewardRule rule) {
    const auto n = static_cast<Eigen::Index>(model.num_states());
    Vector score = Vector::Zero(n);
    if (rule == StateRewardRule::max_entropy) {
        for (const auto& e : model.emissions)
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index o = 0; o < e.cols(); ++o)
                    if (e(i, o) > 0.0) score(i) -= e(i, o) * std::log(e(i, o));
    } else {
        auto find = [](const std::vector<std::string>& v, const std::string& s) {
            auto it = std::find(v.begin(), v.end(), s);
            if (it == v.end()) throw Error("derive_state_rewards: model lacks label " + s);
            return static_cast<Eigen::Index>(it - v.begin());
        };
        const auto left = static_cast<std::size_t>(find(model.actions, "left"));
        const auto right = static_cast<std::size_t>(find(model.actions, "right"));
        const auto el = find(model.observations, "end-left");
        const auto er = find(model.observations, "end-right");
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index ml_left = 0, ml_right = 0;
            model.emissions[left].row(i).maxCoeff(&ml_left);
            model.emissions[right].row(i).maxCoeff(&ml_right);
            score(i) = (ml_left == el ? 1.0 : 0.0) + (ml_right == er ? 1.0 : 0.0);
        }
    }
    DerivedStateReward out;
    const double best = score.maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i)
        if (score(i) >= best - 1e-12) out.tied.push_back(static_cast<std::size_t>(i));
    out.state = out.tied.front();
    Vector r = Vector::Zero(n);
    r(static_cast<Eigen::Index>(out.state)) = 1.0;
    out.spec = RewardSpec::states(r);
    return out;
}

EpisodeResult run_episode(const DiscretePomdp& env, const GenerativeModel* agent, const RewardSpec& planning_reward,
                          const Matrix& evaluation_reward, const PlannerConfig& config, std::size_t steps,
                          std::uint64_t seed) {
    if (evaluation_reward.rows() != static_cast<Eigen::Index>(env.num_states()) ||
        evaluation_reward.cols() != static_cast<Eigen::Index>(env.num_actions()))
        throw Error("run_episode: evaluation reward must be states x actions");
    Rng rng(mix_seed(seed, 0xe9));
    auto draw = [&](const Eigen::Ref<const RowVector>& p) { return sample_index(p.transpose(), rng); };

    EpisodeResult result;
    std::size_t s = draw(env.initial);
    RowVector state = agent ? agent->initial_state() : RowVector();
    double scale = 1.0;
    std::uniform_int_distribution<std::size_t> random_action(0, env.num_actions() - 1);
    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t a =
            agent ? plan(*agent, state, config, planning_reward, mix_seed(seed, t + 1)).action : random_action(rng);
        const double r = evaluation_reward(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
        result.discounted_return += scale * r;
        result.total_reward += r;
        scale *= config.discount;
        const std::size_t o = draw(env.emissions[a].row(static_cast<Eigen::Index>(s)));
        s = draw(env.transitions[a].row(static_cast<Eigen::Index>(s)));
        if (agent) {
            auto next = agent->update(state, a, o);
            if (next) {
                state = *next;
            } else {
                state = agent->initial_state();
                ++result.resets;
            }
        }
    }
    return result;
}

}  // namespace pomdp_learn
