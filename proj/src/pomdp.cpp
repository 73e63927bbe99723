#include "pomdp_learn/pomdp.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <sstream>

namespace pomdp_learn {

namespace {

std::size_t find_label(const std::vector<std::string>& labels, const std::string& label, const char* what) {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw Error(std::string("unknown ") + what + " label: " + label);
    return static_cast<std::size_t>(it - labels.begin());
}

std::size_t draw(const std::vector<double>& cumulative, double u) {
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return static_cast<std::size_t>(it - cumulative.begin());
}

std::vector<double> cumulate(const Eigen::Ref<const RowVector>& row) {
    std::vector<double> c(static_cast<std::size_t>(row.size()));
    double total = 0.0;
    for (Eigen::Index i = 0; i < row.size(); ++i) c[static_cast<std::size_t>(i)] = (total += row(i));
    for (auto& x : c) x /= total;
    return c;
}

}  // namespace

Vector DiscretePomdp::obs_diagonal(std::size_t a, std::size_t o) const {
    return emissions.at(a).col(static_cast<Eigen::Index>(o));
}

Matrix DiscretePomdp::product(std::size_t a, std::size_t o) const {
    return obs_diagonal(a, o).asDiagonal() * transitions.at(a);
}

std::size_t DiscretePomdp::action_index(const std::string& label) const {
    return find_label(actions, label, "action");
}

std::size_t DiscretePomdp::observation_index(const std::string& label) const {
    return find_label(observations, label, "observation");
}

void DiscretePomdp::validate(double tol) const {
    const auto n = static_cast<Eigen::Index>(num_states());
    const auto no = static_cast<Eigen::Index>(num_observations());
    auto fail = [](const std::string& msg) { throw InvalidModel(msg); };
    if (n == 0) fail("model has no states");
    if (actions.empty()) fail("model has no actions");
    if (observations.empty()) fail("model has no observations");
    if (transitions.size() != actions.size()) fail("one transition matrix per action required");
    if (emissions.size() != actions.size()) fail("one observation matrix per action required");
    if (!(discount > 0.0 && discount < 1.0)) fail("discount must lie in (0,1)");
    if (initial.minCoeff() < -tol || std::abs(initial.sum() - 1.0) > tol)
        fail("initial distribution is not a probability vector");
    for (std::size_t a = 0; a < actions.size(); ++a) {
        const Matrix& t = transitions[a];
        const Matrix& e = emissions[a];
        if (t.rows() != n || t.cols() != n) fail("transition matrix for " + actions[a] + " has wrong shape");
        if (e.rows() != n || e.cols() != no) fail("observation matrix for " + actions[a] + " has wrong shape");
        if (t.minCoeff() < -tol) fail("negative transition entry under " + actions[a]);
        if (e.minCoeff() < -tol) fail("negative observation entry under " + actions[a]);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(t.row(i).sum() - 1.0) > tol)
                fail("transition row " + std::to_string(i) + " under " + actions[a] + " does not sum to 1");
            if (std::abs(e.row(i).sum() - 1.0) > tol)
                fail("observation row " + std::to_string(i) + " under " + actions[a] + " does not sum to 1");
        }
    }
    if (reward && (reward->rows() != n || reward->cols() != static_cast<Eigen::Index>(actions.size())))
        fail("reward table must be states x actions");
}

Policy Policy::uniform(std::size_t num_actions) {
    return {Vector::Constant(static_cast<Eigen::Index>(num_actions), 1.0 / static_cast<double>(num_actions))};
}

void Policy::validate(std::size_t num_actions) const {
    if (static_cast<std::size_t>(probs.size()) != num_actions) throw Error("policy size does not match action count");
    if (probs.minCoeff() < 0.0) throw Error("policy has negative probabilities");
    if (std::abs(probs.sum() - 1.0) > 1e-9) throw Error("policy probabilities do not sum to 1");
}

Trajectory Trajectory::prefix(std::size_t n) const {
    Trajectory t{actions, observations, {}, seed};
    t.steps.assign(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(std::min(n, steps.size())));
    return t;
}

LatentTrajectory simulate_latent(const DiscretePomdp& model, const Policy& policy, std::size_t n_steps,
                                 std::uint64_t seed) {
    policy.validate(model.num_actions());
    const std::size_t n = model.num_states();
    const std::size_t na = model.num_actions();
    std::vector<std::vector<double>> obs_cdf(na * n), trans_cdf(na * n);
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t s = 0; s < n; ++s) {
            obs_cdf[a * n + s] = cumulate(model.emissions[a].row(static_cast<Eigen::Index>(s)));
            trans_cdf[a * n + s] = cumulate(model.transitions[a].row(static_cast<Eigen::Index>(s)));
        }
    const auto action_cdf = cumulate(policy.probs.transpose());
    const auto initial_cdf = cumulate(model.initial);

    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    LatentTrajectory out;
    out.trajectory = {model.actions, model.observations, {}, seed};
    out.trajectory.steps.reserve(n_steps);
    out.states.reserve(n_steps);
    std::size_t s = draw(initial_cdf, unif(rng));
    for (std::size_t t = 0; t < n_steps; ++t) {
        const std::size_t a = draw(action_cdf, unif(rng));
        const std::size_t o = draw(obs_cdf[a * n + s], unif(rng));
        out.states.push_back(static_cast<std::uint32_t>(s));
        out.trajectory.steps.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(o)});
        s = draw(trans_cdf[a * n + s], unif(rng));
    }
    return out;
}

Trajectory simulate(const DiscretePomdp& model, const Policy& policy, std::size_t n_steps, std::uint64_t seed) {
    return simulate_latent(model, policy, n_steps, seed).trajectory;
}

std::optional<BeliefStep> belief_update(const DiscretePomdp& model, const Belief& b, std::size_t a, std::size_t o) {
    Belief weighted = b.cwiseProduct(model.obs_diagonal(a, o).transpose());
    const double likelihood = weighted.sum();
    if (!(likelihood > 0.0)) return std::nullopt;
    Belief next = (weighted * model.transitions[a]) / likelihood;
    return BeliefStep{next, likelihood};
}

Matrix averaged_transition(const DiscretePomdp& model, const Policy& policy) {
    policy.validate(model.num_actions());
    const auto n = static_cast<Eigen::Index>(model.num_states());
    Matrix t = Matrix::Zero(n, n);
    for (std::size_t a = 0; a < model.num_actions(); ++a)
        t += policy.probs(static_cast<Eigen::Index>(a)) * model.transitions[a];
    return t;
}

Belief stationary_distribution(const DiscretePomdp& model, const Policy& policy) {
    const Matrix t = averaged_transition(model, policy);
    const auto n = static_cast<std::size_t>(t.rows());

    auto reach = [&](bool reverse) {
        std::vector<char> seen(n, 0);
        std::queue<std::size_t> q;
        q.push(0);
        seen[0] = 1;
        while (!q.empty()) {
            const auto u = q.front();
            q.pop();
            for (std::size_t v = 0; v < n; ++v) {
                const double w = reverse ? t(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u))
                                         : t(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
                if (w > 0.0 && !seen[v]) {
                    seen[v] = 1;
                    q.push(v);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    if (!reach(false) || !reach(true)) throw NotErgodic("averaged chain is reducible");

    // Period = gcd over edges of (level(u) + 1 - level(v)) for BFS levels.
    std::vector<long> level(n, -1);
    std::queue<std::size_t> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n; ++v)
            if (t(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0 && level[v] < 0) {
                level[v] = level[u] + 1;
                q.push(v);
            }
    }
    long period = 0;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            if (t(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0)
                period = std::gcd(period, std::abs(level[u] + 1 - level[v]));
    if (period != 1) throw NotErgodic("averaged chain is periodic with period " + std::to_string(period));

    const auto dim = static_cast<Eigen::Index>(n);
    Matrix system = t.transpose() - Matrix::Identity(dim, dim);
    system.row(dim - 1).setOnes();
    Vector rhs = Vector::Zero(dim);
    rhs(dim - 1) = 1.0;
    Vector pi = system.fullPivLu().solve(rhs);
    Belief b = pi.transpose();
    for (int it = 0; it < 4; ++it) {
        b = b * t;
        b /= b.sum();
    }
    return b;
}

Belief stationary_distribution(const DiscretePomdp& model) {
    return stationary_distribution(model, Policy::uniform(model.num_actions()));
}

ConjugateResult conjugate(const DiscretePomdp& model, const Matrix& p, double tol) {
    const auto n = static_cast<Eigen::Index>(model.num_states());
    if (p.rows() != n || p.cols() != n) throw Error("conjugate: transform has wrong shape");
    Eigen::JacobiSVD<Matrix> svd(p);
    const auto& s = svd.singularValues();
    ConjugateResult r;
    r.condition = s(0) / s(s.size() - 1);
    if (!(s(s.size() - 1) > 1e-14 * s(0))) {
        std::ostringstream msg;
        msg << "conjugate: transform is singular (condition number " << r.condition << ")";
        throw NumericalFailure(msg.str());
    }
    const Matrix p_inv = p.inverse();
    r.initial = model.initial * p_inv;

    auto note = [&](const std::string& v) {
        r.violations.push_back(v);
    };
    if (r.initial.minCoeff() < -tol) note("initial distribution has a negative entry");
    if (std::abs(r.initial.sum() - 1.0) > 1e-9) note("initial distribution does not sum to 1");

    DiscretePomdp out = model;
    out.initial = r.initial.cwiseMax(0.0);
    out.reward.reset();
    for (std::size_t a = 0; a < model.num_actions(); ++a) {
        Matrix t = p * model.transitions[a] * p_inv;
        r.transitions.push_back(t);
        if (t.minCoeff() < -tol) {
            std::ostringstream msg;
            msg << "transition under " << model.actions[a] << " has negative entry " << t.minCoeff();
            note(msg.str());
        }
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(t.row(i).sum() - 1.0) > 1e-9)
                note("transition row " + std::to_string(i) + " under " + model.actions[a] + " does not sum to 1");
        std::vector<Matrix> obs;
        for (std::size_t o = 0; o < model.num_observations(); ++o) {
            Matrix m = p * Matrix(model.obs_diagonal(a, o).asDiagonal()) * p_inv;
            Matrix off = m;
            off.diagonal().setZero();
            if (off.cwiseAbs().maxCoeff() > 1e-9)
                note("observation matrix (" + model.actions[a] + ", " + model.observations[o] + ") is not diagonal");
            if (m.diagonal().minCoeff() < -tol)
                note("observation matrix (" + model.actions[a] + ", " + model.observations[o] +
                     ") has negative entry");
            out.emissions[a].col(static_cast<Eigen::Index>(o)) = m.diagonal().cwiseMax(0.0);
            obs.push_back(std::move(m));
        }
        out.transitions[a] = t.cwiseMax(0.0);
        r.obs_matrices.push_back(std::move(obs));
    }
    r.valid = r.violations.empty();
    if (r.valid) r.model = std::move(out);
    return r;
}

double string_likelihood(const DiscretePomdp& model, const Belief& b, const Sequence& seq) {
    Belief state = b;
    for (const auto& step : seq)
        state = state.cwiseProduct(model.obs_diagonal(step.action, step.observation).transpose()) *
                model.transitions[step.action];
    return state.sum();
}

}  // namespace pomdp_learn
