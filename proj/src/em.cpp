#include "pomdp_learn/em.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace pomdp_learn {

namespace {

// Flat parameter storage: trans[a][i*n+j], emit[a][i*no+o].
struct Params {
    std::size_t n = 0, na = 0, no = 0;
    std::vector<std::vector<double>> trans, emit;
    std::vector<double> init;
};

std::vector<double> dirichlet_row(std::size_t k, Rng& rng) {
    std::gamma_distribution<double> g(1.0, 1.0);
    std::vector<double> r(k);
    double s = 0.0;
    for (auto& x : r) {
        x = g(rng) + 1e-12;
        s += x;
    }
    for (auto& x : r) x /= s;
    return r;
}

Params random_params(std::size_t n, std::size_t na, std::size_t no, Rng& rng) {
    Params p;
    p.n = n;
    p.na = na;
    p.no = no;
    p.trans.assign(na, std::vector<double>(n * n));
    p.emit.assign(na, std::vector<double>(n * no));
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t i = 0; i < n; ++i) {
            auto t = dirichlet_row(n, rng);
            std::copy(t.begin(), t.end(), p.trans[a].begin() + i * n);
            auto e = dirichlet_row(no, rng);
            std::copy(e.begin(), e.end(), p.emit[a].begin() + i * no);
        }
    p.init.assign(n, 1.0 / n);
    return p;
}

Params from_model(const DiscretePomdp& m) {
    Params p;
    p.n = m.num_states();
    p.na = m.num_actions();
    p.no = m.num_observations();
    p.trans.assign(p.na, std::vector<double>(p.n * p.n));
    p.emit.assign(p.na, std::vector<double>(p.n * p.no));
    for (std::size_t a = 0; a < p.na; ++a)
        for (std::size_t i = 0; i < p.n; ++i) {
            for (std::size_t j = 0; j < p.n; ++j) p.trans[a][i * p.n + j] = m.transitions[a](i, j);
            for (std::size_t o = 0; o < p.no; ++o) p.emit[a][i * p.no + o] = m.emissions[a](i, o);
        }
    p.init.assign(m.initial.data(), m.initial.data() + p.n);
    return p;
}

DiscretePomdp to_model(const Params& p, const Trajectory& traj) {
    DiscretePomdp m;
    m.actions = traj.actions;
    m.observations = traj.observations;
    m.initial = Belief::Map(p.init.data(), static_cast<Eigen::Index>(p.n));
    for (std::size_t a = 0; a < p.na; ++a) {
        Matrix t(p.n, p.n), e(p.n, p.no);
        for (std::size_t i = 0; i < p.n; ++i) {
            for (std::size_t j = 0; j < p.n; ++j) t(i, j) = p.trans[a][i * p.n + j];
            for (std::size_t o = 0; o < p.no; ++o) e(i, o) = p.emit[a][i * p.no + o];
        }
        m.transitions.push_back(std::move(t));
        m.emissions.push_back(std::move(e));
    }
    return m;
}

// Forward pass. alpha holds the predicted belief before each step (N+1 rows);
// scale[t] is the likelihood of step t given the past.
double forward(const Params& p, const Sequence& seq, std::vector<double>& alpha, std::vector<double>& scale) {
    const std::size_t n = p.n, N = seq.size();
    alpha.assign((N + 1) * n, 0.0);
    scale.assign(N, 0.0);
    std::copy(p.init.begin(), p.init.end(), alpha.begin());
    std::vector<double> u(n);
    double ll = 0.0;
    for (std::size_t t = 0; t < N; ++t) {
        const auto& e = p.emit[seq[t].action];
        const auto& tr = p.trans[seq[t].action];
        const double* at = &alpha[t * n];
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = at[i] * e[i * p.no + seq[t].observation];
            c += u[i];
        }
        if (!(c > 0.0)) return -std::numeric_limits<double>::infinity();
        scale[t] = c;
        ll += std::log(c);
        double* next = &alpha[(t + 1) * n];
        for (std::size_t i = 0; i < n; ++i) {
            const double ui = u[i] / c;
            if (ui == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) next[j] += ui * tr[i * n + j];
        }
    }
    return ll;
}

struct Counts {
    std::vector<std::vector<double>> trans, emit;
    std::vector<double> init;
};

// Backward pass accumulating expected counts.
Counts backward(const Params& p, const Sequence& seq, const std::vector<double>& alpha,
                const std::vector<double>& scale) {
    const std::size_t n = p.n, N = seq.size();
    Counts c;
    c.trans.assign(p.na, std::vector<double>(n * n, 0.0));
    c.emit.assign(p.na, std::vector<double>(n * p.no, 0.0));
    c.init.assign(n, 0.0);
    std::vector<double> beta_next(n, 1.0), beta(n);
    for (std::size_t t = N; t-- > 0;) {
        const std::size_t a = seq[t].action, o = seq[t].observation;
        const auto& e = p.emit[a];
        const auto& tr = p.trans[a];
        const double* at = &alpha[t * n];
        const double inv_c = 1.0 / scale[t];
        auto& ct = c.trans[a];
        auto& ce = c.emit[a];
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = e[i * p.no + o];
            const double w = at[i] * ei * inv_c;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double x = tr[i * n + j] * beta_next[j];
                s += x;
                ct[i * n + j] += w * x;
            }
            beta[i] = ei * s * inv_c;
            ce[i * p.no + o] += at[i] * beta[i];
        }
        std::swap(beta, beta_next);
        if (t == 0)
            for (std::size_t i = 0; i < n; ++i) c.init[i] = at[i] * beta_next[i];
    }
    return c;
}

void normalize_rows(std::vector<double>& counts, const std::vector<double>& previous, std::size_t rows,
                    std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += counts[i * cols + j];
        if (s > 0.0) {
            for (std::size_t j = 0; j < cols; ++j) counts[i * cols + j] /= s;
        } else {
            for (std::size_t j = 0; j < cols; ++j) counts[i * cols + j] = previous[i * cols + j];
        }
    }
}

Params maximize(const Params& p, Counts&& c) {
    Params q = p;
    for (std::size_t a = 0; a < p.na; ++a) {
        normalize_rows(c.trans[a], p.trans[a], p.n, p.n);
        normalize_rows(c.emit[a], p.emit[a], p.n, p.no);
        q.trans[a] = std::move(c.trans[a]);
        q.emit[a] = std::move(c.emit[a]);
    }
    normalize_rows(c.init, p.init, 1, p.n);
    q.init = std::move(c.init);
    return q;
}

}  // namespace

double sequence_log_likelihood(const DiscretePomdp& model, const Trajectory& traj) {
    std::vector<double> alpha, scale;
    return forward(from_model(model), traj.steps, alpha, scale);
}

EmResult em_fit(const Trajectory& traj, const EmConfig& config) {
    if (config.num_states == 0) throw InvalidModel("em: num_states must be positive");
    if (config.restarts == 0) throw InvalidModel("em: restarts must be positive");
    if (traj.steps.empty()) throw InvalidModel("em: empty trajectory");
    const std::size_t na = traj.actions.size(), no = traj.observations.size();
    const double steps = static_cast<double>(traj.size());

    Rng rng(config.seed);
    EmResult result;
    result.log_likelihood = -std::numeric_limits<double>::infinity();
    std::vector<double> alpha, scale;
    for (std::size_t r = 0; r < config.restarts; ++r) {
        Params p = random_params(config.num_states, na, no, rng);
        EmRun run;
        double ll = forward(p, traj.steps, alpha, scale);
        run.log_likelihoods.push_back(ll);
        for (std::size_t it = 0; it < config.max_iters; ++it) {
            Params q = maximize(p, backward(p, traj.steps, alpha, scale));
            const double next = forward(q, traj.steps, alpha, scale);
            if (next < ll - config.monotonic_slack * std::abs(ll))
                throw NumericalFailure("em: log-likelihood decreased from " + std::to_string(ll) + " to " +
                                       std::to_string(next));
            run.log_likelihoods.push_back(next);
            p = std::move(q);
            const double gain = (next - ll) / steps;
            ll = next;
            if (gain < config.tolerance) {
                run.converged = true;
                break;
            }
        }
        if (ll > result.log_likelihood) {
            result.log_likelihood = ll;
            result.best_restart = r;
            result.model = to_model(p, traj);
        }
        result.runs.push_back(std::move(run));
    }
    return result;
}

}  // namespace pomdp_learn
