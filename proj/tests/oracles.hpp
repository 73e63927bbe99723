#pragma once

// Reference computations written directly from the model definitions, with
// no calls into the library's matrix code.

#include "pomdp_learn/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

using pomdp_learn::DiscretePomdp;
using pomdp_learn::Sequence;

// Sum over every latent path s_0..s_L of b(s_0) prod O(s_t, a_t, o_t) T(s_t, s_{t+1}).
// With `last` set, only paths whose final state is in the mask are counted.
inline double path_sum(const DiscretePomdp& m, const std::vector<double>& b, const Sequence& seq,
                       const std::vector<bool>* last = nullptr) {
    const std::size_t n = m.num_states(), len = seq.size();
    std::vector<std::size_t> path(len + 1, 0);
    double total = 0.0;
    while (true) {
        double p = b[path[0]];
        for (std::size_t t = 0; t < len && p != 0.0; ++t) {
            const auto a = seq[t].action, o = seq[t].observation;
            p *= m.emissions[a](static_cast<long>(path[t]), o) *
                 m.transitions[a](static_cast<long>(path[t]), static_cast<long>(path[t + 1]));
        }
        if (!last || (*last)[path[len]]) total += p;
        std::size_t k = 0;
        while (k <= len && ++path[k] == n) path[k++] = 0;
        if (k > len) break;
    }
    return total;
}

// Stationary distribution of the uniform-policy chain by power iteration.
inline std::vector<double> stationary(const DiscretePomdp& m, int iters = 20000) {
    const std::size_t n = m.num_states(), na = m.num_actions();
    std::vector<double> b(n, 1.0 / static_cast<double>(n)), next(n);
    for (int it = 0; it < iters; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    next[j] += b[i] * m.transitions[a](static_cast<long>(i), static_cast<long>(j)) / static_cast<double>(na);
        // Lazy step keeps periodic chains from oscillating.
        for (std::size_t i = 0; i < n; ++i) b[i] = 0.5 * b[i] + 0.5 * next[i];
    }
    return b;
}

// Every action-observation string of exactly this length.
inline std::vector<Sequence> all_strings(std::size_t na, std::size_t no, std::size_t len) {
    std::vector<Sequence> out;
    Sequence s(len);
    const std::size_t k = na * no;
    std::size_t total = 1;
    for (std::size_t i = 0; i < len; ++i) total *= k;
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (std::size_t i = len; i-- > 0;) {
            const auto sym = c % k;
            c /= k;
            s[i] = {static_cast<std::uint32_t>(sym / no), static_cast<std::uint32_t>(sym % no)};
        }
        out.push_back(s);
    }
    return out;
}

struct PermutedDistance {
    std::vector<std::size_t> perm;  // state i of a matches perm[i] of b
    double emission_l1 = 0.0;       // max row L1 over (action, state)
    double transition_l1 = 0.0;     // max row L1 over (action, state)
};

// Brute force over state permutations (small n): pick the one closest in
// emissions, report both distances under it.
inline PermutedDistance permuted_distance(const DiscretePomdp& a, const DiscretePomdp& b) {
    const std::size_t n = a.num_states();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    PermutedDistance best;
    double best_score = 1e300;
    do {
        double score = 0.0, emis = 0.0, trans = 0.0;
        for (std::size_t act = 0; act < a.num_actions(); ++act)
            for (std::size_t i = 0; i < n; ++i) {
                double row = 0.0;
                for (std::size_t o = 0; o < a.num_observations(); ++o)
                    row += std::abs(a.emissions[act](static_cast<long>(i), static_cast<long>(o)) -
                                    b.emissions[act](static_cast<long>(perm[i]), static_cast<long>(o)));
                score += row;
                emis = std::max(emis, row);
                double trow = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    trow += std::abs(a.transitions[act](static_cast<long>(i), static_cast<long>(j)) -
                                     b.transitions[act](static_cast<long>(perm[i]), static_cast<long>(perm[j])));
                trans = std::max(trans, trow);
            }
        if (score < best_score) {
            best_score = score;
            best = {perm, emis, trans};
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Mean total-variation distance between the one-step observation
// predictions of two models, each filtering the same trajectory from its own
// initial belief.
inline double predictive_tv(const DiscretePomdp& truth, const DiscretePomdp& model, const Sequence& steps) {
    auto filter_step = [](const DiscretePomdp& m, std::vector<double>& b, std::size_t a, std::size_t o) {
        const std::size_t n = m.num_states();
        std::vector<double> next(n, 0.0);
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = b[i] * m.emissions[a](static_cast<long>(i), static_cast<long>(o));
            for (std::size_t j = 0; j < n; ++j) next[j] += w * m.transitions[a](static_cast<long>(i), static_cast<long>(j));
            norm += w;
        }
        if (norm > 0.0)
            for (std::size_t j = 0; j < n; ++j) b[j] = next[j] / norm;
    };
    auto predict = [](const DiscretePomdp& m, const std::vector<double>& b, std::size_t a) {
        std::vector<double> p(m.num_observations(), 0.0);
        for (std::size_t i = 0; i < m.num_states(); ++i)
            for (std::size_t o = 0; o < p.size(); ++o) p[o] += b[i] * m.emissions[a](static_cast<long>(i), static_cast<long>(o));
        return p;
    };
    std::vector<double> bt(truth.initial.data(), truth.initial.data() + truth.num_states());
    std::vector<double> bm(model.initial.data(), model.initial.data() + model.num_states());
    double tv = 0.0;
    for (const auto& s : steps) {
        const auto pt = predict(truth, bt, s.action), pm = predict(model, bm, s.action);
        double d = 0.0;
        for (std::size_t o = 0; o < pt.size(); ++o) d += std::abs(pt[o] - pm[o]);
        tv += 0.5 * d;
        filter_step(truth, bt, s.action, s.observation);
        filter_step(model, bm, s.action, s.observation);
    }
    return steps.empty() ? 0.0 : tv / static_cast<double>(steps.size());
}

}  // namespace oracle
