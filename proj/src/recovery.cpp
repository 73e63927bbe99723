#include "pomdp_learn/recovery.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace pomdp_learn {

std::vector<Matrix> marginalize_actions(const LinearPsr& psr) {
    std::vector<Matrix> ms;
    for (const auto& per_obs : psr.updates) {
        Matrix sum = Matrix::Zero(per_obs.front().rows(), per_obs.front().cols());
        for (const auto& m : per_obs) sum += m;
        ms.push_back(std::move(sum));
    }
    return ms;
}

FullRankActions detect_full_rank(const std::vector<Matrix>& ms, double sigma_min) {
    if (!(sigma_min > 0.0)) throw Error("detect_full_rank: sigma_min must be positive");
    FullRankActions out;
    for (std::size_t a = 0; a < ms.size(); ++a) {
        const double s = min_singular_value(ms[a]);
        out.min_singular_values.push_back(s);
        if (s >= sigma_min) out.actions.push_back(a);
    }
    if (out.actions.empty()) {
        std::ostringstream msg;
        msg << "no full-rank action at sigma_min " << sigma_min << "; smallest singular values:";
        for (double s : out.min_singular_values) msg << ' ' << s;
        throw NumericalFailure(msg.str());
    }
    return out;
}

ConvexCombinationCheck check_convex_combination_rank(const Matrix& t01, double p) {
    if (t01.rows() != t01.cols()) throw Error("check_convex_combination_rank: matrix must be square");
    for (Eigen::Index i = 0; i < t01.rows(); ++i) {
        const auto ones = (t01.row(i).array() == 1.0).count();
        const auto zeros = (t01.row(i).array() == 0.0).count();
        if (ones != 1 || ones + zeros != t01.cols())
            throw Error("check_convex_combination_rank: each row must contain a single 1");
    }
    const Matrix c = p * t01 + (1.0 - p) * Matrix::Identity(t01.rows(), t01.cols());
    ConvexCombinationCheck r;
    r.determinant = c.determinant();
    r.min_singular_value = min_singular_value(c);
    r.nonsingular = r.min_singular_value > 1e-12;
    return r;
}

Matrix weighted_similarity(const std::vector<std::vector<Matrix>>& similarity, const Vector& weights) {
    const auto r = similarity.front().front().rows();
    Matrix x = Matrix::Zero(r, r);
    Eigen::Index w = 0;
    for (const auto& per_obs : similarity)
        for (const auto& s : per_obs) x += weights(w++) * s;
    return x;
}

namespace {

struct EigenBasis {
    Matrix vectors;
    Vector values;
    double max_imag = 0.0;
};

// Eigenvalues closer than tol (relative) are treated as one eigenvalue; its
// eigenspace basis comes from the smallest right singular vectors of X - lambda I.
EigenBasis clustered_eigenbasis(const Matrix& x, double tol) {
    Eigen::EigenSolver<Matrix> es(x, false);
    const auto& ev = es.eigenvalues();
    EigenBasis b;
    const double radius = ev.cwiseAbs().maxCoeff();
    b.max_imag = ev.imag().cwiseAbs().maxCoeff() / std::max(radius, 1e-300);
    const Vector real = ev.real();
    std::vector<double> re(real.data(), real.data() + real.size());
    std::sort(re.begin(), re.end());
    const auto n = x.rows();
    b.vectors.resize(n, n);
    b.values.resize(n);
    Eigen::Index col = 0;
    std::size_t start = 0;
    const double scale = std::max(1.0, radius);
    while (start < re.size()) {
        std::size_t end = start + 1;
        while (end < re.size() && re[end] - re[end - 1] <= tol * scale) ++end;
        const auto k = static_cast<Eigen::Index>(end - start);
        double center = 0.0;
        for (std::size_t i = start; i < end; ++i) center += re[i];
        center /= static_cast<double>(k);
        Eigen::JacobiSVD<Matrix> svd(x - center * Matrix::Identity(n, n), Eigen::ComputeFullV);
        b.vectors.middleCols(col, k) = svd.matrixV().rightCols(k);
        b.values.segment(col, k).setConstant(center);
        if (k == 1) b.values(col) = re[start];
        col += k;
        start = end;
    }
    return b;
}

double condition_number(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    return s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

}  // namespace

JointDiagonalization joint_diagonalize(const LinearPsr& psr, const std::vector<Matrix>& ms,
                                       const std::vector<std::size_t>& full_rank, Rng& rng,
                                       const RecoveryConfig& config) {
    if (full_rank.empty()) throw NumericalFailure("joint_diagonalize: no full-rank action");
    const std::size_t no = psr.num_observations();
    JointDiagonalization jd;
    for (std::size_t a : full_rank) {
        const Matrix inv = ms[a].inverse();
        std::vector<Matrix> per_obs;
        for (std::size_t o = 0; o < no; ++o) per_obs.push_back(psr.updates[a][o] * inv);
        jd.similarity.push_back(std::move(per_obs));
    }
    const std::size_t dim = full_rank.size() * no;
    std::ostringstream failures;
    for (int attempt = 1; attempt <= config.max_retries + 1; ++attempt) {
        jd.attempts = attempt;
        jd.weights = sample_unit_sphere(dim, rng);
        const Matrix x = weighted_similarity(jd.similarity, jd.weights);
        const EigenBasis b = clustered_eigenbasis(x, config.cluster_tolerance);
        if (b.max_imag > config.imag_tolerance) {
            failures << " attempt " << attempt << ": complex eigenvalues (relative imaginary part " << b.max_imag
                     << ");";
            continue;
        }
        const double cond = condition_number(b.vectors);
        if (!(cond <= config.max_condition)) {
            failures << " attempt " << attempt << ": eigenvector condition number " << cond << ";";
            continue;
        }
        jd.eigenvectors = b.vectors;
        jd.eigenvalues = b.values;
        const Matrix pinv_vec = b.vectors.inverse();
        const auto r = b.vectors.rows();
        jd.obs_diagonals.resize(r, static_cast<Eigen::Index>(dim));
        jd.max_off_diagonal = 0.0;
        Eigen::Index c = 0;
        for (const auto& per_obs : jd.similarity)
            for (const auto& s : per_obs) {
                Matrix d = pinv_vec * s * b.vectors;
                jd.obs_diagonals.col(c++) = d.diagonal();
                d.diagonal().setZero();
                jd.max_off_diagonal = std::max(jd.max_off_diagonal, d.cwiseAbs().maxCoeff());
            }
        return jd;
    }
    throw NumericalFailure("joint_diagonalize failed after retries:" + failures.str());
}

Partition detect_partitions(const Matrix& obs_diagonals, double tau) {
    if (!(tau > 0.0)) throw Error("detect_partitions: tau must be positive");
    const auto n = static_cast<std::size_t>(obs_diagonals.rows());
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = (obs_diagonals.row(static_cast<Eigen::Index>(i)) -
                              obs_diagonals.row(static_cast<Eigen::Index>(j)))
                                 .cwiseAbs()
                                 .sum();
            if (d <= tau) parent[root(j)] = root(i);
        }
    Partition blocks;
    std::vector<long> slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = root(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<long>(blocks.size());
            blocks.emplace_back();
        }
        blocks[static_cast<std::size_t>(slot[r])].push_back(i);
    }
    return blocks;
}

FinalTransform final_transform(const Matrix& p_prime, const Vector& m_inf, const Partition& partition, Rng& rng,
                               bool dense_variant) {
    const auto n = p_prime.rows();
    Eigen::FullPivLU<Matrix> lu(p_prime);
    if (!lu.isInvertible()) throw NumericalFailure("final_transform: eigenvector matrix is singular");
    const Vector base = lu.solve(m_inf);
    FinalTransform ft;
    auto scaled = [&](const Matrix& r) {
        const Vector v = r.transpose() * base;
        return std::pair<Vector, bool>{v, v.cwiseAbs().minCoeff() >= 1e-10};
    };
    if (dense_variant) {
        ft.rotation = Matrix::Identity(n, n);
        auto [v, ok] = scaled(ft.rotation);
        ft.attempts = 1;
        if (ok) {
            ft.transform = p_prime * v.asDiagonal();
            return ft;
        }
        ft.diagnostics.push_back("dense variant produced a zero scaling entry; drawing block rotations");
    }
    for (int attempt = 1; attempt <= 6; ++attempt) {
        ft.attempts = attempt;
        ft.rotation = Matrix::Zero(n, n);
        for (const auto& block : partition) {
            const Matrix q = haar_special_orthogonal(block.size(), rng);
            for (std::size_t i = 0; i < block.size(); ++i)
                for (std::size_t j = 0; j < block.size(); ++j)
                    ft.rotation(static_cast<Eigen::Index>(block[i]), static_cast<Eigen::Index>(block[j])) =
                        q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        auto [v, ok] = scaled(ft.rotation);
        if (ok) {
            ft.transform = p_prime * ft.rotation * v.asDiagonal();
            return ft;
        }
    }
    std::ostringstream msg;
    msg << "final_transform: zero scaling entries persist; partition block sizes:";
    for (const auto& b : partition) msg << ' ' << b.size();
    throw NumericalFailure(msg.str());
}

std::vector<std::size_t> RecoveredModel::block_of() const {
    std::vector<std::size_t> out(num_states());
    for (std::size_t b = 0; b < partition.size(); ++b)
        for (std::size_t i : partition[b]) out[i] = b;
    return out;
}

DiscretePomdp RecoveredModel::to_pomdp() const {
    if (!projected) throw Error("to_pomdp: model must be projected first");
    DiscretePomdp m;
    m.actions = actions;
    m.observations = observations;
    m.transitions = transitions;
    m.emissions = emissions;
    m.initial = belief;
    m.discount = discount;
    return m;
}

namespace {

void split_products(RecoveredModel& m) {
    const std::size_t na = m.products.size(), no = m.observations.size();
    const auto r = static_cast<Eigen::Index>(m.num_states());
    m.transitions.assign(na, Matrix::Zero(r, r));
    m.emissions.assign(na, Matrix::Zero(r, static_cast<Eigen::Index>(no)));
    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t o = 0; o < no; ++o) {
            const Vector sums = m.products[a][o].rowwise().sum();
            for (Eigen::Index i = 0; i < r; ++i)
                m.emissions[a](i, static_cast<Eigen::Index>(o)) = std::abs(sums(i)) <= 1e-12 ? 0.0 : sums(i);
            m.transitions[a] += m.products[a][o];
        }
        for (Eigen::Index i = 0; i < r; ++i) {
            const double s = m.transitions[a].row(i).sum();
            if (std::abs(s) > 1e-12) m.transitions[a].row(i) /= s;
        }
    }
}

}  // namespace

RecoveredModel recover(const LinearPsr& psr, const RecoveryConfig& config) {
    RecoveredModel m;
    m.actions = psr.actions;
    m.observations = psr.observations;
    const auto ms = marginalize_actions(psr);
    const auto full = detect_full_rank(ms, config.sigma_min);
    m.full_rank_actions = full.actions;
    m.min_singular_values = full.min_singular_values;

    Rng rng(config.seed);
    const auto jd = joint_diagonalize(psr, ms, full.actions, rng, config);
    m.eigenvalues = jd.eigenvalues;
    m.weights = jd.weights;
    m.max_off_diagonal = jd.max_off_diagonal;
    m.diagonalization_attempts = jd.attempts;
    m.partition = detect_partitions(jd.obs_diagonals, config.tau_obs);

    auto ft = final_transform(jd.eigenvectors, psr.final, m.partition, rng, config.dense_variant);
    m.diagnostics = psr.diagnostics;
    m.diagnostics.insert(m.diagnostics.end(), ft.diagnostics.begin(), ft.diagnostics.end());
    m.transform = ft.transform;
    const Eigen::FullPivLU<Matrix> lu(m.transform);
    const Matrix inv = lu.inverse();
    m.belief = psr.initial * m.transform;
    m.final_ones = inv * psr.final;
    m.products.assign(psr.num_actions(), {});
    for (std::size_t a = 0; a < psr.num_actions(); ++a)
        for (std::size_t o = 0; o < psr.num_observations(); ++o)
            m.products[a].push_back(inv * psr.updates[a][o] * m.transform);
    split_products(m);
    return m;
}

RecoveredModel project_probabilities(const RecoveredModel& model) {
    RecoveredModel m = model;
    const auto r = static_cast<Eigen::Index>(m.num_states());
    for (auto& t : m.transitions)
        for (Eigen::Index i = 0; i < r; ++i) t.row(i) = project_to_simplex(t.row(i).transpose()).transpose();
    for (auto& e : m.emissions)
        for (Eigen::Index i = 0; i < r; ++i) e.row(i) = project_to_simplex(e.row(i).transpose()).transpose();

    // Keep each partition's total mass, then make entries inside a block nonnegative.
    Vector block_mass(static_cast<Eigen::Index>(m.partition.size()));
    for (std::size_t b = 0; b < m.partition.size(); ++b) {
        double s = 0.0;
        for (std::size_t i : m.partition[b]) s += m.belief(static_cast<Eigen::Index>(i));
        block_mass(static_cast<Eigen::Index>(b)) = s;
    }
    block_mass = block_mass.cwiseMax(0.0);
    if (block_mass.sum() <= 0.0) block_mass.setOnes();
    block_mass /= block_mass.sum();
    Belief b = Belief::Zero(r);
    for (std::size_t k = 0; k < m.partition.size(); ++k) {
        const auto& block = m.partition[k];
        double s = 0.0;
        for (std::size_t i : block) s += std::max(m.belief(static_cast<Eigen::Index>(i)), 0.0);
        for (std::size_t i : block) {
            const double w = s > 0.0 ? std::max(m.belief(static_cast<Eigen::Index>(i)), 0.0) / s
                                     : 1.0 / static_cast<double>(block.size());
            b(static_cast<Eigen::Index>(i)) = block_mass(static_cast<Eigen::Index>(k)) * w;
        }
    }
    m.belief = b;

    for (std::size_t a = 0; a < m.products.size(); ++a)
        for (std::size_t o = 0; o < m.products[a].size(); ++o)
            m.products[a][o] = m.emissions[a].col(static_cast<Eigen::Index>(o)).asDiagonal() * m.transitions[a];
    m.projected = true;
    return m;
}

RecoveredModel as_recovered(const DiscretePomdp& model, double sigma_min) {
    RecoveredModel m;
    m.actions = model.actions;
    m.observations = model.observations;
    m.belief = stationary_distribution(model);
    m.transitions = model.transitions;
    m.emissions = model.emissions;
    m.discount = model.discount;
    m.projected = true;
    const auto n = static_cast<Eigen::Index>(model.num_states());
    m.transform = Matrix::Identity(n, n);
    m.final_ones = Vector::Ones(n);
    for (std::size_t a = 0; a < model.num_actions(); ++a) {
        std::vector<Matrix> per_obs;
        for (std::size_t o = 0; o < model.num_observations(); ++o) per_obs.push_back(model.product(a, o));
        m.products.push_back(std::move(per_obs));
        const double s = min_singular_value(model.transitions[a]);
        m.min_singular_values.push_back(s);
        if (s >= sigma_min) m.full_rank_actions.push_back(a);
    }
    for (Eigen::Index i = 0; i < n; ++i) m.partition.push_back({static_cast<std::size_t>(i)});
    return m;
}

double recovered_likelihood(const RecoveredModel& model, const Sequence& seq) {
    RowVector s = model.belief;
    for (const auto& step : seq) s = s * model.products[step.action][step.observation];
    return s.sum();
}

namespace {

Matrix stacked_diagonals(const std::vector<Matrix>& emissions, const std::vector<std::size_t>& actions) {
    const auto rows = emissions.front().rows(), no = emissions.front().cols();
    Matrix out(rows, static_cast<Eigen::Index>(actions.size()) * no);
    for (std::size_t k = 0; k < actions.size(); ++k)
        out.middleCols(static_cast<Eigen::Index>(k) * no, no) = emissions[actions[k]];
    return out;
}

// P(S' | S, a) with source states weighted by w inside S.
Matrix partition_transition(const Matrix& t, const RowVector& w, const Partition& blocks) {
    const auto nb = static_cast<Eigen::Index>(blocks.size());
    Matrix out = Matrix::Zero(nb, nb);
    for (Eigen::Index s = 0; s < nb; ++s) {
        double mass = 0.0;
        for (std::size_t i : blocks[static_cast<std::size_t>(s)]) {
            const auto ii = static_cast<Eigen::Index>(i);
            mass += w(ii);
            for (Eigen::Index d = 0; d < nb; ++d)
                for (std::size_t j : blocks[static_cast<std::size_t>(d)])
                    out(s, d) += w(ii) * t(ii, static_cast<Eigen::Index>(j));
        }
        if (std::abs(mass) > 1e-300) out.row(s) /= mass;
    }
    return out;
}

}  // namespace

Alignment align_to_ground_truth(const RecoveredModel& model, const DiscretePomdp& truth, double tau_obs) {
    Alignment al;
    std::vector<std::size_t> all(truth.num_actions());
    std::iota(all.begin(), all.end(), 0);
    const auto& fr = model.full_rank_actions.empty() ? all : model.full_rank_actions;
    al.truth_partition = detect_partitions(stacked_diagonals(truth.emissions, fr), tau_obs);
    if (model.num_states() != truth.num_states() || model.actions.size() != truth.actions.size() ||
        model.observations.size() != truth.observations.size())
        return al;

    const auto n = static_cast<Eigen::Index>(truth.num_states());
    const Matrix true_obs = stacked_diagonals(truth.emissions, all);
    const Matrix rec_obs = stacked_diagonals(model.emissions, all);
    Matrix cost(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (true_obs.row(i) - rec_obs.row(j)).cwiseAbs().sum();
    const auto perm = min_cost_assignment(cost);
    al.permutation = perm;

    double total = 0.0, worst = 0.0, worst_state = 0.0;
    for (std::size_t a = 0; a < truth.num_actions(); ++a)
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto j = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
            const double d = (truth.emissions[a].row(i) - model.emissions[a].row(j)).cwiseAbs().sum();
            total += d;
            worst = std::max(worst, d);
            double td = 0.0;
            for (Eigen::Index k = 0; k < n; ++k)
                td += std::abs(truth.transitions[a](i, k) -
                               model.transitions[a](j, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(k)])));
            worst_state = std::max(worst_state, td);
        }
    al.obs_error = total / static_cast<double>(truth.num_actions() * truth.num_states());
    al.obs_error_max = worst;
    al.state_transition_error_max = worst_state;

    Partition mapped;
    for (const auto& block : al.truth_partition) {
        std::vector<std::size_t> m;
        for (std::size_t i : block) m.push_back(perm[i]);
        mapped.push_back(std::move(m));
    }
    const Belief w_true = stationary_distribution(truth);
    double t_total = 0.0, t_worst = 0.0;
    std::size_t rows = 0;
    for (std::size_t a = 0; a < truth.num_actions(); ++a) {
        const Matrix pt = partition_transition(truth.transitions[a], w_true, al.truth_partition);
        const Matrix pr = partition_transition(model.transitions[a], model.belief, mapped);
        for (Eigen::Index s = 0; s < pt.rows(); ++s) {
            const double d = (pt.row(s) - pr.row(s)).cwiseAbs().sum();
            t_total += d;
            t_worst = std::max(t_worst, d);
            ++rows;
        }
    }
    al.transition_error = t_total / static_cast<double>(rows);
    al.transition_error_max = t_worst;
    return al;
}

}  // namespace pomdp_learn
