#include "pomdp_learn/psr.hpp"

#include <sstream>

namespace pomdp_learn {

RankFactorization truncated_svd(const HankelEstimate& h, const SvdOptions& options) {
    if (!(options.rcond_threshold > 0.0 && options.rcond_threshold < 1.0))
        throw Error("truncated_svd: rcond threshold must lie in (0,1)");
    if (options.max_components < 1) throw Error("truncated_svd: max_components must be at least 1");
    RankFactorization f;
    f.includes_empty_test = options.include_empty_test || h.values.cols() == 1;
    const Eigen::Index c0 = f.first_column();
    const Matrix block = h.values.rightCols(h.values.cols() - c0);
    if (block.cwiseAbs().maxCoeff() == 0.0) throw Error("truncated_svd: Hankel matrix is all zeros");

    const auto svd = leading_svd(block, options.max_components);
    f.singular_values = svd.s;
    const double top = svd.s(0);
    std::size_t r = 0;
    while (r < static_cast<std::size_t>(svd.s.size()) && svd.s(static_cast<Eigen::Index>(r)) / top >= options.rcond_threshold)
        ++r;
    if (r == 0) throw Error("truncated_svd: no singular value passes the threshold");
    f.rank = r;
    const auto rr = static_cast<Eigen::Index>(r);
    f.rcond = svd.s(rr - 1) / top;
    f.left = svd.u.leftCols(rr) * svd.s.head(rr).asDiagonal();
    f.right = svd.v.leftCols(rr).transpose();
    f.rotation = Matrix::Identity(rr, rr);
    if (options.dense_rotation) {
        Rng rng(options.rotation_seed);
        f.rotation = haar_special_orthogonal(r, rng);
        f.left = f.left * f.rotation;
        f.right = f.rotation.transpose() * f.right;
    }
    return f;
}

RankFactorization truncated_svd(const HankelEstimate& h, double rcond_threshold, std::size_t max_components) {
    SvdOptions o;
    o.rcond_threshold = rcond_threshold;
    o.max_components = max_components;
    return truncated_svd(h, o);
}

LinearPsr extract_psr(const HankelEstimate& h, const RankFactorization& f) {
    if (h.hist_len() < 1) throw Error("extract_psr: histories must reach length 1");
    if (f.left.rows() != h.values.rows()) throw Error("extract_psr: factorization does not match the Hankel rows");
    LinearPsr psr;
    psr.factorization = f;
    psr.actions = h.actions;
    psr.observations = h.observations;
    psr.hist_len = h.hist_len();
    psr.test_len = h.test_len();

    const Eigen::Index c0 = f.first_column();
    const Eigen::Index nc = h.values.cols() - c0;
    const Matrix right_pinv = pinv(f.right);
    const Matrix left_pinv = pinv(f.left);

    // Every (a,o) shares the same set of shorter histories.
    const auto shorter = static_cast<Eigen::Index>(h.rows.offset(h.hist_len()));
    const Matrix slice = f.left.topRows(shorter);
    Eigen::JacobiSVD<Matrix> slice_svd(slice);
    const auto& ss = slice_svd.singularValues();
    psr.slice_rcond = ss(0) > 0.0 ? ss(ss.size() - 1) / ss(0) : 0.0;
    if (psr.slice_rcond < 1e-10) {
        std::ostringstream msg;
        msg << "left factor restricted to histories shorter than " << h.hist_len()
            << " is ill-conditioned (rcond " << psr.slice_rcond << "); minimum-norm solution used";
        psr.diagnostics.push_back(msg.str());
    }
    const Matrix slice_pinv = pinv(slice);

    const std::size_t na = h.actions.size(), no = h.observations.size();
    psr.updates.assign(na, std::vector<Matrix>(no));
    Matrix extended(shorter, nc);
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t o = 0; o < no; ++o) {
            const auto s = history_slices(h, a, o);
            for (Eigen::Index i = 0; i < shorter; ++i)
                extended.row(i) = h.values.row(static_cast<Eigen::Index>(s.with_pair[static_cast<std::size_t>(i)]))
                                      .tail(nc);
            psr.updates[a][o] = slice_pinv * extended * right_pinv;
        }
    psr.initial = h.values.row(0).tail(nc) * right_pinv;
    psr.final = left_pinv * h.values.col(0);
    return psr;
}

Prediction psr_predict(const LinearPsr& psr, const RowVector& state, const Sequence& seq) {
    RowVector s = state;
    for (const auto& step : seq) s = s * psr.updates.at(step.action).at(step.observation);
    const double raw = s.dot(psr.final.transpose());
    return {std::clamp(raw, 0.0, 1.0), raw};
}

Prediction psr_predict(const LinearPsr& psr, const Sequence& seq) { return psr_predict(psr, psr.initial, seq); }

std::optional<PsrStep> psr_update(const LinearPsr& psr, const RowVector& state, std::size_t a, std::size_t o) {
    RowVector next = state * psr.updates.at(a).at(o);
    const double likelihood = next.dot(psr.final.transpose());
    if (!(likelihood > 0.0)) return std::nullopt;
    return PsrStep{next / likelihood, likelihood};
}

}  // namespace pomdp_learn
