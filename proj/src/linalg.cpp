#include "pomdp_learn/linalg.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace pomdp_learn {

Matrix pinv(const Matrix& m, double rcond) {
    if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = rcond * (s.size() ? s(0) : 0.0);
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

SvdResult leading_svd(const Matrix& m, std::size_t k) {
    const auto small = static_cast<Eigen::Index>(std::min(m.rows(), m.cols()));
    const auto want = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), small);
    // Dense path when it is cheap enough or the request is close to full rank.
    if (small <= 600 || 4 * want >= small) {
        Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        return {svd.matrixU().leftCols(want), svd.singularValues().head(want),
                svd.matrixV().leftCols(want)};
    }
    // Randomized range finder with power iterations (fixed seed: deterministic).
    const Eigen::Index sketch = std::min<Eigen::Index>(small, want + 20);
    Rng rng(0x5eed);
    std::normal_distribution<double> normal;
    Matrix omega(m.cols(), sketch);
    for (Eigen::Index j = 0; j < omega.cols(); ++j)
        for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = normal(rng);
    Matrix y = m * omega;
    Eigen::HouseholderQR<Matrix> qr(y);
    Matrix q = qr.householderQ() * Matrix::Identity(y.rows(), sketch);
    for (int it = 0; it < 6; ++it) {
        Matrix z = m.transpose() * q;
        Eigen::HouseholderQR<Matrix> qz(z);
        Matrix qzm = qz.householderQ() * Matrix::Identity(z.rows(), sketch);
        y = m * qzm;
        Eigen::HouseholderQR<Matrix> qy(y);
        q = qy.householderQ() * Matrix::Identity(y.rows(), sketch);
    }
    Matrix b = q.transpose() * m;
    Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {q * svd.matrixU().leftCols(want), svd.singularValues().head(want),
            svd.matrixV().leftCols(want)};
}

Vector sample_unit_sphere(std::size_t d, Rng& rng) {
    std::normal_distribution<double> normal;
    Vector w(static_cast<Eigen::Index>(d));
    do {
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = normal(rng);
    } while (w.norm() == 0.0);
    return w / w.norm();
}

Matrix haar_special_orthogonal(std::size_t n, Rng& rng) {
    const auto dim = static_cast<Eigen::Index>(n);
    std::normal_distribution<double> normal;
    Matrix g(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j)
        for (Eigen::Index i = 0; i < dim; ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < dim; ++i)
        if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    if (dim > 0 && q.determinant() < 0.0) q.col(0) = -q.col(0);
    return q;
}

Vector project_to_simplex(const Vector& v) {
    const Eigen::Index n = v.size();
    if (n == 0) return v;
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumulative += u[static_cast<std::size_t>(j)];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
    }
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = std::max(v(i) - theta, 0.0);
    return out;
}

// Hungarian algorithm (potentials, O(n^3)).
std::vector<std::size_t> min_cost_assignment(const Matrix& cost) {
    if (cost.rows() != cost.cols()) throw Error("min_cost_assignment: cost matrix must be square");
    const auto n = static_cast<std::size_t>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                                   u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> result(n);
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j] != 0) result[p[j] - 1] = j - 1;
    return result;
}

double min_singular_value(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues().minCoeff();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace pomdp_learn
