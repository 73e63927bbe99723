#include "pomdp_learn/linalg.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace pomdp_learn;

TEST_CASE("pinv of a full-rank matrix is its inverse") {
    Matrix m(3, 3);
    m << 2, 1, 0, 1, 3, 1, 0, 1, 4;
    CHECK((pinv(m) * m - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pinv drops directions below the cutoff") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = 1e-14;
    const Matrix p = pinv(m);
    CHECK(p(0, 0) == doctest::Approx(1.0));
    CHECK(p(1, 1) == 0.0);
}

TEST_CASE("simplex projection") {
    Vector v(3);
    v << 0.5, 0.5, 0.0;
    CHECK((project_to_simplex(v) - v).norm() < 1e-15);

    v << 1.0, 1.0, -1.0;
    Vector expect(3);
    expect << 0.5, 0.5, 0.0;
    CHECK((project_to_simplex(v) - expect).norm() < 1e-15);

    v << -2.0, 0.3, 0.1;
    const Vector p = project_to_simplex(v);
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK(p.minCoeff() >= 0.0);
    // KKT: positive entries share the same shift.
    CHECK(p(1) - v(1) == doctest::Approx(p(2) - v(2)));
}

TEST_CASE("assignment matches brute force") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 5;
        Matrix cost(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) cost(i, j) = u(rng);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e300;
        do {
            double c = 0.0;
            for (int i = 0; i < n; ++i) c += cost(i, static_cast<long>(perm[i]));
            best = std::min(best, c);
        } while (std::next_permutation(perm.begin(), perm.end()));
        const auto got = min_cost_assignment(cost);
        double c = 0.0;
        for (int i = 0; i < n; ++i) c += cost(i, static_cast<long>(got[i]));
        CHECK(c == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("haar rotations are special orthogonal") {
    Rng rng(11);
    for (std::size_t n : {1, 2, 3, 5}) {
        const Matrix r = haar_special_orthogonal(n, rng);
        CHECK((r.transpose() * r - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(r.determinant() == doctest::Approx(1.0));
    }
}

TEST_CASE("unit sphere samples") {
    Rng rng(5);
    const Vector w = sample_unit_sphere(7, rng);
    CHECK(w.norm() == doctest::Approx(1.0));
}

TEST_CASE("leading svd agrees with the dense factorization") {
    // Low rank plus noise, the shape of an empirical Hankel.
    Rng rng(2);
    std::normal_distribution<double> g;
    Matrix a(700, 5), b(5, 650), noise(700, 650);
    for (auto i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    for (auto i = 0; i < b.size(); ++i) b.data()[i] = g(rng);
    for (auto i = 0; i < noise.size(); ++i) noise.data()[i] = 0.01 * g(rng);
    const Matrix m = a * b + noise;
    const auto s = leading_svd(m, 10);
    Eigen::JacobiSVD<Matrix> ref(m);
    CHECK((s.s.head(5) - ref.singularValues().head(5)).cwiseAbs().maxCoeff() < 1e-8 * ref.singularValues()(0));
    CHECK((s.s.tail(5) - ref.singularValues().segment(5, 5)).cwiseAbs().maxCoeff() < 0.05 * ref.singularValues()(5));
    const Matrix recon = s.u.leftCols(5) * s.s.head(5).asDiagonal() * s.v.leftCols(5).transpose();
    CHECK((recon - a * b).norm() < 0.05 * (a * b).norm());
}

TEST_CASE("seed mixing is deterministic and spreads") {
    CHECK(mix_seed(1, 2) == mix_seed(1, 2));
    CHECK(mix_seed(1, 2) != mix_seed(2, 1));
    CHECK(mix_seed(0, 0) != mix_seed(0, 1));
}
