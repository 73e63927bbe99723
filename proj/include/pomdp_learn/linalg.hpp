#pragma once

#include "pomdp_learn/types.hpp"

#include <random>

namespace pomdp_learn {

using Rng = std::mt19937_64;

// Moore-Penrose pseudoinverse; singular values below rcond * sigma_max are dropped.
Matrix pinv(const Matrix& m, double rcond = 1e-10);

// Leading singular triplets. Dense SVD for small inputs, randomized subspace
// iteration when both dimensions are large and only k triplets are needed.
struct SvdResult {
    Matrix u;
    Vector s;
    Matrix v;
};
SvdResult leading_svd(const Matrix& m, std::size_t k);

// Uniform on the unit sphere in R^d.
Vector sample_unit_sphere(std::size_t d, Rng& rng);

// Haar-distributed element of SO(n).
Matrix haar_special_orthogonal(std::size_t n, Rng& rng);

// Euclidean projection onto the probability simplex.
Vector project_to_simplex(const Vector& v);

// Minimum-cost perfect matching on a square cost matrix; result[i] is the
// column assigned to row i.
std::vector<std::size_t> min_cost_assignment(const Matrix& cost);

double min_singular_value(const Matrix& m);

// Splitmix-style derivation of independent seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace pomdp_learn
