#pragma once

#include "pomdp_learn/hankel.hpp"

namespace pomdp_learn {

struct SvdOptions {
    double rcond_threshold = 0.1;  // 1/kappa
    std::size_t max_components = 20;
    // The empty-test column duplicates the sum of the length-1 test columns
    // and skews the spectrum; by default it is kept out of the factorization
    // and used only for the final vector.
    bool include_empty_test = false;
    // Random dense rotation R' applied as A R', R'^T V^T.
    bool dense_rotation = true;
    std::uint64_t rotation_seed = 0;
};

struct RankFactorization {
    Matrix left;             // A = U Sigma R'
    Matrix right;            // R'^T V^T over the factorized columns
    Vector singular_values;  // every computed value, descending
    std::size_t rank = 0;
    double rcond = 0.0;      // sigma_r / sigma_1
    bool includes_empty_test = false;
    Matrix rotation;

    Eigen::Index first_column() const { return includes_empty_test ? 0 : 1; }
};

RankFactorization truncated_svd(const HankelEstimate& h, const SvdOptions& options);
RankFactorization truncated_svd(const HankelEstimate& h, double rcond_threshold, std::size_t max_components);

struct LinearPsr {
    RowVector initial;                          // m0
    std::vector<std::vector<Matrix>> updates;   // M^{ao}
    Vector final;                               // m_inf
    RankFactorization factorization;
    std::vector<std::string> actions;
    std::vector<std::string> observations;
    std::size_t hist_len = 0;
    std::size_t test_len = 0;
    double slice_rcond = 0.0;                   // conditioning of A on shorter histories
    std::vector<std::string> diagnostics;

    std::size_t dim() const { return static_cast<std::size_t>(initial.size()); }
    std::size_t num_actions() const { return actions.size(); }
    std::size_t num_observations() const { return observations.size(); }
};

LinearPsr extract_psr(const HankelEstimate& h, const RankFactorization& f);

struct Prediction {
    double value = 0.0;  // clamped to [0,1]
    double raw = 0.0;
};
Prediction psr_predict(const LinearPsr& psr, const Sequence& seq);
Prediction psr_predict(const LinearPsr& psr, const RowVector& state, const Sequence& seq);

struct PsrStep {
    RowVector state;
    double likelihood = 0.0;
};
// nullopt when the predicted likelihood is not positive.
std::optional<PsrStep> psr_update(const LinearPsr& psr, const RowVector& state, std::size_t a, std::size_t o);

}  // namespace pomdp_learn
