#pragma once

#include "pomdp_learn/psr.hpp"

#include <optional>

namespace pomdp_learn {

struct RecoveryConfig {
    double sigma_min = 0.1;
    double tau_obs = 0.1;
    bool dense_variant = true;
    std::uint64_t seed = 0;
    int max_retries = 5;
    double imag_tolerance = 1e-6;     // relative to the spectral radius
    double max_condition = 1e8;       // of the eigenvector matrix
    double cluster_tolerance = 1e-7;  // eigenvalues this close share an eigenspace
};

using Partition = std::vector<std::vector<std::size_t>>;

// M^a = sum_o M^{ao}
std::vector<Matrix> marginalize_actions(const LinearPsr& psr);

struct FullRankActions {
    std::vector<std::size_t> actions;
    std::vector<double> min_singular_values;  // per action, all actions
};
// Throws NumericalFailure when no action passes.
FullRankActions detect_full_rank(const std::vector<Matrix>& ms, double sigma_min);

struct ConvexCombinationCheck {
    bool nonsingular = false;
    double determinant = 0.0;
    double min_singular_value = 0.0;
};
// p T + (1 - p) I for a matrix whose rows each hold a single 1.
ConvexCombinationCheck check_convex_combination_rank(const Matrix& t01, double p);

struct JointDiagonalization {
    Matrix eigenvectors;  // P', columns
    Vector eigenvalues;
    Vector weights;       // w^{ao}, ordered (full-rank action, observation)
    // similarity[k][o] = M^{ao} (M^a)^-1 for the k-th full-rank action
    std::vector<std::vector<Matrix>> similarity;
    // column k*|O| + o holds diag(P'^-1 similarity[k][o] P')
    Matrix obs_diagonals;
    double max_off_diagonal = 0.0;
    int attempts = 0;
};

// Weighted sum of the similarity matrices for a given weight vector.
Matrix weighted_similarity(const std::vector<std::vector<Matrix>>& similarity, const Vector& weights);

JointDiagonalization joint_diagonalize(const LinearPsr& psr, const std::vector<Matrix>& ms,
                                       const std::vector<std::size_t>& full_rank, Rng& rng,
                                       const RecoveryConfig& config = {});

// Union-find over states whose stacked observation diagonals (rows of
// obs_diagonals) are within tau in L1.
Partition detect_partitions(const Matrix& obs_diagonals, double tau);

struct FinalTransform {
    Matrix transform;  // P~
    Matrix rotation;   // R
    int attempts = 0;
    std::vector<std::string> diagnostics;
};
FinalTransform final_transform(const Matrix& p_prime, const Vector& m_inf, const Partition& partition, Rng& rng,
                               bool dense_variant);

struct RecoveredModel {
    std::vector<std::string> actions;
    std::vector<std::string> observations;
    Partition partition;
    Belief belief;                              // b~
    std::vector<std::vector<Matrix>> products;  // O~^{ao} T~^a
    std::vector<Matrix> transitions;            // T~^a
    std::vector<Matrix> emissions;              // per action, r x |O|
    std::vector<std::size_t> full_rank_actions;
    bool projected = false;
    Matrix transform;                           // P~
    Vector final_ones;                          // P~^-1 m_inf
    double discount = 0.95;

    Vector eigenvalues;
    Vector weights;
    std::vector<double> min_singular_values;
    double max_off_diagonal = 0.0;
    int diagonalization_attempts = 0;
    std::vector<std::string> diagnostics;

    std::size_t num_states() const { return static_cast<std::size_t>(belief.size()); }
    std::vector<std::size_t> block_of() const;
    // Requires a projected model.
    DiscretePomdp to_pomdp() const;
};

RecoveredModel recover(const LinearPsr& psr, const RecoveryConfig& config = {});
RecoveredModel project_probabilities(const RecoveredModel& model);

// Ground-truth model viewed as a recovered one: singleton partition, stationary belief.
RecoveredModel as_recovered(const DiscretePomdp& model, double sigma_min = 1e-8);

// Likelihood of a string from the recovered model's belief.
double recovered_likelihood(const RecoveredModel& model, const Sequence& seq);

struct Alignment {
    std::optional<std::vector<std::size_t>> permutation;  // truth state -> recovered state
    std::optional<double> obs_error;                      // mean row L1
    std::optional<double> obs_error_max;
    std::optional<double> transition_error;               // mean partition-level row L1
    std::optional<double> transition_error_max;
    std::optional<double> state_transition_error_max;     // state-level, max row L1
    Partition truth_partition;
};

// State-level metrics need equal state counts; otherwise only the truth
// partition is reported.
Alignment align_to_ground_truth(const RecoveredModel& model, const DiscretePomdp& truth, double tau_obs);

}  // namespace pomdp_learn
