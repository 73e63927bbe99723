#pragma once

#include "pomdp_learn/pomdp.hpp"
#include "pomdp_learn/sequence_index.hpp"

#include <unordered_map>

namespace pomdp_learn {

enum class HankelSource { empirical, exact };

// Rows are histories, columns are tests; both start with the empty string.
struct HankelEstimate {
    Matrix values;
    SequenceIndex rows;
    SequenceIndex cols;
    HankelSource source = HankelSource::exact;
    std::vector<std::string> actions;
    std::vector<std::string> observations;

    // Empirical only. Window counts keyed by position in an index of length
    // hist_len + test_len; action-string counts keyed by length and action code.
    std::unordered_map<std::uint64_t, std::uint64_t> window_counts;
    std::unordered_map<std::uint64_t, std::uint64_t> action_counts;
    std::size_t trajectory_length = 0;
    std::size_t zero_denominators = 0;
    std::vector<std::string> warnings;

    std::size_t hist_len() const { return rows.max_len(); }
    std::size_t test_len() const { return cols.max_len(); }
    double coverage() const;
};

HankelEstimate estimate_hankel(const Trajectory& traj, std::size_t hist_len, std::size_t test_len);

// initial defaults to the stationary distribution under the uniform policy.
HankelEstimate exact_hankel(const DiscretePomdp& model, std::size_t hist_len, std::size_t test_len);
HankelEstimate exact_hankel(const DiscretePomdp& model, const Belief& initial, std::size_t hist_len,
                            std::size_t test_len);

// Forward rows initial * prod O T and backward columns prod O T * 1 for an index.
Matrix forward_matrix(const DiscretePomdp& model, const Belief& initial, const SequenceIndex& rows);
Matrix backward_matrix(const DiscretePomdp& model, const SequenceIndex& cols);

struct HistorySlices {
    std::vector<std::size_t> with_pair;     // h + (a,o)
    std::vector<std::size_t> without_pair;  // h
};
HistorySlices history_slices(const HankelEstimate& h, std::size_t a, std::size_t o);

}  // namespace pomdp_learn
