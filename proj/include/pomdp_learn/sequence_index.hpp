#pragma once

#include "pomdp_learn/types.hpp"

#include <optional>

namespace pomdp_learn {

// All action-observation strings up to max_len in length-lexicographic order.
// A symbol is a * |O| + o; the first symbol of a string is its most significant
// digit, so position = offset(length) + code.
class SequenceIndex {
public:
    static constexpr std::size_t default_cap = 20'000'000;

    SequenceIndex() = default;
    SequenceIndex(std::size_t num_actions, std::size_t num_observations, std::size_t max_len,
                  std::size_t cap = default_cap);

    std::size_t size() const { return offsets_.empty() ? 0 : offsets_.back(); }
    std::size_t max_len() const { return max_len_; }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t num_observations() const { return num_observations_; }
    std::size_t alphabet() const { return num_actions_ * num_observations_; }

    // First position holding strings of this length; offset(max_len + 1) == size().
    std::size_t offset(std::size_t length) const { return offsets_.at(length); }
    std::size_t length(std::size_t pos) const;
    std::uint64_t code(std::size_t pos) const { return pos - offset(length(pos)); }
    // Action-only string of the entry, base |A|.
    std::uint64_t action_code(std::size_t pos) const;

    Sequence at(std::size_t pos) const;
    std::optional<std::size_t> find(const Sequence& s) const;

    // Position of the string at pos followed by (a,o); requires length(pos) < max_len.
    std::size_t extend(std::size_t pos, std::size_t a, std::size_t o) const;

private:
    std::size_t num_actions_ = 0;
    std::size_t num_observations_ = 0;
    std::size_t max_len_ = 0;
    std::vector<std::size_t> offsets_;
};

SequenceIndex enumerate_sequences(const std::vector<std::string>& actions,
                                  const std::vector<std::string>& observations, std::size_t max_len,
                                  std::size_t cap = SequenceIndex::default_cap);

std::uint64_t ipow(std::uint64_t base, std::size_t exp);

}  // namespace pomdp_learn
