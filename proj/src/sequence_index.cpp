#include "pomdp_learn/sequence_index.hpp"

#include <algorithm>

namespace pomdp_learn {

std::uint64_t ipow(std::uint64_t base, std::size_t exp) {
    std::uint64_t r = 1;
    while (exp--) r *= base;
    return r;
}

SequenceIndex::SequenceIndex(std::size_t num_actions, std::size_t num_observations, std::size_t max_len,
                             std::size_t cap)
    : num_actions_(num_actions), num_observations_(num_observations), max_len_(max_len) {
    if (num_actions == 0 || num_observations == 0) throw Error("sequence index needs nonempty alphabets");
    const std::size_t k = alphabet();
    offsets_.push_back(0);
    std::size_t block = 1;
    for (std::size_t len = 0; len <= max_len; ++len) {
        if (len > 0) {
            if (block > cap / k) throw Error("sequence index exceeds size cap of " + std::to_string(cap));
            block *= k;
        }
        if (offsets_.back() + block > cap) throw Error("sequence index exceeds size cap of " + std::to_string(cap));
        offsets_.push_back(offsets_.back() + block);
    }
}

std::size_t SequenceIndex::length(std::size_t pos) const {
    if (pos >= size()) throw Error("sequence index position out of range");
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), pos);
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

std::uint64_t SequenceIndex::action_code(std::size_t pos) const {
    std::uint64_t c = code(pos);
    std::uint64_t out = 0, scale = 1;
    const std::size_t len = length(pos);
    for (std::size_t i = 0; i < len; ++i) {
        out += (c % alphabet()) / num_observations_ * scale;
        c /= alphabet();
        scale *= num_actions_;
    }
    return out;
}

Sequence SequenceIndex::at(std::size_t pos) const {
    const std::size_t len = length(pos);
    std::uint64_t c = code(pos);
    Sequence s(len);
    for (std::size_t i = len; i-- > 0;) {
        const auto sym = c % alphabet();
        s[i] = {static_cast<std::uint32_t>(sym / num_observations_), static_cast<std::uint32_t>(sym % num_observations_)};
        c /= alphabet();
    }
    return s;
}

std::optional<std::size_t> SequenceIndex::find(const Sequence& s) const {
    if (s.size() > max_len_) return std::nullopt;
    std::uint64_t c = 0;
    for (const auto& step : s) {
        if (step.action >= num_actions_ || step.observation >= num_observations_) return std::nullopt;
        c = c * alphabet() + step.action * num_observations_ + step.observation;
    }
    return offset(s.size()) + c;
}

std::size_t SequenceIndex::extend(std::size_t pos, std::size_t a, std::size_t o) const {
    const std::size_t len = length(pos);
    if (len >= max_len_) throw Error("cannot extend a string of maximal length");
    return offset(len + 1) + code(pos) * alphabet() + a * num_observations_ + o;
}

SequenceIndex enumerate_sequences(const std::vector<std::string>& actions,
                                  const std::vector<std::string>& observations, std::size_t max_len,
                                  std::size_t cap) {
    return SequenceIndex(actions.size(), observations.size(), max_len, cap);
}

}  // namespace pomdp_learn
