#pragma once

#include "pomdp_learn/psr.hpp"

namespace fixture {

// PSR from the exact Hankel with a near-zero rank threshold.
inline pomdp_learn::LinearPsr exact_psr(const pomdp_learn::DiscretePomdp& m, std::size_t hist_len,
                                        std::size_t test_len, std::uint64_t seed = 3) {
    const auto h = pomdp_learn::exact_hankel(m, hist_len, test_len);
    pomdp_learn::SvdOptions opt;
    opt.rcond_threshold = 1e-8;
    opt.rotation_seed = seed;
    return pomdp_learn::extract_psr(h, pomdp_learn::truncated_svd(h, opt));
}

}  // namespace fixture
