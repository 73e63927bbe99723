#include "pomdp_learn/hankel.hpp"

#include <limits>
#include <sstream>

namespace pomdp_learn {

namespace {

struct Coded {
    std::vector<std::uint64_t> code, action_code;
    std::vector<std::size_t> length;
};

Coded encode(const SequenceIndex& idx) {
    Coded c;
    c.code.resize(idx.size());
    c.action_code.resize(idx.size());
    c.length.resize(idx.size());
    for (std::size_t len = 0; len <= idx.max_len(); ++len)
        for (std::size_t p = idx.offset(len); p < idx.offset(len + 1); ++p) {
            c.code[p] = p - idx.offset(len);
            c.action_code[p] = idx.action_code(p);
            c.length[p] = len;
        }
    return c;
}

}  // namespace

double HankelEstimate::coverage() const {
    const double entries = static_cast<double>(values.size());
    return entries > 0 ? 1.0 - static_cast<double>(zero_denominators) / entries : 0.0;
}

HankelEstimate estimate_hankel(const Trajectory& traj, std::size_t hist_len, std::size_t test_len) {
    if (traj.steps.empty()) throw Error("estimate_hankel: empty trajectory");
    const std::size_t total = hist_len + test_len;
    if (traj.size() <= total) throw Error("estimate_hankel: trajectory shorter than the window length");
    const std::size_t na = traj.actions.size(), no = traj.observations.size();

    HankelEstimate h;
    h.source = HankelSource::empirical;
    h.actions = traj.actions;
    h.observations = traj.observations;
    h.rows = SequenceIndex(na, no, hist_len);
    h.cols = SequenceIndex(na, no, test_len);
    h.trajectory_length = traj.size();

    // Window keys share the layout of an index over strings up to `total`.
    const SequenceIndex windows(na, no, total, std::numeric_limits<std::size_t>::max() / 4);
    std::vector<std::uint64_t> action_offsets{0};
    for (std::size_t len = 0; len <= total; ++len) action_offsets.push_back(action_offsets.back() + ipow(na, len));

    const std::size_t k = na * no;
    const bool dense = windows.size() <= (std::size_t{1} << 22);
    std::vector<std::uint64_t> dense_windows(dense ? windows.size() : 0);
    std::vector<std::uint64_t> dense_actions(dense ? action_offsets.back() : 0);
    auto& wmap = h.window_counts;
    auto& amap = h.action_counts;
    if (!dense) wmap.reserve(std::min<std::size_t>(traj.size() * total, windows.size()));

    const auto& steps = traj.steps;
    const std::size_t n = steps.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t code = 0, acode = 0;
        for (std::size_t len = 1; len <= total && i + len <= n; ++len) {
            const auto& s = steps[i + len - 1];
            code = code * k + s.action * no + s.observation;
            acode = acode * na + s.action;
            const std::uint64_t wkey = windows.offset(len) + code;
            const std::uint64_t akey = action_offsets[len] + acode;
            if (dense) {
                ++dense_windows[wkey];
                ++dense_actions[akey];
            } else {
                ++wmap[wkey];
                ++amap[akey];
            }
        }
    }
    if (dense) {
        for (std::size_t i = 0; i < dense_windows.size(); ++i)
            if (dense_windows[i]) wmap.emplace(i, dense_windows[i]);
        for (std::size_t i = 0; i < dense_actions.size(); ++i)
            if (dense_actions[i]) amap.emplace(i, dense_actions[i]);
    }

    const Coded r = encode(h.rows), c = encode(h.cols);
    h.values.setZero(static_cast<Eigen::Index>(h.rows.size()), static_cast<Eigen::Index>(h.cols.size()));
    auto lookup = [&](auto& dvec, auto& map, std::uint64_t key) -> std::uint64_t {
        if (dense) return dvec[key];
        auto it = map.find(key);
        return it == map.end() ? 0 : it->second;
    };
    for (std::size_t j = 0; j < h.cols.size(); ++j) {
        const std::uint64_t kt = ipow(k, c.length[j]), at = ipow(na, c.length[j]);
        for (std::size_t i = 0; i < h.rows.size(); ++i) {
            const std::size_t len = r.length[i] + c.length[j];
            if (len == 0) {
                h.values(0, 0) = 1.0;
                continue;
            }
            const std::uint64_t wkey = windows.offset(len) + r.code[i] * kt + c.code[j];
            const std::uint64_t akey = action_offsets[len] + r.action_code[i] * at + c.action_code[j];
            const auto den = lookup(dense_actions, amap, akey);
            if (den == 0) {
                ++h.zero_denominators;
                continue;
            }
            h.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                static_cast<double>(lookup(dense_windows, wmap, wkey)) / static_cast<double>(den);
        }
    }
    if (h.coverage() < 0.999) {
        std::ostringstream msg;
        msg << "Hankel coverage " << h.coverage() << " below 0.999: " << h.zero_denominators
            << " entries have no matching action string";
        h.warnings.push_back(msg.str());
    }
    return h;
}

Matrix forward_matrix(const DiscretePomdp& model, const Belief& initial, const SequenceIndex& rows) {
    const std::size_t no = model.num_observations(), k = rows.alphabet();
    std::vector<Matrix> products;
    for (std::size_t a = 0; a < model.num_actions(); ++a)
        for (std::size_t o = 0; o < no; ++o) products.push_back(model.product(a, o));
    Matrix f(static_cast<Eigen::Index>(rows.size()), initial.size());
    f.row(0) = initial;
    for (std::size_t len = 1; len <= rows.max_len(); ++len)
        for (std::size_t p = rows.offset(len); p < rows.offset(len + 1); ++p) {
            const std::uint64_t code = p - rows.offset(len);
            const std::size_t parent = rows.offset(len - 1) + code / k;
            f.row(static_cast<Eigen::Index>(p)) = f.row(static_cast<Eigen::Index>(parent)) * products[code % k];
        }
    return f;
}

Matrix backward_matrix(const DiscretePomdp& model, const SequenceIndex& cols) {
    const std::size_t no = model.num_observations(), k = cols.alphabet();
    std::vector<Matrix> products;
    for (std::size_t a = 0; a < model.num_actions(); ++a)
        for (std::size_t o = 0; o < no; ++o) products.push_back(model.product(a, o));
    const auto n = static_cast<Eigen::Index>(model.num_states());
    Matrix b(n, static_cast<Eigen::Index>(cols.size()));
    b.col(0).setOnes();
    for (std::size_t len = 1; len <= cols.max_len(); ++len) {
        const std::uint64_t tail = ipow(k, len - 1);
        for (std::size_t p = cols.offset(len); p < cols.offset(len + 1); ++p) {
            const std::uint64_t code = p - cols.offset(len);
            const std::size_t rest = cols.offset(len - 1) + code % tail;
            b.col(static_cast<Eigen::Index>(p)) = products[code / tail] * b.col(static_cast<Eigen::Index>(rest));
        }
    }
    return b;
}

HankelEstimate exact_hankel(const DiscretePomdp& model, const Belief& initial, std::size_t hist_len,
                            std::size_t test_len) {
    model.validate();
    HankelEstimate h;
    h.source = HankelSource::exact;
    h.actions = model.actions;
    h.observations = model.observations;
    h.rows = SequenceIndex(model.num_actions(), model.num_observations(), hist_len);
    h.cols = SequenceIndex(model.num_actions(), model.num_observations(), test_len);
    h.values = forward_matrix(model, initial, h.rows) * backward_matrix(model, h.cols);
    return h;
}

HankelEstimate exact_hankel(const DiscretePomdp& model, std::size_t hist_len, std::size_t test_len) {
    return exact_hankel(model, stationary_distribution(model), hist_len, test_len);
}

HistorySlices history_slices(const HankelEstimate& h, std::size_t a, std::size_t o) {
    if (h.hist_len() < 1) throw Error("history_slices: need histories of length at least 1");
    HistorySlices s;
    const std::size_t shorter = h.rows.offset(h.hist_len());
    s.without_pair.reserve(shorter);
    s.with_pair.reserve(shorter);
    for (std::size_t p = 0; p < shorter; ++p) {
        s.without_pair.push_back(p);
        s.with_pair.push_back(h.rows.extend(p, a, o));
    }
    return s;
}

}  // namespace pomdp_learn
