#include "pomdp_learn/domains.hpp"

#include <map>
#include <set>
#include <sstream>

namespace pomdp_learn {

namespace {

DiscretePomdp blank(std::size_t n, std::vector<std::string> actions, std::vector<std::string> observations) {
    DiscretePomdp m;
    const auto dim = static_cast<Eigen::Index>(n);
    m.actions = std::move(actions);
    m.observations = std::move(observations);
    m.transitions.assign(m.actions.size(), Matrix::Zero(dim, dim));
    m.emissions.assign(m.actions.size(), Matrix::Zero(dim, static_cast<Eigen::Index>(m.observations.size())));
    m.initial = Belief::Constant(dim, 1.0 / static_cast<double>(n));
    return m;
}

std::string format_reward(double r) {
    std::ostringstream s;
    s << r;
    return s.str();
}

DiscretePomdp hallway(bool noisy) {
    enum { L, M, R };
    enum { left, right, stay, reset };
    enum { end_left, end_right };
    auto m = blank(3, {"left", "right", "stay", "reset"}, {"end-left", "end-right"});
    auto& tl = m.transitions[left];
    tl(L, L) = 1.0;
    tl(M, L) = 0.8, tl(M, M) = 0.2;
    tl(R, M) = 0.8, tl(R, R) = 0.2;
    auto& tr = m.transitions[right];
    tr(R, R) = 1.0;
    tr(M, R) = 0.8, tr(M, M) = 0.2;
    tr(L, M) = 0.8, tr(L, L) = 0.2;
    m.transitions[stay].setIdentity();
    m.transitions[reset].col(L).setConstant(0.5);
    m.transitions[reset].col(R).setConstant(0.5);

    for (int a : {left, right}) {
        auto& e = m.emissions[a];
        e(L, end_left) = 0.8, e(L, end_right) = 0.2;
        e(R, end_right) = 0.8, e(R, end_left) = 0.2;
        if (noisy) {
            e(M, end_left) = e(M, end_right) = 0.5;
        } else {
            e(M, a == left ? end_left : end_right) = 0.8;
            e(M, a == left ? end_right : end_left) = 0.2;
        }
    }
    m.emissions[stay].setConstant(0.5);
    m.emissions[reset].setConstant(0.5);
    return m;
}

}  // namespace

DiscretePomdp tiger(double listen_accuracy) {
    if (!(listen_accuracy >= 0.0 && listen_accuracy <= 1.0)) throw Error("tiger: listen accuracy must be in [0,1]");
    enum { tiger_left, tiger_right };
    enum { listen, open_left, open_right };
    auto m = blank(2, {"listen", "open-left", "open-right"}, {"hear-left", "hear-right"});
    m.transitions[listen].setIdentity();
    m.transitions[open_left].setConstant(0.5);
    m.transitions[open_right].setConstant(0.5);
    m.emissions[listen] << listen_accuracy, 1.0 - listen_accuracy, 1.0 - listen_accuracy, listen_accuracy;
    m.emissions[open_left].setConstant(0.5);
    m.emissions[open_right].setConstant(0.5);
    Matrix r(2, 3);
    r(tiger_left, listen) = -1.0;
    r(tiger_right, listen) = -1.0;
    r(tiger_left, open_left) = -100.0;
    r(tiger_right, open_left) = 10.0;
    r(tiger_left, open_right) = 10.0;
    r(tiger_right, open_right) = -100.0;
    m.reward = r;
    return m;
}

DiscretePomdp tmaze(std::size_t k, double forward_success, double map_accuracy) {
    if (k < 1) throw Error("tmaze: need at least one corridor state");
    if (!(forward_success > 0.0 && forward_success <= 1.0)) throw Error("tmaze: forward success must be in (0,1]");
    std::vector<std::string> obs{"U", "D", "J"};
    if (k >= 2) obs.insert(obs.begin() + 2, "C");
    const auto U = 0, D = 1;
    const auto C = k >= 2 ? 2 : -1;
    const auto J = k >= 2 ? 3 : 2;
    const std::size_t n = 2 * (k + 1);
    enum { forward, up, down };
    auto m = blank(n, {"forward", "up", "down"}, obs);
    Matrix reward = Matrix::Zero(static_cast<Eigen::Index>(n), 3);
    const Eigen::Index top_map = 0, bottom_map = static_cast<Eigen::Index>(k + 1);

    for (std::size_t side = 0; side < 2; ++side) {
        const auto base = static_cast<Eigen::Index>(side * (k + 1));
        const auto junction = base + static_cast<Eigen::Index>(k);
        for (Eigen::Index s = base; s <= junction; ++s) {
            if (s < junction) {
                m.transitions[forward](s, s + 1) = forward_success;
                m.transitions[forward](s, s) += 1.0 - forward_success;
            } else {
                m.transitions[forward](s, s) = 1.0;
            }
            for (int a : {up, down}) {
                if (s == junction) {
                    m.transitions[a](s, top_map) = 0.5;
                    m.transitions[a](s, bottom_map) = 0.5;
                    const bool correct = (side == 0) == (a == up);
                    reward(s, a) = correct ? 1.0 : -1.0;
                } else {
                    m.transitions[a](s, s) = 1.0;
                }
            }
            for (auto& e : m.emissions) {
                if (s == base) {
                    e(s, side == 0 ? U : D) = map_accuracy;
                    e(s, side == 0 ? D : U) = 1.0 - map_accuracy;
                } else if (s == junction) {
                    e(s, J) = 1.0;
                } else {
                    e(s, C) = 1.0;
                }
            }
        }
    }
    m.initial.setZero();
    m.initial(top_map) = m.initial(bottom_map) = 0.5;
    m.reward = reward;
    return m;
}

DiscretePomdp sense_float_reset(std::size_t n) {
    if (n < 3) throw Error("sense_float_reset: need at least 3 states");
    enum { float_, reset, sense };
    auto m = blank(n, {"float", "reset", "sense"}, {"0", "1"});
    const auto last = static_cast<Eigen::Index>(n) - 1;
    auto& tf = m.transitions[float_];
    for (Eigen::Index i = 0; i <= last; ++i) {
        if (i == 0 || i == last) tf(i, i) += 0.5;
        if (i > 0) tf(i, i - 1) += 0.5;
        if (i < last) tf(i, i + 1) += 0.5;
    }
    m.transitions[reset].col(0).setOnes();
    m.transitions[sense].setIdentity();
    m.emissions[float_].col(0).setOnes();
    for (int a : {reset, sense}) {
        m.emissions[a].col(0).setOnes();
        m.emissions[a](0, 0) = 0.0;
        m.emissions[a](0, 1) = 1.0;
    }
    m.initial.setZero();
    m.initial(0) = 1.0;
    Matrix reward = Matrix::Zero(static_cast<Eigen::Index>(n), 3);
    reward.row(1).setOnes();
    m.reward = reward;
    return m;
}

DiscretePomdp directional_hallway() { return hallway(false); }
DiscretePomdp noisy_hallway() { return hallway(true); }

CounterexamplePair perturbed_sfr() {
    auto original = sense_float_reset(3);
    original.actions[0] = "float'";
    original.transitions[0] << 0.4, 0.5, 0.1, 0.5, 0.1, 0.4, 0.0, 0.5, 0.5;
    Matrix p(3, 3);
    p << 1, 0, 0, 0, 0, 1, 0, 0.95, 0.05;
    auto conj = conjugate(original, p, 1e-12);
    if (!conj.valid) throw InvalidModel("perturbed_sfr: conjugated model is not a valid POMDP");
    return {original, *conj.model, p};
}

DiscretePomdp rewards_as_observations(const DiscretePomdp& model) {
    if (!model.reward) throw Error("rewards_as_observations: model has no reward table");
    const Matrix& r = *model.reward;
    std::set<double> distinct(r.data(), r.data() + r.size());
    std::vector<double> values(distinct.begin(), distinct.end());
    std::map<double, std::size_t> slot;
    for (std::size_t i = 0; i < values.size(); ++i) slot[values[i]] = i;

    DiscretePomdp out = model;
    out.observations.clear();
    for (const auto& o : model.observations)
        for (double v : values) out.observations.push_back(o + "|" + format_reward(v));
    const auto nv = values.size();
    for (std::size_t a = 0; a < model.num_actions(); ++a) {
        Matrix e = Matrix::Zero(static_cast<Eigen::Index>(model.num_states()),
                                static_cast<Eigen::Index>(out.observations.size()));
        for (Eigen::Index s = 0; s < e.rows(); ++s) {
            const std::size_t v = slot.at(r(s, static_cast<Eigen::Index>(a)));
            for (std::size_t o = 0; o < model.num_observations(); ++o)
                e(s, static_cast<Eigen::Index>(o * nv + v)) = model.emissions[a](s, static_cast<Eigen::Index>(o));
        }
        out.emissions[a] = e;
    }
    return out;
}

std::optional<std::vector<double>> observation_reward_values(const std::vector<std::string>& observations) {
    std::vector<double> values;
    for (const auto& label : observations) {
        const auto bar = label.rfind('|');
        if (bar == std::string::npos) return std::nullopt;
        try {
            std::size_t used = 0;
            const std::string tail = label.substr(bar + 1);
            values.push_back(std::stod(tail, &used));
            if (used != tail.size()) return std::nullopt;
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
    return values;
}

DiscretePomdp make_domain(const std::string& name, const nlohmann::json& params) {
    DiscretePomdp m;
    if (name == "tiger") {
        m = tiger(params.value("listen_accuracy", 0.85));
    } else if (name == "tmaze") {
        std::size_t k = params.value("rooms", 1);
        if (params.contains("states")) {
            const auto states = params.at("states").get<std::size_t>();
            if (states < 4 || states % 2 != 0) throw Error("tmaze: state count must be even and at least 4");
            k = states / 2 - 1;
        }
        m = tmaze(k, params.value("forward_success", 0.9), params.value("map_accuracy", 0.95));
    } else if (name == "sense_float_reset") {
        m = sense_float_reset(params.value("states", 3));
    } else if (name == "directional_hallway") {
        m = directional_hallway();
    } else if (name == "noisy_hallway") {
        m = noisy_hallway();
    } else if (name == "perturbed_sfr") {
        const auto variant = params.value("variant", std::string("original"));
        auto pair = perturbed_sfr();
        if (variant == "original") m = pair.original;
        else if (variant == "transformed") m = pair.transformed;
        else throw Error("perturbed_sfr: variant must be original or transformed");
    } else {
        throw Error("unknown domain: " + name);
    }
    if (params.contains("discount")) m.discount = params.at("discount").get<double>();
    if (params.value("rewards_as_observations", false)) m = rewards_as_observations(m);
    m.validate();
    return m;
}

}  // namespace pomdp_learn
