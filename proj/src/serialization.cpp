#include "pomdp_learn/serialization.hpp"

#include <algorithm>
#include <fstream>

namespace pomdp_learn {

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array()) throw InvalidModel("json: matrix must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw InvalidModel("json: ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

Json vector_to_json(const Eigen::Ref<const Vector>& v) {
    return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const Json& j) {
    const auto xs = j.get<std::vector<double>>();
    return Vector::Map(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

namespace {

Json matrices_to_json(const std::vector<Matrix>& ms) {
    Json out = Json::array();
    for (const auto& m : ms) out.push_back(matrix_to_json(m));
    return out;
}

std::vector<Matrix> matrices_from_json(const Json& j) {
    std::vector<Matrix> out;
    for (const auto& m : j) out.push_back(matrix_from_json(m));
    return out;
}

Json nested_to_json(const std::vector<std::vector<Matrix>>& ms) {
    Json out = Json::array();
    for (const auto& row : ms) out.push_back(matrices_to_json(row));
    return out;
}

std::vector<std::vector<Matrix>> nested_from_json(const Json& j) {
    std::vector<std::vector<Matrix>> out;
    for (const auto& row : j) out.push_back(matrices_from_json(row));
    return out;
}

Json counts_to_json(const std::unordered_map<std::uint64_t, std::uint64_t>& counts) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end());
    Json out = Json::array();
    for (const auto& [k, v] : sorted) out.push_back({k, v});
    return out;
}

std::unordered_map<std::uint64_t, std::uint64_t> counts_from_json(const Json& j) {
    std::unordered_map<std::uint64_t, std::uint64_t> out;
    for (const auto& kv : j) out[kv.at(0).get<std::uint64_t>()] = kv.at(1).get<std::uint64_t>();
    return out;
}

Json factorization_to_json(const RankFactorization& f) {
    return {{"left", matrix_to_json(f.left)},
            {"right", matrix_to_json(f.right)},
            {"singular_values", vector_to_json(f.singular_values)},
            {"rank", f.rank},
            {"rcond", f.rcond},
            {"includes_empty_test", f.includes_empty_test},
            {"rotation", matrix_to_json(f.rotation)}};
}

RankFactorization factorization_from_json(const Json& j) {
    RankFactorization f;
    f.left = matrix_from_json(j.at("left"));
    f.right = matrix_from_json(j.at("right"));
    f.singular_values = vector_from_json(j.at("singular_values"));
    f.rank = j.at("rank").get<std::size_t>();
    f.rcond = j.at("rcond").get<double>();
    f.includes_empty_test = j.at("includes_empty_test").get<bool>();
    f.rotation = matrix_from_json(j.at("rotation"));
    return f;
}

}  // namespace

Json to_json(const DiscretePomdp& m) {
    Json j = {{"actions", m.actions},
              {"observations", m.observations},
              {"initial", vector_to_json(m.initial.transpose())},
              {"transitions", matrices_to_json(m.transitions)},
              {"emissions", matrices_to_json(m.emissions)},
              {"discount", m.discount}};
    j["reward"] = m.reward ? matrix_to_json(*m.reward) : Json(nullptr);
    return j;
}

DiscretePomdp pomdp_from_json(const Json& j) {
    DiscretePomdp m;
    m.actions = j.at("actions").get<std::vector<std::string>>();
    m.observations = j.at("observations").get<std::vector<std::string>>();
    m.initial = vector_from_json(j.at("initial")).transpose();
    m.transitions = matrices_from_json(j.at("transitions"));
    m.emissions = matrices_from_json(j.at("emissions"));
    if (j.contains("reward") && !j.at("reward").is_null()) m.reward = matrix_from_json(j.at("reward"));
    m.discount = j.value("discount", 0.95);
    m.validate(1e-9);
    return m;
}

Json to_json(const Trajectory& t) {
    Json steps = Json::array();
    for (const auto& s : t.steps) steps.push_back({t.actions.at(s.action), t.observations.at(s.observation)});
    return {{"actions", t.actions}, {"observations", t.observations}, {"seed", t.seed}, {"steps", steps}};
}

Trajectory trajectory_from_json(const Json& j) {
    Trajectory t;
    t.actions = j.at("actions").get<std::vector<std::string>>();
    t.observations = j.at("observations").get<std::vector<std::string>>();
    t.seed = j.value("seed", std::uint64_t{0});
    auto lookup = [](const std::vector<std::string>& labels, const Json& v, const char* what) {
        if (v.is_number_integer()) {
            const auto i = v.get<std::size_t>();
            if (i >= labels.size()) throw InvalidModel(std::string("trajectory: ") + what + " index out of range");
            return static_cast<std::uint32_t>(i);
        }
        const auto label = v.get<std::string>();
        const auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) throw InvalidModel(std::string("trajectory: unknown ") + what + " '" + label + "'");
        return static_cast<std::uint32_t>(it - labels.begin());
    };
    for (const auto& s : j.at("steps"))
        t.steps.push_back({lookup(t.actions, s.at(0), "action"), lookup(t.observations, s.at(1), "observation")});
    return t;
}

Json to_json(const HankelEstimate& h) {
    return {{"source", h.source == HankelSource::exact ? "exact" : "empirical"},
            {"actions", h.actions},
            {"observations", h.observations},
            {"hist_len", h.hist_len()},
            {"test_len", h.test_len()},
            {"values", matrix_to_json(h.values)},
            {"window_counts", counts_to_json(h.window_counts)},
            {"action_counts", counts_to_json(h.action_counts)},
            {"trajectory_length", h.trajectory_length},
            {"zero_denominators", h.zero_denominators},
            {"warnings", h.warnings}};
}

HankelEstimate hankel_from_json(const Json& j) {
    HankelEstimate h;
    h.source = j.at("source").get<std::string>() == "exact" ? HankelSource::exact : HankelSource::empirical;
    h.actions = j.at("actions").get<std::vector<std::string>>();
    h.observations = j.at("observations").get<std::vector<std::string>>();
    const auto na = h.actions.size(), no = h.observations.size();
    h.rows = SequenceIndex(na, no, j.at("hist_len").get<std::size_t>());
    h.cols = SequenceIndex(na, no, j.at("test_len").get<std::size_t>());
    h.values = matrix_from_json(j.at("values"));
    if (static_cast<std::size_t>(h.values.rows()) != h.rows.size() ||
        static_cast<std::size_t>(h.values.cols()) != h.cols.size())
        throw InvalidModel("hankel json: matrix shape does not match the index sets");
    h.window_counts = counts_from_json(j.at("window_counts"));
    h.action_counts = counts_from_json(j.at("action_counts"));
    h.trajectory_length = j.at("trajectory_length").get<std::size_t>();
    h.zero_denominators = j.at("zero_denominators").get<std::size_t>();
    h.warnings = j.at("warnings").get<std::vector<std::string>>();
    return h;
}

Json to_json(const LinearPsr& psr) {
    return {{"actions", psr.actions},
            {"observations", psr.observations},
            {"initial", vector_to_json(psr.initial.transpose())},
            {"updates", nested_to_json(psr.updates)},
            {"final", vector_to_json(psr.final)},
            {"factorization", factorization_to_json(psr.factorization)},
            {"hist_len", psr.hist_len},
            {"test_len", psr.test_len},
            {"slice_rcond", psr.slice_rcond},
            {"diagnostics", psr.diagnostics}};
}

LinearPsr psr_from_json(const Json& j) {
    LinearPsr p;
    p.actions = j.at("actions").get<std::vector<std::string>>();
    p.observations = j.at("observations").get<std::vector<std::string>>();
    p.initial = vector_from_json(j.at("initial")).transpose();
    p.updates = nested_from_json(j.at("updates"));
    p.final = vector_from_json(j.at("final"));
    p.factorization = factorization_from_json(j.at("factorization"));
    p.hist_len = j.at("hist_len").get<std::size_t>();
    p.test_len = j.at("test_len").get<std::size_t>();
    p.slice_rcond = j.at("slice_rcond").get<double>();
    p.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
    return p;
}

Json to_json(const RecoveredModel& m) {
    Json j = {{"actions", m.actions},
              {"observations", m.observations},
              {"initial", vector_to_json(m.belief.transpose())},
              {"transitions", matrices_to_json(m.transitions)},
              {"emissions", matrices_to_json(m.emissions)},
              {"reward", nullptr},
              {"discount", m.discount},
              {"partition", m.partition},
              {"products", nested_to_json(m.products)}};
    j["diagnostics"] = {{"full_rank_actions", m.full_rank_actions},
                        {"projected", m.projected},
                        {"transform", matrix_to_json(m.transform)},
                        {"final_ones", vector_to_json(m.final_ones)},
                        {"eigenvalues", vector_to_json(m.eigenvalues)},
                        {"weights", vector_to_json(m.weights)},
                        {"min_singular_values", m.min_singular_values},
                        {"max_off_diagonal", m.max_off_diagonal},
                        {"diagonalization_attempts", m.diagonalization_attempts},
                        {"messages", m.diagnostics}};
    return j;
}

RecoveredModel recovered_from_json(const Json& j) {
    RecoveredModel m;
    m.actions = j.at("actions").get<std::vector<std::string>>();
    m.observations = j.at("observations").get<std::vector<std::string>>();
    m.belief = vector_from_json(j.at("initial")).transpose();
    m.transitions = matrices_from_json(j.at("transitions"));
    m.emissions = matrices_from_json(j.at("emissions"));
    m.discount = j.value("discount", 0.95);
    m.partition = j.at("partition").get<Partition>();
    m.products = nested_from_json(j.at("products"));
    const auto& d = j.at("diagnostics");
    m.full_rank_actions = d.at("full_rank_actions").get<std::vector<std::size_t>>();
    m.projected = d.at("projected").get<bool>();
    m.transform = matrix_from_json(d.at("transform"));
    m.final_ones = vector_from_json(d.at("final_ones"));
    m.eigenvalues = vector_from_json(d.at("eigenvalues"));
    m.weights = vector_from_json(d.at("weights"));
    m.min_singular_values = d.at("min_singular_values").get<std::vector<double>>();
    m.max_off_diagonal = d.at("max_off_diagonal").get<double>();
    m.diagonalization_attempts = d.at("diagonalization_attempts").get<int>();
    m.diagnostics = d.at("messages").get<std::vector<std::string>>();
    return m;
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return Json::parse(in);
}

void write_json(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace pomdp_learn
