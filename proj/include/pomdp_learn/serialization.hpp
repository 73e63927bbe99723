#pragma once

#include "pomdp_learn/recovery.hpp"

#include <json.hpp>

#include <filesystem>

namespace pomdp_learn {

using Json = nlohmann::json;

// Matrices are arrays of rows.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::Ref<const Vector>& v);
Vector vector_from_json(const Json& j);

// {actions, observations, initial, transitions[a], emissions[a], reward?, discount}
Json to_json(const DiscretePomdp& m);
DiscretePomdp pomdp_from_json(const Json& j);

// Steps as [action, observation] label pairs.
Json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j);

Json to_json(const HankelEstimate& h);
HankelEstimate hankel_from_json(const Json& j);

Json to_json(const LinearPsr& psr);
LinearPsr psr_from_json(const Json& j);

// Model schema plus "partition", "products" and a "diagnostics" block.
Json to_json(const RecoveredModel& m);
RecoveredModel recovered_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace pomdp_learn
