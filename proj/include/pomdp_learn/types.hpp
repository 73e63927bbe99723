#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pomdp_learn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Beliefs, PSR states and initial vectors are row vectors throughout.
using Belief = RowVector;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidModel : Error {
    using Error::Error;
};

struct NotErgodic : Error {
    using Error::Error;
};

struct NumericalFailure : Error {
    using Error::Error;
};

struct ActionObservation {
    std::uint32_t action = 0;
    std::uint32_t observation = 0;

    friend bool operator==(const ActionObservation&, const ActionObservation&) = default;
};

using Sequence = std::vector<ActionObservation>;

}  // namespace pomdp_learn
