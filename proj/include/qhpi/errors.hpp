#pragma once

#include <stdexcept>
#include <string>

namespace qhpi {

// Qubit count outside the simulator's supported range.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Qubit or parameter index out of range.
struct BoundsError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Shape mismatches, non-unitary inputs, degenerate data.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Unknown categorical value or out-of-domain hyperparameter.
struct ConfigurationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed CSV / ARFF / JSON input.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace qhpi
