#pragma once

#include <stdexcept>
#include <string>

namespace neat {

/// Input outside the mathematical domain of an operation (negative bias,
/// non-finite value, invalid threshold, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Weight magnitude larger than the layer's mapped range.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Key (gate voltage, layer index) missing from a table or schedule.
class LookupError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Layer whose weights are all zero cannot define a conductance scale.
class DegenerateLayerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrainingDivergedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable or malformed file.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Solver invariant broken (e.g. no sign change on the bracket).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace neat
