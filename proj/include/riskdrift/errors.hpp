// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace riskdrift {

/// Invalid problem, driver, grid or configuration input. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A solver could not proceed: CFL/stencil violation, singular regression,
/// non-contractive driver step. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read or written. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace riskdrift
