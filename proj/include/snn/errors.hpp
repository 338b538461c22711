#pragma once

#include <stdexcept>
#include <string>

namespace snn {

/// A neuron, budget or model parameter is outside its valid domain.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Caller-supplied data (pixels, word ids, rasters, files) is malformed.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Scaled voltage is undefined because b0 equals the AHP voltage component.
class DegenerateDenominator : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A population or network cannot be mapped onto the modeled hardware.
class Unplaceable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace snn
