#pragma once

#include <stdexcept>
#include <string>

namespace mdensity {

/// Bad input: out-of-domain parameters, malformed files, mismatched grids.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical result missed its tolerance (grid too short, series cap hit, ...).
class ToleranceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mdensity
