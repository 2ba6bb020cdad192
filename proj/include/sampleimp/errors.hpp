#pragma once

#include <stdexcept>
#include <string>

namespace sampleimp {

// Bad or inconsistent configuration (flags, config file, topology).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dataset could not be read or is unusable.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A NaN/Inf showed up in a forward pass, gradient, or optimizer update.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sampleimp
