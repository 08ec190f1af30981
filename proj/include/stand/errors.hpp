#pragma once

#include <stdexcept>
#include <string>

namespace stand {

// Invalid runtime inputs (shape mismatches, bad token ids, ...).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid configuration values (bad hyper-parameters, bad flags).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed on-disk artifacts (dataset directories, checkpoints).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Failures during optimization (divergence, NaN losses).
struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace stand
