#pragma once

// Error taxonomy shared by the whole library. Each category maps to a fixed
// process exit code so shell scripts can distinguish failure modes.

#include <stdexcept>
#include <string>

namespace metricrl {

// Bad flags, bad dimensions, invalid action ids, malformed requests.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problems with datasets and files: disconnected graphs, version mismatch,
// truncated or corrupt inputs.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Optimization blew up: non-finite losses or gradients, divergence.
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitTraining = 3,
};

}  // namespace metricrl
