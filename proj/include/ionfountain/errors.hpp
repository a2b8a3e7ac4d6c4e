#ifndef IONFOUNTAIN_ERRORS_HPP
#define IONFOUNTAIN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ionfountain {

// Configuration / model-definition problems. CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime simulation failures (blowup, calibration failure, ...). Exit code 3.
class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ionfountain

#endif
