#pragma once

#include <stdexcept>
#include <string>

namespace bsg {

/// Invalid physical parameters or out-of-domain arguments.
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A requested frequency sits on (or numerically too close to) a network pole.
/// Carries the offending frequency and, when known, the nearest resonance so
/// callers can nudge their grids.
class PoleError : public std::runtime_error {
  public:
    PoleError(const std::string& what, double omega, double nearest_resonance = 0.0)
        : std::runtime_error(what), omega(omega), nearest_resonance(nearest_resonance) {}

    double omega;              // rad/s
    double nearest_resonance;  // rad/s, 0 if unknown
};

/// Quadrature or transform failed to reach the requested accuracy.
class AccuracyError : public std::runtime_error {
  public:
    AccuracyError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_tolerance(achieved) {}

    double achieved_tolerance;
};

} // namespace bsg
