#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dbubble {

/// Which one-sided limit of a derivative-like quantity is requested.
enum class Side { Left, Right };

/// Differentiability class of a log-density (or of a density expressed in the
/// volume coordinate).  PiecewiseC1 means the first derivative has jump
/// discontinuities at isolated points.
enum class Smoothness { C2, C1, PiecewiseC1 };

inline const char* to_string(Smoothness s) {
    switch (s) {
        case Smoothness::C2: return "C2";
        case Smoothness::C1: return "C1";
        default: return "piecewise-C1";
    }
}

/// Caller violated a documented precondition (bad parameter, wrong density
/// class, malformed input file).  Maps to CLI exit code 2.
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// An iteration failed to reach its tolerance (root bracket lost, quadrature
/// refinement exhausted, bisection stalled).  Maps to CLI exit code 3.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace num {

inline constexpr double eps = std::numeric_limits<double>::epsilon();
inline constexpr double inf = std::numeric_limits<double>::infinity();
inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

/// Largest argument for which std::exp stays finite in double precision.
inline constexpr double max_exp_arg = 709.0;

inline double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace num

}  // namespace dbubble
