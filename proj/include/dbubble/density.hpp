#pragma once

// Log-convex even densities f = e^psi on the line, given by psi and its
// one-sided slopes.  The built-in families cover the constant density, the
// Gaussian-type density e^{x^2} (named "borell" after the standard term for
// it), general even powers e^{|x|^p}, the kinked exponentials e^{|x|} and
// e^{e^{|x|}}, and the C1 splice of e^{x^2} with exponential tails.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dbubble/common.hpp"

namespace dbubble {

enum class Family {
    Custom,
    Constant,
    Borell,
    Power,
    ExpAbs,
    DoubleExp,
    SmoothedExp,
};

/// An even log-convex density e^psi described analytically.  `slope_left` /
/// `slope_right` are the one-sided derivatives of psi; they differ only on
/// `kinks`.  `integration_breakpoints` additionally lists abscissae where
/// higher derivatives jump (quadrature panels are pre-split there).
struct LogDensity {
    std::string name = "custom";
    Family family = Family::Custom;
    double param = 0.0;  ///< c for Constant, p for Power, a for SmoothedExp

    std::function<double(double)> psi;
    std::function<double(double)> slope_left;
    std::function<double(double)> slope_right;

    Smoothness smoothness = Smoothness::C2;
    bool strictly_log_convex = true;
    bool slope_unbounded = true;

    std::vector<double> kinks;                    ///< slope discontinuities
    std::vector<double> integration_breakpoints;  ///< superset of kinks
};

/// f(x) = e^{psi(x)}.  Throws std::range_error if psi(x) is non-finite or
/// exceeds the double exponent range.
inline double eval_density(const LogDensity& d, double x) {
    double p = d.psi(x);
    if (!std::isfinite(p) || p > num::max_exp_arg)
        throw std::range_error("density overflow: psi(" + std::to_string(x) + ") = " +
                               std::to_string(p));
    return std::exp(p);
}

/// One-sided slope of psi.
inline double log_slope(const LogDensity& d, double x, Side side) {
    return side == Side::Left ? d.slope_left(x) : d.slope_right(x);
}

// ------------------------------------------------------------------ families

inline LogDensity constant_density(double c) {
    if (!(c > 0)) throw PreconditionError("constant density needs c > 0");
    LogDensity d;
    d.name = "constant:" + std::to_string(c);
    d.family = Family::Constant;
    d.param = c;
    const double lc = std::log(c);
    d.psi = [lc](double) { return lc; };
    d.slope_left = [](double) { return 0.0; };
    d.slope_right = [](double) { return 0.0; };
    d.smoothness = Smoothness::C2;
    d.strictly_log_convex = false;
    d.slope_unbounded = false;
    return d;
}

inline LogDensity borell_density() {
    LogDensity d;
    d.name = "borell";
    d.family = Family::Borell;
    d.psi = [](double x) { return x * x; };
    d.slope_left = [](double x) { return 2.0 * x; };
    d.slope_right = [](double x) { return 2.0 * x; };
    d.smoothness = Smoothness::C2;
    d.strictly_log_convex = true;
    d.slope_unbounded = true;
    return d;
}

inline LogDensity power_density(double p) {
    if (!(p >= 1.0)) throw PreconditionError("power density needs exponent p >= 1");
    LogDensity d;
    d.name = "power:" + std::to_string(p);
    d.family = Family::Power;
    d.param = p;
    d.psi = [p](double x) { return std::pow(std::abs(x), p); };
    auto slope = [p](double x) {
        return x == 0 ? 0.0 : p * std::pow(std::abs(x), p - 1.0) * num::sign(x);
    };
    if (p == 1.0) {
        d.slope_left = [](double x) { return x > 0 ? 1.0 : -1.0; };
        d.slope_right = [](double x) { return x >= 0 ? 1.0 : -1.0; };
        d.smoothness = Smoothness::PiecewiseC1;
        d.strictly_log_convex = false;
        d.slope_unbounded = false;
        d.kinks = {0.0};
        d.integration_breakpoints = {0.0};
    } else {
        d.slope_left = slope;
        d.slope_right = slope;
        d.smoothness = p < 2.0 ? Smoothness::C1 : Smoothness::C2;
        d.strictly_log_convex = true;
        d.slope_unbounded = true;
        if (p < 2.0) d.integration_breakpoints = {0.0};
    }
    return d;
}

inline LogDensity exp_abs_density() {
    LogDensity d;
    d.name = "exp-abs";
    d.family = Family::ExpAbs;
    d.psi = [](double x) { return std::abs(x); };
    d.slope_left = [](double x) { return x > 0 ? 1.0 : -1.0; };
    d.slope_right = [](double x) { return x >= 0 ? 1.0 : -1.0; };
    d.smoothness = Smoothness::PiecewiseC1;
    d.strictly_log_convex = false;
    d.slope_unbounded = false;
    d.kinks = {0.0};
    d.integration_breakpoints = {0.0};
    return d;
}

inline LogDensity double_exp_density() {
    LogDensity d;
    d.name = "double-exp";
    d.family = Family::DoubleExp;
    d.psi = [](double x) { return std::exp(std::abs(x)); };
    d.slope_left = [](double x) {
        return x > 0 ? std::exp(x) : -std::exp(-x);
    };
    d.slope_right = [](double x) {
        return x >= 0 ? std::exp(x) : -std::exp(-x);
    };
    d.smoothness = Smoothness::PiecewiseC1;
    d.strictly_log_convex = true;  // one-sided slopes jump at 0 but increase
    d.slope_unbounded = true;
    d.kinks = {0.0};
    d.integration_breakpoints = {0.0};
    return d;
}

/// Smoothing halfwidth below which the exponential-tail splice loses the
/// guarantee that the double interval wins for every flank volume once the
/// middle volume is large: a must exceed 2*sqrt(log 2).
inline double smoothed_exp_min_halfwidth() { return 2.0 * std::sqrt(std::log(2.0)); }

inline LogDensity smoothed_exp_density(double a) {
    if (!(a > 0)) throw PreconditionError("smoothed-exp density needs halfwidth a > 0");
    LogDensity d;
    d.name = "smooth-exp:" + std::to_string(a);
    d.family = Family::SmoothedExp;
    d.param = a;
    d.psi = [a](double x) {
        double ax = std::abs(x);
        return ax < a ? x * x : a * (2.0 * ax - a);
    };
    auto slope = [a](double x) {
        double ax = std::abs(x);
        return ax < a ? 2.0 * x : 2.0 * a * num::sign(x);
    };
    d.slope_left = slope;
    d.slope_right = slope;
    d.smoothness = Smoothness::C1;
    d.strictly_log_convex = false;  // linear tails
    d.slope_unbounded = false;
    d.integration_breakpoints = {-a, a};
    return d;
}

// ---------------------------------------------------------------- validation

struct Violation {
    std::string check;   ///< short tag: "symmetry", "convexity", ...
    double x = num::nan; ///< offending abscissa when applicable
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Sanity-check a density against its declared flags on a probe grid:
/// psi even, slopes antisymmetric, one-sided slopes ordered and nondecreasing
/// (convexity), strictness flag consistent with observed slope growth, and
/// family parameter rules (smoothing halfwidth large enough for the
/// large-middle-volume regime guarantee).
inline ValidationReport validate(const LogDensity& d, std::span<const double> grid) {
    ValidationReport rep;
    auto flag = [&](const std::string& check, double x, const std::string& detail) {
        rep.violations.push_back({check, x, detail});
    };
    std::vector<double> xs(grid.begin(), grid.end());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    const double tol = 1e-9;
    for (double x : xs) {
        double p = d.psi(x), pm = d.psi(-x);
        if (!std::isfinite(p)) {
            flag("finite", x, "psi is not finite");
            continue;
        }
        if (std::abs(p - pm) > tol * std::max(1.0, std::abs(p)))
            flag("symmetry", x, "psi(x) != psi(-x)");
        double sl = d.slope_left(x), sr = d.slope_right(x);
        if (std::abs(sr + d.slope_left(-x)) > tol * std::max(1.0, std::abs(sr)))
            flag("symmetry", x, "slope_right(x) != -slope_left(-x)");
        if (sl > sr + tol)
            flag("convexity", x, "left slope exceeds right slope at a point");
    }
    double max_gap = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        double a = d.slope_right(xs[i]), b = d.slope_left(xs[i + 1]);
        if (a > b + tol * std::max(1.0, std::abs(a)))
            flag("convexity", xs[i], "slopes decrease between grid points");
        max_gap = std::max(max_gap, b - a);
    }
    if (d.strictly_log_convex && xs.size() >= 2 && max_gap <= tol)
        flag("strictness", num::nan,
             "flagged strictly log-convex but slopes do not increase across the grid");
    if (d.family == Family::SmoothedExp && d.param <= smoothed_exp_min_halfwidth())
        flag("regime-guarantee", d.param,
             "smoothing halfwidth must exceed 2*sqrt(log 2) for the large-middle-volume "
             "double-interval regime");
    return rep;
}

}  // namespace dbubble
