#pragma once

// Density selection strings, the textual interface shared by the CLI and
// tests:
//   constant:<c>     flat density c > 0
//   borell           exp(x^2)
//   power:<p>        exp(|x|^p), p >= 1
//   exp-abs          exp(|x|)
//   double-exp       exp(exp(|x|))
//   smooth-exp:<a>   exp(x^2) core matched to an exponential tail at |x| = a
//   vol-table:<path> piecewise-linear f(V) loaded from CSV (header V,f)

#include <cmath>
#include <cstdlib>
#include <string>
#include <string_view>

#include "dbubble/common.hpp"
#include "dbubble/density.hpp"
#include "dbubble/volume_coordinate.hpp"

namespace dbubble {

namespace detail {

inline double parse_positive_parameter(std::string_view spec, std::string_view arg,
                                       std::string_view what) {
    if (arg.empty())
        throw PreconditionError("density spec '" + std::string(spec) + "': missing " +
                                std::string(what));
    std::string s(arg);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !(v > 0) || !std::isfinite(v))
        throw PreconditionError("density spec '" + std::string(spec) + "': " +
                                std::string(what) + " must be a positive number, got '" +
                                s + "'");
    return v;
}

}  // namespace detail

/// Builds a density from its selection string.  Unknown names, malformed or
/// out-of-range parameters, and unreadable table files all raise
/// PreconditionError.
inline VolumeDensity parse_density_spec(std::string_view spec,
                                        VolumeCoordinateOptions opts = {}) {
    std::string_view head = spec, arg;
    if (auto colon = spec.find(':'); colon != std::string_view::npos) {
        head = spec.substr(0, colon);
        arg = spec.substr(colon + 1);
    }
    auto no_arg = [&](const LogDensity& d) {
        if (!arg.empty())
            throw PreconditionError("density spec '" + std::string(spec) +
                                    "': unexpected parameter");
        return VolumeDensity::from_log_density(d, opts);
    };
    if (head == "constant")
        return VolumeDensity::from_log_density(
            constant_density(detail::parse_positive_parameter(spec, arg, "level")), opts);
    if (head == "borell") return no_arg(borell_density());
    if (head == "power") {
        double p = detail::parse_positive_parameter(spec, arg, "exponent");
        return VolumeDensity::from_log_density(power_density(p), opts);
    }
    if (head == "exp-abs") return no_arg(exp_abs_density());
    if (head == "double-exp") return no_arg(double_exp_density());
    if (head == "smooth-exp") {
        double a = detail::parse_positive_parameter(spec, arg, "half-width");
        return VolumeDensity::from_log_density(smoothed_exp_density(a), opts);
    }
    if (head == "vol-table") {
        if (arg.empty())
            throw PreconditionError("density spec '" + std::string(spec) +
                                    "': missing table path");
        return VolumeDensity::from_table_csv(std::string(arg));
    }
    throw PreconditionError("unknown density spec '" + std::string(spec) +
                            "' (expected constant:<c>, borell, power:<p>, exp-abs, "
                            "double-exp, smooth-exp:<a>, or vol-table:<path>)");
}

}  // namespace dbubble
