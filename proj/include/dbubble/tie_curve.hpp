#pragma once

// The tie curve lambda(V1): the flank volume V2 at which the double and
// triple intervals have equal perimeter.  mu(V1, .) is nonincreasing and
// positive at V2 = V1, so a doubling upper bracket followed by bisection
// finds the tie whenever one exists; bounded-slope densities may keep
// mu > 0 forever, which is reported as NoTie (lambda = +inf) once the
// bracket cap is reached.  Uniqueness of the tie is guaranteed only for
// strictly convex densities with unbounded slope.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dbubble/common.hpp"
#include "dbubble/equilibrium.hpp"
#include "dbubble/volume_coordinate.hpp"

namespace dbubble {

struct TieOptions {
    MuOptions mu{};
    double bracket_cap_abs = 1e6;     ///< NoTie cap: max(cap_abs, cap_factor*V1)
    double bracket_cap_factor = 1e4;
    double v2_rel_tol = 1e-12;        ///< bisection width stop, relative to V2
    int max_iter = 200;
};

struct TiePoint {
    double v1 = num::nan;
    double lambda = num::nan;       ///< +inf when no tie at or below the cap
    double mu_residual = num::nan;  ///< mu at lambda (at the cap for NoTie)
    double vtilde = num::nan;       ///< equilibrium offset at (v1, lambda); nan for NoTie
    bool tied() const { return std::isfinite(lambda); }
};

namespace detail {

inline TiePoint lambda_search(const VolumeDensity& d, double v1, const TieOptions& opt,
                              double warm_lo) {
    TiePoint tp;
    tp.v1 = v1;
    const double cap = std::max(opt.bracket_cap_abs, opt.bracket_cap_factor * v1);
    auto gap = [&](double v2) { return dbubble::mu(d, v1, v2, opt.mu); };
    auto band = [&](const PerimeterGap& g) {
        return opt.mu.tie_tol_rel * std::max(1.0, g.p2);
    };

    // mu(v1, v1) >= f(0) > 0, so v1 is always a valid positive end.  A warm
    // lower hint (from the previous sweep point; the curve is increasing) is
    // used only after verifying mu > 0 there.
    double lo = v1;
    if (warm_lo > v1 && warm_lo < cap) {
        PerimeterGap g = gap(warm_lo);
        if (g.mu > 0) lo = warm_lo;
    }
    double hi = num::nan;
    PerimeterGap at_hi;
    for (double probe = 2.0 * lo;; probe *= 2.0) {
        if (probe >= cap) {
            PerimeterGap g = gap(cap);
            if (g.mu > 0) {
                tp.lambda = num::inf;
                tp.mu_residual = g.mu;
                return tp;  // NoTie up to the cap
            }
            if (std::abs(g.mu) <= band(g)) {
                tp.lambda = cap;
                tp.mu_residual = g.mu;
                tp.vtilde = g.vtilde;
                return tp;
            }
            hi = cap;
            at_hi = g;
            break;
        }
        PerimeterGap g = gap(probe);
        if (std::abs(g.mu) <= band(g)) {
            tp.lambda = probe;
            tp.mu_residual = g.mu;
            tp.vtilde = g.vtilde;
            return tp;
        }
        if (g.mu < 0) {
            hi = probe;
            at_hi = g;
            break;
        }
        lo = probe;
    }

    PerimeterGap last = at_hi;
    double x = hi;
    for (int it = 0; it < opt.max_iter; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        PerimeterGap g = gap(mid);
        x = mid;
        last = g;
        if (std::abs(g.mu) <= band(g)) break;
        (g.mu > 0 ? lo : hi) = mid;
        if (hi - lo <= opt.v2_rel_tol * hi) {
            // residual may sit just outside the band for kinked densities;
            // report the midpoint honestly
            x = 0.5 * (lo + hi);
            last = gap(x);
            break;
        }
    }
    tp.lambda = x;
    tp.mu_residual = last.mu;
    tp.vtilde = last.vtilde;
    return tp;
}

}  // namespace detail

/// Tie volume for one V1.  Returns lambda = +inf (NoTie) when mu stays
/// positive up to the bracket cap, which is the expected outcome for
/// bounded-slope densities.
inline TiePoint lambda_of(const VolumeDensity& d, double v1, TieOptions opt = {}) {
    if (!(v1 > 0)) throw PreconditionError("lambda_of: V1 must be positive");
    return detail::lambda_search(d, v1, opt, num::nan);
}

/// Tie curve over a sorted positive grid; each finite tie warm-starts the
/// next bracket (results match cold solves to tolerance).  NoTie entries are
/// preserved per point.
inline std::vector<TiePoint> sweep(const VolumeDensity& d, std::span<const double> v1_grid,
                                   TieOptions opt = {}) {
    std::vector<TiePoint> out;
    out.reserve(v1_grid.size());
    double prev = num::nan;
    for (std::size_t i = 0; i < v1_grid.size(); ++i) {
        double v1 = v1_grid[i];
        if (!(v1 > 0)) throw PreconditionError("sweep: grid values must be positive");
        if (i > 0 && !(v1 >= v1_grid[i - 1]))
            throw PreconditionError("sweep: grid must be sorted ascending");
        TiePoint tp = detail::lambda_search(d, v1, opt, std::isfinite(prev) ? prev : num::nan);
        prev = tp.lambda;
        out.push_back(tp);
    }
    return out;
}

// ------------------------------------------------------------- bound checks

/// Exponents for the proven tie-curve envelope
///   V1 * (log V1)^(lower_log_exponent - eps)  <  lambda(V1)  <  V1^(upper_power + eps).
struct BoundExponents {
    double lower_log_exponent = 0.5;
    double upper_power = 4.0;
};

/// Envelope exponents proven for the built-in families.
inline BoundExponents bound_exponents_for(const VolumeDensity& d) {
    if (const LogDensity* b = d.base()) {
        if (b->family == Family::Borell) return {0.5, 4.0};
        if (b->family == Family::DoubleExp) return {1.0, 2.0};
    }
    throw PreconditionError("no proven tie-curve envelope for density " + d.name());
}

struct BoundSample {
    double v1 = num::nan, lambda = num::nan;
    double lower = num::nan, upper = num::nan;
    bool pass = false;
};

struct BoundReport {
    double epsilon = num::nan;
    BoundExponents exponents;
    std::vector<BoundSample> samples;
    bool all_pass = true;
};

/// Evaluate the envelope per sample.  The bounds are asymptotic ("for V1
/// large"), so this reports pass/fail per sample rather than throwing on a
/// failure.  Requires log(V1) > 1 for every grid point.
inline BoundReport check_bounds(const VolumeDensity& d, std::span<const double> v1_grid,
                                double epsilon, BoundExponents exps,
                                TieOptions opt = {}) {
    if (!(epsilon > 0)) throw PreconditionError("check_bounds: epsilon must be positive");
    BoundReport rep;
    rep.epsilon = epsilon;
    rep.exponents = exps;
    for (double v1 : v1_grid) {
        if (!(std::log(v1) > 1.0))
            throw PreconditionError("check_bounds: needs log(V1) > 1, got V1 = " +
                                    std::to_string(v1));
        BoundSample s;
        s.v1 = v1;
        s.lambda = lambda_of(d, v1, opt).lambda;
        s.lower = v1 * std::pow(std::log(v1), exps.lower_log_exponent - epsilon);
        s.upper = std::pow(v1, exps.upper_power + epsilon);
        s.pass = std::isfinite(s.lambda) && s.lower < s.lambda && s.lambda < s.upper;
        rep.all_pass = rep.all_pass && s.pass;
        rep.samples.push_back(s);
    }
    return rep;
}

inline BoundReport check_bounds(const VolumeDensity& d, std::span<const double> v1_grid,
                                double epsilon, TieOptions opt = {}) {
    return check_bounds(d, v1_grid, epsilon, bound_exponents_for(d), opt);
}

// ---------------------------------------------------------------- ray probes

/// V1 values in [v1_lo, v1_hi] where mu(V1, r*V1) changes sign, located by a
/// geometric scan plus bisection.  r = 1 legitimately yields no crossings
/// (mu(V, V) > 0); r < 1 would swap the volume roles and is rejected.
inline std::vector<double> intersections_with_ray(const VolumeDensity& d, double ratio,
                                                  double v1_lo, double v1_hi,
                                                  int scan_points = 257,
                                                  MuOptions opt = {}) {
    if (!(ratio >= 1.0)) throw PreconditionError("ray probe: ratio must be >= 1");
    if (!(v1_lo > 0) || !(v1_lo < v1_hi))
        throw PreconditionError("ray probe: need 0 < v1_lo < v1_hi");
    if (scan_points < 2) throw PreconditionError("ray probe: need at least 2 scan points");
    auto g = [&](double v1) { return mu(d, v1, ratio * v1, opt).mu; };
    std::vector<double> out;
    const double step = std::pow(v1_hi / v1_lo, 1.0 / (scan_points - 1));
    double prev_v = v1_lo, prev_g = g(prev_v);
    for (int i = 1; i < scan_points; ++i) {
        double v = (i == scan_points - 1) ? v1_hi : v1_lo * std::pow(step, i);
        double gv = g(v);
        if ((prev_g < 0) != (gv < 0)) {
            BisectResult r = bisect(g, prev_v, v, prev_g, gv, 0.0, 1e-10, 0.0, 200);
            out.push_back(r.x);
        }
        prev_v = v;
        prev_g = gv;
    }
    return out;
}

// ------------------------------------------------------- divergence evidence

struct RatioSample {
    double v1 = num::nan, lambda = num::nan, ratio = num::nan;
    bool tied = false;
};

struct RatioProbe {
    std::vector<RatioSample> samples;
    /// last tied ratio exceeds the first tied ratio (weak divergence evidence)
    bool increasing_tail = false;
};

/// lambda(V1)/V1 along a grid; evidence that the tie ratio diverges.  Only
/// meaningful for strictly convex densities (the constant density is
/// rejected); bounded-slope densities produce NoTie samples and no evidence.
inline RatioProbe ratio_divergence_probe(const VolumeDensity& d,
                                         std::span<const double> v1_grid,
                                         TieOptions opt = {}) {
    if (!d.strictly_convex())
        throw PreconditionError("ratio probe: density must be strictly log-convex");
    RatioProbe probe;
    const RatioSample* first_tied = nullptr;
    const RatioSample* last_tied = nullptr;
    for (double v1 : v1_grid) {
        RatioSample s;
        s.v1 = v1;
        TiePoint tp = lambda_of(d, v1, opt);
        s.lambda = tp.lambda;
        s.tied = tp.tied();
        s.ratio = s.tied ? tp.lambda / v1 : num::inf;
        probe.samples.push_back(s);
    }
    for (const auto& s : probe.samples)
        if (s.tied) {
            if (!first_tied) first_tied = &s;
            last_tied = &s;
        }
    probe.increasing_tail =
        first_tied && last_tied && first_tied != last_tied && last_tied->ratio > first_tied->ratio;
    return probe;
}

}  // namespace dbubble
