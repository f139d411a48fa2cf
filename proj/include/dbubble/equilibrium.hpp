#pragma once

// Equilibrium offsets and perimeters for the two competing interval
// configurations at volumes (V1, V2), V1 <= V2:
//
//   double interval  [x1, x2] u [x2, x3]: boundary volumes t, t+V1, t+V1+V2
//                    with the equilibrium offset t solving
//                    f'(t) + f'(t+V1) + f'(t+V1+V2) = 0,
//   triple interval  middle block of volume V1 centered at the origin,
//                    flanks V2/2 each: boundary volumes +-V1/2, +-(V1+V2)/2.
//
// For kinked densities the equilibrium condition is one-sided: the
// right-slope sum must be >= 0 and the left-slope sum <= 0.  The solvers
// bisect the slope sum and then probe kink preimages inside the final
// bracket, so equilibria that sit exactly on a kink (e.g. at offset -V1 for
// e^{|x|}) are returned exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "dbubble/common.hpp"
#include "dbubble/root_finding.hpp"
#include "dbubble/volume_coordinate.hpp"

namespace dbubble {

struct EquilibriumOptions {
    double tol_eq = 1e-10;  ///< acceptance for the one-sided slope-sum violation
    int max_iter = 200;
    /// Probe span (times the volume scale) beyond which a degenerate slope
    /// sum is declared an unbounded equilibrium cell.
    double unbounded_probe_factor = 1e12;
};

struct EquilibriumDiagnostics {
    double residual_left = num::nan;   ///< left-slope sum at the solution
    double residual_right = num::nan;  ///< right-slope sum at the solution
    double bracket_lo = num::nan, bracket_hi = num::nan;
    int iterations = 0;
};

struct Equilibrium {
    double vtilde = num::nan;
    /// One-sided violation max(0, left sum) + max(0, -right sum); zero at an
    /// exact equilibrium, equals |residual| for C1 densities.
    double residual = num::nan;
    EquilibriumDiagnostics diag;
};

/// The full set of equilibrium offsets {t : right sum >= 0 and left sum <= 0},
/// a closed interval (possibly a point, possibly unbounded for the constant
/// density).  All offsets in the cell give the same perimeter.
struct EquilibriumCell {
    double lo = num::nan, hi = num::nan;
    bool unbounded_below = false, unbounded_above = false;
    /// Smallest cell member, or the symmetric offset -(V1+V2)/2 when the cell
    /// has no smallest member.
    double representative = num::nan;
    double residual = num::nan;  ///< violation at the representative
};

namespace detail {

struct SlopeSums {
    const VolumeDensity& d;
    double v1, v2;

    double left(double t) const {
        return d.fprime(t, Side::Left) + d.fprime(t + v1, Side::Left) +
               d.fprime(t + v1 + v2, Side::Left);
    }
    double right(double t) const {
        return d.fprime(t, Side::Right) + d.fprime(t + v1, Side::Right) +
               d.fprime(t + v1 + v2, Side::Right);
    }
    double sum(double t) const { return left(t) + right(t); }
    double violation(double t) const {
        return std::max(0.0, left(t)) + std::max(0.0, -right(t));
    }
};

/// Offsets t in [lo - slack, hi + slack] at which one of the three boundary
/// volumes lands exactly on a density kink.
inline std::vector<double> kink_offset_candidates(const VolumeDensity& d, double v1,
                                                  double v2, double lo, double hi) {
    std::vector<double> out;
    const auto& ks = d.volume_kinks();
    if (ks.empty()) return out;
    double slack = 8.0 * num::eps * (1.0 + std::abs(lo) + std::abs(hi) + v1 + v2);
    for (double off : {0.0, v1, v1 + v2}) {
        auto it = std::lower_bound(ks.begin(), ks.end(), lo + off - slack);
        for (; it != ks.end() && *it <= hi + off + slack; ++it) out.push_back(*it - off);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Find one equilibrium offset: bisection on the (nondecreasing) slope sum,
/// then a probe of kink preimages inside the final bracket.
inline Equilibrium solve_equilibrium_core(const VolumeDensity& d, double v1, double v2,
                                          const EquilibriumOptions& opt) {
    SlopeSums R{d, v1, v2};
    double lo = std::min(-(v1 + v2) * 0.5, -v1);
    double hi = std::max(-(v1 + v2) * 0.5, -v1);
    if (lo == hi) {
        double pad = 0.25 * std::max(1.0, v1 + v2);
        lo -= pad;
        hi += pad;
    }
    double hlo = R.sum(lo), hhi = R.sum(hi);
    for (int k = 0; hlo > 0.0; ++k) {
        if (k >= 80)
            throw ConvergenceError("equilibrium: no lower bracket end (sum at " +
                                   std::to_string(lo) + " is " + std::to_string(hlo) + ")");
        lo -= (hi - lo);
        hlo = R.sum(lo);
    }
    for (int k = 0; hhi < 0.0; ++k) {
        if (k >= 80)
            throw ConvergenceError("equilibrium: no upper bracket end (sum at " +
                                   std::to_string(hi) + " is " + std::to_string(hhi) + ")");
        hi += (hi - lo);
        hhi = R.sum(hi);
    }
    BisectResult r = bisect([&](double t) { return R.sum(t); }, lo, hi, hlo, hhi,
                            /*x_tol_abs=*/0.0, /*x_tol_rel=*/4.0 * num::eps,
                            /*f_tol=*/0.5 * opt.tol_eq, opt.max_iter);
    std::vector<double> cands = kink_offset_candidates(d, v1, v2, r.lo, r.hi);
    cands.push_back(r.x);
    cands.push_back(r.lo);
    cands.push_back(r.hi);
    double best_t = r.x, best_viol = num::inf;
    for (double c : cands) {
        double viol = R.violation(c);
        if (viol < best_viol || (viol == best_viol && c < best_t)) {
            best_viol = viol;
            best_t = c;
        }
    }
    if (!(best_viol <= opt.tol_eq)) {
        // A kinked density can make the sum jump across zero at t* = kink -
        // offset, and when that real number is not representable every
        // nearby double shows the full jump as its one-sided sum.  The final
        // bisection bracket straddles the jump at floating-point resolution,
        // so its endpoint sums are the one-sided limits at t*: stationarity
        // holds exactly iff they enclose zero.
        double wtol = 8.0 * num::eps * (1.0 + std::abs(r.lo) + std::abs(r.hi));
        double jump_viol = std::max(0.0, r.flo) + std::max(0.0, -r.fhi);
        if (r.hi - r.lo <= wtol && jump_viol <= opt.tol_eq)
            return {r.x, jump_viol, {r.flo, r.fhi, r.lo, r.hi, r.iterations}};
        throw ConvergenceError(
            "equilibrium: no offset meets tolerance; bracket [" + std::to_string(r.lo) + ", " +
            std::to_string(r.hi) + "], left sum " + std::to_string(R.left(best_t)) +
            ", right sum " + std::to_string(R.right(best_t)));
    }
    return {best_t, best_viol,
            {R.left(best_t), R.right(best_t), r.lo, r.hi, r.iterations}};
}

}  // namespace detail

/// Equilibrium offset for a strictly convex density (unique root).  V1 == V2
/// returns -V1 directly (the symmetric equilibrium).  Throws
/// PreconditionError for non-strict densities (use solve_equilibrium_set) and
/// ConvergenceError with bracket + residual detail on failure.
inline Equilibrium solve_equilibrium_offset(const VolumeDensity& d, double v1, double v2,
                                            EquilibriumOptions opt = {}) {
    if (!(v1 > 0) || !(v2 > 0))
        throw PreconditionError("equilibrium: volumes must be positive");
    if (!d.strictly_convex())
        throw PreconditionError(
            "equilibrium offset is only unique for strictly log-convex densities; use "
            "solve_equilibrium_set");
    if (v1 == v2) {
        detail::SlopeSums R{d, v1, v2};
        double t = -v1;
        return {t, R.violation(t), {R.left(t), R.right(t), t, t, 0}};
    }
    return detail::solve_equilibrium_core(d, v1, v2, opt);
}

/// Full equilibrium cell for any log-convex density.  The edges are located
/// by bisecting the one-sided sums; a degenerate sum that stays flat over a
/// probe window of 1e12 times the volume scale is reported as an unbounded
/// cell (constant density).
inline EquilibriumCell solve_equilibrium_set(const VolumeDensity& d, double v1, double v2,
                                             EquilibriumOptions opt = {}) {
    if (!(v1 > 0) || !(v2 > 0))
        throw PreconditionError("equilibrium: volumes must be positive");
    detail::SlopeSums R{d, v1, v2};
    Equilibrium e = detail::solve_equilibrium_core(d, v1, v2, opt);
    const double t0 = e.vtilde;
    const double scale = std::max(1.0, v1 + v2);

    EquilibriumCell cell;
    if (R.violation(t0) > opt.tol_eq) {
        // The core accepted a sign jump whose exact location is not
        // representable; the cell degenerates to that single point.
        cell.lo = cell.hi = cell.representative = t0;
        cell.residual = e.residual;
        return cell;
    }
    // left edge: smallest t with right sum >= 0.  Predicate bisection (the
    // sum may be exactly zero across the whole cell, so value-root bisection
    // would stop at an interior point).
    {
        auto inside = [&](double t) { return R.right(t) >= 0.0; };
        if (!inside(t0)) {
            cell.lo = t0;  // right sum within -tol_eq of zero: t0 is the edge
        } else {
            double step = 0.25 * scale, a = t0;
            bool found_outside = false;
            while (step <= opt.unbounded_probe_factor * scale) {
                a = t0 - step;
                if (!inside(a)) {
                    found_outside = true;
                    break;
                }
                step *= 2.0;
            }
            if (!found_outside) {
                cell.unbounded_below = true;
                cell.lo = -num::inf;
            } else {
                double out = a, in = t0;
                for (int it = 0; it < opt.max_iter; ++it) {
                    double mid = 0.5 * (out + in);
                    if (mid <= out || mid >= in) break;
                    (inside(mid) ? in : out) = mid;
                }
                double edge = in;
                for (double c : detail::kink_offset_candidates(d, v1, v2, out, in))
                    if (c < edge && inside(c)) edge = c;
                cell.lo = edge;
            }
        }
    }
    // right edge: largest t with left sum <= 0, mirrored logic.
    {
        auto inside = [&](double t) { return R.left(t) <= 0.0; };
        if (!inside(t0)) {
            cell.hi = t0;
        } else {
            double step = 0.25 * scale, b = t0;
            bool found_outside = false;
            while (step <= opt.unbounded_probe_factor * scale) {
                b = t0 + step;
                if (!inside(b)) {
                    found_outside = true;
                    break;
                }
                step *= 2.0;
            }
            if (!found_outside) {
                cell.unbounded_above = true;
                cell.hi = num::inf;
            } else {
                double in = t0, out = b;
                for (int it = 0; it < opt.max_iter; ++it) {
                    double mid = 0.5 * (in + out);
                    if (mid <= in || mid >= out) break;
                    (inside(mid) ? in : out) = mid;
                }
                double edge = in;
                for (double c : detail::kink_offset_candidates(d, v1, v2, in, out))
                    if (c > edge && inside(c)) edge = c;
                cell.hi = edge;
            }
        }
    }
    cell.representative = cell.unbounded_below ? -(v1 + v2) * 0.5 : cell.lo;
    cell.residual = R.violation(cell.representative);
    return cell;
}

// ------------------------------------------------------------- configurations

/// Double interval: boundaries at volumes (t, t+V1, t+V1+V2).
struct DoubleInterval {
    double v1 = 0, v2 = 0, vtilde = 0;
    std::array<double, 3> boundary_volumes{};
    std::array<double, 3> boundary_positions{};
    double perimeter = 0;
};

/// Symmetric triple interval: middle volume V1, flanks V2/2; boundaries at
/// volumes +-V1/2 and +-(V1+V2)/2.
struct TripleInterval {
    double v1 = 0, v2 = 0;
    std::array<double, 4> boundary_volumes{};
    std::array<double, 4> boundary_positions{};
    double perimeter = 0;
};

inline double perimeter_double(const VolumeDensity& d, double v1, double v2, double t) {
    return d.f(t) + d.f(t + v1) + d.f(t + v1 + v2);
}

inline double perimeter_triple(const VolumeDensity& d, double v1, double v2) {
    return 2.0 * (d.f(v1 * 0.5) + d.f((v1 + v2) * 0.5));
}

inline DoubleInterval make_double_interval(const VolumeDensity& d, double v1, double v2,
                                           double t) {
    DoubleInterval di;
    di.v1 = v1;
    di.v2 = v2;
    di.vtilde = t;
    di.boundary_volumes = {t, t + v1, t + v1 + v2};
    for (int i = 0; i < 3; ++i) di.boundary_positions[i] = d.position(di.boundary_volumes[i]);
    di.perimeter = perimeter_double(d, v1, v2, t);
    return di;
}

inline TripleInterval make_triple_interval(const VolumeDensity& d, double v1, double v2) {
    TripleInterval ti;
    ti.v1 = v1;
    ti.v2 = v2;
    ti.boundary_volumes = {-(v1 + v2) * 0.5, -v1 * 0.5, v1 * 0.5, (v1 + v2) * 0.5};
    for (int i = 0; i < 4; ++i) ti.boundary_positions[i] = d.position(ti.boundary_volumes[i]);
    ti.perimeter = perimeter_triple(d, v1, v2);
    return ti;
}

// ------------------------------------------------------------- perimeter gap

enum class Winner { Double, Triple, Tie };

inline const char* to_string(Winner w) {
    switch (w) {
        case Winner::Double: return "double";
        case Winner::Triple: return "triple";
        default: return "tie";
    }
}

struct MuOptions {
    EquilibriumOptions eq{};
    double tie_tol_rel = 1e-9;  ///< tie band, relative to max(1, P2)
};

/// mu(V1, V2) = P3 - P2 and everything computed on the way.
struct PerimeterGap {
    double v1 = 0, v2 = 0;  ///< sorted so v1 <= v2
    bool swapped = false;   ///< inputs arrived as (v2, v1)
    double vtilde = num::nan;
    EquilibriumCell cell;
    double p2 = num::nan, p3 = num::nan, mu = num::nan;
    Winner winner = Winner::Tie;
};

/// Compute the perimeter gap.  Inputs with v1 > v2 are swapped (and flagged);
/// v1 == 0 is rejected.  Equal volumes use the symmetric offset -V1 exactly.
inline PerimeterGap mu(const VolumeDensity& d, double v1, double v2, MuOptions opt = {}) {
    if (!(v1 > 0) || !(v2 > 0))
        throw PreconditionError("mu: volumes must be strictly positive");
    PerimeterGap g;
    g.swapped = v1 > v2;
    if (g.swapped) std::swap(v1, v2);
    g.v1 = v1;
    g.v2 = v2;
    if (v1 == v2) {
        detail::SlopeSums R{d, v1, v2};
        g.vtilde = -v1;
        g.cell = {-v1, -v1, false, false, -v1, R.violation(-v1)};
    } else if (d.strictly_convex()) {
        Equilibrium e = solve_equilibrium_offset(d, v1, v2, opt.eq);
        g.vtilde = e.vtilde;
        g.cell = {e.vtilde, e.vtilde, false, false, e.vtilde, e.residual};
    } else {
        g.cell = solve_equilibrium_set(d, v1, v2, opt.eq);
        g.vtilde = g.cell.representative;
    }
    g.p2 = perimeter_double(d, v1, v2, g.vtilde);
    g.p3 = perimeter_triple(d, v1, v2);
    g.mu = g.p3 - g.p2;
    double band = opt.tie_tol_rel * std::max(1.0, g.p2);
    g.winner = std::abs(g.mu) <= band ? Winner::Tie
                                      : (g.mu > 0 ? Winner::Double : Winner::Triple);
    return g;
}

struct MuPartials {
    double dmu_dv1 = num::nan;  ///< f'(V1/2) + f'((V1+V2)/2) + f'(vtilde), > 0
    double dmu_dv2 = num::nan;  ///< f'((V1+V2)/2) - f'(vtilde+V1+V2), < 0
};

/// Envelope-theorem partial derivatives of mu at (v1, v2), v1 <= v2.  Requires
/// a strictly convex C1 density (two-sided slopes); at v1 == v2 the partials
/// are one-sided boundary values (dmu/dv2 is exactly 0 there).
inline MuPartials mu_partials(const VolumeDensity& d, double v1, double v2,
                              EquilibriumOptions opt = {}) {
    if (!(v1 > 0) || !(v1 <= v2))
        throw PreconditionError("mu_partials: needs 0 < v1 <= v2");
    if (!d.strictly_convex() || d.smoothness() == Smoothness::PiecewiseC1)
        throw PreconditionError("mu_partials: needs a strictly convex C1 density");
    double t = solve_equilibrium_offset(d, v1, v2, opt).vtilde;
    auto fp = [&](double v) { return d.fprime(v, Side::Right); };
    return {fp(v1 * 0.5) + fp((v1 + v2) * 0.5) + fp(t),
            fp((v1 + v2) * 0.5) - fp(t + v1 + v2)};
}

/// Finite-difference check of the first-variation formula: moving one
/// boundary point at unit volume rate changes the perimeter at rate
/// f'(V) = psi'(x).  Returns the centered difference of f at V = volume(x)
/// against the analytic one-sided slopes.
struct FirstVariationReport {
    double x = num::nan, v = num::nan;
    double fd_slope = num::nan;
    double analytic_left = num::nan, analytic_right = num::nan;
    double error = num::nan;  ///< distance from fd to the [left, right] interval
};

inline FirstVariationReport first_variation_check(const VolumeDensity& d, double x,
                                                  double step_scale = 1e-6) {
    FirstVariationReport rep;
    rep.x = x;
    rep.v = d.volume(x);
    double h = step_scale * std::max(1.0, std::abs(rep.v));
    rep.fd_slope = (d.f(rep.v + h) - d.f(rep.v - h)) / (2.0 * h);
    rep.analytic_left = d.fprime(rep.v, Side::Left);
    rep.analytic_right = d.fprime(rep.v, Side::Right);
    double lo = std::min(rep.analytic_left, rep.analytic_right);
    double hi = std::max(rep.analytic_left, rep.analytic_right);
    rep.error = rep.fd_slope < lo ? lo - rep.fd_slope
                                  : (rep.fd_slope > hi ? rep.fd_slope - hi : 0.0);
    return rep;
}

}  // namespace dbubble
