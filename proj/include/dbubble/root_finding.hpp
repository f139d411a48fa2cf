#pragma once

// Bracketed scalar root finding: plain bisection with value/width stopping,
// and a Newton iteration safeguarded by a maintained bracket.  Both assume a
// sign change over the initial bracket; callers are responsible for finding
// one (bracket walks are bespoke at each call site).

#include <cmath>

#include "dbubble/common.hpp"

namespace dbubble {

struct BisectResult {
    double x = num::nan;   ///< best abscissa found
    double fx = num::nan;  ///< f at x
    double lo = num::nan, hi = num::nan;    ///< final bracket
    double flo = num::nan, fhi = num::nan;  ///< f at final bracket ends
    int iterations = 0;
};

/// Bisect f over [lo, hi] given precomputed end values of opposite (or zero)
/// sign.  Stops when |f| <= f_tol or the bracket width drops below
/// max(x_tol_abs, x_tol_rel * |x|).  The final bracket is reported so callers
/// can post-process (e.g. probe kink abscissae inside it).
template <class F>
BisectResult bisect(F&& f, double lo, double hi, double flo, double fhi,
                    double x_tol_abs, double x_tol_rel, double f_tol,
                    int max_iter = 200) {
    if (lo > hi) throw PreconditionError("bisect: empty bracket");
    if ((flo > 0 && fhi > 0) || (flo < 0 && fhi < 0))
        throw PreconditionError("bisect: no sign change over bracket");
    const bool increasing = flo <= fhi;
    BisectResult r{0.5 * (lo + hi), num::nan, lo, hi, flo, fhi, 0};
    if (std::abs(flo) <= f_tol) {
        r.x = lo; r.fx = flo; return r;
    }
    if (std::abs(fhi) <= f_tol) {
        r.x = hi; r.fx = fhi; return r;
    }
    for (int it = 0; it < max_iter; ++it) {
        double mid = 0.5 * (r.lo + r.hi);
        if (mid <= r.lo || mid >= r.hi) break;  // bracket exhausted in doubles
        double fm = f(mid);
        r.iterations = it + 1;
        r.x = mid;
        r.fx = fm;
        if (std::abs(fm) <= f_tol) return r;
        if ((fm > 0) == !increasing) {
            r.lo = mid; r.flo = fm;
        } else if (fm == 0) {
            return r;
        } else {
            r.hi = mid; r.fhi = fm;
        }
        double width_tol = std::max(x_tol_abs, x_tol_rel * std::max(std::abs(r.lo), std::abs(r.hi)));
        if (r.hi - r.lo <= width_tol) return r;
    }
    // Width-converged (or float-exhausted) without meeting f_tol: legitimate
    // for discontinuous residuals, so return the bracket midpoint and let the
    // caller judge.
    r.x = 0.5 * (r.lo + r.hi);
    r.fx = f(r.x);
    return r;
}

/// Newton iteration on increasing g with a maintained bracket [lo, hi]
/// (g(lo) <= 0 <= g(hi)); falls back to bisection whenever the Newton step
/// leaves the bracket.  `accept(x, gx)` decides convergence.  Throws
/// ConvergenceError if the bracket collapses to machine width or the
/// iteration budget runs out without acceptance.
template <class G, class DG, class Accept>
double newton_bisect(G&& g, DG&& dg, double lo, double hi, Accept&& accept,
                     int max_iter = 200) {
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        double gx = g(x);
        if (accept(x, gx)) return x;
        if (gx > 0)
            hi = x;
        else
            lo = x;
        if (hi - lo <= 2.0 * num::eps * std::max({1.0, std::abs(lo), std::abs(hi)}))
            throw ConvergenceError("newton_bisect: bracket collapsed before acceptance");
        double d = dg(x);
        double step = d > 0 ? gx / d : 0.0;
        double xn = x - step;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    throw ConvergenceError("newton_bisect: iteration budget exhausted");
}

}  // namespace dbubble
