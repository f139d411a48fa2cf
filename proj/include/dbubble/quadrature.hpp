#pragma once

// Adaptive Gauss-Kronrod 7/15 quadrature with optional interval pre-splitting
// at known breakpoints (derivative kinks of the integrand).  Panels are kept
// in a worst-first heap and split until the summed error estimate meets the
// requested absolute+relative tolerance.

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

#include "dbubble/common.hpp"

namespace dbubble {

struct QuadratureOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    int max_panels = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int panels = 0;
};

namespace detail {

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights on the odd-indexed nodes.
inline constexpr double gk_x[8] = {
    0.99145537112081263920685469752632852,
    0.94910791234275852452618968404785126,
    0.86486442335976907278971278864092620,
    0.74153118559939443986386477328078840,
    0.58608723546769113029414483825872960,
    0.40584515137739716690660641207696146,
    0.20778495500789846760068940377324491,
    0.0,
};
inline constexpr double gk_wk[8] = {
    0.02293532201052922496373200805896959,
    0.06309209262997855329070066318920429,
    0.10479001032225018383987632254151801,
    0.14065325971552591874518959051023792,
    0.16900472663926790282658342659855028,
    0.19035057806478540991325640242101368,
    0.20443294007529889241416199923464908,
    0.20948214108472782801299917489171426,
};
inline constexpr double gk_wg[4] = {
    0.12948496616886969327061143267908201,
    0.27970539148927666790146777142377958,
    0.38183005050511894495036977548897513,
    0.41795918367346938775510204081632653,
};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fv[15];
    fv[7] = f(c);
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * gk_x[i]);
        fv[14 - i] = f(c + h * gk_x[i]);
    }
    double kron = gk_wk[7] * fv[7];
    double gauss = gk_wg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        kron += gk_wk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) gauss += gk_wg[i / 2] * (fv[i] + fv[14 - i]);
    }
    kron *= h;
    gauss *= h;
    double err = std::abs(kron - gauss);
    // sharpen the raw difference the usual way; it is very pessimistic for
    // smooth panels
    double scaled = err > 0 ? std::pow(200.0 * err, 1.5) : 0.0;
    if (scaled < err) err = scaled;
    return {a, b, kron, err};
}

}  // namespace detail

/// Integrate f over [a, b] (a > b allowed; the sign convention is the usual
/// oriented one).  Throws std::range_error if the integrand produces a
/// non-finite value and ConvergenceError if the panel budget is exhausted
/// before the tolerance is met.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, QuadratureOptions opts = {}) {
    if (a == b) return {0.0, 0.0, 0};
    double lo = a, hi = b, orient = 1.0;
    if (lo > hi) {
        std::swap(lo, hi);
        orient = -1.0;
    }
    std::priority_queue<detail::Panel> heap;
    detail::Panel first = detail::gk15(f, lo, hi);
    if (!std::isfinite(first.value))
        throw std::range_error("integrand overflowed during quadrature");
    double total = first.value, err = first.error;
    int panels = 1;
    heap.push(first);
    auto tol = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };
    while (err > tol()) {
        if (panels >= opts.max_panels)
            throw ConvergenceError("quadrature panel budget exhausted (error " +
                                   std::to_string(err) + " > tol " + std::to_string(tol()) + ")");
        detail::Panel worst = heap.top();
        heap.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // panel no longer splittable in double precision; accept as-is
            err -= worst.error;
            continue;
        }
        detail::Panel left = detail::gk15(f, worst.a, mid);
        detail::Panel right = detail::gk15(f, mid, worst.b);
        if (!std::isfinite(left.value) || !std::isfinite(right.value))
            throw std::range_error("integrand overflowed during quadrature");
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++panels;
    }
    return {orient * total, err, panels};
}

/// Same, but pre-splits [a, b] at the given breakpoints (unsorted, possibly
/// outside the interval; only interior ones are used).  Useful when the
/// integrand has derivative kinks at known abscissae.
template <class F>
QuadratureResult integrate_with_breakpoints(F&& f, double a, double b,
                                            std::span<const double> breakpoints,
                                            QuadratureOptions opts = {}) {
    if (a == b) return {0.0, 0.0, 0};
    double lo = std::min(a, b), hi = std::max(a, b);
    std::vector<double> cuts;
    cuts.push_back(lo);
    for (double c : breakpoints)
        if (c > lo && c < hi) cuts.push_back(c);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    QuadratureResult out;
    const double whole = hi - lo;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] == cuts[i]) continue;
        QuadratureOptions seg = opts;
        seg.abs_tol = opts.abs_tol * (cuts[i + 1] - cuts[i]) / whole;
        QuadratureResult r = integrate(f, cuts[i], cuts[i + 1], seg);
        out.value += r.value;
        out.error_estimate += r.error_estimate;
        out.panels += r.panels;
    }
    if (a > b) out.value = -out.value;
    return out;
}

}  // namespace dbubble
