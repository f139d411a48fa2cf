#pragma once

// Change of variables between position x and weighted volume
// V(x) = integral_0^x f.  Working in the volume coordinate turns a log-convex
// density e^psi into a convex function f(V) with f'(V) = psi'(x(V)), which is
// what every solver in this library consumes.
//
// A VolumeDensity value wraps one of three backends:
//   * a LogDensity (x -> V by quadrature, V -> x by safeguarded Newton),
//   * an analytic density given directly in the volume coordinate,
//   * a piecewise-linear table loaded from CSV (closed-form coordinate map).
// The quadrature-backed directions share a monotone memo cache of (x, V)
// nodes; the cache only shortens integration legs and never changes what is
// being computed.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dbubble/common.hpp"
#include "dbubble/density.hpp"
#include "dbubble/quadrature.hpp"
#include "dbubble/root_finding.hpp"

namespace dbubble {

struct VolumeCoordinateOptions {
    /// Quadrature control for the coordinate map (tighter than the generic
    /// default so downstream residual tolerances of 1e-10 stay reachable).
    QuadratureOptions quad{1e-14, 1e-13, 4000};
    double invert_abs_tol = 1e-12;  ///< inversion acceptance floor, target units
    double invert_rel_tol = 1e-13;
    double cache_spacing = 1.0 / 128.0;  ///< min node distance (source units)
    double march_step = 1.0;             ///< max bracket-march advance per step
    std::size_t cache_max_nodes = 1u << 20;
};

namespace detail {

/// Memoized strictly increasing map b(a) = integral_0^a g (a >= 0, g > 0)
/// with inversion.  Nodes are (a, b) pairs kept sorted; every evaluation
/// integrates forward from the closest cached node below, so repeated nearby
/// queries cost a couple of quadrature panels.  Thread-safe; the cache is an
/// accelerator only (any node subset yields the same values within relative
/// quadrature tolerance).
class MonotoneMap {
  public:
    MonotoneMap(std::function<double(double)> g, std::vector<double> breakpoints,
                VolumeCoordinateOptions opt)
        : g_(std::move(g)), opt_(opt) {
        for (double c : breakpoints)
            if (c > 0 && std::isfinite(c)) bp_.push_back(c);
        std::sort(bp_.begin(), bp_.end());
        bp_.erase(std::unique(bp_.begin(), bp_.end()), bp_.end());
        nodes_.push_back({0.0, 0.0});
    }

    /// b(a) for a >= 0.  Integrates from the highest cached node at or below
    /// a, never from above: a backward leg of a fast-growing integrand would
    /// cancel catastrophically against the node value (b is the small
    /// difference of two huge numbers), while forward legs only ever add
    /// nonnegative terms.
    double forward(double a) const {
        Node n = floor_node(a);
        if (n.a == a) return n.b;
        double leg = integrate_with_breakpoints(g_, n.a, a, bp_, opt_.quad).value;
        double b = n.b + leg;
        maybe_insert({a, b});
        return b;
    }

    /// a(b) for b >= 0.  Expands a bracket by marching outward from the last
    /// node if b lies beyond everything cached, then runs safeguarded Newton.
    double invert(double b) const {
        if (b == 0) return 0.0;
        auto [lo, hi] = bracket(b);
        if (lo.b == b) return lo.a;
        if (hi.b == b) return hi.a;
        return newton_bisect(
            [&](double a) { return forward(a) - b; }, g_, lo.a, hi.a,
            [&](double a, double resid) {
                double tol = std::max({opt_.invert_abs_tol, opt_.invert_rel_tol * b,
                                       4.0 * num::eps * (b + g_(a) * a)});
                return std::abs(resid) <= tol;
            });
    }

  private:
    struct Node {
        double a, b;
    };

    /// Greatest cached node with n.a <= a; the root node (0, 0) always exists.
    Node floor_node(double a) const {
        std::shared_lock lk(m_);
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), a,
                                   [](double v, const Node& n) { return v < n.a; });
        return it == nodes_.begin() ? nodes_.front() : *std::prev(it);
    }

    /// Bracket [lo, hi] with lo.b <= b <= hi.b.
    std::pair<Node, Node> bracket(double b) const {
        Node lo{0.0, 0.0}, hi{0.0, 0.0};
        bool have_hi = false;
        {
            std::shared_lock lk(m_);
            auto it = std::lower_bound(nodes_.begin(), nodes_.end(), b,
                                       [](const Node& n, double v) { return n.b < v; });
            if (it != nodes_.end()) {
                hi = *it;
                have_hi = true;
                lo = (it == nodes_.begin()) ? Node{0.0, 0.0} : *std::prev(it);
            } else {
                lo = nodes_.back();
            }
        }
        if (have_hi) return {lo, hi};
        // March outward.  The Newton step from the left brackets immediately
        // when b(a) is convex; geometric growth of the step handles the
        // concave case; shrink-on-overflow handles integrand blowup.
        double a0 = lo.a, b0 = lo.b;
        double last_step = 0.0;
        for (int it = 0; it < 10000; ++it) {
            double raw = (b - b0) / g_(a0);
            // floor the step at a width forward() can resolve: when b sits
            // barely above the last cached node the Newton step alone would
            // be degenerate, tripping the overflow guard below
            double floor_step = 32.0 * num::eps * std::max(1.0, std::abs(a0));
            double da = std::min(std::max({raw, 2.0 * last_step, floor_step}),
                                 opt_.march_step * (1.0 + std::abs(a0)));
            for (;;) {
                if (da <= 8.0 * num::eps * std::max(1.0, a0))
                    throw ConvergenceError("coordinate map: target unreachable before overflow");
                try {
                    double b1 = forward(a0 + da);
                    if (b1 >= b) return {{a0, b0}, {a0 + da, b1}};
                    a0 += da;
                    b0 = b1;
                    break;
                } catch (const std::range_error&) {
                    da *= 0.25;
                }
            }
            last_step = da;
        }
        throw ConvergenceError("coordinate map: bracket march exceeded iteration budget");
    }

    void maybe_insert(Node n) const {
        std::unique_lock lk(m_);
        if (nodes_.size() >= opt_.cache_max_nodes) return;
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), n.a,
                                   [](const Node& q, double v) { return q.a < v; });
        if (it != nodes_.end() && std::abs(it->a - n.a) < opt_.cache_spacing) return;
        if (it != nodes_.begin() && std::abs(std::prev(it)->a - n.a) < opt_.cache_spacing) return;
        // keep monotone in b as well; a non-monotone insert would mean the
        // integrand went negative, which callers rule out
        nodes_.insert(it, n);
    }

    std::function<double(double)> g_;
    VolumeCoordinateOptions opt_;
    std::vector<double> bp_;
    mutable std::shared_mutex m_;
    mutable std::vector<Node> nodes_;
};

/// Backend interface for VolumeDensity.
class VolumeDensityImpl {
  public:
    virtual ~VolumeDensityImpl() = default;
    virtual double f(double v) const = 0;
    virtual double fprime(double v, Side s) const = 0;
    virtual double position(double v) const = 0;
    virtual double volume(double x) const = 0;
    virtual const LogDensity* base() const { return nullptr; }

    std::string name;
    Smoothness smoothness = Smoothness::C2;
    bool strictly_convex = true;
    bool slope_bounded = false;
    std::vector<double> volume_kinks;  ///< signed V where f' jumps
};

class LogBackedImpl final : public VolumeDensityImpl {
  public:
    LogBackedImpl(LogDensity d, VolumeCoordinateOptions opt)
        : base_(std::move(d)),
          map_([this](double x) { return eval_density(base_, x); },
               abs_breakpoints(base_), opt) {
        name = base_.name;
        smoothness = base_.smoothness;
        strictly_convex = base_.strictly_log_convex;
        slope_bounded = !base_.slope_unbounded;
        for (double k : base_.kinks) {
            double vk = volume(k);
            volume_kinks.push_back(vk);
            if (k != 0.0) volume_kinks.push_back(-vk);
        }
        std::sort(volume_kinks.begin(), volume_kinks.end());
    }

    double volume(double x) const override {
        if (x == 0) return 0.0;
        double v = map_.forward(std::abs(x));
        return x > 0 ? v : -v;
    }

    double position(double v) const override {
        if (v == 0) return 0.0;
        double x = map_.invert(std::abs(v));
        return v > 0 ? x : -x;
    }

    double f(double v) const override { return eval_density(base_, position(v)); }

    double fprime(double v, Side s) const override {
        // x(V) is increasing, so one-sided limits carry over directly.
        return log_slope(base_, position(v), s);
    }

    const LogDensity* base() const override { return &base_; }

  private:
    static std::vector<double> abs_breakpoints(const LogDensity& d) {
        std::vector<double> out;
        for (double c : d.integration_breakpoints) out.push_back(std::abs(c));
        return out;
    }

    LogDensity base_;
    MonotoneMap map_;
};

/// Density given analytically in the volume coordinate: f, one-sided f', and
/// the kink list are supplied on the whole line; x(V) = integral_0^V 1/f.
class AnalyticVolumeImpl final : public VolumeDensityImpl {
  public:
    AnalyticVolumeImpl(std::string nm, std::function<double(double)> f,
                       std::function<double(double)> fp_left,
                       std::function<double(double)> fp_right,
                       std::vector<double> kinks, Smoothness sm, bool strict,
                       bool bounded_slope, VolumeCoordinateOptions opt)
        : f_(std::move(f)),
          fpl_(std::move(fp_left)),
          fpr_(std::move(fp_right)),
          map_([this](double v) { return 1.0 / f_(v); },
               [&kinks] {
                   std::vector<double> out;
                   for (double c : kinks) out.push_back(std::abs(c));
                   return out;
               }(),
               [&opt] {
                   VolumeCoordinateOptions o = opt;
                   o.invert_abs_tol = 1e-13;  // target is a position here
                   o.march_step = num::inf;   // 1/f is bounded; march freely
                   return o;
               }()) {
        name = std::move(nm);
        smoothness = sm;
        strictly_convex = strict;
        slope_bounded = bounded_slope;
        volume_kinks = std::move(kinks);
        std::sort(volume_kinks.begin(), volume_kinks.end());
        if (!(f_(0.0) > 0)) throw PreconditionError("volume-coordinate density must be positive");
    }

    double f(double v) const override { return f_(v); }
    double fprime(double v, Side s) const override {
        return s == Side::Left ? fpl_(v) : fpr_(v);
    }
    double position(double v) const override {
        if (v == 0) return 0.0;
        double x = map_.forward(std::abs(v));
        return v > 0 ? x : -x;
    }
    double volume(double x) const override {
        if (x == 0) return 0.0;
        double v = map_.invert(std::abs(x));
        return x > 0 ? v : -v;
    }

  private:
    std::function<double(double)> f_, fpl_, fpr_;
    MonotoneMap map_;
};

/// Piecewise-linear table (V_i, f_i) on V >= 0, mirrored evenly.  The
/// coordinate map integrates 1/(linear) per segment in closed form, so both
/// directions are exact up to rounding.  Beyond the last node the table
/// extrapolates with the final secant slope.
class TableImpl final : public VolumeDensityImpl {
  public:
    TableImpl(std::string nm, std::vector<double> v, std::vector<double> f)
        : v_(std::move(v)), f_(std::move(f)) {
        name = std::move(nm);
        const std::size_t n = v_.size();
        if (n < 2) throw PreconditionError("volume table needs at least two rows");
        if (v_[0] != 0.0) throw PreconditionError("volume table must start at V = 0");
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(v_[i]) || !std::isfinite(f_[i]))
                throw PreconditionError("volume table has non-finite entries");
            if (!(f_[i] > 0))
                throw PreconditionError("volume table density values must be positive");
            if (i > 0 && !(v_[i] > v_[i - 1]))
                throw PreconditionError("volume table V column must be strictly increasing");
        }
        slope_.resize(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i)
            slope_[i] = (f_[i + 1] - f_[i]) / (v_[i + 1] - v_[i]);
        for (std::size_t i = 0; i + 1 < slope_.size(); ++i) {
            // Each secant carries rounding noise of order eps * f / dV from
            // the tabulated values; only reject decreases beyond that.
            double noise = 8.0 * num::eps *
                           std::max({f_[i], f_[i + 1], f_[i + 2]}) /
                           std::min(v_[i + 1] - v_[i], v_[i + 2] - v_[i + 1]);
            double tol = noise + 1e-12 * std::max(1.0, std::abs(slope_[i]));
            if (slope_[i] > slope_[i + 1] + tol)
                throw PreconditionError("volume table is not convex (secant slopes decrease)");
        }
        xpre_.resize(n, 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i)
            xpre_[i + 1] = xpre_[i] + segment_x(i, v_[i + 1]);
        smoothness = Smoothness::PiecewiseC1;
        strictly_convex = false;  // piecewise-linear f is never strictly convex
        slope_bounded = true;
        for (std::size_t i = n; i-- > 0;) volume_kinks.push_back(-v_[i]);
        for (std::size_t i = 1; i < n; ++i) volume_kinks.push_back(v_[i]);
    }

    double f(double v) const override {
        double u = std::abs(v);
        std::size_t i = seg(u);
        return f_[i] + slope_at(i) * (u - v_[i]);
    }

    double fprime(double v, Side s) const override {
        if (v < 0) return -fprime_pos(-v, s == Side::Left ? Side::Right : Side::Left);
        if (v == 0) return s == Side::Right ? slope_at(0) : -slope_at(0);
        return fprime_pos(v, s);
    }

    double position(double v) const override {
        double u = std::abs(v);
        std::size_t i = seg(u);
        double x = xpre_[i] + segment_x(i, u);
        return v >= 0 ? x : -x;
    }

    double volume(double x) const override {
        double u = std::abs(x);
        auto it = std::upper_bound(xpre_.begin(), xpre_.end(), u);
        std::size_t i = (it == xpre_.begin()) ? 0 : (it - xpre_.begin() - 1);
        if (i >= slope_.size()) i = slope_.size() - 1;
        double s = slope_at(i), dx = u - xpre_[i];
        double dv = (s == 0.0) ? f_[i] * dx : f_[i] * std::expm1(s * dx) / s;
        double v = v_[i] + dv;
        return x >= 0 ? v : -v;
    }

  private:
    // x-advance across segment i from v_[i] to u (u may exceed v_[i+1] only
    // for the last segment / extrapolation)
    double segment_x(std::size_t i, double u) const {
        double s = slope_at(i), dv = u - v_[i];
        if (s == 0.0) return dv / f_[i];
        return std::log1p(s * dv / f_[i]) / s;
    }

    std::size_t seg(double u) const {
        auto it = std::upper_bound(v_.begin(), v_.end(), u);
        std::size_t i = (it == v_.begin()) ? 0 : (it - v_.begin() - 1);
        return std::min(i, slope_.size() - 1);
    }

    double slope_at(std::size_t i) const {
        return slope_[std::min(i, slope_.size() - 1)];
    }

    double fprime_pos(double u, Side s) const {
        // exact node hits see their one-sided secants; interior points (and
        // extrapolation range) see the segment slope on both sides
        auto it = std::lower_bound(v_.begin(), v_.end(), u);
        if (it != v_.end() && *it == u) {
            std::size_t i = it - v_.begin();
            if (s == Side::Left) return i == 0 ? -slope_at(0) : slope_[i - 1];
            return slope_at(i);
        }
        return slope_at(seg(u));
    }

    std::vector<double> v_, f_, slope_, xpre_;
};

}  // namespace detail

/// A log-convex even density viewed in the volume coordinate.  Copy-cheap
/// (shared backend, shared memo cache), safe for concurrent use.
class VolumeDensity {
  public:
    static VolumeDensity from_log_density(LogDensity d, VolumeCoordinateOptions opt = {}) {
        return VolumeDensity(std::make_shared<detail::LogBackedImpl>(std::move(d), opt));
    }

    static VolumeDensity from_volume_profile(std::string name, std::function<double(double)> f,
                                             std::function<double(double)> fp_left,
                                             std::function<double(double)> fp_right,
                                             std::vector<double> kinks, Smoothness sm,
                                             bool strictly_convex, bool bounded_slope,
                                             VolumeCoordinateOptions opt = {}) {
        return VolumeDensity(std::make_shared<detail::AnalyticVolumeImpl>(
            std::move(name), std::move(f), std::move(fp_left), std::move(fp_right),
            std::move(kinks), sm, strictly_convex, bounded_slope, opt));
    }

    static VolumeDensity from_table(std::string name, std::vector<double> v,
                                    std::vector<double> f) {
        return VolumeDensity(
            std::make_shared<detail::TableImpl>(std::move(name), std::move(v), std::move(f)));
    }

    /// Load a `V,f` CSV (header required, rows V >= 0 strictly increasing
    /// from 0, convex).  Throws PreconditionError on malformed input.
    static VolumeDensity from_table_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw PreconditionError("cannot open volume table: " + path);
        std::string line;
        if (!std::getline(in, line)) throw PreconditionError("empty volume table: " + path);
        auto strip = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        if (strip(line) != "V,f")
            throw PreconditionError("volume table must start with header 'V,f': " + path);
        std::vector<double> v, f;
        std::size_t row = 1;
        while (std::getline(in, line)) {
            ++row;
            line = strip(line);
            if (line.empty()) continue;
            std::size_t comma = line.find(',');
            if (comma == std::string::npos)
                throw PreconditionError("volume table row " + std::to_string(row) +
                                        " is not 'V,f': " + path);
            try {
                std::size_t used = 0;
                double vv = std::stod(line.substr(0, comma), &used);
                double ff = std::stod(line.substr(comma + 1), &used);
                v.push_back(vv);
                f.push_back(ff);
            } catch (const std::exception&) {
                throw PreconditionError("volume table row " + std::to_string(row) +
                                        " is not numeric: " + path);
            }
        }
        return from_table("vol-table:" + path, std::move(v), std::move(f));
    }

    double f(double v) const { return impl_->f(v); }
    double fprime(double v, Side s) const { return impl_->fprime(v, s); }
    double position(double v) const { return impl_->position(v); }
    double volume(double x) const { return impl_->volume(x); }

    const std::string& name() const { return impl_->name; }
    Smoothness smoothness() const { return impl_->smoothness; }
    bool strictly_convex() const { return impl_->strictly_convex; }
    bool slope_bounded() const { return impl_->slope_bounded; }
    /// Signed volume coordinates where f' jumps (empty for C1 densities).
    const std::vector<double>& volume_kinks() const { return impl_->volume_kinks; }
    /// The positional log-density behind this map, if there is one.
    const LogDensity* base() const { return impl_->base(); }

  private:
    explicit VolumeDensity(std::shared_ptr<const detail::VolumeDensityImpl> impl)
        : impl_(std::move(impl)) {}
    std::shared_ptr<const detail::VolumeDensityImpl> impl_;
};

// Spec-facing free-function spellings.
inline double volume_of(const VolumeDensity& d, double x) { return d.volume(x); }
inline double position_of(const VolumeDensity& d, double v) { return d.position(v); }
inline double f_at_volume(const VolumeDensity& d, double v) { return d.f(v); }
inline double fprime_at_volume(const VolumeDensity& d, double v, Side s) {
    return d.fprime(v, s);
}

}  // namespace dbubble
