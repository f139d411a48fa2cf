#pragma once

// Brute-force ground truth: discretized minimization of weighted perimeter
// over candidate double-bubble configurations (double intervals and
// three-block arrangements where one bubble is split around the other).
// The search is parameterized in the volume coordinate — an anchor W for
// the leftmost boundary plus a split fraction t — so volume constraints
// hold exactly by construction and only boundary density values are needed.
//
// Density values along the search window come from a sampled profile
// (uniform grid, linear interpolation) by default; the interpolation error
// is orders of magnitude below the anchor-grid resolution that dominates
// the oracle's accuracy.  Set profile_nodes = 0 to evaluate the density
// exactly at every candidate boundary (slow, for cross-checks).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dbubble/common.hpp"
#include "dbubble/parallel.hpp"
#include "dbubble/volume_coordinate.hpp"

namespace dbubble {

enum class BlockLabel { Bubble1, Bubble2, Empty };

inline const char* to_string(BlockLabel l) {
    switch (l) {
        case BlockLabel::Bubble1: return "1";
        case BlockLabel::Bubble2: return "2";
        default: return "empty";
    }
}

/// One block: a closed interval carrying a bubble label (or empty space).
struct Block {
    BlockLabel label = BlockLabel::Empty;
    double volume = 0.0;
};

/// A finite ordered run of blocks placed on the line, flanked by unbounded
/// empty space on both sides.  Boundaries are stored in both coordinates;
/// the weighted perimeter counts each boundary point once.
struct Configuration {
    std::vector<Block> blocks;              ///< zero-volume blocks merged away
    double anchor = num::nan;               ///< volume coordinate of the leftmost boundary
    std::vector<double> boundary_volumes;   ///< anchor + cumulative block volumes
    std::vector<double> boundary_positions; ///< the same boundaries in position
    double perimeter = num::nan;            ///< sum of density at the boundaries
};

/// Total volume carried by one label.
inline double label_volume(const Configuration& c, BlockLabel l) {
    double v = 0.0;
    for (const Block& b : c.blocks)
        if (b.label == l) v += b.volume;
    return v;
}

/// "double" for two touching bubbles, "triple" for one bubble split around
/// the other, "other" for anything else (gapped probes and the like).
inline std::string configuration_type(const Configuration& c) {
    const auto& b = c.blocks;
    auto is_bubble = [](BlockLabel l) { return l != BlockLabel::Empty; };
    if (b.size() == 2 && is_bubble(b[0].label) && is_bubble(b[1].label) &&
        b[0].label != b[1].label)
        return "double";
    if (b.size() == 3 && is_bubble(b[0].label) && is_bubble(b[1].label) &&
        b[0].label == b[2].label && b[0].label != b[1].label)
        return "triple";
    return "other";
}

/// Builds a configuration from raw blocks: drops zero-volume blocks, merges
/// adjacent same-label runs, and evaluates boundaries and perimeter with the
/// exact density.
inline Configuration make_configuration(const VolumeDensity& vd, double anchor,
                                        std::span<const Block> blocks) {
    Configuration c;
    c.anchor = anchor;
    for (const Block& b : blocks) {
        if (!(b.volume >= 0) || !std::isfinite(b.volume))
            throw PreconditionError("configuration blocks need finite volume >= 0");
        if (b.volume == 0) continue;
        if (!c.blocks.empty() && c.blocks.back().label == b.label)
            c.blocks.back().volume += b.volume;
        else
            c.blocks.push_back(b);
    }
    if (c.blocks.empty()) throw PreconditionError("configuration has no volume");
    c.boundary_volumes.reserve(c.blocks.size() + 1);
    c.boundary_volumes.push_back(anchor);
    double v = anchor;
    for (const Block& b : c.blocks) {
        v += b.volume;
        c.boundary_volumes.push_back(v);
    }
    c.perimeter = 0.0;
    for (double bv : c.boundary_volumes) {
        c.boundary_positions.push_back(vd.position(bv));
        c.perimeter += vd.f(bv);
    }
    return c;
}

struct OracleGrid {
    int anchor_count = 2001;     ///< W samples over [-(V1+V2), 0]
    int split_count = 201;       ///< t samples over [0, 1]; must include 0.5
    int profile_nodes = 1 << 16; ///< density profile resolution; 0 = exact evals
    int jobs = 1;                ///< worker threads over the anchor grid
    double max_anchor_step = num::inf; ///< resolution budget; exceeding it throws
};

struct OracleResult {
    Configuration best;
    double best_perimeter = num::nan;        ///< exact density at the winning boundaries
    Configuration best_double;
    double best_double_perimeter = num::nan;
    Configuration best_triple;               ///< best genuine four-boundary candidate
    double best_triple_perimeter = num::nan;
    double runner_up_gap = num::nan;         ///< |best double - best triple| at grid resolution
    OracleGrid grid;
    double anchor_step = num::nan;
    double split_step = num::nan;
    double max_density = num::nan;           ///< max f over the search window
};

namespace detail {

/// Uniform samples of f(V) over [lo, hi] with linear interpolation.
class SampledProfile {
  public:
    SampledProfile(const VolumeDensity& vd, double lo, double hi, int nodes)
        : lo_(lo) {
        const std::size_t n = static_cast<std::size_t>(nodes) + 1;
        step_ = (hi - lo) / static_cast<double>(nodes);
        inv_step_ = 1.0 / step_;
        values_.reserve(n);
        max_f_ = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double v = (k + 1 == n) ? hi : lo + static_cast<double>(k) * step_;
            double f = vd.f(v);  // ascending order keeps the inversion cache warm
            values_.push_back(f);
            max_f_ = std::max(max_f_, f);
        }
    }

    double operator()(double v) const {
        double u = (v - lo_) * inv_step_;
        if (!(u > 0)) return values_.front();
        auto k = static_cast<std::size_t>(u);
        if (k + 1 >= values_.size()) return values_.back();
        double frac = u - static_cast<double>(k);
        return values_[k] + frac * (values_[k + 1] - values_[k]);
    }

    double max_f() const { return max_f_; }

  private:
    double lo_, step_, inv_step_, max_f_;
    std::vector<double> values_;
};

struct ExactEval {
    const VolumeDensity* vd;
    double operator()(double v) const { return vd->f(v); }
};

/// Candidate identity inside the enumeration.  The comparison is a strict
/// total order (perimeter, then anchor index, then type, then split index,
/// then variant), so the reduced minimum is deterministic no matter how the
/// anchor grid is partitioned across workers.
struct OracleCand {
    double perim = num::inf;
    int w_idx = std::numeric_limits<int>::max();
    int kind = 0;   // 0 double, 1 triple
    int t_idx = -1; // -1 for doubles
    int variant = 0;
};

inline bool oracle_better(const OracleCand& a, const OracleCand& b) {
    if (a.perim != b.perim) return a.perim < b.perim;
    if (a.w_idx != b.w_idx) return a.w_idx < b.w_idx;
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.t_idx != b.t_idx) return a.t_idx < b.t_idx;
    return a.variant < b.variant;
}

inline void oracle_consider(OracleCand& cur, const OracleCand& cand) {
    if (oracle_better(cand, cur)) cur = cand;
}

/// Scans every candidate at one anchor.  Doubles come first, then genuine
/// triples (t strictly inside (0,1); the endpoints realize doubles already
/// covered by the double scan).
template <class Eval>
void scan_anchor(const Eval& fv, double v1, double v2, double w, int w_idx,
                 int split_count, OracleCand& best_double, OracleCand& best_triple) {
    const double total = v1 + v2;
    const double f_w = fv(w);
    const double f_end = fv(w + total);
    oracle_consider(best_double, {f_w + fv(w + v1) + f_end, w_idx, 0, -1, 0});
    oracle_consider(best_double, {f_w + fv(w + v2) + f_end, w_idx, 0, -1, 1});
    const double inv = 1.0 / static_cast<double>(split_count - 1);
    for (int j = 1; j + 1 < split_count; ++j) {
        const double t = static_cast<double>(j) * inv;
        const double a2 = t * v2;  // bubble 2 split around bubble 1
        oracle_consider(best_triple,
                        {f_w + fv(w + a2) + fv(w + a2 + v1) + f_end, w_idx, 1, j, 0});
        const double a1 = t * v1;  // bubble 1 split around bubble 2
        oracle_consider(best_triple,
                        {f_w + fv(w + a1) + fv(w + a1 + v2) + f_end, w_idx, 1, j, 1});
    }
}

inline Configuration realize_candidate(const VolumeDensity& vd, const OracleCand& c,
                                       double v1, double v2, double anchor,
                                       int split_count) {
    std::vector<Block> blocks;
    if (c.kind == 0) {
        if (c.variant == 0)
            blocks = {{BlockLabel::Bubble1, v1}, {BlockLabel::Bubble2, v2}};
        else
            blocks = {{BlockLabel::Bubble2, v2}, {BlockLabel::Bubble1, v1}};
    } else {
        const double t = static_cast<double>(c.t_idx) / static_cast<double>(split_count - 1);
        if (c.variant == 0) {
            const double a = t * v2;
            blocks = {{BlockLabel::Bubble2, a},
                      {BlockLabel::Bubble1, v1},
                      {BlockLabel::Bubble2, v2 - a}};
        } else {
            const double a = t * v1;
            blocks = {{BlockLabel::Bubble1, a},
                      {BlockLabel::Bubble2, v2},
                      {BlockLabel::Bubble1, v1 - a}};
        }
    }
    return make_configuration(vd, anchor, blocks);
}

template <class Eval>
void oracle_scan(const Eval& fv, double v1, double v2, const OracleGrid& grid,
                 OracleCand& best_double, OracleCand& best_triple) {
    const double total = v1 + v2;
    const auto n = static_cast<std::size_t>(grid.anchor_count);
    const double n1 = static_cast<double>(grid.anchor_count - 1);
    std::vector<std::pair<OracleCand, OracleCand>> slots(n);
    parallel_for(n, grid.jobs, [&](std::size_t k) {
        const double w = -total * (n1 - static_cast<double>(k)) / n1;
        scan_anchor(fv, v1, v2, w, static_cast<int>(k), grid.split_count,
                    slots[k].first, slots[k].second);
    });
    for (const auto& [bd, bt] : slots) {
        oracle_consider(best_double, bd);
        oracle_consider(best_triple, bt);
    }
}

}  // namespace detail

/// Minimizes weighted perimeter over all gridded double intervals (both
/// labelings) and split-bubble triples (both middle labels).  Deterministic:
/// perimeter ties resolve to the smallest anchor, then the smallest split.
inline OracleResult enumerate_contiguous(const VolumeDensity& vd, double v1, double v2,
                                         OracleGrid grid = {}) {
    if (!(v1 > 0) || !(v2 > 0) || !std::isfinite(v1) || !std::isfinite(v2))
        throw PreconditionError("oracle: volumes must be positive and finite");
    if (grid.anchor_count < 2 || grid.split_count < 3)
        throw PreconditionError("oracle: need at least 2 anchors and 3 split points");
    if (grid.profile_nodes != 0 && grid.profile_nodes < 16)
        throw PreconditionError("oracle: profile_nodes must be 0 (exact) or >= 16");
    const double total = v1 + v2;
    const double step_w = total / static_cast<double>(grid.anchor_count - 1);
    if (!(step_w <= grid.max_anchor_step))
        throw PreconditionError("oracle: anchor step " + std::to_string(step_w) +
                                " exceeds the resolution budget");

    OracleResult r;
    r.grid = grid;
    r.anchor_step = step_w;
    r.split_step = 1.0 / static_cast<double>(grid.split_count - 1);

    detail::OracleCand bd, bt;
    if (grid.profile_nodes == 0) {
        detail::ExactEval fv{&vd};
        detail::oracle_scan(fv, v1, v2, grid, bd, bt);
        r.max_density = std::max({vd.f(-total), vd.f(0.0), vd.f(total)});
    } else {
        detail::SampledProfile fv(vd, -total, total, grid.profile_nodes);
        detail::oracle_scan(fv, v1, v2, grid, bd, bt);
        r.max_density = fv.max_f();
    }

    const double n1 = static_cast<double>(grid.anchor_count - 1);
    auto anchor_of = [&](int k) { return -total * (n1 - k) / n1; };
    r.best_double =
        detail::realize_candidate(vd, bd, v1, v2, anchor_of(bd.w_idx), grid.split_count);
    r.best_double_perimeter = r.best_double.perimeter;
    r.best_triple =
        detail::realize_candidate(vd, bt, v1, v2, anchor_of(bt.w_idx), grid.split_count);
    r.best_triple_perimeter = r.best_triple.perimeter;
    r.runner_up_gap = std::abs(bd.perim - bt.perim);
    const bool double_wins = detail::oracle_better(bd, bt);
    r.best = double_wins ? r.best_double : r.best_triple;
    r.best_perimeter = double_wins ? r.best_double_perimeter : r.best_triple_perimeter;
    return r;
}

// ------------------------------------------------------- structural checks

struct GapProbe {
    double gap = num::nan;         ///< volume of the inserted empty block
    std::size_t junction = 0;      ///< insertion point: before block[junction]
    Configuration configuration;   ///< best gapped arrangement over the anchor grid
    double penalty = num::nan;     ///< gapped minimum minus contiguous best (> 0 expected)
};

struct StructureReport {
    OracleResult oracle;
    double triple_t = num::nan;    ///< split fraction of the best triple's left outer block
    bool triple_symmetric = false; ///< |t - 1/2| within one split step
    BlockLabel middle_label = BlockLabel::Empty;
    bool smaller_in_middle = false;
    std::vector<GapProbe> gaps;
    bool gaps_worse = false;       ///< every probe strictly above the contiguous best
    bool ok = false;
};

/// Checks the structural facts the minimizer must satisfy: the best triple
/// is symmetric with the smaller bubble in the middle, and forcing an empty
/// gap between blocks (re-minimized over translations) strictly increases
/// perimeter.  Gap sizes default to half the smaller volume.
inline StructureReport verify_structure(const VolumeDensity& vd, double v1, double v2,
                                        OracleGrid grid = {},
                                        std::span<const double> gaps = {}) {
    StructureReport rep;
    rep.oracle = enumerate_contiguous(vd, v1, v2, grid);
    const Configuration& tri = rep.oracle.best_triple;
    const double split_total = tri.blocks.front().volume + tri.blocks.back().volume;
    rep.triple_t = tri.blocks.front().volume / split_total;
    rep.triple_symmetric =
        std::abs(rep.triple_t - 0.5) <= rep.oracle.split_step * (1 + 1e-9);
    rep.middle_label = tri.blocks[1].label;
    rep.smaller_in_middle = tri.blocks[1].volume <= std::min(v1, v2) * (1 + 1e-12);

    std::vector<double> default_gaps;
    if (gaps.empty()) {
        default_gaps.push_back(0.5 * std::min(v1, v2));
        gaps = default_gaps;
    }
    rep.gaps_worse = true;
    const Configuration& best = rep.oracle.best;
    for (double g : gaps) {
        if (!(g > 0)) throw PreconditionError("verify_structure: gap volume must be positive");
        const double total = v1 + v2 + g;
        detail::SampledProfile fv(vd, -total, total,
                                  grid.profile_nodes == 0 ? (1 << 16) : grid.profile_nodes);
        for (std::size_t j = 1; j < best.blocks.size(); ++j) {
            std::vector<Block> blocks(best.blocks.begin(), best.blocks.end());
            blocks.insert(blocks.begin() + static_cast<std::ptrdiff_t>(j),
                          Block{BlockLabel::Empty, g});
            const double n1 = static_cast<double>(grid.anchor_count - 1);
            std::vector<double> perims(static_cast<std::size_t>(grid.anchor_count));
            parallel_for(perims.size(), grid.jobs, [&](std::size_t k) {
                const double w = -total * (n1 - static_cast<double>(k)) / n1;
                double p = fv(w), v = w;
                for (const Block& b : blocks) {
                    v += b.volume;
                    p += fv(v);
                }
                perims[k] = p;
            });
            std::size_t kbest = 0;
            for (std::size_t k = 1; k < perims.size(); ++k)
                if (perims[k] < perims[kbest]) kbest = k;
            GapProbe probe;
            probe.gap = g;
            probe.junction = j;
            probe.configuration = make_configuration(
                vd, -total * (n1 - static_cast<double>(kbest)) / n1, blocks);
            probe.penalty = probe.configuration.perimeter - rep.oracle.best_perimeter;
            rep.gaps_worse = rep.gaps_worse && probe.penalty > 0;
            rep.gaps.push_back(std::move(probe));
        }
    }
    rep.ok = rep.triple_symmetric && rep.smaller_in_middle && rep.gaps_worse;
    return rep;
}

// ------------------------------------------------- equilibrium sum checks

struct SumStretch {
    std::size_t first = 0, last = 0;  ///< boundary index range, inclusive
    double left_sum = num::nan;       ///< sum of left slopes (stationarity: <= 0)
    double right_sum = num::nan;      ///< sum of right slopes (stationarity: >= 0)
    bool ok = false;
};

struct SumCheckReport {
    std::vector<SumStretch> stretches;
    double slack = num::nan;
    bool ok = true;
};

/// Verifies first-order stationarity of a configuration: over every maximal
/// run of boundaries whose outer flanks belong to the same bubble (the
/// unbounded empty space counts as one bubble), sliding the run must not
/// reduce perimeter — the right-slope sum is >= 0 and the left-slope sum
/// is <= 0, within `slack` to absorb grid quantization.
inline SumCheckReport equilibrium_sum_check(const VolumeDensity& d, const Configuration& c,
                                            double slack = 1e-3) {
    if (c.blocks.empty() || c.boundary_volumes.size() != c.blocks.size() + 1)
        throw PreconditionError("equilibrium_sum_check: malformed configuration");
    if (!(slack >= 0)) throw PreconditionError("equilibrium_sum_check: slack must be >= 0");
    SumCheckReport rep;
    rep.slack = slack;
    std::vector<BlockLabel> flank;
    flank.reserve(c.blocks.size() + 2);
    flank.push_back(BlockLabel::Empty);
    for (const Block& b : c.blocks) flank.push_back(b.label);
    flank.push_back(BlockLabel::Empty);
    const std::size_t nb = c.boundary_volumes.size();
    for (std::size_t a = 0; a < nb; ++a) {
        double ls = 0.0, rs = 0.0;
        for (std::size_t b = a; b < nb; ++b) {
            ls += d.fprime(c.boundary_volumes[b], Side::Left);
            rs += d.fprime(c.boundary_volumes[b], Side::Right);
            if (flank[a] != flank[b + 1]) continue;  // flank left of x_a vs right of x_b
            SumStretch s;
            s.first = a;
            s.last = b;
            s.left_sum = ls;
            s.right_sum = rs;
            s.ok = rs >= -slack && ls <= slack;
            rep.ok = rep.ok && s.ok;
            rep.stretches.push_back(s);
        }
    }
    return rep;
}

}  // namespace dbubble
