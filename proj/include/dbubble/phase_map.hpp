#pragma once

// Phase maps: the perimeter gap mu evaluated over a rectangular volume
// grid, each cell classified as double / triple / tie.  Only cells with
// V1 <= V2 are meaningful (mu is defined on ordered pairs); rows are kept
// in deterministic order (V1 outer, V2 inner) regardless of parallelism.

#include <cmath>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dbubble/csv.hpp"
#include "dbubble/equilibrium.hpp"
#include "dbubble/parallel.hpp"
#include "dbubble/volume_coordinate.hpp"

namespace dbubble {

struct PhaseCell {
    double v1 = num::nan, v2 = num::nan;
    double vtilde = num::nan, p2 = num::nan, p3 = num::nan, mu = num::nan;
    std::string cls;    ///< "double", "triple", "tie", or "error"
    std::string error;  ///< diagnostic when cls == "error"
};

struct PhaseMap {
    std::vector<double> v1_grid, v2_grid;
    std::vector<PhaseCell> cells;  ///< V1 <= V2 cells only, V1-major order
};

/// Uniform grid over [lo, hi] with exact endpoints; a degenerate range or
/// a single step collapses to the single value lo.
inline std::vector<double> linear_grid(double lo, double hi, int steps) {
    if (!(steps >= 1)) throw PreconditionError("grid needs at least one step");
    if (!(lo <= hi)) throw PreconditionError("grid range must satisfy lo <= hi");
    if (steps == 1 || lo == hi) return {lo};
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        double s = static_cast<double>(i) / static_cast<double>(steps - 1);
        g.push_back(lo * (1.0 - s) + hi * s);
    }
    return g;
}

/// Logarithmically spaced grid over [lo, hi] (both positive).
inline std::vector<double> geometric_grid(double lo, double hi, int steps) {
    if (!(lo > 0) || !(hi > 0)) throw PreconditionError("geometric grid needs positive range");
    if (!(steps >= 1)) throw PreconditionError("grid needs at least one step");
    if (!(lo <= hi)) throw PreconditionError("grid range must satisfy lo <= hi");
    if (steps == 1 || lo == hi) return {lo};
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(steps));
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < steps; ++i) {
        double s = static_cast<double>(i) / static_cast<double>(steps - 1);
        g.push_back(i == steps - 1 ? hi : std::exp(llo * (1.0 - s) + lhi * s));
    }
    return g;
}

/// Evaluates mu over the product grid (cells with V1 <= V2 only).  Per-cell
/// failures are captured in-band as cls = "error"; the sweep always runs to
/// completion and the cell order is independent of the worker count.
inline PhaseMap compute_phase_map(const VolumeDensity& vd, std::vector<double> v1_grid,
                                  std::vector<double> v2_grid, MuOptions opt = {},
                                  int jobs = 1) {
    PhaseMap map;
    map.v1_grid = std::move(v1_grid);
    map.v2_grid = std::move(v2_grid);
    std::vector<std::pair<double, double>> todo;
    for (double v1 : map.v1_grid)
        for (double v2 : map.v2_grid)
            if (v1 <= v2) todo.emplace_back(v1, v2);
    map.cells.resize(todo.size());
    parallel_for(todo.size(), jobs, [&](std::size_t i) {
        PhaseCell& cell = map.cells[i];
        cell.v1 = todo[i].first;
        cell.v2 = todo[i].second;
        try {
            PerimeterGap g = mu(vd, cell.v1, cell.v2, opt);
            cell.vtilde = g.vtilde;
            cell.p2 = g.p2;
            cell.p3 = g.p3;
            cell.mu = g.mu;
            cell.cls = to_string(g.winner);
        } catch (const std::exception& e) {
            cell.cls = "error";
            cell.error = e.what();
        }
    });
    return map;
}

inline void write_phase_map_csv(std::ostream& os, const PhaseMap& map) {
    os << "v1,v2,vtilde,p2,p3,mu,class\n";
    for (const PhaseCell& c : map.cells)
        csv_row(os, c.v1, c.v2, c.vtilde, c.p2, c.p3, c.mu, c.cls);
}

}  // namespace dbubble
