#pragma once

// Command-line front end.  Subcommands wrap the library modules and emit
// deterministic key=value records (stdout) or CSV (via --out):
//
//   point      single (V1, V2) diagnostic: equilibrium, P2, P3, mu, winner
//   phase-map  mu over a volume grid, CSV v1,v2,vtilde,p2,p3,mu,class
//   tie-curve  lambda(V1) sweep, CSV v1,lambda,mu_residual (inf = no tie)
//   bounds     asymptotic envelope check, CSV v1,lambda,lower,upper,pass
//   oracle     brute-force minimizer at one (V1, V2), key,value CSV
//   ray        sign changes of mu along V2 = ratio * V1
//
// Exit codes: 0 ok, 2 bad arguments or precondition violation, 3 numerical
// failure (non-convergence, overflow).

#include <cmath>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dbubble/csv.hpp"
#include "dbubble/density_spec.hpp"
#include "dbubble/equilibrium.hpp"
#include "dbubble/oracle.hpp"
#include "dbubble/phase_map.hpp"
#include "dbubble/tie_curve.hpp"

namespace dbubble {

/// Everything a run needs besides the subcommand's own grid parameters.
struct RunConfig {
    std::string density = "borell";
    std::string subcommand;
    double tol_eq = 1e-10;
    double tol_tie = 1e-9;
    std::string out_path;  ///< empty = stdout
    int jobs = 1;
};

namespace detail {

template <class Seq>
std::string join_doubles(const Seq& xs) {
    std::string s;
    for (double x : xs) {
        if (!s.empty()) s += ';';
        s += format_double(x);
    }
    return s;
}

inline std::string join_blocks(const Configuration& c) {
    std::string s;
    for (const Block& b : c.blocks) {
        if (!s.empty()) s += ';';
        s += to_string(b.label);
        s += ':';
        s += format_double(b.volume);
    }
    return s;
}

/// Picks the record stream: --out path if given, the provided stream else.
class OutputStream {
  public:
    OutputStream(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw PreconditionError("cannot open output file: " + path);
            os_ = &file_;
        }
    }
    std::ostream& get() { return *os_; }

  private:
    std::ofstream file_;
    std::ostream* os_;
};

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"double-bubble perimeter minimization on the weighted line"};
    app.require_subcommand(1);

    RunConfig cfg;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--density", cfg.density,
                        "density spec: constant:<c>, borell, power:<p>, exp-abs, "
                        "double-exp, smooth-exp:<a>, vol-table:<path>")
            ->capture_default_str();
        sub->add_option("--tol-eq", cfg.tol_eq, "equilibrium residual tolerance")
            ->capture_default_str();
        sub->add_option("--tol-tie", cfg.tol_tie,
                        "tie classification band, relative to max(1, P2)")
            ->capture_default_str();
        sub->add_option("--out", cfg.out_path, "write CSV here instead of stdout");
        sub->add_option("--jobs", cfg.jobs, "worker threads for sweeps")
            ->capture_default_str();
        return sub;
    };

    double v1 = 0, v2 = 0;
    CLI::App* point = add_common(app.add_subcommand("point", "single-pair diagnostic"));
    point->add_option("--v1", v1, "first volume")->required();
    point->add_option("--v2", v2, "second volume")->required();

    double v1_min = 0.01, v1_max = 5.0, v2_min = 0.01, v2_max = 5.0;
    int v1_steps = 50, v2_steps = 50;
    CLI::App* phase = add_common(app.add_subcommand("phase-map", "mu over a volume grid"));
    phase->add_option("--v1-min", v1_min, "")->capture_default_str();
    phase->add_option("--v1-max", v1_max, "")->capture_default_str();
    phase->add_option("--v1-steps", v1_steps, "")->capture_default_str();
    phase->add_option("--v2-min", v2_min, "")->capture_default_str();
    phase->add_option("--v2-max", v2_max, "")->capture_default_str();
    phase->add_option("--v2-steps", v2_steps, "")->capture_default_str();

    double tie_min = 1e-3, tie_max = 1e2, cap_abs = 1e6, cap_factor = 1e4;
    int tie_points = 50;
    std::string spacing = "geometric";
    CLI::App* tie = add_common(app.add_subcommand("tie-curve", "lambda(V1) sweep"));
    tie->add_option("--v1-min", tie_min, "")->capture_default_str();
    tie->add_option("--v1-max", tie_max, "")->capture_default_str();
    tie->add_option("--points", tie_points, "")->capture_default_str();
    tie->add_option("--spacing", spacing, "grid spacing")
        ->check(CLI::IsMember({"geometric", "linear"}))
        ->capture_default_str();
    tie->add_option("--cap-abs", cap_abs, "no-tie bracket cap")->capture_default_str();
    tie->add_option("--cap-factor", cap_factor, "no-tie cap as multiple of V1")
        ->capture_default_str();

    std::vector<double> bound_v1s;
    double epsilon = 0.5;
    CLI::App* bounds = add_common(app.add_subcommand("bounds", "tie-curve envelope check"));
    bounds->add_option("--v1", bound_v1s, "sample volumes (repeatable)")->required();
    bounds->add_option("--epsilon", epsilon, "exponent slack")->capture_default_str();

    int anchors = 2001, splits = 201, profile_nodes = 1 << 16;
    CLI::App* oracle = add_common(app.add_subcommand("oracle", "brute-force minimizer"));
    oracle->add_option("--v1", v1, "first volume")->required();
    oracle->add_option("--v2", v2, "second volume")->required();
    oracle->add_option("--anchors", anchors, "anchor grid points")->capture_default_str();
    oracle->add_option("--splits", splits, "split grid points")->capture_default_str();
    oracle->add_option("--profile-nodes", profile_nodes, "density profile nodes (0 = exact)")
        ->capture_default_str();

    double ray_ratio = 10.0, ray_min = 1e-3, ray_max = 1e3;
    int scan_points = 257;
    CLI::App* ray = add_common(app.add_subcommand("ray", "mu sign changes along V2 = r*V1"));
    ray->add_option("--ratio", ray_ratio, "V2/V1 ratio")->required();
    ray->add_option("--v1-min", ray_min, "")->capture_default_str();
    ray->add_option("--v1-max", ray_max, "")->capture_default_str();
    ray->add_option("--scan-points", scan_points, "")->capture_default_str();

    try {
        app.parse(argc, argv);

        if (!(cfg.tol_eq > 0) || !(cfg.tol_tie > 0))
            throw PreconditionError("tolerances must be positive");
        if (cfg.jobs < 1) throw PreconditionError("--jobs must be at least 1");
        MuOptions mu_opt;
        mu_opt.eq.tol_eq = cfg.tol_eq;
        mu_opt.tie_tol_rel = cfg.tol_tie;
        VolumeDensity d = parse_density_spec(cfg.density);

        if (app.got_subcommand(point)) {
            PerimeterGap g = mu(d, v1, v2, mu_opt);
            DoubleInterval di = make_double_interval(d, g.v1, g.v2, g.vtilde);
            TripleInterval ti = make_triple_interval(d, g.v1, g.v2);
            detail::OutputStream os(cfg.out_path, out);
            std::ostream& o = os.get();
            o << "density=" << d.name() << '\n'
              << "v1=" << format_double(g.v1) << '\n'
              << "v2=" << format_double(g.v2) << '\n'
              << "swapped=" << (g.swapped ? 1 : 0) << '\n'
              << "vtilde=" << format_double(g.vtilde) << '\n'
              << "residual=" << format_double(g.cell.residual) << '\n'
              << "p2=" << format_double(g.p2) << '\n'
              << "p3=" << format_double(g.p3) << '\n'
              << "mu=" << format_double(g.mu) << '\n'
              << "class=" << to_string(g.winner) << '\n'
              << "double_volumes=" << detail::join_doubles(di.boundary_volumes) << '\n'
              << "double_positions=" << detail::join_doubles(di.boundary_positions) << '\n'
              << "triple_volumes=" << detail::join_doubles(ti.boundary_volumes) << '\n'
              << "triple_positions=" << detail::join_doubles(ti.boundary_positions) << '\n';
        } else if (app.got_subcommand(phase)) {
            PhaseMap map = compute_phase_map(d, linear_grid(v1_min, v1_max, v1_steps),
                                             linear_grid(v2_min, v2_max, v2_steps), mu_opt,
                                             cfg.jobs);
            detail::OutputStream os(cfg.out_path, out);
            write_phase_map_csv(os.get(), map);
        } else if (app.got_subcommand(tie)) {
            TieOptions topt;
            topt.mu = mu_opt;
            topt.bracket_cap_abs = cap_abs;
            topt.bracket_cap_factor = cap_factor;
            std::vector<double> grid = spacing == "geometric"
                                           ? geometric_grid(tie_min, tie_max, tie_points)
                                           : linear_grid(tie_min, tie_max, tie_points);
            std::vector<TiePoint> curve = sweep(d, grid, topt);
            detail::OutputStream os(cfg.out_path, out);
            os.get() << "v1,lambda,mu_residual\n";
            for (const TiePoint& p : curve)
                csv_row(os.get(), p.v1, p.lambda, p.mu_residual);
        } else if (app.got_subcommand(bounds)) {
            TieOptions topt;
            topt.mu = mu_opt;
            BoundReport rep = check_bounds(d, bound_v1s, epsilon, topt);
            detail::OutputStream os(cfg.out_path, out);
            os.get() << "v1,lambda,lower,upper,pass\n";
            for (const BoundSample& s : rep.samples)
                csv_row(os.get(), s.v1, s.lambda, s.lower, s.upper, s.pass ? 1 : 0);
        } else if (app.got_subcommand(oracle)) {
            OracleGrid grid;
            grid.anchor_count = anchors;
            grid.split_count = splits;
            grid.profile_nodes = profile_nodes;
            grid.jobs = cfg.jobs;
            OracleResult res = enumerate_contiguous(d, v1, v2, grid);
            out << "type=" << configuration_type(res.best) << '\n'
                << "perimeter=" << format_double(res.best_perimeter) << '\n'
                << "anchor=" << format_double(res.best.anchor) << '\n'
                << "blocks=" << detail::join_blocks(res.best) << '\n'
                << "boundary_volumes=" << detail::join_doubles(res.best.boundary_volumes)
                << '\n'
                << "boundary_positions=" << detail::join_doubles(res.best.boundary_positions)
                << '\n'
                << "best_double_perimeter=" << format_double(res.best_double_perimeter)
                << '\n'
                << "best_triple_perimeter=" << format_double(res.best_triple_perimeter)
                << '\n'
                << "runner_up_gap=" << format_double(res.runner_up_gap) << '\n'
                << "anchor_step=" << format_double(res.anchor_step) << '\n'
                << "max_density=" << format_double(res.max_density) << '\n';
            if (!cfg.out_path.empty()) {
                detail::OutputStream os(cfg.out_path, out);
                std::ostream& o = os.get();
                o << "key,value\n";
                csv_row(o, "type", configuration_type(res.best));
                csv_row(o, "perimeter", res.best_perimeter);
                csv_row(o, "anchor", res.best.anchor);
                csv_row(o, "blocks", detail::join_blocks(res.best));
                csv_row(o, "best_double_perimeter", res.best_double_perimeter);
                csv_row(o, "best_triple_perimeter", res.best_triple_perimeter);
                csv_row(o, "runner_up_gap", res.runner_up_gap);
                csv_row(o, "anchor_step", res.anchor_step);
                csv_row(o, "max_density", res.max_density);
                for (std::size_t i = 0; i < res.best.boundary_volumes.size(); ++i) {
                    csv_row(o, "boundary_volume_" + std::to_string(i),
                            res.best.boundary_volumes[i]);
                    csv_row(o, "boundary_position_" + std::to_string(i),
                            res.best.boundary_positions[i]);
                }
            }
        } else if (app.got_subcommand(ray)) {
            std::vector<double> hits =
                intersections_with_ray(d, ray_ratio, ray_min, ray_max, scan_points, mu_opt);
            out << "crossings=" << hits.size() << '\n';
            for (std::size_t i = 0; i < hits.size(); ++i)
                out << "crossing_" << i << '=' << format_double(hits[i]) << '\n';
            if (!cfg.out_path.empty()) {
                detail::OutputStream os(cfg.out_path, out);
                os.get() << "index,v1\n";
                for (std::size_t i = 0; i < hits.size(); ++i) csv_row(os.get(), i, hits[i]);
            }
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace dbubble
