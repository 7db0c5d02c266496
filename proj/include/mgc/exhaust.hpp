#pragma once

#include "mgc/barriers.hpp"
#include "mgc/core.hpp"
#include "mgc/discrete_gauss.hpp"
#include "mgc/elliptic.hpp"
#include "mgc/flow.hpp"
#include "mgc/grid.hpp"
#include "mgc/sphere.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mgc {

struct ExhaustionSchedule {
  std::vector<double> radii;
  double compact_radius = 2.0;
  std::vector<double> spacings;  // one per radius, or a single shared value
  double smoothing_radius = 0.2;

  double spacing(std::size_t j) const { return spacings.size() == 1 ? spacings[0] : spacings.at(j); }
  void validate() const {
    require(radii.size() >= 2, ErrorKind::InvalidInput, "exhaustion needs at least two radii");
    require(spacings.size() == 1 || spacings.size() == radii.size(), ErrorKind::InvalidInput,
            "give one spacing or one per radius");
    for (std::size_t j = 0; j < radii.size(); ++j) {
      require(j == 0 || radii[j] > radii[j - 1], ErrorKind::InvalidInput, "radii must increase");
      require(j == 0 || spacing(j) <= spacing(j - 1), ErrorKind::InvalidInput, "spacings must refine or stay fixed");
    }
    require(compact_radius > 0.0 && compact_radius < radii.front(), ErrorKind::InvalidInput,
            "compact radius must be below the smallest radius");
  }
};

enum class ExhaustMode { Elliptic, Flow };

struct ExhaustOptions {
  // near-lightlike stages bottom out around 2e-9 in double precision
  NewtonOptions newton = [] {
    NewtonOptions o;
    o.residual_tol = 1e-8;
    return o;
  }();
  double flow_tol = 1e-7;
  double flow_t_max = 200.0;
  double cauchy_tol = 1e-8;   // allowed increase of d_j before NotCauchy
  int hull_resolution = 256;
  std::vector<double> blow_down_radii{100.0, 200.0, 400.0, 800.0, 1600.0};
  int blow_down_directions = 16;
  double blow_down_tol = 1e-2;
};

struct StageReport {
  double R = 0.0, h = 0.0;
  double smoothing_radius = 0.0;  // the one actually used
  double mollification_error = 0.0, min_gap = 0.0;
  int iterations = 0;  // Newton iterations or accepted flow steps
  double residual = 0.0;
  double lower_margin = 0.0, upper_margin = 0.0;
  double seconds = 0.0;
};

struct ExhaustReport {
  std::vector<StageReport> stages;
  std::vector<double> cauchy;  // d_j
  bool cauchy_decreasing = true;
  // final stage
  std::size_t gauss_points = 0;
  double inside_h_fraction = 0.0;
  std::size_t outside_3h = 0;
  double max_hull_distance = 0.0;
  double blow_down_max_error = 0.0;
  bool blow_down_ok = false;
  GridFunction final_solution;
  std::vector<GridFunction> solutions;
};

// d = max over nodes of a with |x| <= r of |a - b|, b interpolated
inline double compact_difference(const GridFunction& a, const GridFunction& b, double r) {
  double d = 0.0;
  const Grid& g = a.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.point(i);
    if (x.norm() <= r + 1e-12) d = std::max(d, std::abs(a[i] - interpolate(b, x)));
  }
  return d;
}

// Secant blow-down of both barriers against V_F in evenly spread directions.
inline double barrier_blow_down_error(const BarrierPair& pair, int directions, const std::vector<double>& radii) {
  const int n = pair.dim();
  std::vector<UnitVector> dirs;
  if (n == 1) {
    dirs = {UnitVector(make_vec({1.0})), UnitVector(make_vec({-1.0}))};
  } else if (n == 2) {
    for (int k = 0; k < directions; ++k) {
      const double a = 2.0 * pi * (k + 0.5) / directions;
      dirs.emplace_back(make_vec({std::cos(a), std::sin(a)}));
    }
  } else {
    for (const Vec& v : sphere_samples(n, directions)) dirs.emplace_back(v);
  }
  double err = 0.0;
  for (const auto& d : dirs) {
    const double v = pair.cone(d.coords());
    const auto lo = blow_down([&](const Vec& x) { return pair.lower(x); }, d, radii);
    const auto up = blow_down([&](const Vec& x) { return pair.upper(x); }, d, radii);
    err = std::max({err, std::abs(lo.limit - v), std::abs(up.limit - v)});
  }
  return err;
}

// One ball problem on [-R, R]^n with barrier-sandwiched boundary data.
inline Solution solve_stage(const BarrierPair& pair, double f0, double R, double h, double smoothing,
                            ExhaustMode mode, const ExhaustOptions& opt, StageReport& st) {
  const Grid g(pair.dim(), R, h);
  st.R = R;
  st.h = h;
  BoundaryData bd;
  try {
    bd = mollified_boundary(pair, g, smoothing);
    st.smoothing_radius = smoothing;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::GapTooSmall || smoothing == 0.0) throw;
    // barriers nearly touch: use the unsmoothed midpoint data
    bd = mollified_boundary(pair, g, 0.0);
    st.smoothing_radius = 0.0;
  }
  st.mollification_error = bd.max_mollification_error;
  st.min_gap = bd.min_gap;
  const BarrierGrids bg = sample_barriers(pair, g);

  if (mode == ExhaustMode::Elliptic) {
    NewtonOptions o = opt.newton;
    o.lower = &bg.lower;
    o.upper = &bg.upper;
    Solution s = solve_dirichlet(g, f0, bd.data, o);
    st.iterations = s.report.iterations;
    st.residual = s.report.final_residual;
    st.lower_margin = s.report.lower_margin;
    st.upper_margin = s.report.upper_margin;
    st.seconds = s.report.seconds;
    return s;
  }
  RampSpec ramp;
  ramp.lower = bg.lower;
  ramp.upper = bg.upper;
  FlowState fs = make_flow_state(bd.data, f0, ramp);
  const DecayReport dr = run_to_steady(fs, opt.flow_tol, opt.flow_t_max);
  st.iterations = static_cast<int>(dr.steps);
  st.residual = dr.final_sup_log_error;
  st.seconds = dr.seconds;
  st.lower_margin = st.upper_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    st.lower_margin = std::min(st.lower_margin, fs.u[i] - bg.lower[i]);
    st.upper_margin = std::min(st.upper_margin, bg.upper[i] - fs.u[i]);
  }
  Solution s;
  s.u = std::move(fs.u);
  s.report.final_residual = dr.final_sup_log_error;
  s.report.seconds = dr.seconds;
  return s;
}

// Solves on growing boxes and measures convergence on |x| <= compact_radius. Barriers use
// k1 = 2 f0 and k2 = f0 / 2 unless cfg says otherwise.
inline ExhaustReport exhaust(const CapUnion& F, double f0, const ExhaustionSchedule& schedule, ExhaustMode mode,
                             std::shared_ptr<const ProfileFunction> profile, const ExhaustOptions& opt = {},
                             std::optional<BarrierConfig> cfg = std::nullopt) {
  schedule.validate();
  require(f0 > 0.0, ErrorKind::InvalidInput, "f0 must be positive");
  BarrierConfig bc = cfg ? *cfg : BarrierConfig{};
  if (!cfg) {
    bc.k1 = 2.0 * f0;
    bc.k2 = 0.5 * f0;
  }
  require(bc.k1 > f0 && f0 > bc.k2, ErrorKind::InvalidInput, "need k1 > f0 > k2");
  const BarrierPair pair = build_barriers(F, bc, profile);

  ExhaustReport rep;
  for (std::size_t j = 0; j < schedule.radii.size(); ++j) {
    StageReport st;
    Solution s = solve_stage(pair, f0, schedule.radii[j], schedule.spacing(j), schedule.smoothing_radius, mode, opt, st);
    rep.stages.push_back(st);
    rep.solutions.push_back(std::move(s.u));
    if (j > 0) {
      const double d = compact_difference(rep.solutions[j - 1], rep.solutions[j], schedule.compact_radius);
      rep.cauchy.push_back(d);
    }
  }
  for (std::size_t k = 1; k < rep.cauchy.size(); ++k)
    rep.cauchy_decreasing = rep.cauchy_decreasing && rep.cauchy[k] < rep.cauchy[k - 1];

  rep.final_solution = rep.solutions.back();
  const Grid& g = rep.final_solution.grid();
  const ConvexBody hull = klein_hull(F, opt.hull_resolution);
  std::size_t inside = 0;
  for (const auto& kp : gauss_map_image(rep.final_solution)) {
    const double d = hull.distance(kp.coords);
    rep.max_hull_distance = std::max(rep.max_hull_distance, d);
    inside += d <= g.h();
    rep.outside_3h += d > 3.0 * g.h();
    ++rep.gauss_points;
  }
  rep.inside_h_fraction = rep.gauss_points ? static_cast<double>(inside) / rep.gauss_points : 0.0;
  rep.blow_down_max_error = barrier_blow_down_error(pair, opt.blow_down_directions, opt.blow_down_radii);
  rep.blow_down_ok = rep.blow_down_max_error <= opt.blow_down_tol;

  for (std::size_t k = 1; k < rep.cauchy.size(); ++k)
    if (rep.cauchy[k] > rep.cauchy[k - 1] + opt.cauchy_tol) {
      std::ostringstream os;
      os << "Cauchy difference grows from " << rep.cauchy[k - 1] << " to " << rep.cauchy[k] << " at R = "
         << schedule.radii[k + 1];
      throw Error(ErrorKind::NotCauchy, os.str());
    }
  return rep;
}

}  // namespace mgc
