#pragma once

#include "mgc/barriers.hpp"
#include "mgc/core.hpp"
#include "mgc/discrete_gauss.hpp"
#include "mgc/flow.hpp"
#include "mgc/grid.hpp"
#include "mgc/semitrough.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mgc {

struct DiagnosticsConfig {
  double lambda_shrink = 0.5;
  double beta = 5.0;
  std::vector<double> beta_sensitivity{2.0, 5.0, 10.0};
  // l(x) = affine_slope . x + affine_offset; offset chosen from the data when unset
  Vec affine_slope;
  std::optional<double> affine_offset;
  double ratio_tol = 1.05;    // gradient bound
  double monitor_tol = 1.05;  // C^2 and velocity monitors

  void validate(int n) const {
    require(lambda_shrink > 0.0 && lambda_shrink < 1.0, ErrorKind::InvalidInput, "lambda_shrink must lie in (0,1)");
    require(beta > 0.0, ErrorKind::InvalidInput, "beta must be positive");
    require(affine_slope.size() == 0 || (affine_slope.size() == n && affine_slope.norm() < 1.0),
            ErrorKind::InvalidInput, "affine slope must be spacelike");
  }
  Vec slope(int n) const { return affine_slope.size() == n ? affine_slope : Vec(0.5 * unit_axis(n, 0)); }
};

// ---- gradient estimate ------------------------------------------------------------------

struct GradientBoundReport {
  double lambda = 0.0, delta = 0.0;
  double sup_rhs = 0.0;      // sup over {u > psi} of (upper - psi) / sqrt(1 - |D psi|^2)
  double worst_ratio = 0.0;  // max of (u - psi) v / sup_rhs
  std::size_t worst_node = 0;
  std::size_t active_nodes = 0;
  bool vacuous = false;
};

// psi = lambda lower(x / lambda) + delta, delta half the smallest lower - lower^lambda on the grid.
// Checks (u - psi) / sqrt(1 - |Du|^2) <= sup (upper - psi) / sqrt(1 - |D psi|^2) on {u > psi}.
inline GradientBoundReport diagnose_gradient_bound(const GridFunction& u, const BarrierPair& pair,
                                                   const DiagnosticsConfig& cfg = {}) {
  const Grid& g = u.grid();
  cfg.validate(g.dim());
  require(pair.dim() == g.dim(), ErrorKind::InvalidInput, "barrier and grid dimensions differ");
  GradientBoundReport rep;
  const double lam = cfg.lambda_shrink;
  rep.lambda = lam;
  std::vector<double> lo(g.size()), psi0(g.size()), psi_q(g.size()), up(g.size());
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.point(i);
    lo[i] = pair.lower(x);
    up[i] = pair.upper(x);
    const ValueGrad s = pair.lower_with_gradient(x / lam);
    psi0[i] = lam * s.value;
    psi_q[i] = 1.0 - s.grad.squaredNorm();
    dmin = std::min(dmin, lo[i] - psi0[i]);
  }
  require(dmin > 0.0, ErrorKind::InvalidInput, "rescaled lower barrier is not below the lower barrier");
  rep.delta = 0.5 * dmin;

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i) || u[i] <= psi0[i] + rep.delta) continue;
    active.push_back(i);
    rep.sup_rhs = std::max(rep.sup_rhs, (up[i] - psi0[i] - rep.delta) / std::sqrt(psi_q[i]));
  }
  rep.active_nodes = active.size();
  if (active.empty()) {
    rep.vacuous = true;
    return rep;
  }
  for (std::size_t i : active) {
    const double q = 1.0 - node_gradient(u, i).squaredNorm();
    require(q > 0.0, ErrorKind::BoundViolated, "|Du| >= 1 inside {u > psi}");
    const double r = (u[i] - psi0[i] - rep.delta) / std::sqrt(q) / rep.sup_rhs;
    if (r > rep.worst_ratio) {
      rep.worst_ratio = r;
      rep.worst_node = i;
    }
  }
  if (rep.worst_ratio > cfg.ratio_tol) {
    std::ostringstream os;
    os << "gradient bound ratio " << rep.worst_ratio << " at node " << rep.worst_node;
    throw Error(ErrorKind::BoundViolated, os.str());
  }
  return rep;
}

// ---- affine cut-off l ---------------------------------------------------------------------

struct Affine {
  Vec slope;
  double offset = 0.0;
  double operator()(const Vec& x) const { return slope.dot(x) + offset; }
};

// Default offset: halfway between the minimum of u - slope.x and its minimum over the boundary,
// so {l > u} is a nonempty convex blob that stays off the boundary.
inline Affine default_affine(const GridFunction& u, const DiagnosticsConfig& cfg) {
  const Grid& g = u.grid();
  Affine l;
  l.slope = cfg.slope(g.dim());
  if (cfg.affine_offset) {
    l.offset = *cfg.affine_offset;
    return l;
  }
  double all = std::numeric_limits<double>::infinity(), bd = all;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w = u[i] - l.slope.dot(g.point(i));
    all = std::min(all, w);
    if (g.is_boundary(i)) bd = std::min(bd, w);
  }
  l.offset = all + 0.5 * (bd - all);
  return l;
}

// ---- C^2 monitor --------------------------------------------------------------------------

struct MonitorSample {
  double t = 0.0;
  double value = 0.0;  // max over {l > u}; 0 on the empty set
  std::size_t node = 0;
  bool empty = true;
};

struct MonitorSeries {
  std::string name;
  double beta = 0.0;
  std::vector<MonitorSample> samples;
  double initial() const { return samples.empty() ? 0.0 : samples.front().value; }
  double running_max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& s : samples) m = std::max(m, s.value);
    return m;
  }
  // running max / initial, 1 when both vanish
  double growth() const {
    const double a = initial(), m = running_max();
    if (a == 0.0) return m <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return m / a;
  }
};

// (l - u) e^{beta v} kappa_max at one state; v = 1/sqrt(1 - |Du|^2)
inline MonitorSample c2_monitor_sample(const GridFunction& u, const Affine& l, double beta, double t) {
  const Grid& g = u.grid();
  MonitorSample s;
  s.t = t;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i)) continue;
    const double gap = l(g.point(i)) - u[i];
    if (gap <= 0.0) continue;
    const Vec p = node_gradient(u, i);
    const double kappa = max_principal_curvature(p, node_hessian(u, i));
    const double val = gap * std::exp(beta / std::sqrt(1.0 - p.squaredNorm())) * kappa;
    if (s.empty || val > s.value) {
      s.value = val;
      s.node = i;
      s.empty = false;
    }
  }
  return s;
}

// Records the monitor for each beta in the sensitivity list (plus cfg.beta) along a flow.
class C2Monitor {
 public:
  C2Monitor(const GridFunction& u0, const DiagnosticsConfig& cfg) : cfg_(cfg), l_(default_affine(u0, cfg)) {
    cfg.validate(u0.grid().dim());
    std::vector<double> betas = cfg.beta_sensitivity;
    bool has = false;
    for (double b : betas) has = has || b == cfg.beta;
    if (!has) betas.push_back(cfg.beta);
    for (double b : betas) series_.push_back(MonitorSeries{"c2", b, {}});
  }
  void record(const FlowState& s) {
    for (auto& ser : series_) ser.samples.push_back(c2_monitor_sample(s.u, l_, ser.beta, s.t));
  }
  const Affine& affine() const { return l_; }
  const std::vector<MonitorSeries>& series() const { return series_; }
  const MonitorSeries& primary() const {
    for (const auto& s : series_)
      if (s.beta == cfg_.beta) return s;
    return series_.front();
  }
  // throws MonitorExceeded on the primary beta only; the others are reported
  void check() const {
    const MonitorSeries& p = primary();
    const double bound = cfg_.monitor_tol * p.initial();
    for (const auto& smp : p.samples)
      if (smp.value > bound && smp.value > 0.0) {
        std::ostringstream os;
        os << "C2 monitor " << smp.value << " exceeds " << bound << " at t = " << smp.t << ", node " << smp.node;
        throw Error(ErrorKind::MonitorExceeded, os.str());
      }
  }

 private:
  DiagnosticsConfig cfg_;
  Affine l_;
  std::vector<MonitorSeries> series_;
};

// ---- velocity monitor (n = 2) -------------------------------------------------------------

// max over {l > u} of (l - u) udot
inline MonitorSample velocity_monitor_sample(const FlowState& s, const Affine& l) {
  const Grid& g = s.u.grid();
  const GridFunction ud = flow_velocity(s);
  MonitorSample m;
  m.t = s.t;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i)) continue;
    const double gap = l(g.point(i)) - s.u[i];
    if (gap <= 0.0) continue;
    const double val = gap * ud[i];
    if (m.empty || val > m.value) {
      m.value = val;
      m.node = i;
      m.empty = false;
    }
  }
  if (m.empty) m.value = 0.0;
  return m;
}

class VelocityMonitor {
 public:
  VelocityMonitor(const FlowState& s0, const DiagnosticsConfig& cfg) : cfg_(cfg) {
    require(s0.u.grid().dim() == 2, ErrorKind::DimensionUnsupported, "velocity monitor is only available for n = 2");
    cfg.validate(2);
    l_ = default_affine(s0.u, cfg);
    const Grid& g = s0.u.grid();
    for (std::size_t i = 0; i < g.size(); ++i)
      require(!g.is_boundary(i) || l_(g.point(i)) < s0.u[i], ErrorKind::InvalidInput, "l - u must be negative on the boundary");
    // scale of (l - u) sqrt(q) |log K[u0] - log f0|, the velocity the data can produce
    const auto rep = gauss_curvature(s0.u, s0.opts.eps_space, s0.opts.eps_convex, true);
    for (std::size_t k = 0; k < rep.nodes.size(); ++k) {
      const std::size_t i = rep.nodes[k];
      const double gap = l_(g.point(i)) - s0.u[i];
      if (gap > 0.0)
        data_scale_ = std::max(data_scale_, gap / rep.v_tilde[k] * std::abs(std::log(rep.K[k]) - std::log(s0.f0)));
    }
    series_.name = "velocity";
  }
  void record(const FlowState& s) { series_.samples.push_back(velocity_monitor_sample(s, l_)); }
  const MonitorSeries& series() const { return series_; }
  const Affine& affine() const { return l_; }
  double data_scale() const { return data_scale_; }
  // initial value plus (tol - 1) times the larger of |initial| and the data scale
  double bound() const {
    const double a = series_.initial();
    return a + (cfg_.monitor_tol - 1.0) * std::max(std::abs(a), data_scale_);
  }
  void check() const {
    const double b = bound();
    for (const auto& smp : series_.samples)
      if (smp.value > b) {
        std::ostringstream os;
        os << "velocity monitor " << smp.value << " exceeds " << b << " at t = " << smp.t << ", node " << smp.node;
        throw Error(ErrorKind::MonitorExceeded, os.str());
      }
  }

 private:
  DiagnosticsConfig cfg_;
  Affine l_;
  MonitorSeries series_;
  double data_scale_ = 0.0;
};

// Convenience wrappers: run the flow (a copy) to steady state with the monitor attached.
inline MonitorSeries diagnose_c2_monitor(FlowState flow, const DiagnosticsConfig& cfg, double tol, double t_max,
                                         int every = 200) {
  C2Monitor mon(flow.u, cfg);
  run_to_steady(flow, tol, t_max, 0.0, [&](const FlowState& s) { mon.record(s); }, every);
  mon.check();
  return mon.primary();
}

inline MonitorSeries diagnose_velocity_bound(FlowState flow, const DiagnosticsConfig& cfg, double tol, double t_max,
                                             int every = 200) {
  VelocityMonitor mon(flow, cfg);
  run_to_steady(flow, tol, t_max, 0.0, [&](const FlowState& s) { mon.record(s); }, every);
  mon.check();
  return mon.series();
}

// ---- boost closeness ----------------------------------------------------------------------

struct BoostClosenessReport {
  std::vector<double> radii, rapidities;
  std::vector<std::vector<double>> table;  // [radius][rapidity] max over |x| = R of |u^phi - v^phi|
  std::vector<double> sup_over_phi;
  bool decreasing = true;
};

// u, v: value-only callables on R^n. Boosts go through the graph-boost machinery.
template <class U, class W>
BoostClosenessReport diagnose_boost_closeness(U&& u, W&& v, int n, double phi0, const std::vector<double>& radii,
                                              int rapidities = 7, int samples = 360) {
  require(phi0 >= 0.0 && rapidities >= 1, ErrorKind::InvalidInput, "need phi0 >= 0 and a rapidity count");
  require(radii.size() >= 2, ErrorKind::InvalidInput, "need at least two radii");
  BoostClosenessReport rep;
  rep.radii = radii;
  for (int j = 0; j < rapidities; ++j)
    rep.rapidities.push_back(rapidities == 1 ? 0.0 : -phi0 + 2.0 * phi0 * j / (rapidities - 1));
  for (double R : radii) {
    const auto pts = sphere_of_radius(n, R, samples);
    std::vector<double> row;
    for (double phi : rep.rapidities) {
      double m = 0.0;
      for (const Vec& x : pts) m = std::max(m, std::abs(boosted_value(u, phi, x) - boosted_value(v, phi, x)));
      row.push_back(m);
    }
    rep.table.push_back(row);
    double s = 0.0;
    for (double x : row) s = std::max(s, x);
    rep.sup_over_phi.push_back(s);
  }
  for (std::size_t k = 1; k < radii.size(); ++k)
    if (!(rep.sup_over_phi[k] < rep.sup_over_phi[k - 1] || rep.sup_over_phi[k - 1] == 0.0)) {
      rep.decreasing = false;
      std::ostringstream os;
      os << "boosted difference does not decrease at R = " << radii[k];
      throw Error(ErrorKind::NotDecreasing, os.str());
    }
  return rep;
}

}  // namespace mgc
