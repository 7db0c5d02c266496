#pragma once

#include "mgc/core.hpp"
#include "mgc/discrete_gauss.hpp"
#include "mgc/grid.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace mgc {

// C-infinity step: 0 for s <= 0, 1 for s >= 1.
inline double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

// 1 on [0, 1/3], 0 on [2/3, inf)
inline double ramp_zeta(double tau) { return 1.0 - smooth_step(3.0 * tau - 1.0); }

struct RampSpec {
  bool enabled = true;
  double epsilon = 0.1;
  // eta is 1 on the boundary layers and 0 farther than eta_margin inside
  double eta_margin = 0.5;
  GridFunction initial_log_K;  // log K[u0], frozen
  // optional barriers: eta also vanishes on their graphs
  std::optional<GridFunction> lower, upper;
  double barrier_scale = 0.0;
};

struct FlowOptions {
  double eps_space = 1e-6;
  double eps_convex = 1e-10;
  double cfl = 0.4;
  double dt_min = 1e-14;
  int grow_after = 10;
};

struct FlowState {
  GridFunction u;
  double t = 0.0;
  double dt = 0.0;       // step size to try next
  double dt_last = 0.0;  // last accepted
  std::vector<std::pair<double, double>> velocity_history;  // (t, sup |log K - fhat|)
  RampSpec ramp;
  double f0 = 1.0;
  FlowOptions opts;
  long accepted = 0, rejected = 0;
  int streak = 0;
};

namespace detail {

struct FlowNodes {
  std::vector<std::size_t> nodes;
  std::vector<double> logK, sqrt_q, trace_inv, min_eig;
  bool admissible = true;
};

inline FlowNodes flow_nodes(const GridFunction& u, double eps_space, double eps_convex) {
  const Grid& g = u.grid();
  FlowNodes d;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (g.is_boundary(idx)) continue;
    const Vec p = node_gradient(u, idx);
    const Mat A = node_hessian(u, idx);
    const NodeCurvature c = node_curvature(p, A, eps_space, eps_convex, true);
    const Vec ev = symmetric_eigenvalues(A);
    double tr = 0.0;
    for (int i = 0; i < ev.size(); ++i) tr += 1.0 / std::max(ev[i], eps_convex);
    d.nodes.push_back(idx);
    d.logK.push_back(std::log(c.K));
    d.sqrt_q.push_back(std::sqrt(c.q));
    d.trace_inv.push_back(tr);
    d.min_eig.push_back(c.min_eig);
    d.admissible = d.admissible && !c.space_clipped && !c.convex_clipped;
  }
  return d;
}

}  // namespace detail

// eta(x, u): boundary proximity times distance from the barrier graphs.
inline double ramp_eta(const FlowState& s, std::size_t idx, double u) {
  const Grid& g = s.u.grid();
  const RampSpec& r = s.ramp;
  // the first interior layer counts as "on the boundary", so the start is compatible there
  double e = 1.0 - smooth_step((g.layer(idx) - 1) * g.h() / r.eta_margin);
  if (e > 0.0 && r.lower && r.upper && r.barrier_scale > 0.0) {
    const double gap = std::min(u - (*r.lower)[idx], (*r.upper)[idx] - u);
    e *= smooth_step(gap / r.barrier_scale);
  }
  return e;
}

// fhat(x, u, t) = eta zeta(t / eps) (log K[u0] - log f0) + log f0
inline double ramp_fhat(const FlowState& s, std::size_t idx, double u, double t) {
  const double lf = std::log(s.f0);
  if (!s.ramp.enabled) return lf;
  const double z = ramp_zeta(t / s.ramp.epsilon);
  if (z == 0.0) return lf;
  return ramp_eta(s, idx, u) * z * (s.ramp.initial_log_K[idx] - lf) + lf;
}

// Initial state. The ramp freezes log K[u0]; barrier_scale is half the smallest distance of
// the boundary data from the barriers, so eta = 1 on the boundary graph.
inline FlowState make_flow_state(const GridFunction& u0, double f0, RampSpec ramp = {}, FlowOptions opts = {}) {
  require(f0 > 0.0, ErrorKind::InvalidInput, "f0 must be positive");
  require(ramp.epsilon > 0.0 && ramp.eta_margin > 0.0, ErrorKind::InvalidInput, "ramp parameters must be positive");
  FlowState s;
  s.u = u0;
  s.f0 = f0;
  s.opts = opts;
  const Grid& g = u0.grid();
  const auto d = detail::flow_nodes(u0, opts.eps_space, opts.eps_convex);
  require(d.admissible, ErrorKind::StepCollapse, "initial datum is not strictly convex and spacelike");
  ramp.initial_log_K = GridFunction(g, std::log(f0));
  for (std::size_t k = 0; k < d.nodes.size(); ++k) ramp.initial_log_K[d.nodes[k]] = d.logK[k];
  if (ramp.lower && ramp.upper) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.is_boundary(i)) m = std::min({m, u0[i] - (*ramp.lower)[i], (*ramp.upper)[i] - u0[i]});
    require(m > 0.0, ErrorKind::InvalidInput, "boundary data touches a barrier");
    ramp.barrier_scale = 0.5 * m;
  }
  s.ramp = std::move(ramp);
  double worst = 0.0;
  for (std::size_t k = 0; k < d.nodes.size(); ++k)
    worst = std::max(worst, d.sqrt_q[k] * d.trace_inv[k]);
  s.dt = opts.cfl * g.h() * g.h() / worst;
  double V = 0.0;
  for (std::size_t k = 0; k < d.nodes.size(); ++k)
    V = std::max(V, std::abs(d.logK[k] - ramp_fhat(s, d.nodes[k], u0[d.nodes[k]], 0.0)));
  s.velocity_history.emplace_back(0.0, V);
  return s;
}

// Normal-velocity field sqrt(1 - |Du|^2) (log K - fhat) at the current state.
inline GridFunction flow_velocity(const FlowState& s) {
  const auto d = detail::flow_nodes(s.u, s.opts.eps_space, s.opts.eps_convex);
  GridFunction v(s.u.grid(), 0.0);
  for (std::size_t k = 0; k < d.nodes.size(); ++k) {
    const std::size_t i = d.nodes[k];
    v[i] = d.sqrt_q[k] * (d.logK[k] - ramp_fhat(s, i, s.u[i], s.t));
  }
  return v;
}

struct StepResult {
  bool accepted = false;
  double V = 0.0;           // sup |log K - fhat| at the new state
  double dt_bound = 0.0;    // CFL bound at the new state
  double sup_log_error = 0.0;  // sup |log K - log f0| at the new state
};

namespace detail {

inline StepResult try_step(FlowState& s, double dt) {
  const Grid& g = s.u.grid();
  const auto d = flow_nodes(s.u, s.opts.eps_space, s.opts.eps_convex);
  GridFunction next = s.u;
  for (std::size_t k = 0; k < d.nodes.size(); ++k) {
    const std::size_t i = d.nodes[k];
    next[i] += dt * d.sqrt_q[k] * (d.logK[k] - ramp_fhat(s, i, s.u[i], s.t));
  }
  const auto nd = flow_nodes(next, s.opts.eps_space, s.opts.eps_convex);
  StepResult r;
  if (!nd.admissible) return r;
  r.accepted = true;
  s.u = std::move(next);
  s.t += dt;
  s.dt_last = dt;
  double worst = 0.0;
  const double lf = std::log(s.f0);
  for (std::size_t k = 0; k < nd.nodes.size(); ++k) {
    const std::size_t i = nd.nodes[k];
    r.V = std::max(r.V, std::abs(nd.logK[k] - ramp_fhat(s, i, s.u[i], s.t)));
    r.sup_log_error = std::max(r.sup_log_error, std::abs(nd.logK[k] - lf));
    worst = std::max(worst, nd.sqrt_q[k] * nd.trace_inv[k]);
  }
  r.dt_bound = s.opts.cfl * g.h() * g.h() / worst;
  s.velocity_history.emplace_back(s.t, r.V);
  return r;
}

}  // namespace detail

// One explicit step of u' = sqrt(1 - |Du|^2)(log K - fhat). A step that would leave the
// strictly convex, strictly spacelike cone is rejected and dt halved until dt_min.
inline StepResult step(FlowState& s, double dt) {
  require(dt > 0.0, ErrorKind::InvalidInput, "dt must be positive");
  while (true) {
    StepResult r = detail::try_step(s, dt);
    if (r.accepted) return r;
    ++s.rejected;
    s.streak = 0;
    dt *= 0.5;
    s.dt = dt;
    if (dt < s.opts.dt_min) throw Error(ErrorKind::StepCollapse, "time step collapsed; the flow left the admissible cone");
  }
}

struct DecayReport {
  bool converged = false;
  double final_sup_log_error = 0.0;
  double c2 = 0.0, c3 = 0.0, r_squared = 0.0;
  double pre_ramp_peak = 0.0;  // max V on [0, eps)
  double V_at_eps = 0.0;
  bool monotone_after_ramp = true;
  double worst_increase = 0.0;  // largest V(t_{k+1}) - V(t_k) after eps
  long steps = 0, rejected = 0;
  double t_final = 0.0, seconds = 0.0;
};

class FlowFailure : public Error {
 public:
  FlowFailure(ErrorKind k, const std::string& what, FlowState st, DecayReport rep)
      : Error(k, what), state(std::move(st)), report(rep) {}
  FlowState state;
  DecayReport report;
};

// least squares log V = log c2 - c3 t on t >= eps
inline DecayReport fit_decay(const FlowState& s, double slack = 1e-10) {
  DecayReport rep;
  const double eps = s.ramp.enabled ? s.ramp.epsilon : 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  long m = 0;
  double prev = std::numeric_limits<double>::quiet_NaN();
  bool have_eps = false;
  for (const auto& [t, V] : s.velocity_history) {
    if (t < eps) {
      rep.pre_ramp_peak = std::max(rep.pre_ramp_peak, V);
      continue;
    }
    if (!have_eps) {
      rep.V_at_eps = V;
      have_eps = true;
    }
    if (!std::isnan(prev)) rep.worst_increase = std::max(rep.worst_increase, V - prev);
    prev = V;
    if (V <= 0.0) continue;
    const double y = std::log(V);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    syy += y * y;
    ++m;
  }
  rep.monotone_after_ramp = rep.worst_increase <= slack;
  if (m >= 3) {
    const double cov = sxy - sx * sy / m, vx = sxx - sx * sx / m, vy = syy - sy * sy / m;
    const double slope = vx > 0 ? cov / vx : 0.0;
    rep.c3 = -slope;
    rep.c2 = std::exp((sy - slope * sx) / m);
    rep.r_squared = (vx > 0 && vy > 0) ? cov * cov / (vx * vy) : 0.0;
  }
  rep.t_final = s.t;
  rep.steps = s.accepted;
  rep.rejected = s.rejected;
  return rep;
}

// Advance until sup |log K - log f0| <= tol (after the ramp has switched off) or t >= t_max.
// observer(s) runs on the initial state, every observe_every accepted steps, and on the final state.
using FlowObserver = std::function<void(const FlowState&)>;

inline DecayReport run_to_steady(FlowState& s, double tol, double t_max, double wall_limit = 0.0,
                                 const FlowObserver& observer = {}, int observe_every = 200) {
  require(tol > 0.0, ErrorKind::InvalidInput, "tol must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const double ramp_end = s.ramp.enabled ? s.ramp.epsilon : 0.0;
  double bound = s.dt;
  double err = std::numeric_limits<double>::infinity();
  {
    const auto d = detail::flow_nodes(s.u, s.opts.eps_space, s.opts.eps_convex);
    err = 0.0;
    for (double lk : d.logK) err = std::max(err, std::abs(lk - std::log(s.f0)));
  }
  if (observer) observer(s);
  auto finish = [&](bool ok) {
    if (observer) observer(s);
    DecayReport rep = fit_decay(s);
    rep.converged = ok;
    rep.final_sup_log_error = err;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  };
  while (!(err <= tol && s.t >= ramp_end)) {
    if (s.t >= t_max) {
      auto rep = finish(false);
      throw FlowFailure(ErrorKind::Timeout, "flow did not reach the tolerance by t_max", s, rep);
    }
    if (wall_limit > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > wall_limit) {
      auto rep = finish(false);
      throw FlowFailure(ErrorKind::Timeout, "flow exceeded its wall-clock budget", s, rep);
    }
    double dt = std::min(s.dt, bound);
    // land on the ramp switch-off so V(eps) is recorded
    if (s.t < ramp_end && s.t + dt > ramp_end) dt = ramp_end - s.t;
    const StepResult r = step(s, dt);
    ++s.accepted;
    err = r.sup_log_error;
    bound = r.dt_bound;
    if (observer && s.accepted % observe_every == 0) observer(s);
    if (++s.streak >= s.opts.grow_after) {
      s.streak = 0;
      s.dt = std::min(2.0 * s.dt, bound);
    }
  }
  DecayReport rep = finish(true);
  if (s.t > ramp_end && rep.c3 <= 0.0 && s.velocity_history.size() > 3)
    throw FlowFailure(ErrorKind::NoDecay, "fitted decay rate is not positive", s, rep);
  return rep;
}

// Checkpoint: binary grid plus the (t, V) log as CSV.
inline void save_checkpoint(const FlowState& s, const std::string& stem) {
  s.u.save(stem + ".grid");
  std::ofstream os(stem + "_history.csv");
  require(static_cast<bool>(os), ErrorKind::Io, "cannot write checkpoint history");
  os.precision(17);
  os << "t,V\n";
  for (const auto& [t, V] : s.velocity_history) os << t << "," << V << "\n";
}

// Resume: restores u and the history; the ramp is rebuilt from `base` (same u0 and options).
inline FlowState load_checkpoint(const FlowState& base, const std::string& stem) {
  FlowState s = base;
  s.u = GridFunction::load(stem + ".grid");
  require(s.u.grid() == base.u.grid(), ErrorKind::Io, "checkpoint grid differs from the run");
  std::ifstream is(stem + "_history.csv");
  require(static_cast<bool>(is), ErrorKind::Io, "cannot read checkpoint history");
  std::string line;
  std::getline(is, line);
  s.velocity_history.clear();
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    double t, V;
    char comma;
    if (ls >> t >> comma >> V) s.velocity_history.emplace_back(t, V);
  }
  if (!s.velocity_history.empty()) s.t = s.velocity_history.back().first;
  return s;
}

struct FlowOrderingReport {
  std::vector<double> times, min_difference;
  double worst = std::numeric_limits<double>::infinity();
};

// Runs a and b on one shared step sequence; a.u >= b.u - tol at every checkpoint.
inline FlowOrderingReport parabolic_comparison(FlowState a, FlowState b, const std::vector<double>& checkpoints,
                                               double tol = 1e-8) {
  require(a.u.grid() == b.u.grid(), ErrorKind::InvalidInput, "flows live on different grids");
  FlowOrderingReport rep;
  auto check = [&]() {
    double m = std::numeric_limits<double>::infinity();
    std::size_t w = 0;
    for (std::size_t i = 0; i < a.u.size(); ++i)
      if (a.u[i] - b.u[i] < m) {
        m = a.u[i] - b.u[i];
        w = i;
      }
    rep.times.push_back(a.t);
    rep.min_difference.push_back(m);
    rep.worst = std::min(rep.worst, m);
    if (m < -tol) {
      std::ostringstream os;
      os << "a < b by " << -m << " at node " << w << ", t = " << a.t;
      throw Error(ErrorKind::OrderingViolated, os.str());
    }
  };
  check();
  double bound = std::min(a.dt, b.dt);
  for (double tc : checkpoints) {
    while (a.t < tc - 1e-15) {
      double dt = std::min(bound, tc - a.t);
      FlowState a2 = a, b2 = b;
      StepResult ra, rb;
      while (true) {
        ra = detail::try_step(a2, dt);
        rb = ra.accepted ? detail::try_step(b2, dt) : StepResult{};
        if (ra.accepted && rb.accepted) break;
        a2 = a;
        b2 = b;
        dt *= 0.5;
        if (dt < a.opts.dt_min) throw Error(ErrorKind::StepCollapse, "shared time step collapsed");
      }
      a = std::move(a2);
      b = std::move(b2);
      b.t = a.t;  // identical schedule
      bound = std::min(ra.dt_bound, rb.dt_bound);
    }
    check();
  }
  return rep;
}

}  // namespace mgc
