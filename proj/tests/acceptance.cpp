// Acceptance run: one PASS/FAIL line per criterion, followed by the measured values.
// Exit status is 0 once every criterion has produced a verdict; --strict turns any FAIL
// into exit status 1. --only k runs a single criterion.

#include "mgc/mgc.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace mgc;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { lines.push_back("     " + what); }
};

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double hyp(const Vec& x, double a = 1.0) { return std::sqrt(a * a + x.squaredNorm()); }

std::shared_ptr<const ProfileFunction> profile2() {
  static auto p = std::make_shared<const ProfileFunction>(solve_profile(2));
  return p;
}

// ---- 1 ----------------------------------------------------------------------------------

void profile_integrity(Verdict& v) {
  const ProfileFunction p = solve_profile(2);
  const auto inv = p.invariants();
  v.check(inv.max_residual <= 1e-9, "first-integral residual " + num(inv.max_residual) + " <= 1e-9");
  v.check(p(-40.0) < 1e-6, "f(-40) = " + num(p(-40.0)) + " < 1e-6");
  const double gap = std::abs(std::sqrt(1.0 + 1600.0) - p(40.0));
  v.check(gap < 1e-6, "|sqrt(1+t^2) - f(t)| at t = 40: " + num(gap) + " < 1e-6");
  v.note("closed-form asymptotics give 1/(6 t^3) = " + num(1.0 / (6.0 * 64000.0)) + " at t = 40");
  const double a = profile_initial_value(0.6, 2);
  v.check(std::abs(a - 0.75) <= 1e-12, "b = 0.6 -> a = " + num(a) + " (|a - 0.75| = " + num(std::abs(a - 0.75)) + ")");
}

// ---- 2 ----------------------------------------------------------------------------------

std::vector<double> hyperboloid_K_errors(double a, const std::vector<double>& hs) {
  std::vector<double> out;
  const double k = 1.0 / (a * a);
  for (double h : hs) {
    const Grid g(2, 2.0, h);
    const auto rep = gauss_curvature(sample(g, [a](const Vec& x) { return hyp(x, a); }));
    double e = 0.0;
    for (double K : rep.K) e = std::max(e, std::abs(K - k));
    out.push_back(e);
  }
  return out;
}

void operator_exactness(Verdict& v) {
  const std::vector<double> hs{0.1, 0.05, 0.025};
  const auto e1 = hyperboloid_K_errors(1.0, hs);
  double C = 0.0;
  bool literal = true;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    C = std::max(C, e1[k] / (hs[k] * hs[k]));
    literal = literal && e1[k] <= 0.5 * hs[k] * hs[k];
    v.note("unit hyperboloid h = " + num(hs[k]) + ": max |K - 1| = " + num(e1[k]) + ", err/h^2 = " + num(e1[k] / (hs[k] * hs[k])));
  }
  v.check(C < 0.55, "error constant " + num(C) + " at the 0.5 h^2 scale (< 0.55)");
  v.note(std::string("literal err <= 0.5 h^2 at every h: ") + (literal ? "yes" : "no"));
  for (std::size_t k = 1; k < hs.size(); ++k) {
    const double p = std::log2(e1[k - 1] / e1[k]);
    v.check(p >= 1.8, "order " + num(p) + " >= 1.8 (h " + num(hs[k - 1]) + " -> " + num(hs[k]) + ")");
  }
  const auto e4 = hyperboloid_K_errors(0.5, hs);
  for (std::size_t k = 0; k < hs.size(); ++k) v.note("sqrt(1/4 + |x|^2) h = " + num(hs[k]) + ": max |K - 4| = " + num(e4[k]));
  for (std::size_t k = 1; k < hs.size(); ++k) {
    const double p = std::log2(e4[k - 1] / e4[k]);
    v.check(p >= 1.8, "K = 4 order " + num(p) + " >= 1.8");
  }
}

// ---- 3 ----------------------------------------------------------------------------------

void elliptic_solver(Verdict& v) {
  std::vector<double> err;
  for (double h : {0.2, 0.1, 0.05}) {
    const Grid g(2, 2.0, h);
    const auto exact = sample(g, [](const Vec& x) { return hyp(x); });
    // convex start with the right boundary values and the wrong curvature; the boundary
    // reset leaves a kink, so the bowl stays shallow enough to keep the start spacelike
    const auto start = sample(g, [](const Vec& x) { return hyp(x) + 0.002 * (x.squaredNorm() - 8.0); });
    GridFunction s0 = start;
    s0.set_boundary_from(exact);
    const auto sol = solve_dirichlet(g, 1.0, s0);
    err.push_back(sup_distance(sol.u, exact));
    v.note("hyperboloid h = " + num(h) + ": " + std::to_string(sol.report.iterations) + " Newton steps, residual " +
           num(sol.report.final_residual) + ", max error " + num(err.back()));
  }
  for (std::size_t k = 1; k < err.size(); ++k)
    v.check(err[k - 1] / err[k] >= 3.5, "error ratio " + num(err[k - 1] / err[k]) + " >= 3.5");

  // n = 1: hyperbola sqrt(1 + x^2) has K = 1
  std::vector<double> e1;
  for (double h : {0.05, 0.025}) {
    const Grid g(1, 2.0, h);
    const auto exact = sample(g, [](const Vec& x) { return hyp(x); });
    GridFunction s0 = sample(g, [](const Vec& x) { return hyp(x) + 0.02 * (x.squaredNorm() - 4.0); });
    s0.set_boundary_from(exact);
    const auto sol = solve_dirichlet(g, 1.0, s0);
    v.check(sol.report.final_residual <= 1e-9,
            "n = 1 hyperbola h = " + num(h) + ": residual " + num(sol.report.final_residual) + " <= 1e-9");
    e1.push_back(sup_distance(sol.u, exact));
  }
  v.check(e1[0] / e1[1] >= 3.5, "n = 1 hyperbola error " + num(e1[1]) + ", ratio " + num(e1[0] / e1[1]) + " >= 3.5");
}

// ---- 4 ----------------------------------------------------------------------------------

void barrier_sandwich(Verdict& v) {
  const auto F = CapUnion::make({SphereCap(UnitVector(make_vec({1, 0})), pi / 2)});
  BarrierConfig c;
  c.k1 = 2.0;
  c.k2 = 0.5;
  const auto pair = build_barriers(F, c, profile2());
  const auto rep = inspect_barriers(pair, {10, 20, 40, 80});
  v.check(rep.ordered, "lower <= upper at every sampled point (min upper - lower " + num(rep.min_order_gap) + ")");
  std::string d;
  for (double x : rep.defect) d += num(x) + " ";
  v.check(rep.decreasing, "asymptotic defect strictly decreasing over R = 10, 20, 40, 80: " + d);
  v.check(rep.delta > 0.0, "compact gap delta = " + num(rep.delta) + " > 0 on |x| <= 5");
  v.check(rep.theta > 0.0, "spacelike margin theta = " + num(rep.theta) + " > 0 on |x| <= 5");
  v.check(rep.above_cone, "lower > V_F");
}

// ---- 5 (and the flow half of 8) -------------------------------------------------------

struct FlowRun {
  bool ran = false;
  std::optional<C2Monitor> c2;
  std::optional<VelocityMonitor> vel;
  std::optional<BarrierPair> pair;
  GridFunction elliptic;
};

FlowRun& flow_run() {
  static FlowRun r;
  return r;
}

const BarrierPair& wide_cap_pair() {
  static const BarrierPair p =
      build_barriers(CapUnion::make({SphereCap(UnitVector(make_vec({1, 0})), 0.9 * pi)}), {}, profile2());
  return p;
}

void flow_stability(Verdict& v) {
  FlowRun& fr = flow_run();
  const BarrierPair& pair = wide_cap_pair();
  fr.pair = pair;
  const Grid g(2, 4.0, 0.1);
  const auto bd = mollified_boundary(pair, g, 0.2);
  const auto bg = sample_barriers(pair, g);
  RampSpec ramp;
  ramp.lower = bg.lower;
  ramp.upper = bg.upper;
  FlowState s = make_flow_state(bd.data, 1.0, ramp);
  DiagnosticsConfig cfg;
  fr.c2.emplace(s.u, cfg);
  fr.vel.emplace(s, cfg);
  fr.ran = true;
  const auto rep = run_to_steady(s, 1e-7, 200.0, 0.0, [&](const FlowState& st) {
    fr.c2->record(st);
    fr.vel->record(st);
  });
  v.note("F = cap(e1, 0.9 pi), [-4,4]^2, h = 0.1, start (lower + upper)/2 with mollified barrier data");
  v.note(std::to_string(rep.steps) + " steps to t = " + num(rep.t_final) + ", " + std::to_string(rep.rejected) +
         " rejected; V peak before the ramp ends " + num(rep.pre_ramp_peak) + ", V(eps) = " + num(rep.V_at_eps));
  v.check(rep.converged && rep.final_sup_log_error <= 1e-6,
          "sup |log K - log f0| = " + num(rep.final_sup_log_error) + " <= 1e-6");
  v.check(rep.c3 > 0.0 && rep.r_squared >= 0.95,
          "decay fit c3 = " + num(rep.c3) + " > 0, c2 = " + num(rep.c2) + ", R^2 = " + num(rep.r_squared) + " >= 0.95");
  v.check(rep.monotone_after_ramp, "V non-increasing after the ramp (worst increase " + num(rep.worst_increase) + ")");
  NewtonOptions o;
  o.residual_tol = 1e-10;
  const auto sol = solve_dirichlet(g, 1.0, bd.data, o);
  fr.elliptic = sol.u;
  const double d = sup_distance(sol.u, s.u);
  v.check(d <= 1e-5, "terminal state vs elliptic solution: " + num(d) + " <= 1e-5");
}

// ---- 6 ----------------------------------------------------------------------------------

void comparison_principles(Verdict& v) {
  std::mt19937 rng(20240601);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const Grid g(2, 1.0, 0.1);
  int ok = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    // g1 >= g2 on the boundary, f1 <= f2  =>  u1 >= u2
    const double a = 0.9 + 0.4 * U(rng), cx = 0.1 * (U(rng) - 0.5), cy = 0.1 * (U(rng) - 0.5);
    const double lift = k % 4 == 0 ? 0.0 : 0.2 * U(rng), tilt = 0.2 * (U(rng) - 0.5);
    const double f1 = 0.7 + 0.6 * U(rng), f2 = k % 4 == 1 ? f1 : f1 * (1.0 + 0.5 * U(rng));
    auto b2 = [&](const Vec& x) { return hyp(x, a) + cx * x[0] + cy * x[1]; };
    auto b1 = [&](const Vec& x) { return b2(x) + lift * (1.0 + tilt * x[1]); };
    const auto u1 = solve_dirichlet(g, f1, sample(g, b1)).u;
    const auto u2 = solve_dirichlet(g, f2, sample(g, b2)).u;
    try {
      const auto r = comparison_check(u1, u2, 1e-8);
      worst = std::min(worst, r.min_difference);
      ++ok;
    } catch (const Error& e) {
      v.note(std::string("elliptic pair ") + std::to_string(k) + ": " + e.what());
    }
  }
  v.check(ok == 20, std::to_string(ok) + "/20 elliptic pairs ordered (min u1 - u2 = " + num(worst) + ")");

  int pok = 0;
  double pworst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 5; ++k) {
    const double a = 0.9 + 0.4 * U(rng), c = 0.1 * (U(rng) - 0.5), amp = 0.005 + 0.01 * U(rng);
    const double f0 = 0.7 + 0.6 * U(rng);
    auto top = [&](const Vec& x) { return hyp(x, a) + c * x[0]; };
    // same boundary values, interior pushed down by a small convex-preserving bump
    auto bottom = [&](const Vec& x) { return top(x) - amp * (1 - x[0] * x[0]) * (1 - x[1] * x[1]); };
    RampSpec off;
    off.enabled = false;
    const auto sa = make_flow_state(sample(g, top), f0, off);
    const auto sb = make_flow_state(sample(g, bottom), f0, off);
    try {
      const auto r = parabolic_comparison(sa, sb, {0.01, 0.05, 0.1, 0.2}, 1e-8);
      pworst = std::min(pworst, r.worst);
      ++pok;
    } catch (const Error& e) {
      v.note(std::string("parabolic pair ") + std::to_string(k) + ": " + e.what());
    }
  }
  v.check(pok == 5, std::to_string(pok) + "/5 parabolic pairs ordered up to t = 0.2 (min difference " + num(pworst) + ")");
}

// ---- 7 ----------------------------------------------------------------------------------

void gauss_map_image_check(Verdict& v) {
  const auto F = CapUnion::make({SphereCap(UnitVector(make_vec({1, 0})), pi / 2)});
  ExhaustionSchedule sch;
  sch.radii = {4, 8, 16};
  sch.spacings = {0.1};
  sch.compact_radius = 2.0;
  try {
    const auto rep = exhaust(F, 1.0, sch, ExhaustMode::Elliptic, profile2());
    std::string d;
    for (double x : rep.cauchy) d += num(x) + " ";
    v.check(rep.cauchy_decreasing, "Cauchy differences on |x| <= 2 decreasing: " + d);
    v.check(rep.inside_h_fraction >= 0.99, "fraction of gradients within h of the hull: " + num(rep.inside_h_fraction));
    v.check(rep.outside_3h == 0, std::to_string(rep.outside_3h) + " gradients farther than 3h from the hull");
  } catch (const SolveFailure& e) {
    v.check(false, std::string("exhaustion stopped: ") + e.what() + " (residual " + num(e.report.final_residual) +
                       " after " + std::to_string(e.report.iterations) + " Newton steps)");
    // what the first box gives on its own
    try {
      BarrierConfig bc;
      bc.k1 = 2.0;
      bc.k2 = 0.5;
      const auto pair = build_barriers(F, bc, profile2());
      StageReport st;
      const auto sol = solve_stage(pair, 1.0, 4.0, 0.1, sch.smoothing_radius, ExhaustMode::Elliptic, ExhaustOptions{}, st);
      const ConvexBody hull = klein_hull(F, 256);
      std::size_t in = 0, total = 0, far = 0;
      for (const auto& kp : gauss_map_image(sol.u)) {
        const double d = hull.distance(kp.coords);
        in += d <= 0.1;
        far += d > 0.3;
        ++total;
      }
      v.note("R = 4 alone: residual " + num(st.residual) + ", " + std::to_string(in) + "/" + std::to_string(total) +
             " gradients within h of the hull, " + std::to_string(far) + " beyond 3h");
    } catch (const Error& e2) {
      v.note(std::string("R = 4 alone also fails: ") + e2.what());
    }
  }
}

// ---- 8 ----------------------------------------------------------------------------------

void monitors(Verdict& v) {
  FlowRun& fr = flow_run();
  if (!fr.ran) {
    Verdict tmp;
    flow_stability(tmp);
  }
  const auto gb = diagnose_gradient_bound(fr.elliptic, *fr.pair);
  v.check(!gb.vacuous && gb.worst_ratio <= 1.05,
          "gradient bound on the converged solution: worst ratio " + num(gb.worst_ratio) + " <= 1.05 over " +
              std::to_string(gb.active_nodes) + " nodes (delta " + num(gb.delta) + ")");

  for (const auto& ser : fr.c2->series())
    v.note("C2 monitor beta = " + num(ser.beta) + ": initial " + num(ser.initial()) + ", running max " +
           num(ser.running_max()) + ", growth " + num(ser.growth()));
  const auto& p = fr.c2->primary();
  v.check(p.growth() <= 1.05, "C2 monitor (beta = 5) stays within 1.05x its initial value: growth " + num(p.growth()));

  const auto& vs = fr.vel->series();
  v.check(vs.running_max() <= fr.vel->bound(), "velocity monitor: initial " + num(vs.initial()) + ", running max " +
                                                   num(vs.running_max()) + ", bound " + num(fr.vel->bound()));

  const ProfileFunction& prof = *profile2();
  auto u = [&](const Vec& x) { return eval_standard(prof, x); };
  auto cone = [](const Vec& x) { return x[0] > 0.0 ? x.norm() : std::abs(x[1]); };
  try {
    const auto bc = diagnose_boost_closeness(u, cone, 2, 1.0, {10, 20, 40, 80}, 7);
    std::string d;
    for (double x : bc.sup_over_phi) d += num(x) + " ";
    v.check(bc.decreasing, "boost closeness (7 rapidities in [-1, 1]) decreasing over R = 10, 20, 40, 80: " + d);
  } catch (const Error& e) {
    v.check(false, std::string("boost closeness: ") + e.what());
  }
}

struct Criterion {
  int id;
  const char* name;
  double budget;  // seconds
  std::function<void(Verdict&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--strict")) strict = true;
    else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) only = std::atoi(argv[++i]);
    else {
      std::cerr << "usage: acceptance [--strict] [--only k]\n";
      return 2;
    }
  }

  const std::vector<Criterion> all{
      {1, "profile integrity", 5, profile_integrity},
      {2, "operator exactness", 10, operator_exactness},
      {3, "elliptic solver", 60, elliptic_solver},
      {4, "barrier sandwich", 120, barrier_sandwich},
      {5, "flow stability", 600, flow_stability},
      {6, "comparison principles", 300, comparison_principles},
      {7, "Gauss-map image", 900, gauss_map_image_check},
      {8, "monitors", 600, monitors},
  };

  int failed = 0;
  std::vector<std::string> summary;
  for (const auto& c : all) {
    if (only && c.id != only) continue;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.check(secs < c.budget, "runtime " + num(secs) + " s < " + num(c.budget) + " s");
    const std::string line = std::string(v.pass ? "PASS" : "FAIL") + "  criterion " + std::to_string(c.id) + " (" + c.name + ")";
    std::cout << line << "\n";
    for (const auto& l : v.lines) std::cout << "        " << l << "\n";
    std::cout.flush();
    summary.push_back(line);
    failed += !v.pass;
  }
  std::cout << "\nsummary\n";
  for (const auto& s : summary) std::cout << "  " << s << "\n";
  std::cout << failed << " of " << summary.size() << " criteria failed\n";
  return strict && failed ? 1 : 0;
}
