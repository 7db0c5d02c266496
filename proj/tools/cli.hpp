#pragma once
// Command-line front end. Kept in a header so the tests can drive cli_main directly.

#include "mgc/mgc.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace mgc::cli {

enum Exit { Ok = 0, VerifyFailed = 1, Usage = 2 };

// "c1,c2[,c3]:radius", radius in radians or with a trailing "pi"
inline SphereCap parse_cap(const std::string& s) {
  const auto colon = s.find(':');
  require(colon != std::string::npos, ErrorKind::InvalidInput, "cap must look like c1,c2:radius");
  std::vector<double> c;
  std::stringstream ss(s.substr(0, colon));
  std::string tok;
  while (std::getline(ss, tok, ',')) c.push_back(std::stod(tok));
  std::string r = s.substr(colon + 1);
  double scale = 1.0;
  if (r.size() > 2 && r.substr(r.size() - 2) == "pi") {
    scale = pi;
    r = r.substr(0, r.size() - 2);
  }
  require(!c.empty() && c.size() <= 3, ErrorKind::InvalidInput, "cap centre needs 1..3 coordinates");
  Vec v(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) v[static_cast<Eigen::Index>(i)] = c[i];
  require(v.norm() > 0.0, ErrorKind::InvalidInput, "cap centre must be nonzero");
  return SphereCap(UnitVector(Vec(v / v.norm())), scale * std::stod(r));
}

inline CapUnion parse_caps(const std::vector<std::string>& specs) {
  require(!specs.empty(), ErrorKind::InvalidInput, "at least one --cap is required");
  std::vector<SphereCap> caps;
  for (const auto& s : specs) caps.push_back(parse_cap(s));
  return CapUnion::make(caps);
}

struct Common {
  std::string out = ".";
  std::string prefix;
};

inline std::string path(const Common& c, const std::string& name) {
  std::filesystem::create_directories(c.out);
  return (std::filesystem::path(c.out) / (c.prefix + name)).string();
}

inline void write_report(const Common& c, const std::string& name, const Report& r) {
  std::ofstream os(path(c, name));
  require(static_cast<bool>(os), ErrorKind::Io, "cannot write " + name);
  r.write(os);
  r.write(std::cout);
}

inline void write_grid(const Common& c, const std::string& stem, const GridFunction& u) {
  u.save(path(c, stem + ".grid"));
  std::ofstream os(path(c, stem + ".csv"));
  require(static_cast<bool>(os), ErrorKind::Io, "cannot write " + stem + ".csv");
  u.write_csv(os);
}

struct ProblemArgs {
  std::vector<std::string> caps;
  std::string boundary = "barriers";  // or hyperboloid
  int n = 2;
  double R = 4.0, h = 0.1, f = 1.0;
  double k1 = 0.0, k2 = 0.0;  // 0: 2f and f/2
  double smoothing = 0.2;
  double b = 0.6;
};

struct Problem {
  Grid grid;
  GridFunction data;  // boundary values; interior is a convex first iterate
  std::optional<BarrierPair> pair;
  std::optional<BarrierGrids> barriers;
  std::shared_ptr<const ProfileFunction> profile;
};

inline Problem build_problem(const ProblemArgs& a) {
  Problem p;
  if (a.boundary == "hyperboloid") {
    p.grid = Grid(a.n, a.R, a.h);
    const double c = std::pow(a.f, -2.0 / a.n);
    p.data = sample(p.grid, [&](const Vec& x) { return std::sqrt(c + x.squaredNorm()); });
    return p;
  }
  require(a.boundary == "barriers", ErrorKind::InvalidInput, "boundary must be hyperboloid or barriers");
  const CapUnion F = parse_caps(a.caps);
  p.grid = Grid(F.dim(), a.R, a.h);
  p.profile = std::make_shared<const ProfileFunction>(solve_profile(F.dim(), 100.0, 1e-9, a.b));
  BarrierConfig bc;
  bc.k1 = a.k1 > 0.0 ? a.k1 : 2.0 * a.f;
  bc.k2 = a.k2 > 0.0 ? a.k2 : 0.5 * a.f;
  p.pair = build_barriers(F, bc, p.profile);
  p.barriers = sample_barriers(*p.pair, p.grid);
  try {
    p.data = mollified_boundary(*p.pair, p.grid, a.smoothing).data;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::GapTooSmall) throw;
    std::cerr << "barrier gap too small for smoothing; using unsmoothed data\n";
    p.data = mollified_boundary(*p.pair, p.grid, 0.0).data;
  }
  return p;
}

inline void add_problem_options(CLI::App* app, ProblemArgs& a) {
  app->add_option("--cap", a.caps, "cap as c1,c2:radius (radius in radians, or with suffix pi); repeatable");
  app->add_option("--boundary", a.boundary, "hyperboloid | barriers")->check(CLI::IsMember({"hyperboloid", "barriers"}));
  app->add_option("--n", a.n, "dimension for hyperboloid data")->check(CLI::Range(1, 3));
  app->add_option("--R", a.R, "box half-width");
  app->add_option("--h", a.h, "grid spacing");
  app->add_option("--f,--f0", a.f, "prescribed curvature");
  app->add_option("--k1", a.k1, "lower-barrier curvature (default 2f)");
  app->add_option("--k2", a.k2, "upper-barrier curvature (default f/2)");
  app->add_option("--smoothing", a.smoothing, "mollification radius for boundary data");
  app->add_option("--b", a.b, "profile parameter b");
}

inline void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "output directory");
  app->add_option("--prefix", c.prefix, "file name prefix");
}

// ---- subcommands --------------------------------------------------------------------------

inline int run_semitrough(const Common& c, int n, double b, double t_span, double tol) {
  const auto t0 = std::chrono::steady_clock::now();
  ProfileFunction p = solve_profile(n, t_span, tol, b);
  const auto inv = p.invariants();
  Report r;
  r.set("n", n);
  r.set("b", p.b());
  r.set("a", p.a());
  r.set("lambda", p.lambda());
  r.set("samples", p.t().size());
  r.set("max_residual", inv.max_residual);
  r.set("max_relative_residual", inv.max_relative_residual);
  r.set("f_at_tmin", inv.f_at_tmin);
  r.set("tail_gap_at_tmax", inv.tail_gap_at_tmax);
  r.set("positive", inv.positive);
  r.set("convex", inv.convex);
  r.set("slope_in_range", inv.slope_in_range);
  std::ofstream os(path(c, "profile.csv"));
  require(static_cast<bool>(os), ErrorKind::Io, "cannot write profile.csv");
  p.write_csv(os);
  write_report(c, "semitrough_report.txt", r);
  std::cerr << "seconds " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << "\n";
  return inv.positive && inv.convex && inv.slope_in_range ? Ok : VerifyFailed;
}

inline int run_barriers(const Common& c, const ProblemArgs& a, const std::vector<double>& radii) {
  ProblemArgs pa = a;
  pa.boundary = "barriers";
  const CapUnion F = parse_caps(pa.caps);
  auto profile = std::make_shared<const ProfileFunction>(solve_profile(F.dim(), 100.0, 1e-9, pa.b));
  BarrierConfig bc;
  bc.k1 = pa.k1 > 0.0 ? pa.k1 : 2.0 * pa.f;
  bc.k2 = pa.k2 > 0.0 ? pa.k2 : 0.5 * pa.f;
  const BarrierPair pair = build_barriers(F, bc, profile);
  const BarrierReport br = inspect_barriers(pair, radii);
  Report r;
  r.set("caps", F.caps().size());
  r.set("delta0", F.delta0());
  r.set("lower_members", pair.lower_family().size());
  r.set("upper_members", pair.upper_family().size());
  r.set("radii", br.radii);
  r.set("defect", br.defect);
  r.set("theta", br.theta);
  r.set("delta", br.delta);
  r.set("min_order_gap", br.min_order_gap);
  r.set("ordered", br.ordered);
  r.set("above_cone", br.above_cone);
  r.set("decreasing", br.decreasing);
  r.set("ok", br.ok());
  if (!br.ok()) r.set("failure", br.failure);
  const Grid g(F.dim(), pa.R, pa.h);
  std::ofstream os(path(c, "barriers.csv"));
  require(static_cast<bool>(os), ErrorKind::Io, "cannot write barriers.csv");
  write_barrier_csv(os, sample_barriers(pair, g));
  write_report(c, "barriers_report.txt", r);
  return br.ok() ? Ok : VerifyFailed;
}

inline int run_solve(const Common& c, const ProblemArgs& a, double tol) {
  Problem p = build_problem(a);
  NewtonOptions o;
  o.residual_tol = tol;
  if (p.barriers) {
    o.lower = &p.barriers->lower;
    o.upper = &p.barriers->upper;
  }
  Report r;
  try {
    Solution s = solve_dirichlet(p.grid, a.f, p.data, o);
    r.set("converged", true);
    r.set("iterations", s.report.iterations);
    r.set("residual", s.report.final_residual);
    r.set("clipping_events", s.report.clipping_events);
    r.set("min_hessian_eigenvalue", s.report.min_hessian_eigenvalue);
    r.set("max_gradient_norm", s.report.max_gradient_norm);
    if (s.report.sandwich_checked) {
      r.set("lower_margin", s.report.lower_margin);
      r.set("upper_margin", s.report.upper_margin);
    }
    if (a.boundary == "hyperboloid") {
      const double cc = std::pow(a.f, -2.0 / a.n);
      r.set("hyperboloid_error", sup_distance(s.u, sample(p.grid, [&](const Vec& x) {
                                                return std::sqrt(cc + x.squaredNorm());
                                              })));
    }
    write_grid(c, "solution", s.u);
    write_report(c, "solve_report.txt", r);
    std::cerr << "seconds " << s.report.seconds << "\n";
    return Ok;
  } catch (const SolveFailure& e) {
    r.set("converged", false);
    r.set("error", std::string(e.what()));
    r.set("iterations", e.report.iterations);
    r.set("residual", e.report.final_residual);
    write_report(c, "solve_report.txt", r);
    return VerifyFailed;
  }
}

struct FlowArgs {
  double epsilon = 0.1, eta_margin = 0.5, tol = 1e-6, t_max = 100.0;
  bool ramp = true;
  std::string checkpoint, resume;
  double perturb = 0.0;  // amplitude of a bump subtracted from the first iterate
};

inline int run_flow(const Common& c, const ProblemArgs& a, const FlowArgs& fa) {
  Problem p = build_problem(a);
  GridFunction u0 = p.data;
  if (fa.perturb != 0.0) {
    for (std::size_t i = 0; i < u0.size(); ++i) {
      const double s = 1.0 - p.grid.point(i).squaredNorm() / (0.25 * a.R * a.R);
      if (s > 0.0 && !p.grid.is_boundary(i)) u0[i] -= fa.perturb * s * s * s;
    }
  }
  RampSpec ramp;
  ramp.enabled = fa.ramp;
  ramp.epsilon = fa.epsilon;
  ramp.eta_margin = fa.eta_margin;
  if (p.barriers) {
    ramp.lower = p.barriers->lower;
    ramp.upper = p.barriers->upper;
  }
  FlowState s = make_flow_state(u0, a.f, ramp);
  if (!fa.resume.empty()) s = load_checkpoint(s, fa.resume);
  Report r;
  int code = Ok;
  DecayReport dr;
  try {
    dr = run_to_steady(s, fa.tol, fa.t_max);
  } catch (const FlowFailure& e) {
    dr = e.report;
    s = e.state;
    r.set("error", std::string(e.what()));
    code = VerifyFailed;
  }
  r.set("converged", dr.converged);
  r.set("t_final", dr.t_final);
  r.set("steps", dr.steps);
  r.set("rejected", dr.rejected);
  r.set("sup_log_error", dr.final_sup_log_error);
  r.set("c2", dr.c2);
  r.set("c3", dr.c3);
  r.set("r_squared", dr.r_squared);
  r.set("pre_ramp_peak", dr.pre_ramp_peak);
  r.set("V_at_epsilon", dr.V_at_eps);
  r.set("monotone_after_ramp", dr.monotone_after_ramp);
  r.set("worst_increase", dr.worst_increase);
  if (!fa.checkpoint.empty()) save_checkpoint(s, path(c, fa.checkpoint));
  {
    std::ofstream os(path(c, "velocity_history.csv"));
    require(static_cast<bool>(os), ErrorKind::Io, "cannot write velocity_history.csv");
    os.precision(17);
    os << "t,V\n";
    for (const auto& [t, V] : s.velocity_history) os << t << "," << V << "\n";
  }
  write_grid(c, "flow_final", s.u);
  write_report(c, "flow_report.txt", r);
  std::cerr << "seconds " << dr.seconds << "\n";
  if (code == Ok && (!dr.monotone_after_ramp || dr.c3 <= 0.0)) code = VerifyFailed;
  return code;
}

struct ExhaustArgs {
  std::vector<std::string> caps;
  std::vector<double> radii{4, 8, 16};
  std::vector<double> spacings{0.1};
  double compact = 2.0, f0 = 1.0, smoothing = 0.2, b = 0.6;
  std::string mode = "elliptic";
};

inline int run_exhaust(const Common& c, const ExhaustArgs& a) {
  const CapUnion F = parse_caps(a.caps);
  auto profile = std::make_shared<const ProfileFunction>(solve_profile(F.dim(), 100.0, 1e-9, a.b));
  ExhaustionSchedule sch;
  sch.radii = a.radii;
  sch.spacings = a.spacings;
  sch.compact_radius = a.compact;
  sch.smoothing_radius = a.smoothing;
  Report r;
  r.set("radii", a.radii);
  r.set("mode", a.mode);
  try {
    const ExhaustReport rep =
        exhaust(F, a.f0, sch, a.mode == "flow" ? ExhaustMode::Flow : ExhaustMode::Elliptic, profile);
    for (std::size_t j = 0; j < rep.stages.size(); ++j) {
      const auto& st = rep.stages[j];
      const std::string k = "stage" + std::to_string(j) + ".";
      r.set(k + "R", st.R);
      r.set(k + "h", st.h);
      r.set(k + "smoothing", st.smoothing_radius);
      r.set(k + "iterations", st.iterations);
      r.set(k + "residual", st.residual);
      r.set(k + "lower_margin", st.lower_margin);
      r.set(k + "upper_margin", st.upper_margin);
      write_grid(c, "exhaust_R" + Report::fmt(st.R), rep.solutions[j]);
    }
    r.set("cauchy", rep.cauchy);
    r.set("cauchy_decreasing", rep.cauchy_decreasing);
    r.set("gauss_points", rep.gauss_points);
    r.set("inside_h_fraction", rep.inside_h_fraction);
    r.set("outside_3h", rep.outside_3h);
    r.set("max_hull_distance", rep.max_hull_distance);
    r.set("blow_down_max_error", rep.blow_down_max_error);
    r.set("blow_down_ok", rep.blow_down_ok);
    const bool ok = rep.cauchy_decreasing && rep.inside_h_fraction >= 0.99 && rep.outside_3h == 0 && rep.blow_down_ok;
    r.set("ok", ok);
    write_report(c, "exhaust_report.txt", r);
    return ok ? Ok : VerifyFailed;
  } catch (const SolveFailure& e) {
    r.set("ok", false);
    r.set("error", std::string(e.what()));
    write_report(c, "exhaust_report.txt", r);
    return VerifyFailed;
  }
}

struct DiagnoseArgs {
  double lambda = 0.5, beta = 5.0, phi0 = 1.0, tol = 1e-6, t_max = 100.0;
  std::vector<double> slope;
  std::vector<double> radii{10, 20, 40, 80};
  bool flow = true;
};

inline int run_diagnose(const Common& c, const ProblemArgs& a, const DiagnoseArgs& d) {
  ProblemArgs pa = a;
  pa.boundary = "barriers";
  Problem p = build_problem(pa);
  DiagnosticsConfig cfg;
  cfg.lambda_shrink = d.lambda;
  cfg.beta = d.beta;
  if (!d.slope.empty()) {
    cfg.affine_slope = Vec(static_cast<Eigen::Index>(d.slope.size()));
    for (std::size_t i = 0; i < d.slope.size(); ++i) cfg.affine_slope[static_cast<Eigen::Index>(i)] = d.slope[i];
  }
  Report r;
  bool ok = true;
  NewtonOptions o;
  o.lower = &p.barriers->lower;
  o.upper = &p.barriers->upper;
  const Solution sol = solve_dirichlet(p.grid, pa.f, p.data, o);
  try {
    const auto gb = diagnose_gradient_bound(sol.u, *p.pair, cfg);
    r.set("gradient.worst_ratio", gb.worst_ratio);
    r.set("gradient.delta", gb.delta);
    r.set("gradient.active_nodes", gb.active_nodes);
    r.set("gradient.vacuous", gb.vacuous);
  } catch (const Error& e) {
    ok = false;
    r.set("gradient.error", std::string(e.what()));
  }
  if (d.flow) {
    RampSpec ramp;
    ramp.lower = p.barriers->lower;
    ramp.upper = p.barriers->upper;
    FlowState s = make_flow_state(p.data, pa.f, ramp);
    C2Monitor c2(s.u, cfg);
    std::optional<VelocityMonitor> vm;
    if (p.grid.dim() == 2) vm.emplace(s, cfg);
    run_to_steady(s, d.tol, d.t_max, 0.0, [&](const FlowState& st) {
      c2.record(st);
      if (vm) vm->record(st);
    });
    for (const auto& ser : c2.series()) {
      const std::string k = "c2.beta" + Report::fmt(ser.beta) + ".";
      r.set(k + "initial", ser.initial());
      r.set(k + "running_max", ser.running_max());
      r.set(k + "growth", ser.growth());
    }
    try {
      c2.check();
      r.set("c2.ok", true);
    } catch (const Error& e) {
      ok = false;
      r.set("c2.ok", false);
    }
    if (vm) {
      r.set("velocity.initial", vm->series().initial());
      r.set("velocity.running_max", vm->series().running_max());
      r.set("velocity.bound", vm->bound());
      try {
        vm->check();
        r.set("velocity.ok", true);
      } catch (const Error&) {
        ok = false;
        r.set("velocity.ok", false);
      }
    }
  }
  {
    // standard semitrough against the cone of the half-sphere it is asymptotic to
    const ProfileFunction& prof = *p.profile;
    auto u = [&](const Vec& x) { return eval_standard(prof, x); };
    auto v = [](const Vec& x) {
      const double side = x.tail(x.size() - 1).norm();
      return x[0] > 0.0 ? x.norm() : side;
    };
    try {
      const auto bc = diagnose_boost_closeness(u, v, p.grid.dim(), d.phi0, d.radii);
      r.set("boost.radii", bc.radii);
      r.set("boost.sup_over_phi", bc.sup_over_phi);
      r.set("boost.decreasing", bc.decreasing);
    } catch (const Error& e) {
      ok = false;
      r.set("boost.error", std::string(e.what()));
    }
  }
  r.set("ok", ok);
  write_report(c, "diagnose_report.txt", r);
  return ok ? Ok : VerifyFailed;
}

// 0 success, 1 verification failure, 2 usage error
inline int cli_main(int argc, char** argv) {
  CLI::App app{"constant Gauss curvature spacelike graphs: profiles, barriers, solvers, flows"};
  app.set_help_flag("--help", "print help");  // -h would clash with the grid spacing
  app.set_config("--config", "", "INI/TOML config; [subcommand] sections, flags override");
  app.require_subcommand(1);
  app.fallthrough();  // lets "exhaust --config f" reach the top-level option
  Common common;

  int st_n = 2;
  double st_b = 0.6, st_span = 100.0, st_tol = 1e-9;
  auto* st = app.add_subcommand("semitrough", "solve the profile ODE and export it");
  add_common(st, common);
  st->add_option("--n", st_n, "dimension")->check(CLI::Range(1, 3));
  st->add_option("--b", st_b, "profile parameter b");
  st->add_option("--t-span", st_span, "integration half-range");
  st->add_option("--tol", st_tol, "residual tolerance");

  ProblemArgs bar_args;
  std::vector<double> bar_radii{10, 20, 40, 80};
  auto* bar = app.add_subcommand("barriers", "build and verify the barrier pair");
  add_common(bar, common);
  add_problem_options(bar, bar_args);
  bar->add_option("--radii", bar_radii, "radii for the asymptotic defect");

  ProblemArgs solve_args;
  solve_args.boundary = "hyperboloid";
  double solve_tol = 1e-9;
  auto* sol = app.add_subcommand("solve", "elliptic Dirichlet problem on a box");
  add_common(sol, common);
  add_problem_options(sol, solve_args);
  sol->add_option("--tol", solve_tol, "Newton residual tolerance");

  ProblemArgs flow_args;
  FlowArgs fa;
  auto* flow = app.add_subcommand("flow", "log Gauss curvature flow to steady state");
  add_common(flow, common);
  add_problem_options(flow, flow_args);
  flow->add_option("--epsilon", fa.epsilon, "ramp duration");
  flow->add_option("--eta-margin", fa.eta_margin, "ramp cut-off distance");
  flow->add_option("--tol", fa.tol, "target sup |log K - log f0|");
  flow->add_option("--t-max", fa.t_max, "time budget");
  flow->add_flag("!--no-ramp", fa.ramp, "switch the compatibility ramp off");
  flow->add_option("--checkpoint", fa.checkpoint, "write a checkpoint with this stem");
  flow->add_option("--resume", fa.resume, "resume from a checkpoint stem");
  flow->add_option("--perturb", fa.perturb, "bump amplitude subtracted from the start");

  ExhaustArgs ea;
  auto* ex = app.add_subcommand("exhaust", "solve on growing boxes");
  add_common(ex, common);
  ex->add_option("--cap", ea.caps, "cap as c1,c2:radius; repeatable");
  ex->add_option("--radii", ea.radii, "box half-widths");
  ex->add_option("--h", ea.spacings, "grid spacing (one, or one per radius)");
  ex->add_option("--compact", ea.compact, "radius of the compact for Cauchy differences");
  ex->add_option("--f0", ea.f0, "prescribed curvature");
  ex->add_option("--smoothing", ea.smoothing, "mollification radius");
  ex->add_option("--mode", ea.mode, "elliptic | flow")->check(CLI::IsMember({"elliptic", "flow"}));
  ex->add_option("--b", ea.b, "profile parameter b");

  ProblemArgs diag_args;
  DiagnoseArgs da;
  auto* dg = app.add_subcommand("diagnose", "gradient bound, C2 and velocity monitors, boost closeness");
  add_common(dg, common);
  add_problem_options(dg, diag_args);
  dg->add_option("--lambda", da.lambda, "shrink factor for psi")->check(CLI::Range(0.0, 1.0));
  dg->add_option("--beta", da.beta, "C2 monitor weight");
  dg->add_option("--slope", da.slope, "slope of the affine cut-off");
  dg->add_option("--phi0", da.phi0, "largest rapidity");
  dg->add_option("--radii", da.radii, "radii for boost closeness");
  dg->add_option("--tol", da.tol, "flow tolerance");
  dg->add_option("--t-max", da.t_max, "flow time budget");
  dg->add_flag("!--no-flow", da.flow, "skip the flow monitors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return Usage;
  }

  try {
    if (*st) return run_semitrough(common, st_n, st_b, st_span, st_tol);
    if (*bar) return run_barriers(common, bar_args, bar_radii);
    if (*sol) return run_solve(common, solve_args, solve_tol);
    if (*flow) return run_flow(common, flow_args, fa);
    if (*ex) return run_exhaust(common, ea);
    if (*dg) return run_diagnose(common, diag_args, da);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == ErrorKind::InvalidInput ? Usage : VerifyFailed;
  } catch (const std::invalid_argument& e) {
    std::cerr << "bad number: " << e.what() << "\n";
    return Usage;
  } catch (const std::filesystem::filesystem_error& e) {
    // unusable --out, usually a path that exists as a file
    std::cerr << e.what() << "\n";
    return Usage;
  }
  return Usage;
}

}  // namespace mgc::cli
