#include "mgc/barriers.hpp"
#include "mgc/elliptic.hpp"
#include "mgc/flow.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace mgc;

namespace {

double hyp(const Vec& x, double a = 1.0) { return std::sqrt(a * a + x.squaredNorm()); }

double sup_abs(const GridFunction& v) {
  double m = 0.0;
  for (double x : v.values()) m = std::max(m, std::abs(x));
  return m;
}

RampSpec no_ramp() {
  RampSpec r;
  r.enabled = false;
  return r;
}

}  // namespace

TEST(Ramp, SmoothStepShape) {
  EXPECT_EQ(smooth_step(-0.5), 0.0);
  EXPECT_EQ(smooth_step(0.0), 0.0);
  EXPECT_EQ(smooth_step(1.0), 1.0);
  EXPECT_NEAR(smooth_step(0.5), 0.5, 1e-15);
  double prev = 0.0;
  for (double s = 0.01; s < 1.0; s += 0.01) {
    EXPECT_NEAR(smooth_step(s) + smooth_step(1.0 - s), 1.0, 1e-14);
    EXPECT_GE(smooth_step(s), prev);
    prev = smooth_step(s);
  }
  EXPECT_EQ(ramp_zeta(0.0), 1.0);
  EXPECT_EQ(ramp_zeta(1.0 / 3.0), 1.0);
  EXPECT_EQ(ramp_zeta(2.0 / 3.0 + 1e-12), 0.0);
}

TEST(Flow, DiscreteSolutionIsStationary) {
  const Grid g(2, 1.0, 0.1);
  NewtonOptions o;
  o.residual_tol = 1e-12;
  const auto sol = solve_dirichlet(g, 1.0, sample(g, [](const Vec& x) { return hyp(x); }), o);
  const auto s = make_flow_state(sol.u, 1.0, no_ramp());
  EXPECT_LE(sup_abs(flow_velocity(s)), 1e-8);
}

TEST(Flow, TooCurvedSurfaceMovesUp) {
  // K = 4 > f0 = 1 everywhere: the normal velocity is positive
  const Grid g(2, 0.5, 0.05);
  const auto u0 = sample(g, [](const Vec& x) { return hyp(x, 0.5); });
  auto s = make_flow_state(u0, 1.0, no_ramp());
  for (std::size_t i : g.interior()) EXPECT_GT(flow_velocity(s)[i], 0.0);
  for (int k = 0; k < 20; ++k) step(s, s.dt);
  for (std::size_t i : g.interior()) EXPECT_GT(s.u[i], u0[i]);
  for (std::size_t i : g.boundary()) EXPECT_EQ(s.u[i], u0[i]);
}

TEST(Flow, RampIsCompatibleAtTheStart) {
  const Grid g(2, 1.0, 0.1);
  const auto u0 = sample(g, [](const Vec& x) { return hyp(x, 0.7) + 0.1 * x[1]; });
  const auto s = make_flow_state(u0, 1.0);
  const auto v = flow_velocity(s);
  for (std::size_t i : g.interior())
    if (g.layer(i) == 1) { EXPECT_EQ(v[i], 0.0); }
  EXPECT_GT(sup_abs(v), 0.1);  // deep interior sees the full log K - log f0
  // once the ramp is off, fhat is log f0 everywhere
  FlowState late = s;
  late.t = 0.7 * s.ramp.epsilon;
  for (std::size_t i : g.interior()) EXPECT_DOUBLE_EQ(ramp_fhat(late, i, late.u[i], late.t), 0.0);
}

TEST(Flow, ConvergesToTheEllipticSolution) {
  const Grid g(2, 1.0, 0.1);
  // K = 1 start, target 1.2 with the same boundary values
  const auto u0 = sample(g, [](const Vec& x) { return hyp(x) + 0.1 * x[0]; });
  auto s = make_flow_state(u0, 1.2);
  const auto rep = run_to_steady(s, 1e-7, 50.0);
  EXPECT_TRUE(rep.converged);
  EXPECT_GT(rep.c3, 0.0);
  EXPECT_GT(rep.r_squared, 0.9);
  NewtonOptions o;
  o.residual_tol = 1e-10;
  const auto sol = solve_dirichlet(g, 1.2, u0, o);
  EXPECT_LT(sup_distance(sol.u, s.u), 1e-6);
}

TEST(Flow, ComparisonOnSharedSchedule) {
  const Grid g(2, 1.0, 0.1);
  const auto a = sample(g, [](const Vec& x) { return hyp(x); });
  const auto s = make_flow_state(a, 1.5, no_ramp());
  const auto same = parabolic_comparison(s, s, {0.01, 0.02});
  EXPECT_EQ(same.worst, 0.0);
  // lower the interior by a small convex-preserving bump
  const auto b = sample(g, [](const Vec& x) {
    const double w = (1 - x[0] * x[0]) * (1 - x[1] * x[1]);
    return hyp(x) - 0.01 * w;
  });
  const auto sb = make_flow_state(b, 1.5, no_ramp());
  const auto rep = parabolic_comparison(s, sb, {0.005, 0.01, 0.02});
  EXPECT_GE(rep.worst, -1e-8);
  EXPECT_EQ(rep.times.size(), 4u);
  EXPECT_THROW(parabolic_comparison(sb, s, {0.005}), Error);
}

TEST(Flow, StaysBetweenBarriers) {
  auto profile = std::make_shared<const ProfileFunction>(solve_profile(2));
  const auto F = CapUnion::make({SphereCap(UnitVector(make_vec({1, 0})), 0.9 * pi)});
  const auto pair = build_barriers(F, {}, profile);
  const Grid g(2, 2.0, 0.2);
  const auto bd = mollified_boundary(pair, g, 0.4);
  const auto bg = sample_barriers(pair, g);
  RampSpec r;
  r.lower = bg.lower;
  r.upper = bg.upper;
  auto s = make_flow_state(bd.data, 1.0, r);
  const auto rep = run_to_steady(s, 1e-6, 100.0);
  EXPECT_TRUE(rep.converged);
  EXPECT_TRUE(rep.monotone_after_ramp);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_GT(s.u[i], bg.lower[i]);
    EXPECT_LT(s.u[i], bg.upper[i]);
  }
}

TEST(Flow, CheckpointRoundTrip) {
  const Grid g(2, 1.0, 0.1);
  auto s = make_flow_state(sample(g, [](const Vec& x) { return hyp(x, 0.8); }), 1.0, no_ramp());
  for (int k = 0; k < 30; ++k) step(s, s.dt);
  const auto stem = (std::filesystem::temp_directory_path() / "mgc_flow_ckpt").string();
  save_checkpoint(s, stem);
  const auto base = make_flow_state(sample(g, [](const Vec& x) { return hyp(x, 0.8); }), 1.0, no_ramp());
  const auto r = load_checkpoint(base, stem);
  EXPECT_EQ(r.u.values(), s.u.values());
  ASSERT_EQ(r.velocity_history.size(), s.velocity_history.size());
  EXPECT_DOUBLE_EQ(r.t, s.t);
  std::filesystem::remove(stem + ".grid");
  std::filesystem::remove(stem + "_history.csv");
  EXPECT_THROW(load_checkpoint(base, stem), Error);
}

TEST(Flow, RejectsInadmissibleStart) {
  const Grid g(2, 1.0, 0.1);
  try {
    make_flow_state(sample(g, [](const Vec& x) { return 0.1 * (x[0] * x[0] - x[1] * x[1]); }), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StepCollapse);
  }
  EXPECT_THROW(make_flow_state(sample(g, [](const Vec& x) { return hyp(x); }), 0.0), Error);
}

TEST(Flow, TimeoutCarriesState) {
  const Grid g(2, 1.0, 0.1);
  auto s = make_flow_state(sample(g, [](const Vec& x) { return hyp(x, 0.6); }), 1.0, no_ramp());
  try {
    run_to_steady(s, 1e-9, 1e-3);
    FAIL();
  } catch (const FlowFailure& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Timeout);
    EXPECT_GE(e.state.t, 1e-3);
    EXPECT_FALSE(e.report.converged);
  }
}

TEST(Flow, CflBoundKeepsStepsAccepted) {
  const Grid g(2, 1.0, 0.1);
  auto s = make_flow_state(sample(g, [](const Vec& x) { return hyp(x, 0.8); }), 1.0, no_ramp());
  const auto rep = run_to_steady(s, 1e-6, 20.0);
  EXPECT_EQ(rep.rejected, 0);
  // velocity history starts at t = 0 and is time-ordered
  EXPECT_EQ(s.velocity_history.front().first, 0.0);
  for (std::size_t k = 1; k < s.velocity_history.size(); ++k)
    EXPECT_GT(s.velocity_history[k].first, s.velocity_history[k - 1].first);
}
