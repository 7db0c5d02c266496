#include "mgc/elliptic.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mgc;

namespace {

double hyp(const Vec& x, double a = 1.0) { return std::sqrt(a * a + x.squaredNorm()); }

// a convex spacelike start whose curvature is not the target one
GridFunction start(const Grid& g, std::function<double(const Vec&)> fn) { return sample(g, fn); }

double hyperboloid_solve_error(double h) {
  const Grid g(2, 1.0, h);
  const auto bd = sample(g, [](const Vec& x) { return hyp(x); });
  const auto sol = solve_dirichlet(g, 1.0, bd);
  return sup_distance(sol.u, bd);
}

}  // namespace

TEST(Elliptic, RecoversHyperboloidAtSecondOrder) {
  const double e1 = hyperboloid_solve_error(0.1), e2 = hyperboloid_solve_error(0.05);
  EXPECT_LT(e1, 5e-3);
  EXPECT_GT(e1 / e2, 3.3);
  EXPECT_LT(e1 / e2, 4.7);
}

TEST(Elliptic, HyperbolaInOneDimension) {
  // n = 1: K = u'' / (1 - u'^2)^{3/2}; the hyperbola sqrt(1 + x^2) has K = 1
  double prev = 0.0;
  for (double h : {0.05, 0.025}) {
    const Grid g(1, 2.0, h);
    const auto bd = sample(g, [](const Vec& x) { return hyp(x); });
    GridFunction s0 = start(g, [](const Vec& x) { return hyp(x) + 0.02 * (x.squaredNorm() - 4.0); });
    const auto sol = solve_dirichlet(g, 1.0, s0);
    EXPECT_LE(sol.report.final_residual, 1e-9);
    const double err = sup_distance(sol.u, bd);
    if (prev > 0.0) { EXPECT_GT(prev / err, 3.3); }
    prev = err;
  }
}

TEST(Elliptic, ConvergesQuadratically) {
  const Grid g(2, 1.0, 0.1);
  auto bd = [](const Vec& x) { return hyp(x, 0.7) + 0.1 * x[0]; };
  const auto sol = solve_dirichlet(g, 1.5, start(g, bd));
  const auto& r = sol.report.residual_history;
  ASSERT_GE(r.size(), 3u);
  EXPECT_LE(sol.report.final_residual, 1e-9);
  // last full steps: e_{k+1} <= C e_k^2
  const std::size_t m = r.size();
  if (r[m - 2] < 1e-2) { EXPECT_LT(r[m - 1], 50.0 * r[m - 2] * r[m - 2] + 1e-13); }
  EXPECT_DOUBLE_EQ(sol.report.step_history.back(), 1.0);
  EXPECT_GT(sol.report.min_hessian_eigenvalue, 0.0);
  EXPECT_LT(sol.report.max_gradient_norm, 1.0);
}

TEST(Elliptic, JacobianMatchesFiniteDifferences) {
  for (int n = 1; n <= 3; ++n) {
    const Grid g(n, 1.0, n == 3 ? 0.25 : 0.2);
    const auto u = sample(g, [](const Vec& x) { return hyp(x, 0.8) + 0.1 * x[0] + 0.05 * x.squaredNorm(); });
    const auto J = Eigen::MatrixXd(newton_linearization(u, 1.0));
    InteriorMap im(g);
    const auto G0 = log_residual(u, 1.0).G;
    const double e = 1e-6;
    for (std::size_t k = 0; k < im.nodes.size(); ++k) {
      GridFunction up = u, um = u;
      up[im.nodes[k]] += e;
      um[im.nodes[k]] -= e;
      const auto Gp = log_residual(up, 1.0).G, Gm = log_residual(um, 1.0).G;
      for (std::size_t r = 0; r < G0.size(); ++r)
        EXPECT_NEAR(J(static_cast<long>(r), static_cast<long>(k)), (Gp[r] - Gm[r]) / (2 * e), 1e-5 * (1 + std::abs(J(r, k))));
    }
  }
}

TEST(Elliptic, ComparisonPrinciple) {
  // larger curvature sits lower; larger boundary data sits higher
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> U(-0.2, 0.2);
  const Grid g(2, 1.0, 0.1);
  for (int trial = 0; trial < 4; ++trial) {
    const double a = U(rng), b = U(rng), lift = 0.1 + std::abs(U(rng));
    auto bd = [&](const Vec& x) { return hyp(x) + a * x[0] + b * x[1]; };
    auto bd_hi = [&](const Vec& x) { return bd(x) + lift * (1 + 0.5 * x[0]) * 0.5; };
    const auto lo = solve_dirichlet(g, 1.0, start(g, bd));
    const auto hi_f = solve_dirichlet(g, 1.5, start(g, bd));
    const auto hi_bd = solve_dirichlet(g, 1.0, start(g, bd_hi));
    EXPECT_NO_THROW(comparison_check(lo.u, hi_f.u));
    EXPECT_NO_THROW(comparison_check(hi_bd.u, lo.u));
    EXPECT_THROW(comparison_check(hi_f.u, lo.u), Error);
  }
}

TEST(Elliptic, SandwichReport) {
  const Grid g(2, 1.0, 0.1);
  const auto bd = sample(g, [](const Vec& x) { return hyp(x); });
  const auto below = sample(g, [](const Vec& x) { return x.norm(); });
  const auto above = sample(g, [](const Vec& x) { return hyp(x) + 1.0; });
  NewtonOptions o;
  o.lower = &below;
  o.upper = &above;
  const auto sol = solve_dirichlet(g, 1.0, bd, o);
  EXPECT_TRUE(sol.report.sandwich_checked);
  EXPECT_EQ(sol.report.below_lower + sol.report.above_upper, 0);
  EXPECT_GT(sol.report.lower_margin, 0.0);
}

TEST(Elliptic, RejectsTimelikeData) {
  const Grid g(2, 1.0, 0.1);
  try {
    solve_dirichlet(g, 1.0, sample(g, [](const Vec& x) { return 1.5 * x[0]; }));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotSpacelikeCompatible);
  }
  EXPECT_THROW(solve_dirichlet(g, -1.0, GridFunction(g, 0.0)), Error);
}

TEST(Elliptic, FailureCarriesIterate) {
  const Grid g(2, 1.0, 0.1);
  NewtonOptions o;
  o.max_iterations = 1;
  try {
    solve_dirichlet(g, 1.0, start(g, [](const Vec& x) { return hyp(x, 0.5); }), o);
    FAIL();
  } catch (const SolveFailure& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MaxIterations);
    EXPECT_EQ(e.report.iterations, 1);
    EXPECT_TRUE(e.iterate.grid() == g);
  }
}

TEST(Elliptic, WarmStartFromSolutionTakesNoSteps) {
  const Grid g(2, 1.0, 0.1);
  const auto bd = sample(g, [](const Vec& x) { return hyp(x); });
  auto sol = solve_dirichlet(g, 1.0, bd);
  NewtonOptions o;
  o.warm_start = sol.u;
  EXPECT_EQ(solve_dirichlet(g, 1.0, bd, o).report.iterations, 0);
}
