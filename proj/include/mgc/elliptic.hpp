#pragma once

#include "mgc/core.hpp"
#include "mgc/discrete_gauss.hpp"
#include "mgc/grid.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mgc {

enum class Merit { Sup, L2 };

struct NewtonOptions {
  int max_iterations = 80;
  double residual_tol = 1e-9;
  double shrink = 0.5;
  double min_step = 1.0 / 1024;
  double armijo = 1e-4;
  double eps_space = 1e-6;
  double eps_convex = 1e-10;
  Merit merit = Merit::Sup;
  std::optional<GridFunction> warm_start;
  // optional sandwich check after the solve
  const GridFunction* lower = nullptr;
  const GridFunction* upper = nullptr;
  double sandwich_tol = 1e-8;
};

struct SolveReport {
  int iterations = 0;
  double final_residual = std::numeric_limits<double>::infinity();
  int clipping_events = 0;
  std::vector<double> residual_history, step_history;
  double min_hessian_eigenvalue = 0.0, max_gradient_norm = 0.0;
  bool sandwich_checked = false;
  int below_lower = 0, above_upper = 0;
  double lower_margin = 0.0, upper_margin = 0.0;  // min(u - lower), min(upper - u)
  double seconds = 0.0;
};

struct Solution {
  GridFunction u;
  SolveReport report;
};

class SolveFailure : public Error {
 public:
  SolveFailure(ErrorKind k, const std::string& what, SolveReport rep, GridFunction last)
      : Error(k, what), report(std::move(rep)), iterate(std::move(last)) {}
  SolveReport report;
  GridFunction iterate;
};

// Per-node log residual G = log det D^2u - (n+2)/2 log(1 - |Du|^2) - log f, with the
// eigenvalue floor and gradient clip applied when they bite.
struct LogResidual {
  std::vector<double> G;  // indexed by interior position
  int clips = 0;
  bool admissible = true;  // no clip needed anywhere
  double min_eig = std::numeric_limits<double>::infinity();
  double max_grad = 0.0;

  double sup() const {
    double m = 0.0;
    for (double g : G) m = std::max(m, std::abs(g));
    return m;
  }
  double l2() const {
    double s = 0.0;
    for (double g : G) s += g * g;
    return G.empty() ? 0.0 : std::sqrt(s / G.size());
  }
  double merit(Merit m) const { return m == Merit::Sup ? sup() : l2(); }
};

inline LogResidual log_residual(const GridFunction& u, double f, double eps_space = 1e-6, double eps_convex = 1e-10) {
  const Grid& g = u.grid();
  const double logf = std::log(f);
  LogResidual r;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (g.is_boundary(idx)) continue;
    const Vec p = node_gradient(u, idx);
    const NodeCurvature c = node_curvature(p, node_hessian(u, idx), eps_space, eps_convex, true);
    r.G.push_back(std::log(c.K) - logf);
    const bool clipped = c.space_clipped || c.convex_clipped;
    r.clips += clipped;
    r.admissible = r.admissible && !clipped;
    r.min_eig = std::min(r.min_eig, c.min_eig);
    r.max_grad = std::max(r.max_grad, p.norm());
  }
  return r;
}

// Interior numbering used by the linear algebra.
struct InteriorMap {
  std::vector<std::size_t> nodes;
  std::vector<long> col;  // grid index -> column, -1 on the boundary
  explicit InteriorMap(const Grid& g) : col(g.size(), -1) {
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!g.is_boundary(i)) {
        col[i] = static_cast<long>(nodes.size());
        nodes.push_back(i);
      }
  }
};

// Derivative of G along v: tr(A^{-1} D^2 v) + (n+2) (Du . Dv) / (1 - |Du|^2), assembled on
// the 3^n stencil over interior unknowns (Dirichlet columns dropped). Floored eigenvalues
// and clipped gradients are held fixed, matching log_residual.
inline Eigen::SparseMatrix<double> newton_linearization(const GridFunction& u, double f, double eps_space = 1e-6,
                                                        double eps_convex = 1e-10) {
  (void)f;  // log f is additive; the linearization does not see it
  const Grid& g = u.grid();
  const int n = g.dim();
  const double h = g.h(), h2 = h * h;
  InteriorMap im(g);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(im.nodes.size() * (1 + 4 * n + 4 * n * (n - 1) / 2));
  for (std::size_t row = 0; row < im.nodes.size(); ++row) {
    const std::size_t idx = im.nodes[row];
    const Vec p = node_gradient(u, idx);
    const Mat A = node_hessian(u, idx);
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    Vec lam = es.eigenvalues();
    for (int i = 0; i < n; ++i) lam[i] = std::max(lam[i], eps_convex);
    const Mat C = es.eigenvectors() * lam.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    require(C.allFinite(), ErrorKind::SingularHessian, "nodal Hessian singular beyond the safeguard");
    double q = 1.0 - p.squaredNorm();
    const bool clipped = q < eps_space;
    const Vec w = clipped ? Vec::Zero(n) : Vec((n + 2) * p / q);
    auto add = [&](std::size_t j, double v) {
      if (im.col[j] >= 0 && v != 0.0) trip.emplace_back(static_cast<int>(row), static_cast<int>(im.col[j]), v);
    };
    double diag = 0.0;
    for (int a = 0; a < n; ++a) {
      const std::size_t sa = g.stride(a);
      diag -= 2.0 * C(a, a) / h2;
      add(idx + sa, C(a, a) / h2 + w[a] / (2 * h));
      add(idx - sa, C(a, a) / h2 - w[a] / (2 * h));
      for (int b = a + 1; b < n; ++b) {
        const std::size_t sb = g.stride(b);
        const double c = 2.0 * C(a, b) / (4.0 * h2);
        add(idx + sa + sb, c);
        add(idx - sa - sb, c);
        add(idx + sa - sb, -c);
        add(idx - sa + sb, -c);
      }
    }
    add(idx, diag);
  }
  Eigen::SparseMatrix<double> J(static_cast<int>(im.nodes.size()), static_cast<int>(im.nodes.size()));
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

// Damped Newton on the log residual. The interior of `boundary` (or opts.warm_start) is the
// first iterate; its boundary nodes are the Dirichlet data.
inline Solution solve_dirichlet(const Grid& grid, double f, const GridFunction& boundary, const NewtonOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  require(f > 0.0, ErrorKind::InvalidInput, "prescribed curvature must be positive");
  require(boundary.grid() == grid, ErrorKind::InvalidInput, "boundary data lives on another grid");
  require(opts.residual_tol > 0.0 && opts.shrink > 0.0 && opts.shrink < 1.0, ErrorKind::InvalidInput,
          "bad Newton options");

  // spacelike compatibility of the data: neighbouring boundary quotients below one
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.is_boundary(i)) continue;
    for (int d = 0; d < grid.dim(); ++d) {
      const std::size_t j = i + grid.stride(d);
      if (grid.coord_index(i, d) + 1 < grid.nodes_per_axis() && grid.is_boundary(j))
        require(std::abs(boundary[j] - boundary[i]) < grid.h(), ErrorKind::NotSpacelikeCompatible,
                "boundary data has a difference quotient >= 1");
    }
  }

  GridFunction u = opts.warm_start ? *opts.warm_start : boundary;
  require(u.grid() == grid, ErrorKind::InvalidInput, "warm start lives on another grid");
  u.set_boundary_from(boundary);

  SolveReport rep;
  InteriorMap im(grid);
  LogResidual res = log_residual(u, f, opts.eps_space, opts.eps_convex);
  rep.residual_history.push_back(res.sup());
  rep.clipping_events += res.clips;

  auto fail = [&](ErrorKind k, const std::string& what) {
    rep.final_residual = res.sup();
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    throw SolveFailure(k, what, rep, u);
  };

  while (!(res.admissible && res.sup() <= opts.residual_tol)) {
    if (rep.iterations >= opts.max_iterations) fail(ErrorKind::MaxIterations, "Newton iteration budget exhausted");
    ++rep.iterations;
    const Eigen::SparseMatrix<double> J = newton_linearization(u, f, opts.eps_space, opts.eps_convex);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(J);
    lu.factorize(J);
    if (lu.info() != Eigen::Success) fail(ErrorKind::SingularHessian, "linearization could not be factorized");
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(res.G.size()));
    for (std::size_t k = 0; k < res.G.size(); ++k) rhs[k] = -res.G[k];
    const Eigen::VectorXd du = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !du.allFinite()) fail(ErrorKind::SingularHessian, "linear solve failed");

    const double m0 = res.merit(opts.merit);
    double t = 1.0;
    bool accepted = false;
    while (t >= opts.min_step) {
      GridFunction trial = u;
      for (std::size_t k = 0; k < im.nodes.size(); ++k) trial[im.nodes[k]] += t * du[k];
      LogResidual rt = log_residual(trial, f, opts.eps_space, opts.eps_convex);
      const bool keeps_cone = rt.admissible || !res.admissible;
      if (keeps_cone && rt.merit(opts.merit) <= (1.0 - opts.armijo * t) * m0) {
        u = std::move(trial);
        res = std::move(rt);
        accepted = true;
        break;
      }
      t *= opts.shrink;
    }
    if (!accepted) fail(ErrorKind::LineSearchStalled, "damping reached the minimum step");
    rep.step_history.push_back(t);
    rep.residual_history.push_back(res.sup());
    rep.clipping_events += res.clips;
  }

  rep.final_residual = res.sup();
  rep.min_hessian_eigenvalue = res.min_eig;
  rep.max_gradient_norm = res.max_grad;
  if (opts.lower || opts.upper) {
    rep.sandwich_checked = true;
    rep.lower_margin = rep.upper_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (opts.lower) {
        const double d = u[i] - (*opts.lower)[i];
        rep.lower_margin = std::min(rep.lower_margin, d);
        rep.below_lower += d < -opts.sandwich_tol;
      }
      if (opts.upper) {
        const double d = (*opts.upper)[i] - u[i];
        rep.upper_margin = std::min(rep.upper_margin, d);
        rep.above_upper += d < -opts.sandwich_tol;
      }
    }
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(u), rep};
}

struct OrderingReport {
  double min_difference = std::numeric_limits<double>::infinity();
  std::size_t witness = 0;
  bool ordered = true;
};

// u >= v - tol at every node.
inline OrderingReport comparison_check(const GridFunction& u, const GridFunction& v, double tol = 1e-8) {
  require(u.grid() == v.grid(), ErrorKind::InvalidInput, "grids differ");
  OrderingReport r;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    if (d < r.min_difference) {
      r.min_difference = d;
      r.witness = i;
    }
  }
  r.ordered = r.min_difference >= -tol;
  if (!r.ordered) {
    const Vec x = u.grid().point(r.witness);
    std::string where;
    for (int d = 0; d < x.size(); ++d) where += (d ? "," : "") + std::to_string(x[d]);
    throw Error(ErrorKind::OrderingViolated, "u < v at node (" + where + "), diff " + std::to_string(r.min_difference));
  }
  return r;
}

}  // namespace mgc
