#pragma once

#include "mgc/core.hpp"
#include "mgc/grid.hpp"
#include "mgc/sphere.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mgc {

// First derivative along axis d: central in the interior, one-sided second order on the
// boundary faces.
inline double partial(const GridFunction& u, std::size_t idx, int d) {
  const Grid& g = u.grid();
  const std::size_t s = g.stride(d);
  const int i = g.coord_index(idx, d), m = g.nodes_per_axis() - 1;
  const double h = g.h();
  if (i == 0) return (-3.0 * u[idx] + 4.0 * u[idx + s] - u[idx + 2 * s]) / (2 * h);
  if (i == m) return (3.0 * u[idx] - 4.0 * u[idx - s] + u[idx - 2 * s]) / (2 * h);
  return (u[idx + s] - u[idx - s]) / (2 * h);
}

inline Vec node_gradient(const GridFunction& u, std::size_t idx) {
  const int n = u.grid().dim();
  Vec p(n);
  for (int d = 0; d < n; ++d) p[d] = partial(u, idx, d);
  return p;
}

// Central second and cross differences; interior nodes only.
inline Mat node_hessian(const GridFunction& u, std::size_t idx) {
  const Grid& g = u.grid();
  const int n = g.dim();
  const double h2 = g.h() * g.h();
  Mat A(n, n);
  for (int a = 0; a < n; ++a) {
    const std::size_t sa = g.stride(a);
    A(a, a) = (u[idx + sa] - 2.0 * u[idx] + u[idx - sa]) / h2;
    for (int b = a + 1; b < n; ++b) {
      const std::size_t sb = g.stride(b);
      A(a, b) = A(b, a) =
          (u[idx + sa + sb] - u[idx + sa - sb] - u[idx - sa + sb] + u[idx - sa - sb]) / (4.0 * h2);
    }
  }
  return A;
}

inline std::vector<Vec> gradient(const GridFunction& u) {
  std::vector<Vec> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = node_gradient(u, i);
  return out;
}

// Boundary entries are zero matrices.
inline std::vector<Mat> hessian(const GridFunction& u) {
  const int n = u.grid().dim();
  std::vector<Mat> out(u.size(), Mat::Zero(n, n));
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!u.grid().is_boundary(i)) out[i] = node_hessian(u, i);
  return out;
}

struct CurvatureReport {
  std::vector<std::size_t> nodes;  // interior node indices, parallel to the arrays below
  std::vector<double> K, H, v_tilde, min_eigenvalue;
  std::vector<Vec> principal_curvatures;
  double gradient_norm_max = 0.0;
  double min_hessian_eigenvalue = std::numeric_limits<double>::infinity();
  double eps_space = 0.0, eps_convex = 0.0;
  bool safeguard = false;
  int space_clips = 0, convex_clips = 0;

  bool clipped() const { return space_clips + convex_clips > 0; }
  double max_abs_log_error(double f) const {
    double m = 0.0;
    for (double k : K) m = std::max(m, std::abs(std::log(k) - std::log(f)));
    return m;
  }
};

// Ascending eigenvalues; closed form up to 2x2, which is the flow's hot path.
inline Vec symmetric_eigenvalues(const Mat& A) {
  const auto n = A.rows();
  if (n == 1) return A.col(0);
  if (n == 2) {
    const double m = 0.5 * (A(0, 0) + A(1, 1));
    const double r = std::hypot(0.5 * (A(0, 0) - A(1, 1)), A(0, 1));
    Vec ev(2);
    ev << m - r, m + r;
    return ev;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

struct NodeCurvature {
  double K = 0.0, q = 1.0, min_eig = 0.0;
  bool space_clipped = false, convex_clipped = false;
};

// det A / (1 - |p|^2)^{(n+2)/2}. The determinant is always taken as the product of
// eigenvalues so that safeguarded and plain evaluations agree bitwise when no clip fires.
inline NodeCurvature node_curvature(const Vec& p, const Mat& A, double eps_space, double eps_convex, bool safeguard) {
  const int n = static_cast<int>(p.size());
  NodeCurvature r;
  r.q = 1.0 - p.squaredNorm();
  if (safeguard && r.q < eps_space) {
    r.q = eps_space;
    r.space_clipped = true;
  }
  const Vec ev = symmetric_eigenvalues(A);
  r.min_eig = ev.minCoeff();
  double det = 1.0;
  for (int i = 0; i < n; ++i) {
    double l = ev[i];
    if (safeguard && l < eps_convex) {
      l = eps_convex;
      r.convex_clipped = true;
    }
    det *= l;
  }
  r.K = det / std::pow(r.q, 0.5 * (n + 2));
  return r;
}

inline CurvatureReport gauss_curvature(const GridFunction& u, double eps_space = 1e-6, double eps_convex = 1e-10,
                                       bool safeguard = false, bool strict = false) {
  require(eps_space > 0.0 && eps_convex > 0.0, ErrorKind::InvalidInput, "safeguard epsilons must be positive");
  const Grid& g = u.grid();
  const int n = g.dim();
  CurvatureReport rep;
  rep.eps_space = eps_space;
  rep.eps_convex = eps_convex;
  rep.safeguard = safeguard;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (g.is_boundary(idx)) continue;
    const Vec p = node_gradient(u, idx);
    const Mat A = node_hessian(u, idx);
    const double pn = p.norm();
    rep.gradient_norm_max = std::max(rep.gradient_norm_max, pn);
    require(safeguard || pn < 1.0, ErrorKind::NotSpacelike, "|Du| >= 1 at an interior node");
    const NodeCurvature c = node_curvature(p, A, eps_space, eps_convex, safeguard);
    require(!strict || c.min_eig > 0.0, ErrorKind::NotConvex, "Hessian not positive definite at an interior node");
    rep.space_clips += c.space_clipped;
    rep.convex_clips += c.convex_clipped;
    rep.min_hessian_eigenvalue = std::min(rep.min_hessian_eigenvalue, c.min_eig);
    rep.nodes.push_back(idx);
    rep.K.push_back(c.K);
    rep.min_eigenvalue.push_back(c.min_eig);
    rep.v_tilde.push_back(1.0 / std::sqrt(c.q));

    // principal curvatures: eigenvalues of h = A / sqrt(q) relative to g = I - p p^T
    Vec kappa = Vec::Constant(n, std::numeric_limits<double>::quiet_NaN());
    if (pn < 1.0) {
      const Mat gm = Mat::Identity(n, n) - p * p.transpose();
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(A / std::sqrt(c.q), gm, Eigen::EigenvaluesOnly);
      kappa = ges.eigenvalues();
    }
    rep.principal_curvatures.push_back(kappa);
    rep.H.push_back(kappa.sum());
  }
  return rep;
}

// Largest eigenvalue of h relative to g at one node; the C^2 monitor's curvature factor.
inline double max_principal_curvature(const Vec& p, const Mat& A) {
  const int n = static_cast<int>(p.size());
  const double q = 1.0 - p.squaredNorm();
  require(q > 0.0, ErrorKind::NotSpacelike, "|Du| >= 1");
  const Mat gm = Mat::Identity(n, n) - p * p.transpose();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(A / std::sqrt(q), gm, Eigen::EigenvaluesOnly);
  return ges.eigenvalues().maxCoeff();
}

struct BlowDownReport {
  std::vector<double> radii, quotients, secants;
  double limit = 0.0, spread = 0.0;
};

// u(r d) / r for growing r. The secant slopes (u(r_{k+1} d) - u(r_k d)) / (r_{k+1} - r_k)
// are the first-order Richardson extrapolants of the quotients; their last value is the
// estimate and the last increment the diagnostic.
template <class U>
BlowDownReport blow_down(U&& u, const UnitVector& direction, const std::vector<double>& radii) {
  require(radii.size() >= 3, ErrorKind::InvalidInput, "blow-down needs at least three radii");
  BlowDownReport rep;
  rep.radii = radii;
  std::vector<double> vals;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    require(radii[k] > 0.0 && (k == 0 || radii[k] > radii[k - 1]), ErrorKind::InvalidInput,
            "radii must be positive and increasing");
    const Vec x = radii[k] * direction.coords();
    vals.push_back(u(x));
    rep.quotients.push_back(vals.back() / radii[k]);
  }
  for (std::size_t k = 0; k + 1 < radii.size(); ++k)
    rep.secants.push_back((vals[k + 1] - vals[k]) / (radii[k + 1] - radii[k]));
  const std::size_t m = rep.secants.size();
  rep.limit = rep.secants.back();
  rep.spread = std::abs(rep.secants[m - 1] - rep.secants[m - 2]);
  for (std::size_t k = 2; k < m; ++k) {
    const double prev = std::abs(rep.secants[k - 1] - rep.secants[k - 2]);
    const double cur = std::abs(rep.secants[k] - rep.secants[k - 1]);
    require(cur <= prev * (1.0 + 1e-6) + 1e-12, ErrorKind::NoConvergence, "blow-down estimates diverge");
  }
  return rep;
}

inline std::vector<KleinPoint> gauss_map_image(const GridFunction& u) {
  std::vector<KleinPoint> out;
  for (std::size_t idx = 0; idx < u.size(); ++idx) {
    if (u.grid().is_boundary(idx)) continue;
    const Vec p = node_gradient(u, idx);
    require(p.norm() < 1.0, ErrorKind::NotSpacelike, "|Du| >= 1 at an interior node");
    out.emplace_back(p);
  }
  return out;
}

}  // namespace mgc
