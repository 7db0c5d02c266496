#pragma once

#include "mgc/core.hpp"
#include "mgc/grid.hpp"
#include "mgc/semitrough.hpp"
#include "mgc/sphere.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace mgc {

struct BarrierConfig {
  double k1 = 2.0;
  double k2 = 0.5;
  int ball_count = 32;
  double verify_radius = 5.0;
  // slack for lower <= upper; far out both barriers agree with V_F below the profile table error
  double order_tol = 1e-9;
  // Drop family members dominated by another member: z_{k,B'} <= z_{k,B} when B' is inside B.
  bool prune = true;
};

class BarrierPair {
 public:
  BarrierPair(CapUnion F, BarrierConfig cfg, std::vector<Semitrough> lower, std::vector<Semitrough> upper)
      : F_(std::move(F)), cfg_(cfg), lower_(std::move(lower)), upper_(std::move(upper)) {}

  const CapUnion& F() const { return F_; }
  const BarrierConfig& config() const { return cfg_; }
  const std::vector<Semitrough>& lower_family() const { return lower_; }
  const std::vector<Semitrough>& upper_family() const { return upper_; }
  int dim() const { return F_.dim(); }

  double lower(const Vec& x) const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& z : lower_) m = std::max(m, z(x));
    return m;
  }
  double upper(const Vec& x) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& z : upper_) m = std::min(m, z(x));
    return m;
  }
  // gradient of the active member
  ValueGrad lower_with_gradient(const Vec& x) const {
    ValueGrad best;
    best.value = -std::numeric_limits<double>::infinity();
    for (const auto& z : lower_) {
      auto r = z.eval_with_gradient(x);
      if (r.value > best.value) best = r;
    }
    return best;
  }
  ValueGrad upper_with_gradient(const Vec& x) const {
    ValueGrad best;
    best.value = std::numeric_limits<double>::infinity();
    for (const auto& z : upper_) {
      auto r = z.eval_with_gradient(x);
      if (r.value < best.value) best = r;
    }
    return best;
  }
  double cone(const Vec& x) const { return support_function(F_, x); }

 private:
  CapUnion F_;
  BarrierConfig cfg_;
  std::vector<Semitrough> lower_, upper_;
};

namespace detail {

inline bool cap_inside(const SphereCap& a, const SphereCap& b) {
  return sphere_distance(a.center, b.center) + a.radius <= b.radius + 1e-12;
}

// keep_small = false: drop caps contained in another kept cap (sub-ball family);
// keep_small = true: drop caps containing another (super-ball family).
inline std::vector<SphereCap> prune_nested(const std::vector<SphereCap>& caps, bool keep_small) {
  std::vector<SphereCap> out;
  for (std::size_t i = 0; i < caps.size(); ++i) {
    bool drop = false;
    for (std::size_t j = 0; j < caps.size() && !drop; ++j) {
      if (i == j) continue;
      const bool ij = cap_inside(caps[i], caps[j]), ji = cap_inside(caps[j], caps[i]);
      if (ij && ji) drop = j < i;  // duplicates: keep the first
      else drop = keep_small ? ji : ij;
    }
    if (!drop) out.push_back(caps[i]);
  }
  return out;
}

}  // namespace detail

inline BarrierPair build_barriers(const CapUnion& F, const BarrierConfig& cfg,
                                  std::shared_ptr<const ProfileFunction> profile) {
  require(cfg.k1 > cfg.k2 && cfg.k2 > 0.0, ErrorKind::InvalidInput, "need k1 > k2 > 0");
  require(cfg.ball_count >= 1, ErrorKind::InvalidInput, "ball_count must be positive");
  auto subs = enumerate_subballs(F, cfg.ball_count);
  auto sups = enumerate_superballs(F, cfg.ball_count);
  if (cfg.prune) {
    subs = detail::prune_nested(subs, false);
    sups = detail::prune_nested(sups, true);
  }
  std::vector<Semitrough> lo, up;
  for (const auto& b : subs) lo.push_back(make_semitrough(b, cfg.k1, profile));
  for (const auto& b : sups) up.push_back(make_semitrough(b, cfg.k2, profile));
  require(!lo.empty() && !up.empty(), ErrorKind::EmptyFamily, "empty barrier family");
  return BarrierPair(F, cfg, std::move(lo), std::move(up));
}

// Points with |x| = R: 720 angles for n = 2, a spiral for n = 3.
inline std::vector<Vec> sphere_of_radius(int n, double R, int m = 720) {
  std::vector<Vec> out;
  for (const Vec& d : sphere_samples(n, n == 3 ? 4 * m : m)) out.push_back(R * d);
  return out;
}

// Grid points of the ball |x| <= r at spacing s.
inline std::vector<Vec> ball_points(int n, double r, double s) {
  std::vector<Vec> out;
  const int m = static_cast<int>(std::floor(r / s));
  std::array<int, 3> i{};
  for (i[0] = -m; i[0] <= m; ++i[0])
    for (i[1] = (n > 1 ? -m : 0); i[1] <= (n > 1 ? m : 0); ++i[1])
      for (i[2] = (n > 2 ? -m : 0); i[2] <= (n > 2 ? m : 0); ++i[2]) {
        Vec x(n);
        for (int d = 0; d < n; ++d) x[d] = s * i[d];
        if (x.norm() <= r + 1e-12) out.push_back(x);
      }
  return out;
}

struct BarrierReport {
  std::vector<double> radii, defect;  // max over |x| = R of |lower - V_F| + |upper - V_F|
  double theta = 0.0;                 // 1 - max slope of either barrier on the compact
  double delta = 0.0;                 // min of (lower - V_F, upper - lower) on the compact
  double min_order_gap = 0.0;         // min of upper - lower over every evaluated point
  bool ordered = true, above_cone = true, decreasing = true;
  std::string failure;
  Vec witness;

  bool ok() const { return failure.empty(); }
};

// Ordering, asymptotics and compact gap/slope, measured; never throws on a violation. verify_barriers below does.
inline BarrierReport inspect_barriers(const BarrierPair& pair, const std::vector<double>& radii) {
  const int n = pair.dim();
  BarrierReport rep;
  rep.radii = radii;
  rep.min_order_gap = std::numeric_limits<double>::infinity();
  auto note = [&](const std::string& what, const Vec& x) {
    if (rep.failure.empty()) {
      rep.failure = what;
      rep.witness = x;
    }
  };
  auto check_point = [&](const Vec& x, double lo, double up) {
    rep.min_order_gap = std::min(rep.min_order_gap, up - lo);
    if (lo > up + pair.config().order_tol) {
      rep.ordered = false;
      note("lower > upper", x);
    }
    if (lo <= pair.cone(x)) {
      rep.above_cone = false;
      note("lower <= V_F", x);
    }
  };
  for (std::size_t k = 0; k < radii.size(); ++k) {
    require(k == 0 || radii[k] > radii[k - 1], ErrorKind::InvalidInput, "radii must increase");
    double worst = 0.0;
    for (const Vec& x : sphere_of_radius(n, radii[k])) {
      const double lo = pair.lower(x), up = pair.upper(x), v = pair.cone(x);
      worst = std::max(worst, std::abs(lo - v) + std::abs(up - v));
      rep.min_order_gap = std::min(rep.min_order_gap, up - lo);
      if (lo > up + pair.config().order_tol) {
        rep.ordered = false;
        note("lower > upper", x);
      }
    }
    rep.defect.push_back(worst);
    if (k > 0 && !(worst < rep.defect[k - 1])) {
      rep.decreasing = false;
      note("asymptotic defect not decreasing at R = " + std::to_string(radii[k]), sphere_of_radius(n, radii[k], 1)[0]);
    }
  }

  // compact |x| <= verify_radius: gap and slopes. Slopes are the exact gradients of the
  // active members plus difference quotients over a coarse set of pairs.
  const double r = pair.config().verify_radius;
  const auto fine = ball_points(n, r, n == 3 ? 0.5 : 0.25);
  double delta = std::numeric_limits<double>::infinity(), slope = 0.0;
  for (const Vec& x : fine) {
    const auto lo = pair.lower_with_gradient(x);
    const auto up = pair.upper_with_gradient(x);
    check_point(x, lo.value, up.value);
    delta = std::min({delta, lo.value - pair.cone(x), up.value - lo.value});
    slope = std::max({slope, lo.grad.norm(), up.grad.norm()});
  }
  const auto coarse = ball_points(n, r, n == 3 ? 2.0 : 1.0);
  std::vector<double> lv, uv;
  for (const Vec& x : coarse) {
    lv.push_back(pair.lower(x));
    uv.push_back(pair.upper(x));
  }
  for (std::size_t i = 0; i < coarse.size(); ++i)
    for (std::size_t j = i + 1; j < coarse.size(); ++j) {
      const double d = (coarse[i] - coarse[j]).norm();
      slope = std::max({slope, std::abs(lv[i] - lv[j]) / d, std::abs(uv[i] - uv[j]) / d});
    }
  rep.delta = delta;
  rep.theta = 1.0 - slope;
  if (!(rep.delta > 0.0)) note("compact gap delta <= 0", Vec::Zero(n));
  if (!(rep.theta > 0.0)) note("spacelike margin theta <= 0", Vec::Zero(n));
  return rep;
}

inline BarrierReport verify_barriers(const BarrierPair& pair, const std::vector<double>& radii) {
  BarrierReport rep = inspect_barriers(pair, radii);
  if (!rep.ok()) {
    std::ostringstream os;
    os << rep.failure << " at (";
    for (int d = 0; d < rep.witness.size(); ++d) os << (d ? "," : "") << rep.witness[d];
    os << ")";
    throw Error(ErrorKind::VerificationFailed, os.str());
  }
  return rep;
}

struct BarrierGrids {
  GridFunction lower, upper, cone;
};

// Barrier values memoized on a grid.
inline BarrierGrids sample_barriers(const BarrierPair& pair, const Grid& g) {
  BarrierGrids b{GridFunction(g), GridFunction(g), GridFunction(g)};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.point(i);
    b.lower[i] = pair.lower(x);
    b.upper[i] = pair.upper(x);
    b.cone[i] = pair.cone(x);
  }
  return b;
}

inline void write_barrier_csv(std::ostream& os, const BarrierGrids& b) {
  const Grid& g = b.lower.grid();
  os.precision(17);
  static const char* names[] = {"x", "y", "z"};
  for (int d = 0; d < g.dim(); ++d) os << names[d] << ",";
  os << "lower,upper,V_F\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int d = 0; d < g.dim(); ++d) os << g.coord(i, d) << ",";
    os << b.lower[i] << "," << b.upper[i] << "," << b.cone[i] << "\n";
  }
}

struct BoundaryData {
  GridFunction data;  // boundary nodes carry the Dirichlet values; interior holds the warm start
  double max_mollification_error = 0.0;
  double min_gap = 0.0;
};

// Mollified lower barrier on the boundary nodes of g: m = lower * bump, with the bump
// (1 - |y|^2/rho^2)^3 on the ball of radius rho and q^n midpoint quadrature; then moved
// toward the upper barrier by gap_fraction of the local gap. The interior gets the
// midpoint (lower + upper)/2 as a convex spacelike first iterate.
inline BoundaryData mollified_boundary(const BarrierPair& pair, const Grid& g, double smoothing_radius,
                                       double gap_fraction = 0.5, int q = 8) {
  require(smoothing_radius >= 2.0 * g.h() || smoothing_radius == 0.0, ErrorKind::InvalidInput,
          "smoothing radius must be at least two grid spacings");
  require(gap_fraction >= 0.0 && gap_fraction < 1.0, ErrorKind::InvalidInput, "gap_fraction must lie in [0, 1)");
  const int n = g.dim();
  // quadrature nodes and normalized weights on the cube [-rho, rho]^n
  std::vector<Vec> off;
  std::vector<double> w;
  if (smoothing_radius > 0.0) {
    double total = 0.0;
    std::array<int, 3> i{};
    for (i[0] = 0; i[0] < q; ++i[0])
      for (i[1] = 0; i[1] < (n > 1 ? q : 1); ++i[1])
        for (i[2] = 0; i[2] < (n > 2 ? q : 1); ++i[2]) {
          Vec y(n);
          for (int d = 0; d < n; ++d) y[d] = smoothing_radius * (-1.0 + (2.0 * i[d] + 1.0) / q);
          const double s = 1.0 - y.squaredNorm() / (smoothing_radius * smoothing_radius);
          if (s <= 0.0) continue;
          off.push_back(y);
          w.push_back(s * s * s);
          total += s * s * s;
        }
    for (double& x : w) x /= total;
  }

  BoundaryData out{GridFunction(g), 0.0, std::numeric_limits<double>::infinity()};
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Vec x = g.point(idx);
    const double lo = pair.lower(x), up = pair.upper(x);
    if (!g.is_boundary(idx)) {
      out.data[idx] = 0.5 * (lo + up);
      continue;
    }
    double m = lo;
    if (!off.empty()) {
      m = 0.0;
      for (std::size_t k = 0; k < off.size(); ++k) m += w[k] * pair.lower(Vec(x + off[k]));
    }
    const double err = std::abs(m - lo);
    out.max_mollification_error = std::max(out.max_mollification_error, err);
    out.min_gap = std::min(out.min_gap, up - lo);
    if (up - lo < 2.0 * err) throw Error(ErrorKind::GapTooSmall, "barrier gap below twice the mollification error");
    out.data[idx] = m + gap_fraction * (up - m);
  }
  return out;
}

}  // namespace mgc
