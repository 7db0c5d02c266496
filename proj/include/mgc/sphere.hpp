#pragma once

#include "mgc/core.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace mgc {

class UnitVector {
 public:
  UnitVector() = default;
  explicit UnitVector(const Vec& v) : v_(v) {
    const double nrm = v.norm();
    require(v.size() >= 1 && v.size() <= 3, ErrorKind::InvalidInput, "unit vector dimension must be 1..3");
    require(std::isfinite(nrm) && nrm > 1e-300, ErrorKind::InvalidInput, "cannot normalize a zero vector");
    v_ /= nrm;
  }
  const Vec& coords() const { return v_; }
  int dim() const { return static_cast<int>(v_.size()); }
  double operator[](int i) const { return v_[i]; }

 private:
  Vec v_;
};

struct SphereCap {
  UnitVector center;
  double radius = 0.0;

  SphereCap() = default;
  SphereCap(UnitVector c, double r) : center(std::move(c)), radius(r) {
    require(radius > 0.0 && radius < pi, ErrorKind::InvalidInput, "cap radius must lie in (0, pi)");
  }
  int dim() const { return center.dim(); }
};

// Stable for nearly coincident and nearly antipodal points, unlike acos of the dot product.
inline double sphere_distance(const Vec& x, const Vec& y) {
  const double a = (x - y).norm();
  const double b = (x + y).norm();
  return 2.0 * std::atan2(a, b);
}
inline double sphere_distance(const UnitVector& x, const UnitVector& y) {
  return sphere_distance(x.coords(), y.coords());
}

// Orthonormal vector perpendicular to a (a unit).
inline Vec some_perpendicular(const Vec& a) {
  const int n = static_cast<int>(a.size());
  Vec best = Vec::Zero(n);
  if (n == 1) return best;
  int k = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(a[i]) < std::abs(a[k])) k = i;
  Vec e = unit_axis(n, k);
  best = e - a.dot(e) * a;
  return best.normalized();
}

// Point at angular distance alpha from a, moving toward b.
inline Vec geodesic_step(const Vec& a, const Vec& b, double alpha) {
  Vec t = b - a.dot(b) * a;
  const double tn = t.norm();
  if (tn < 1e-14) t = some_perpendicular(a);
  else t /= tn;
  Vec p = std::cos(alpha) * a + std::sin(alpha) * t;
  return p.normalized();
}

// Householder reflection sending e1 to c; symmetric and orthogonal.
inline Mat householder_to(const Vec& c) {
  const int n = static_cast<int>(c.size());
  Mat q = Mat::Identity(n, n);
  Vec v = unit_axis(n, 0) - c;
  const double vv = v.squaredNorm();
  if (vv < 1e-28) return q;
  q -= (2.0 / vv) * (v * v.transpose());
  return q;
}

// Base-b radical inverse (van der Corput); nested for growing prefixes.
inline double radical_inverse(unsigned long long k, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (k > 0) {
    r += f * static_cast<double>(k % base);
    k /= base;
    f *= inv;
  }
  return r;
}

// k-th point (k >= 0) of a deterministic low-discrepancy sequence on S^{n-1}.
inline Vec sphere_sequence(int n, unsigned long long k) {
  if (n == 1) return make_vec({(k % 2 == 0) ? 1.0 : -1.0});
  if (n == 2) {
    const double th = 2.0 * pi * radical_inverse(k, 2);
    return make_vec({std::cos(th), std::sin(th)});
  }
  const double z = 1.0 - 2.0 * radical_inverse(k + 1, 2);
  const double ph = 2.0 * pi * radical_inverse(k + 1, 3);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return make_vec({z, s * std::cos(ph), s * std::sin(ph)});
}

// Evenly spread sample of S^{n-1} with about m points.
inline std::vector<Vec> sphere_samples(int n, int m) {
  std::vector<Vec> out;
  if (n == 1) {
    out.push_back(make_vec({1.0}));
    out.push_back(make_vec({-1.0}));
    return out;
  }
  if (n == 2) {
    for (int i = 0; i < m; ++i) {
      const double th = 2.0 * pi * (i + 0.5) / m;
      out.push_back(make_vec({std::cos(th), std::sin(th)}));
    }
    return out;
  }
  const double golden = pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < m; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / m;
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    out.push_back(make_vec({z, s * std::cos(golden * i), s * std::sin(golden * i)}));
  }
  return out;
}

inline bool cap_contains(const SphereCap& c, const Vec& x, double tol = 0.0) {
  return sphere_distance(c.center.coords(), x) <= c.radius + tol;
}

class CapUnion {
 public:
  // Builds F from caps; drops caps nested inside others, rejects overlapping or
  // touching caps (their union has corners and admits no rolling-ball radius).
  static CapUnion make(std::vector<SphereCap> caps, double min_delta0 = 1e-3) {
    require(!caps.empty(), ErrorKind::InvalidInput, "cap union needs at least one cap");
    const int n = caps.front().dim();
    for (const auto& c : caps)
      require(c.dim() == n, ErrorKind::InvalidInput, "caps of mixed dimension");
    std::vector<SphereCap> kept;
    for (std::size_t i = 0; i < caps.size(); ++i) {
      bool nested = false;
      for (std::size_t j = 0; j < caps.size() && !nested; ++j) {
        if (i == j) continue;
        const double d = sphere_distance(caps[i].center, caps[j].center);
        const bool inside = d + caps[i].radius <= caps[j].radius + 1e-12;
        // identical caps: keep the first
        const bool same = inside && d + caps[j].radius <= caps[i].radius + 1e-12;
        if (inside && (!same || j < i)) nested = true;
      }
      if (!nested) kept.push_back(caps[i]);
    }
    CapUnion F;
    F.n_ = n;
    F.caps_ = kept;
    double d0 = std::numeric_limits<double>::infinity();
    for (const auto& c : kept) d0 = std::min({d0, c.radius, pi - c.radius});
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j) {
        const double gap = sphere_distance(kept[i].center, kept[j].center) - kept[i].radius - kept[j].radius;
        require(gap > 0.0, ErrorKind::InvalidInput, "caps overlap or touch; the union has no rolling-ball radius");
        d0 = std::min(d0, 0.5 * gap);
      }
    if (n == 1) d0 = std::min(d0, pi / 2);
    require(d0 >= min_delta0, ErrorKind::InvalidInput, "rolling-ball radius below the admissible minimum");
    for (int tries = 0; tries < 40 && !F.rolling_ball_ok(d0); ++tries) d0 *= 0.5;
    require(d0 >= min_delta0 && F.rolling_ball_ok(d0), ErrorKind::InvalidInput,
            "rolling-ball verification failed above the admissible minimum");
    F.delta0_ = d0;
    return F;
  }

  int dim() const { return n_; }
  const std::vector<SphereCap>& caps() const { return caps_; }
  double delta0() const { return delta0_; }

  bool contains(const Vec& x, double tol = 1e-12) const {
    for (const auto& c : caps_)
      if (cap_contains(c, x, tol)) return true;
    return false;
  }

  // Every sampled point of F and of its closed complement lies in a cap of radius d0
  // contained in that set.
  bool rolling_ball_ok(double d0, int samples = 4096) const {
    if (n_ == 1) return true;
    for (const Vec& y : sphere_samples(n_, samples)) {
      int k = -1;
      double best = std::numeric_limits<double>::infinity();
      bool inside = false;
      for (std::size_t i = 0; i < caps_.size(); ++i) {
        const double d = sphere_distance(caps_[i].center.coords(), y);
        if (d <= caps_[i].radius) inside = true;
        if (d - caps_[i].radius < best) {
          best = d - caps_[i].radius;
          k = static_cast<int>(i);
        }
      }
      if (inside) continue;  // cap radii >= d0 settle this side
      const auto& c = caps_[k];
      const double dc = sphere_distance(c.center.coords(), y);
      const Vec p = geodesic_step(c.center.coords(), y, std::max(dc, c.radius + d0));
      if (sphere_distance(p, y) > d0 + 1e-12) return false;
      for (const auto& o : caps_)
        if (sphere_distance(p, o.center.coords()) < o.radius + d0 - 1e-12) return false;
    }
    return true;
  }

 private:
  int n_ = 0;
  std::vector<SphereCap> caps_;
  double delta0_ = 0.0;
};

inline double dist_to_set(const Vec& x, const CapUnion& F) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& c : F.caps()) d = std::min(d, std::max(0.0, sphere_distance(c.center.coords(), x) - c.radius));
  return d;
}
inline double dist_to_set(const UnitVector& x, const CapUnion& F) { return dist_to_set(x.coords(), F); }

inline double support_function(const SphereCap& c, const Vec& x) {
  const double r = x.norm();
  if (r == 0.0) return 0.0;
  const double d = sphere_distance(c.center.coords(), Vec(x / r));
  return r * std::cos(std::max(0.0, d - c.radius));
}

inline double support_function(const CapUnion& F, const Vec& x) {
  const double r = x.norm();
  if (r == 0.0) return 0.0;
  const Vec u = x / r;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : F.caps())
    best = std::max(best, std::cos(std::max(0.0, sphere_distance(c.center.coords(), u) - c.radius)));
  return r * best;
}

// Points covering a cap: for n = 2 an arc including both endpoints, for n = 3 rings of
// latitude with `res` points on the rim.
inline std::vector<Vec> cap_points(const SphereCap& c, int res, double* spacing = nullptr) {
  const int n = c.dim();
  if (spacing) *spacing = 0.0;
  std::vector<Vec> pts;
  if (n == 1) {
    pts.push_back(c.center.coords());
    return pts;
  }
  const Vec& ctr = c.center.coords();
  if (n == 2) {
    const double th = std::atan2(ctr[1], ctr[0]);
    for (int i = 0; i < res; ++i) {
      const double a = th - c.radius + 2.0 * c.radius * i / (res - 1);
      pts.push_back(make_vec({std::cos(a), std::sin(a)}));
    }
    if (spacing) *spacing = 2.0 * c.radius / (res - 1);
    return pts;
  }
  const Mat q = householder_to(ctr);
  const int rings = std::max(2, static_cast<int>(std::ceil(res * c.radius / (2.0 * pi))) + 1);
  pts.push_back(ctr);
  for (int j = 1; j <= rings; ++j) {
    const double b = c.radius * j / rings;
    const int m = std::max(3, static_cast<int>(std::ceil(res * std::sin(b) / std::sin(std::min(c.radius, pi / 2)))));
    for (int i = 0; i < m; ++i) {
      const double g = 2.0 * pi * i / m;
      Vec local = make_vec({std::cos(b), std::sin(b) * std::cos(g), std::sin(b) * std::sin(g)});
      pts.push_back((q * local).normalized());
    }
  }
  if (spacing) *spacing = std::max(c.radius / rings, 2.0 * pi * std::sin(std::min(c.radius, pi / 2)) / res);
  return pts;
}

// Closed caps inside F with radius >= delta0: F's own caps first, then caps about
// low-discrepancy centres in the inner parallel set. Prefixes are nested in `count`.
inline std::vector<SphereCap> enumerate_subballs(const CapUnion& F, int count) {
  require(count >= 1, ErrorKind::InvalidInput, "count must be positive");
  const double d0 = F.delta0();
  std::vector<SphereCap> out(F.caps().begin(), F.caps().end());
  const double ratio = std::pow(2.0, 0.25);
  for (unsigned long long k = 0; static_cast<int>(out.size()) < count && k < 64ULL * count + 256; ++k) {
    if (F.dim() == 1) break;
    const Vec p = sphere_sequence(F.dim(), k);
    for (const auto& c : F.caps()) {
      const double room = c.radius - sphere_distance(c.center.coords(), p);
      if (room < d0) continue;
      const double rq = d0 * std::pow(ratio, std::floor(std::log(room / d0) / std::log(ratio) + 1e-12));
      out.emplace_back(UnitVector(p), std::min(rq, room));
      break;
    }
  }
  require(!out.empty(), ErrorKind::EmptyFamily, "no sub-ball of radius delta0 fits in F");
  for (const auto& b : out)
    for (const Vec& y : cap_points(b, 16))
      require(F.contains(y, 1e-9), ErrorKind::EmptyFamily, "sub-ball failed containment sampling");
  return out;
}

// Caps containing F with radius <= pi - delta0: complements of caps inside the closed
// complement of F. For n = 2 the complementary arcs are included exactly.
inline std::vector<SphereCap> enumerate_superballs(const CapUnion& F, int count) {
  require(count >= 1, ErrorKind::InvalidInput, "count must be positive");
  const int n = F.dim();
  const double d0 = F.delta0();
  std::vector<SphereCap> out;
  auto complement_of = [](const Vec& p, double rho) { return SphereCap(UnitVector(Vec(-p)), pi - rho); };
  if (n == 1) {
    out = F.caps();
  } else if (F.caps().size() == 1) {
    out.push_back(F.caps().front());
  } else if (n == 2) {
    struct Arc { double lo, hi; };
    std::vector<Arc> arcs;
    for (const auto& c : F.caps()) {
      const double th = std::atan2(c.center[1], c.center[0]);
      arcs.push_back({th - c.radius, th + c.radius});
    }
    std::sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) { return a.lo < b.lo; });
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      const double a = arcs[i].hi;
      const double b = (i + 1 < arcs.size()) ? arcs[i + 1].lo : arcs[0].lo + 2.0 * pi;
      const double mid = 0.5 * (a + b);
      out.push_back(complement_of(make_vec({std::cos(mid), std::sin(mid)}), 0.5 * (b - a)));
    }
  }
  const double ratio = std::pow(2.0, 0.25);
  for (unsigned long long k = 0; n > 1 && static_cast<int>(out.size()) < count && k < 64ULL * count + 256; ++k) {
    const Vec p = sphere_sequence(n, k);
    double room = std::numeric_limits<double>::infinity();
    for (const auto& c : F.caps()) room = std::min(room, sphere_distance(c.center.coords(), p) - c.radius);
    if (room < d0) continue;
    const double rq = std::min(room, d0 * std::pow(ratio, std::floor(std::log(room / d0) / std::log(ratio) + 1e-12)));
    if (rq >= pi - 1e-12) continue;
    out.push_back(complement_of(p, rq));
  }
  require(!out.empty(), ErrorKind::EmptyFamily, "no super-ball family could be built");
  for (const auto& b : out) {
    require(b.radius <= pi - d0 + 1e-12 || F.caps().size() == 1 || n == 1, ErrorKind::EmptyFamily,
            "super-ball radius exceeds pi - delta0");
    for (const auto& c : F.caps())
      for (const Vec& y : cap_points(c, 16))
        require(cap_contains(b, y, 1e-9), ErrorKind::EmptyFamily, "super-ball failed containment sampling");
  }
  return out;
}

struct KleinPoint {
  Vec coords;
  explicit KleinPoint(const Vec& v) : coords(v) {
    require(v.norm() < 1.0, ErrorKind::NotSpacelike, "Klein point must lie in the open unit ball");
  }
};

// Convex hull of finitely many points in the closed unit ball.
class ConvexBody {
 public:
  ConvexBody() = default;
  ConvexBody(std::vector<Vec> pts, double thickness) : thickness_(thickness) {
    require(!pts.empty(), ErrorKind::InvalidInput, "convex body needs points");
    n_ = static_cast<int>(pts.front().size());
    if (n_ == 2) {
      vertices_ = monotone_chain(std::move(pts));
      degenerate_ = vertices_.size() < 3;
    } else if (n_ == 1) {
      double lo = pts.front()[0], hi = lo;
      for (const auto& p : pts) {
        lo = std::min(lo, p[0]);
        hi = std::max(hi, p[0]);
      }
      vertices_.push_back(make_vec({lo}));
      if (hi > lo) vertices_.push_back(make_vec({hi}));
      degenerate_ = vertices_.size() < 2;
    } else {
      vertices_ = std::move(pts);
      degenerate_ = affinely_flat(vertices_);
    }
  }

  int dim() const { return n_; }
  const std::vector<Vec>& vertices() const { return vertices_; }
  bool degenerate() const { return degenerate_; }
  double facet_thickness() const { return thickness_; }

  double distance(const Vec& p) const {
    if (n_ == 1) {
      const double lo = vertices_.front()[0], hi = vertices_.back()[0];
      return std::max({0.0, lo - p[0], p[0] - hi});
    }
    if (n_ == 2) return polygon_distance(p);
    return min_norm_distance(p);
  }

  // Inside the hull inflated by `slack` plus one facet thickness.
  bool contains(const Vec& p, double slack = 0.0) const { return distance(p) <= slack + thickness_; }

  void write_csv(std::ostream& os) const {
    os.precision(17);
    for (int k = 0; k < n_; ++k) os << (k ? "," : "") << "x" << k;
    os << "\n";
    for (const auto& v : vertices_) {
      for (int k = 0; k < n_; ++k) os << (k ? "," : "") << v[k];
      os << "\n";
    }
  }

 private:
  static double cross(const Vec& o, const Vec& a, const Vec& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  }

  static std::vector<Vec> monotone_chain(std::vector<Vec> p) {
    std::sort(p.begin(), p.end(), [](const Vec& a, const Vec& b) { return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]); });
    if (p.size() < 3) return p;
    std::vector<Vec> h(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
      h[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
      while (k >= t && cross(h[k - 2], h[k - 1], p[i - 1]) <= 0) --k;
      h[k++] = p[i - 1];
    }
    h.resize(k - 1);
    return h;
  }

  static double segment_distance(const Vec& p, const Vec& a, const Vec& b) {
    const Vec ab = b - a;
    const double L = ab.squaredNorm();
    double t = L > 0 ? (p - a).dot(ab) / L : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
  }

  double polygon_distance(const Vec& p) const {
    const auto& v = vertices_;
    if (v.size() == 1) return (p - v[0]).norm();
    if (v.size() == 2) return segment_distance(p, v[0], v[1]);
    bool inside = true;
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vec& a = v[i];
      const Vec& b = v[(i + 1) % v.size()];
      if (cross(a, b, p) < 0) inside = false;
      d = std::min(d, segment_distance(p, a, b));
    }
    return inside ? 0.0 : d;
  }

  static bool affinely_flat(const std::vector<Vec>& pts) {
    if (pts.size() < 4) return true;
    Eigen::MatrixXd m(pts.front().size(), pts.size() - 1);
    for (std::size_t i = 1; i < pts.size(); ++i) m.col(i - 1) = pts[i] - pts[0];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues().tail(1)[0] < 1e-12 * std::max(1.0, svd.singularValues()[0]);
  }

  // Wolfe's minimum-norm-point algorithm on the shifted vertex set.
  double min_norm_distance(const Vec& p) const {
    const int m = static_cast<int>(vertices_.size());
    std::vector<Vec> q(m);
    double scale = 0.0;
    for (int i = 0; i < m; ++i) {
      q[i] = vertices_[i] - p;
      scale = std::max(scale, q[i].squaredNorm());
    }
    int first = 0;
    for (int i = 1; i < m; ++i)
      if (q[i].squaredNorm() < q[first].squaredNorm()) first = i;
    std::vector<int> S{first};
    std::vector<double> lam{1.0};
    Vec x = q[first];
    for (int outer = 0; outer < 1000; ++outer) {
      int j = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const double v = q[i].dot(x);
        if (v < best) { best = v; j = i; }
      }
      if (x.squaredNorm() - best <= 1e-12 * scale) break;
      if (std::find(S.begin(), S.end(), j) != S.end()) break;
      S.push_back(j);
      lam.push_back(0.0);
      for (int minor = 0; minor < 1000; ++minor) {
        const int k = static_cast<int>(S.size());
        Eigen::MatrixXd A(k + 1, k + 1);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
        for (int a = 0; a < k; ++a) {
          for (int b = 0; b < k; ++b) A(a, b) = q[S[a]].dot(q[S[b]]);
          A(a, k) = 1.0;
          A(k, a) = 1.0;
        }
        A(k, k) = 0.0;
        rhs[k] = 1.0;
        const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(rhs);
        bool positive = true;
        for (int a = 0; a < k; ++a) positive = positive && sol[a] > 1e-14;
        if (positive) {
          for (int a = 0; a < k; ++a) lam[a] = sol[a];
          break;
        }
        double theta = 1.0;
        for (int a = 0; a < k; ++a)
          if (sol[a] <= 1e-14) theta = std::min(theta, lam[a] / (lam[a] - sol[a]));
        for (int a = 0; a < k; ++a) lam[a] += theta * (sol[a] - lam[a]);
        std::vector<int> S2;
        std::vector<double> l2;
        for (int a = 0; a < k; ++a)
          if (lam[a] > 1e-14) { S2.push_back(S[a]); l2.push_back(lam[a]); }
        S = S2;
        lam = l2;
      }
      x = Vec::Zero(q[0].size());
      for (std::size_t a = 0; a < S.size(); ++a) x += lam[a] * q[S[a]];
    }
    return x.norm();
  }

  int n_ = 0;
  std::vector<Vec> vertices_;
  bool degenerate_ = false;
  double thickness_ = 0.0;
};

// Euclidean hull of sampled cap points in the closed ball; Klein geodesics are chords.
inline ConvexBody klein_hull(const CapUnion& F, int resolution) {
  require(resolution >= 8, ErrorKind::InvalidInput, "klein_hull needs at least 8 samples per cap");
  std::vector<Vec> pts;
  double spacing = 0.0;
  for (const auto& c : F.caps()) {
    double sp = 0.0;
    auto cp = cap_points(c, resolution, &sp);
    pts.insert(pts.end(), cp.begin(), cp.end());
    spacing = std::max(spacing, sp);
  }
  // chord sagitta for arcs; a full spacing for the triangulated n = 3 rim
  const double thickness = F.dim() == 1 ? 0.0 : 1.0 - std::cos(F.dim() == 2 ? 0.5 * spacing : spacing);
  return ConvexBody(std::move(pts), thickness);
}

}  // namespace mgc
