#pragma once

#include "mgc/core.hpp"
#include "mgc/profile.hpp"
#include "mgc/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

namespace mgc {

// h_k(x) = sqrt(k^{-2/n} + |x|^2), the hyperboloid of curvature k
inline double lightcone_bound(double k, const Vec& x) {
  require(k > 0.0, ErrorKind::InvalidInput, "curvature must be positive");
  const double n = static_cast<double>(x.size());
  return std::sqrt(std::pow(k, -2.0 / n) + x.squaredNorm());
}

// Standard semitrough sqrt(f(x1)^2 + |x'|^2).
inline double eval_standard(const ProfileFunction& p, const Vec& x) {
  const double f = p.value(x[0]);
  return std::sqrt(f * f + x.tail(x.size() - 1).squaredNorm());
}

struct ValueGrad {
  double value = 0.0;
  Vec grad;
};

namespace detail {

// Solve cosh(phi) s + sinh(phi) w(s) = x1 for s, where |w'| < 1. The map is
// bi-Lipschitz with constants e^{-|phi|}, e^{|phi|}, which brackets the root from
// any guess. w returns (value, derivative in s).
template <class W>
double boost_root(W&& w, double phi, double x1, double guess) {
  const double ch = std::cosh(phi), sh = std::sinh(phi);
  auto F = [&](double s) {
    const auto [v, dv] = w(s);
    return std::pair<double, double>{ch * s + sh * v - x1, ch + sh * dv};
  };
  auto [f0, d0] = F(guess);
  if (f0 == 0.0) return guess;
  const double reach = std::max(2.0 * std::abs(f0) * std::exp(std::abs(phi)), 1e-9 * (1.0 + std::abs(guess)));
  double lo = guess - reach, hi = guess + reach;
  const double flo = F(lo).first, fhi = F(hi).first;
  require(flo <= 0.0 && fhi >= 0.0, ErrorKind::BracketFailure, "boost root left its lightcone bracket");
  double s = guess;
  for (int it = 0; it < 200; ++it) {
    auto [fs, ds] = F(s);
    if (fs == 0.0) return s;
    (fs < 0 ? lo : hi) = s;
    double next = (ds > 0.0) ? s - fs / ds : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double tol = 1e-12 * std::max(1.0, std::abs(next));
    if (std::abs(next - s) <= tol || hi - lo <= tol) return next;
    s = next;
  }
  throw Error(ErrorKind::NoConvergence, "boost root did not converge");
}

}  // namespace detail

// Boost of a graph along the first axis: the graph of u is mapped by
// (y1, y', T) -> (cosh y1 + sinh T, y', sinh y1 + cosh T) and re-read as a graph.
// u(y) must return (value, gradient).
template <class U>
ValueGrad boosted_eval(U&& u, double phi, const Vec& x) {
  if (phi == 0.0) {
    auto r = u(x);
    return {r.value, r.grad};
  }
  const double ch = std::cosh(phi), sh = std::sinh(phi);
  Vec y = x;
  auto w = [&](double s) {
    y[0] = s;
    auto r = u(y);
    return std::pair<double, double>{r.value, r.grad[0]};
  };
  const double guess = ch * x[0] - sh * std::sqrt(1.0 + x.squaredNorm());
  const double s = detail::boost_root(w, phi, x[0], guess);
  y[0] = s;
  const auto r = u(y);
  ValueGrad out;
  out.value = sh * s + ch * r.value;
  const double den = ch + sh * r.grad[0];
  out.grad = r.grad / den;
  out.grad[0] = (sh + ch * r.grad[0]) / den;
  return out;
}

// Value-only flavour for functions without a gradient; derivative by central differences.
template <class U>
double boosted_value(U&& u, double phi, const Vec& x) {
  auto ug = [&](const Vec& y) {
    ValueGrad r;
    r.value = u(y);
    r.grad = Vec::Zero(y.size());
    const double e = 1e-6 * std::max(1.0, std::abs(y[0]));
    Vec a = y, b = y;
    a[0] += e;
    b[0] -= e;
    r.grad[0] = (u(a) - u(b)) / (2 * e);
    return r;
  };
  return boosted_eval(ug, phi, x).value;
}

class Semitrough {
 public:
  Semitrough(SphereCap cap, double k, std::shared_ptr<const ProfileFunction> profile)
      : cap_(std::move(cap)), k_(k), profile_(std::move(profile)) {
    require(k > 0.0, ErrorKind::InvalidInput, "curvature must be positive");
    require(profile_ && profile_->dimension() == cap_.dim(), ErrorKind::InvalidInput,
            "profile dimension does not match the cap");
    rotation_ = householder_to(cap_.center.coords());
    phi_ = std::atanh(std::cos(cap_.radius));
    mu_ = std::pow(k_, -1.0 / cap_.dim());
  }

  const SphereCap& cap() const { return cap_; }
  double curvature() const { return k_; }
  const Mat& rotation() const { return rotation_; }
  double phi() const { return phi_; }
  double mu() const { return mu_; }
  const ProfileFunction& profile() const { return *profile_; }
  int dim() const { return cap_.dim(); }

  ValueGrad eval_with_gradient(const Vec& x) const {
    const Vec y = rotation_.transpose() * x / mu_;
    auto r = boosted_eval([this](const Vec& v) { return standard(v); }, phi_, y);
    r.value *= mu_;
    r.grad = rotation_ * r.grad;
    return r;
  }
  double operator()(const Vec& x) const { return eval_with_gradient(x).value; }

  // V of the cap, the asymptotic cone of this semitrough.
  double cone(const Vec& x) const { return support_function(cap_, x); }

 private:
  ValueGrad standard(const Vec& v) const {
    const double f = profile_->value(v[0]);
    const double fp = profile_->derivative(v[0]);
    const double u = std::sqrt(f * f + v.tail(v.size() - 1).squaredNorm());
    ValueGrad r;
    r.value = u;
    r.grad = Vec::Zero(v.size());
    if (u > 0.0) {
      r.grad[0] = f * fp / u;
      r.grad.tail(v.size() - 1) = v.tail(v.size() - 1) / u;
    }
    return r;
  }

  SphereCap cap_;
  double k_;
  std::shared_ptr<const ProfileFunction> profile_;
  Mat rotation_;
  double phi_ = 0.0, mu_ = 1.0;
};

inline Semitrough make_semitrough(const SphereCap& cap, double k, std::shared_ptr<const ProfileFunction> profile) {
  return Semitrough(cap, k, std::move(profile));
}

inline double eval(const Semitrough& z, const Vec& x) { return z(x); }

}  // namespace mgc
