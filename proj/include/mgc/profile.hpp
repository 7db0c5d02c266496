#pragma once

#include "mgc/core.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

namespace mgc {

// 1 - f'^2 on the first integral (1 - f'^2)^{-n/2} - f^n = 1, free of cancellation.
inline double profile_slack(double f, int n) {
  if (f <= 0.0) return 1.0;
  return std::exp(-(2.0 / n) * std::log1p(std::pow(f, n)));
}
inline double profile_slope(double f, int n) {
  if (f <= 0.0) return 0.0;
  return std::sqrt(-std::expm1(-(2.0 / n) * std::log1p(std::pow(f, n))));
}
// a with (1 - b^2)^{-n/2} - a^n = 1
inline double profile_initial_value(double b, int n) {
  require(b > 0.0 && b < 1.0, ErrorKind::InvalidInput, "initial slope b must lie in (0, 1)");
  return std::pow(std::pow(1.0 - b * b, -0.5 * n) - 1.0, 1.0 / n);
}

struct ProfileInvariants {
  double max_residual = 0.0, max_relative_residual = 0.0;
  double f_at_tmin = 0.0, fp_at_tmin = 0.0, tail_gap_at_tmax = 0.0;
  bool positive = true, slope_in_range = true, convex = true;
};

class ProfileFunction {
 public:
  int dimension() const { return n_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double lambda() const { return lambda_; }
  double t_min() const { return t_.front(); }
  double t_max() const { return t_.back(); }
  const std::vector<double>& t() const { return t_; }
  const std::vector<double>& values() const { return f_; }
  const std::vector<double>& slopes() const { return fp_; }

  double operator()(double t) const { return value(t); }

  double value(double t) const {
    if (t <= t_.front()) return 0.0;
    if (t >= t_.back()) return std::sqrt(1.0 + t * t) - tail(t);
    const std::size_t i = locate(t);
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * f_[i] + (s3 - 2 * s2 + s) * h * fp_[i] + (-2 * s3 + 3 * s2) * f_[i + 1] +
           (s3 - s2) * h * fp_[i + 1];
  }

  double derivative(double t) const {
    if (t <= t_.front()) return 0.0;
    if (t >= t_.back()) return t / std::sqrt(1.0 + t * t) + tail_p_ * tail(t) / t;
    return profile_slope(value(t), n_);
  }

  // f'' = f^{n-1} (1 - f'^2)^{(n+2)/2}
  double second_derivative(double t) const {
    const double f = value(t);
    if (f <= 0.0) return 0.0;
    return std::pow(f, n_ - 1) * std::pow(profile_slack(f, n_), 0.5 * (n_ + 2));
  }

  double residual(std::size_t i) const {
    return std::pow(slack_[i], -0.5 * n_) - std::pow(f_[i], n_) - 1.0;
  }
  // residual / (1 + f^n): the absolute form is round-off bound once f^n ~ 1e6 (n = 3).
  double relative_residual(std::size_t i) const { return residual(i) / (1.0 + std::pow(f_[i], n_)); }

  ProfileInvariants invariants() const {
    ProfileInvariants r;
    for (std::size_t i = 0; i < t_.size(); ++i) {
      r.max_residual = std::max(r.max_residual, std::abs(residual(i)));
      r.max_relative_residual = std::max(r.max_relative_residual, std::abs(relative_residual(i)));
      if (i > 0 && i + 1 < t_.size()) {
        r.positive = r.positive && f_[i] > 0.0;
        r.slope_in_range = r.slope_in_range && fp_[i] > 0.0 && fp_[i] < 1.0;
        const double left = (f_[i] - f_[i - 1]) / (t_[i] - t_[i - 1]);
        const double right = (f_[i + 1] - f_[i]) / (t_[i + 1] - t_[i]);
        r.convex = r.convex && right > left;
      }
    }
    r.f_at_tmin = f_.front();
    r.fp_at_tmin = fp_.front();
    r.tail_gap_at_tmax = std::abs(std::sqrt(1.0 + t_.back() * t_.back()) - f_.back());
    return r;
  }

  void write_csv(std::ostream& os) const {
    os.precision(17);
    os << "t,f,fprime,residual\n";
    for (std::size_t i = 0; i < t_.size(); ++i) os << t_[i] << "," << f_[i] << "," << fp_[i] << "," << residual(i) << "\n";
  }

 private:
  friend ProfileFunction solve_profile(int, double, double, double);

  std::size_t locate(double t) const {
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - t_.begin() - 1, 0, static_cast<std::ptrdiff_t>(t_.size()) - 2));
  }
  double tail(double t) const { return tail_r_ * std::pow(t_.back() / t, tail_p_); }

  int n_ = 2;
  double a_ = 0.0, b_ = 0.0, lambda_ = 0.0;
  std::vector<double> t_, f_, fp_, slack_;
  double tail_r_ = 0.0, tail_p_ = 0.0;
};

namespace detail {

inline double rk4(double y, double h, int n) {
  auto g = [n](double f) { return profile_slope(f, n); };
  const double k1 = g(y);
  const double k2 = g(y + 0.5 * h * k1);
  const double k3 = g(y + 0.5 * h * k2);
  const double k4 = g(y + h * k3);
  return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
}

// Step-doubling adaptive RK4 on f' = g(f) from (0, a) toward t_end (sign gives direction).
// Stops early once f drops below f_stop.
inline void integrate(double a, double t_end, int n, double rtol, double h_max, double f_stop, std::vector<double>& ts,
                      std::vector<double>& fs) {
  const double dir = t_end >= 0 ? 1.0 : -1.0;
  double t = 0.0, y = a, h = 1e-3;
  ts.push_back(t);
  fs.push_back(y);
  for (long steps = 0; dir * (t_end - t) > 1e-14; ++steps) {
    require(steps < 5000000, ErrorKind::ToleranceNotMet, "profile integration exceeded the step budget");
    h = std::min({h, h_max, dir * (t_end - t)});
    const double full = rk4(y, dir * h, n);
    const double half = rk4(rk4(y, 0.5 * dir * h, n), 0.5 * dir * h, n);
    const double err = std::abs(half - full) / 15.0;
    const double scale = rtol * std::max(std::abs(half), 1e-300);
    if (err <= scale || h < 1e-13) {
      t += dir * h;
      y = half;
      ts.push_back(t);
      fs.push_back(y);
      if (y < f_stop) break;
      const double grow = err > 0 ? 0.9 * std::pow(scale / err, 0.2) : 4.0;
      h *= std::clamp(grow, 0.2, 4.0);
    } else {
      h *= std::clamp(0.9 * std::pow(scale / err, 0.2), 0.1, 0.5);
    }
  }
}

// int_F^inf (1/g(phi) - 1) dphi with phi = F/w; the integrand is smooth on w in (0, 1].
inline double tail_remainder(double F, int n) {
  static const double xs[] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
                              0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
  static const double ws[] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
                              0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
  auto integrand = [&](double w) {
    const double phi = F / w;
    // 1/g - 1 = (1 - g) / g with 1 - g = slack / (1 + g)
    const double slack = profile_slack(phi, n);
    const double g = std::sqrt(1.0 - slack);
    return slack / ((1.0 + g) * g) * F / (w * w);
  };
  // two panels on [0, 1/2] and [1/2, 1]; 16-point Gauss-Legendre each
  double sum = 0.0;
  for (double c : {0.25, 0.75})
    for (int i = 0; i < 8; ++i) sum += 0.25 * ws[i] * (integrand(c + 0.25 * xs[i]) + integrand(c - 0.25 * xs[i]));
  return sum;
}

}  // namespace detail

// Tabulated profile normalized so that sqrt(1+t^2) - f(t) -> 0 as t -> +inf.
inline ProfileFunction solve_profile(int n, double t_span = 100.0, double tol = 1e-9, double b = 0.6) {
  require(n >= 1 && n <= 3, ErrorKind::InvalidInput, "profile dimension must be 1..3");
  require(t_span >= 20.0, ErrorKind::InvalidInput, "t_span must be at least 20");
  require(tol > 0.0 && tol <= 1e-8, ErrorKind::InvalidInput, "tol must lie in (0, 1e-8]");
  const double a = profile_initial_value(b, n);
  const double rtol = 1e-12, h_max = 0.25, f_stop = 1e-8;

  std::vector<double> tb, fb, tf, ff;
  detail::integrate(a, -1e7, n, rtol, 1e30, f_stop, tb, fb);
  detail::integrate(a, t_span, n, rtol, h_max, 0.0, tf, ff);

  ProfileFunction p;
  p.n_ = n;
  p.a_ = a;
  p.b_ = b;
  for (std::size_t i = tb.size(); i-- > 1;) {
    p.t_.push_back(tb[i]);
    p.f_.push_back(fb[i]);
  }
  p.t_.insert(p.t_.end(), tf.begin(), tf.end());
  p.f_.insert(p.f_.end(), ff.begin(), ff.end());
  for (double f : p.f_) {
    p.fp_.push_back(profile_slope(f, n));
    p.slack_.push_back(profile_slack(f, n));
  }

  // Along the raw curve t(f) = int_a^f dphi / g(phi), and sqrt(1+t^2) - f(t) tends to
  // lim (t - f) = t(F) - F + int_F^inf (1/g - 1) dphi for any F. Evaluating the
  // remainder by quadrature makes every estimate on the last decade exact up to the
  // table error, so they must agree to 1e-8.
  auto est = [&](double T) {
    const double F = T >= p.t_.back() ? p.f_.back() : p.value(T);
    return T - F + detail::tail_remainder(F, n);
  };
  double lo = 1e300, hi = -1e300, last = 0.0;
  for (int k = 0; k <= 8; ++k) {
    last = est(t_span * std::pow(10.0, -0.125 * (8 - k)));
    lo = std::min(lo, last);
    hi = std::max(hi, last);
  }
  require(hi - lo <= 1e-8, ErrorKind::NonMonotoneTail, "asymptotic shift estimates did not settle");
  const double ea = last;
  p.lambda_ = ea;
  for (double& t : p.t_) t -= p.lambda_;

  const double tm = p.t_.back();
  const double r1 = std::sqrt(1.0 + tm * tm) - p.f_.back();
  const double r2 = std::sqrt(1.0 + 0.25 * tm * tm) - p.value(0.5 * tm);
  p.tail_r_ = r1;
  p.tail_p_ = (r1 > 0 && r2 > r1) ? std::clamp(std::log2(r2 / r1), 0.0, 10.0) : 0.0;

  const auto inv = p.invariants();
  require(inv.max_relative_residual <= tol, ErrorKind::ToleranceNotMet, "first-integral residual above tolerance");
  return p;
}

}  // namespace mgc
