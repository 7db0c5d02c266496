#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mgc {

// Small fixed-capacity vectors: every spatial quantity here lives in dimension <= 3.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

inline constexpr double pi = std::numbers::pi;

enum class ErrorKind {
  InvalidInput,
  NotSpacelike,
  NotConvex,
  NoConvergence,
  EmptyFamily,
  DegenerateHull,
  ToleranceNotMet,
  NonMonotoneTail,
  BracketFailure,
  VerificationFailed,
  GapTooSmall,
  LineSearchStalled,
  MaxIterations,
  NotSpacelikeCompatible,
  SingularHessian,
  OrderingViolated,
  StepCollapse,
  NoDecay,
  Timeout,
  NotCauchy,
  BoundViolated,
  MonitorExceeded,
  DimensionUnsupported,
  NotDecreasing,
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NotSpacelike: return "NotSpacelike";
    case ErrorKind::NotConvex: return "NotConvex";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::EmptyFamily: return "EmptyFamily";
    case ErrorKind::DegenerateHull: return "DegenerateHull";
    case ErrorKind::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorKind::NonMonotoneTail: return "NonMonotoneTail";
    case ErrorKind::BracketFailure: return "BracketFailure";
    case ErrorKind::VerificationFailed: return "VerificationFailed";
    case ErrorKind::GapTooSmall: return "GapTooSmall";
    case ErrorKind::LineSearchStalled: return "LineSearchStalled";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::NotSpacelikeCompatible: return "NotSpacelikeCompatible";
    case ErrorKind::SingularHessian: return "SingularHessian";
    case ErrorKind::OrderingViolated: return "OrderingViolated";
    case ErrorKind::StepCollapse: return "StepCollapse";
    case ErrorKind::NoDecay: return "NoDecay";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::NotCauchy: return "NotCauchy";
    case ErrorKind::BoundViolated: return "BoundViolated";
    case ErrorKind::MonitorExceeded: return "MonitorExceeded";
    case ErrorKind::DimensionUnsupported: return "DimensionUnsupported";
    case ErrorKind::NotDecreasing: return "NotDecreasing";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vec unit_axis(int n, int k) {
  Vec v = Vec::Zero(n);
  v[k] = 1.0;
  return v;
}

}  // namespace mgc
