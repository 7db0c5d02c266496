#include "mgc/exhaust.hpp"

#include <gtest/gtest.h>

using namespace mgc;

namespace {

std::shared_ptr<const ProfileFunction> profile2() {
  static auto p = std::make_shared<const ProfileFunction>(solve_profile(2));
  return p;
}

CapUnion big_cap() { return CapUnion::make({SphereCap(UnitVector(make_vec({1, 0})), 0.9 * pi)}); }

ExhaustionSchedule small_schedule(std::vector<double> radii) {
  ExhaustionSchedule s;
  s.radii = std::move(radii);
  s.spacings = {0.2};
  s.compact_radius = 1.0;
  s.smoothing_radius = 0.4;
  return s;
}

}  // namespace

TEST(Exhaust, ScheduleValidation) {
  ExhaustionSchedule s = small_schedule({2, 4});
  EXPECT_NO_THROW(s.validate());
  s.radii = {4, 2};
  EXPECT_THROW(s.validate(), Error);
  s = small_schedule({2});
  EXPECT_THROW(s.validate(), Error);
  s = small_schedule({2, 4});
  s.spacings = {0.1, 0.2};
  EXPECT_THROW(s.validate(), Error);
  s = small_schedule({2, 4});
  s.compact_radius = 3.0;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Exhaust, CompactDifferenceInterpolates) {
  const Grid a(2, 2.0, 0.2), b(2, 4.0, 0.2);
  auto f = [](const Vec& x) { return 1.0 + 0.3 * x[0] - 0.2 * x[1]; };
  EXPECT_LT(compact_difference(sample(a, f), sample(b, f), 1.0), 1e-14);
  auto g = [&](const Vec& x) { return f(x) + 0.1; };
  EXPECT_NEAR(compact_difference(sample(a, f), sample(b, g), 1.0), 0.1, 1e-14);
}

TEST(Exhaust, CapSequenceConverges) {
  const auto rep = exhaust(big_cap(), 1.0, small_schedule({2, 4, 8}), ExhaustMode::Elliptic, profile2());
  ASSERT_EQ(rep.cauchy.size(), 2u);
  EXPECT_TRUE(rep.cauchy_decreasing);
  EXPECT_LT(rep.cauchy[1], rep.cauchy[0]);
  EXPECT_GT(rep.inside_h_fraction, 0.99);
  EXPECT_EQ(rep.outside_3h, 0u);
  EXPECT_TRUE(rep.blow_down_ok);
  for (const auto& st : rep.stages) {
    EXPECT_LE(st.residual, 1e-8);
    EXPECT_GE(st.lower_margin, -1e-8);
    EXPECT_GE(st.upper_margin, -1e-8);
  }
  EXPECT_EQ(rep.solutions.size(), 3u);
}

TEST(Exhaust, FlowAndNewtonAgree) {
  const auto sch = small_schedule({2, 3});
  const auto e = exhaust(big_cap(), 1.0, sch, ExhaustMode::Elliptic, profile2());
  const auto f = exhaust(big_cap(), 1.0, sch, ExhaustMode::Flow, profile2());
  for (std::size_t j = 0; j < 2; ++j) EXPECT_LT(sup_distance(e.solutions[j], f.solutions[j]), 1e-6);
}

TEST(Exhaust, RejectsBadCurvatureWindow) {
  BarrierConfig c;
  c.k1 = 0.9;
  c.k2 = 0.5;
  EXPECT_THROW(exhaust(big_cap(), 1.0, small_schedule({2, 4}), ExhaustMode::Elliptic, profile2(), {}, c), Error);
  EXPECT_THROW(exhaust(big_cap(), -1.0, small_schedule({2, 4}), ExhaustMode::Elliptic, profile2()), Error);
}

TEST(Exhaust, BarrierBlowDownMatchesCone) {
  const auto pair = build_barriers(big_cap(), {}, profile2());
  EXPECT_LT(barrier_blow_down_error(pair, 8, {100, 200, 400, 800}), 1e-2);
}
