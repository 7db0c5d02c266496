// Flow toward constant curvature from the barrier midpoint, printing the velocity
// sup |log K - fhat| as it decays, then the exponential fit.
#include "mgc/barriers.hpp"
#include "mgc/flow.hpp"

#include <cstdio>

using namespace mgc;

int main() {
  auto prof = std::make_shared<const ProfileFunction>(solve_profile(2));
  const auto F = CapUnion::make({SphereCap(UnitVector(make_vec({1, 0})), 0.9 * pi)});
  const auto pair = build_barriers(F, {}, prof);
  const Grid g(2, 2.0, 0.2);
  const auto bd = mollified_boundary(pair, g, 0.4);
  const auto bg = sample_barriers(pair, g);
  RampSpec ramp;
  ramp.lower = bg.lower;
  ramp.upper = bg.upper;
  FlowState s = make_flow_state(bd.data, 1.0, ramp);

  std::printf("%10s %14s\n", "t", "V");
  double next = 0.0;
  const auto rep = run_to_steady(s, 1e-8, 100.0, 0.0, [&](const FlowState& st) {
    if (st.velocity_history.empty() || st.t < next) return;
    std::printf("%10.4f %14.6e\n", st.t, st.velocity_history.back().second);
    next = st.t + 0.25;
  }, 20);
  std::printf("\nsteps %ld, t = %.4f, sup |log K - log f0| = %.3g\n", rep.steps, rep.t_final, rep.final_sup_log_error);
  std::printf("V ~ %.4f exp(-%.4f t), R^2 = %.5f\n", rep.c2, rep.c3, rep.r_squared);
}
