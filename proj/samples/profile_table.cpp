// Profile curves for n = 1, 2, 3: value, slope and distance to the hyperbola sqrt(1 + t^2).
// usage: sample_profile_table [n]
#include "mgc/profile.hpp"

#include <cstdio>
#include <cstdlib>

using namespace mgc;

int main(int argc, char** argv) {
  int lo = 1, hi = 3;
  if (argc > 1) lo = hi = std::atoi(argv[1]);
  for (int n = lo; n <= hi; ++n) {
    const ProfileFunction p = solve_profile(n);
    const auto inv = p.invariants();
    std::printf("n = %d  lambda = %.12f  first-integral residual %.3g  (%zu nodes)\n", n, p.lambda(), inv.max_residual,
                p.t().size());
    std::printf("%8s %18s %14s %14s\n", "t", "f(t)", "f'(t)", "sqrt(1+t^2)-f");
    for (double t : {-20.0, -10.0, -5.0, -2.0, -1.0, 0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0})
      std::printf("%8.2f %18.12f %14.10f %14.6e\n", t, p(t), p.derivative(t), std::sqrt(1.0 + t * t) - p(t));
    std::printf("\n");
  }
}
