// Barrier pair for a half-plane and for two opposite caps: ordering, decay of the
// defect toward V_F, and the compact gap. Pass a file name to also dump the grids as CSV.
#include "mgc/barriers.hpp"

#include <cstdio>
#include <fstream>

using namespace mgc;

namespace {

void show(const char* name, const CapUnion& F, std::shared_ptr<const ProfileFunction> prof) {
  BarrierConfig c;
  c.k1 = 2.0;
  c.k2 = 0.5;
  const auto pair = build_barriers(F, c, prof);
  const auto rep = inspect_barriers(pair, {10, 20, 40, 80});
  std::printf("%s: caps %zu, delta0 = %.4f\n", name, F.caps().size(), F.delta0());
  std::printf("  ordered %s, above cone %s, min upper - lower %.3g\n", rep.ordered ? "yes" : "no",
              rep.above_cone ? "yes" : "no", rep.min_order_gap);
  for (std::size_t i = 0; i < rep.radii.size(); ++i) std::printf("  R = %5.1f  defect %.6f\n", rep.radii[i], rep.defect[i]);
  std::printf("  delta = %.3g  theta = %.3g  %s\n\n", rep.delta, rep.theta, rep.ok() ? "ok" : rep.failure.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  auto prof = std::make_shared<const ProfileFunction>(solve_profile(2));
  const auto half = CapUnion::make({SphereCap(UnitVector(make_vec({1, 0})), pi / 2)});
  const auto two = CapUnion::make({SphereCap(UnitVector(make_vec({1, 0})), 1.0), SphereCap(UnitVector(make_vec({-1, 0})), 1.2)});
  show("half-plane", half, prof);
  show("two caps", two, prof);
  if (argc > 1) {
    std::ofstream os(argv[1]);
    write_barrier_csv(os, sample_barriers(build_barriers(two, {}, prof), Grid(2, 3.0, 0.1)));
    std::printf("wrote %s\n", argv[1]);
  }
}
