// Two planes in R^3 with unit weights satisfy the fundamental inequality, yet
// no tight fusion frame has this profile. Multistart settles at 6 instead of
// the bound 16/3, and the minimizer found is not in class E.
//
//   ./sample_counterexample [restarts] [seed]

#include <cstdio>
#include <cstdlib>

#include "framekit/framekit.hpp"

int main(int argc, char** argv) {
  using namespace framekit;

  const DimProfile p{3, {2, 2}, {1.0, 1.0}};
  OptimizerConfig cfg;
  cfg.restarts = argc > 1 ? std::atoi(argv[1]) : 20;
  cfg.seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 7;

  try {
    const auto r = multistart<double>(p, cfg);
    const auto v = verify_all(r.frame, 1e-8);

    std::printf("fundamental inequality: %s\n", fundamental_inequality(p) ? "holds" : "fails");
    std::printf("lower bound:            %.12f\n", ffp_lower_bound(p));
    std::printf("best potential:         %.12f (restart %d of %zu, %s)\n", r.ffp, r.best_restart + 1,
                r.restart_values.size(), to_string(r.status).data());
    std::printf("tight:                  %s\n", r.tight_alpha ? "yes" : "no");
    std::printf("verification:           %s\n", v.passed() ? "passed" : v.failed_clause->c_str());

    // The planes always share a line; the other principal angle is pi/2 at the minimum.
    const RMat m = r.frame.subspace(0).basis().transpose() * r.frame.subspace(1).basis();
    const auto cosines = Eigen::JacobiSVD<RMat>(m).singularValues();
    std::printf("principal cosines:      %.6f %.6f\n", cosines(0), cosines(1));
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
