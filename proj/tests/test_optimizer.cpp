#include <gtest/gtest.h>

#include <random>

#include "framekit/framekit.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

using namespace framekit;
using cplx = std::complex<double>;

namespace {

template <FieldScalar S>
Subspace<S> axis_line(int d, int i) {
  Mat<S> e = Mat<S>::Zero(d, 1);
  e(i, 0) = 1.0;
  return Subspace<S>::from_orthonormal(e);
}

template <FieldScalar S>
Vec<S> axis(int d, int i) {
  Vec<S> e = Vec<S>::Zero(d);
  e(i) = 1.0;
  return e;
}

PerturbationCurve<double> half_turn_curve() {
  Vec<double> z(1);
  z << 0.5;
  return PerturbationCurve<double>(axis_line<double>(2, 0), z, axis<double>(2, 1));
}

double rel_err(const auto& a, const auto& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

template <FieldScalar S>
DimProfile random_profile(std::mt19937_64& rng, int min_d = 2, int max_d = 8) {
  DimProfile p;
  p.d = std::uniform_int_distribution<int>(min_d, max_d)(rng);
  const int K = std::uniform_int_distribution<int>(1, 5)(rng);
  for (int k = 0; k < K; ++k) {
    p.dims.push_back(std::uniform_int_distribution<int>(1, p.d - 1)(rng));
    p.weights.push_back(std::uniform_real_distribution<double>(0.3, 2.0)(rng));
  }
  return p;
}

}  // namespace

TEST(Curve, ValidatesInvariants) {
  const auto base = axis_line<double>(2, 0);
  Vec<double> z(1);
  z << 0.5;
  EXPECT_NO_THROW(PerturbationCurve<double>(base, z, axis<double>(2, 1)));
  Vec<double> big(1);
  big << 0.6;
  EXPECT_THROW(PerturbationCurve<double>(base, big, axis<double>(2, 1)), Error);
  EXPECT_THROW(PerturbationCurve<double>(base, Vec<double>::Zero(1), axis<double>(2, 1)), Error);
  EXPECT_THROW(PerturbationCurve<double>(base, z, axis<double>(2, 0)), Error);
  EXPECT_THROW(PerturbationCurve<double>(base, z, 2.0 * axis<double>(2, 1)), Error);
  EXPECT_THROW(PerturbationCurve<double>(base, Vec<double>::Constant(2, 0.1), axis<double>(2, 1)), Error);
}

TEST(Curve, PointAtZeroIsBase) {
  std::mt19937_64 rng(1);
  const auto base = orthonormalize<cplx>(gaussian_matrix<cplx>(6, 3, rng));
  const auto c = random_curve(base, 5);
  const std::vector<Subspace<cplx>> a{curve_point(c, 0.0)}, b{base};
  EXPECT_LE(distance<cplx>(a, b), 1e-14);
  EXPECT_THROW(curve_point(c, 1.0), Error);
}

TEST(Curve, ClosedFormPoint) {
  const auto w = curve_point(half_turn_curve(), 0.6);
  RMat expected(2, 1);
  expected << std::sqrt(1.0 - 0.09), 0.3;
  EXPECT_LE((w.projection() - expected * expected.transpose()).norm(), 1e-15);
}

TEST(Curve, KeepsDimension) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = std::uniform_int_distribution<int>(2, 8)(rng);
    const int L = std::uniform_int_distribution<int>(1, d - 1)(rng);
    const auto base = orthonormalize<cplx>(gaussian_matrix<cplx>(d, L, rng));
    const auto c = random_curve(base, rng());
    for (double t : {-0.5, 0.5, 0.99}) {
      const auto sv = c.matrix_at(t).jacobiSvd().singularValues();
      EXPECT_GT(sv(L - 1), 0.5);
      EXPECT_EQ(curve_point(c, t).dim(), L);
    }
  }
}

TEST(CurveJet, SingleLineClosedForm) {
  const auto jet = curve_jet(half_turn_curve());
  RMat dp(2, 2), d2p(2, 2);
  dp << 0, 0.5, 0.5, 0;
  d2p << -0.5, 0, 0, 0.5;
  EXPECT_LE((jet.dp - dp).norm(), 1e-15);
  EXPECT_LE((jet.d2p - d2p).norm(), 1e-15);
}

TEST(CurveJet, DiagonalInverseGramFormContradictsFiniteDifferences) {
  // With D = -2 diag(|z_l|^2) the (1,1) entry of the second derivative for
  // L = 1, z = 1/2 would be -1; the projection path gives -1/2.
  const auto c = half_turn_curve();
  const RMat& f = c.base().basis();
  const RMat diag_d = RMat::Constant(1, 1, -2.0 * 0.25);
  const RMat wrong = c.acceleration() * f.transpose() + 2.0 * c.velocity() * c.velocity().transpose() +
                     f * diag_d * f.transpose() + f * c.acceleration().transpose();
  const auto [d1, d2] = oracle::projection_fd(c);
  EXPECT_NEAR(wrong(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(d2(0, 0), -0.5, 1e-6);
  EXPECT_NEAR(curve_jet(c).d2p(0, 0), -0.5, 1e-15);
}

TEST(CurveJet, InverseGramSecondDerivativeIsTraceFree) {
  std::mt19937_64 rng(3);
  const auto base = orthonormalize<cplx>(gaussian_matrix<cplx>(7, 4, rng));
  const auto c = random_curve(base, 8);
  const CMat dm = c.inverse_gram_second_derivative();
  EXPECT_LE(std::abs(dm.trace()), 1e-15);
  EXPECT_LE((dm - dm.adjoint()).norm(), 1e-15);
}

template <typename S>
class JetFiniteDifference : public ::testing::Test {};
using Fields = ::testing::Types<double, cplx>;
TYPED_TEST_SUITE(JetFiniteDifference, Fields);

TYPED_TEST(JetFiniteDifference, MatchesProjectionPath) {
  using S = TypeParam;
  std::mt19937_64 rng(std::is_same_v<S, double> ? 10 : 11);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = std::uniform_int_distribution<int>(2, 8)(rng);
    const int L = std::uniform_int_distribution<int>(1, d - 1)(rng);
    const auto base = orthonormalize<S>(gaussian_matrix<S>(d, L, rng));
    const auto c = random_curve(base, rng(), 0.1);
    const auto jet = curve_jet(c);
    const auto [d1, d2] = oracle::projection_fd(c);
    EXPECT_LE(rel_err(jet.dp, d1), 1e-6) << "d=" << d << " L=" << L;
    EXPECT_LE(rel_err(jet.d2p, d2), 1e-4) << "d=" << d << " L=" << L;
    EXPECT_LE((jet.dp - jet.dp.adjoint()).norm(), 1e-10);
    EXPECT_LE((jet.d2p - jet.d2p.adjoint()).norm(), 1e-10);
  }
}

TEST(CurveJet, ConjugationOrderOfInverseGramTerm) {
  // For complex coefficients the off-diagonal entries must be
  // conj(z_l) z_l'; the transposed pairing z_l conj(z_l') misses the
  // finite-difference second derivative.
  std::mt19937_64 rng(12);
  const auto base = orthonormalize<cplx>(gaussian_matrix<cplx>(5, 3, rng));
  const auto c = random_curve(base, 4, 0.2);
  const CMat& f = base.basis();
  const CMat dm = c.inverse_gram_second_derivative();
  const CMat swapped = dm.transpose();
  const CMat alt = c.acceleration() * f.adjoint() + 2.0 * c.velocity() * c.velocity().adjoint() +
                   f * swapped * f.adjoint() + f * c.acceleration().adjoint();
  const auto [d1, d2] = oracle::projection_fd(c);
  EXPECT_LE(rel_err(curve_jet(c).d2p, d2), 1e-6);
  EXPECT_GT(rel_err(alt, d2), 1e-3);
}

TEST(DirectionalDerivatives, MatchScalarFiniteDifferences) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 60; ++trial) {
    const auto p = random_profile<cplx>(rng);
    const auto f = random_frame<cplx>(p, rng());
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, f.size() - 1)(rng);
    const auto c = random_curve(f.subspace(k), rng(), 0.1);
    const auto dd = ffp_directional_derivatives(f, k, c);
    const long double h = 1e-5L;
    const long double fp = oracle::ffp_along(f, k, c, h), f0 = oracle::ffp_along(f, k, c, 0.0L),
                      fm = oracle::ffp_along(f, k, c, -h);
    const double fd1 = static_cast<double>((fp - fm) / (2 * h));
    const double fd2 = static_cast<double>((fp - 2 * f0 + fm) / (h * h));
    EXPECT_NEAR(dd.first, fd1, 1e-6 * std::max(1.0, std::abs(fd1)));
    EXPECT_NEAR(dd.second, fd2, 1e-4 * std::max(1.0, std::abs(fd2)));
  }
}

TEST(DirectionalDerivatives, OrthonormalBasisIsStationary) {
  const FusionFrame<double> f(2, {{axis_line<double>(2, 0), 1.0}, {axis_line<double>(2, 1), 1.0}});
  const auto dd = ffp_directional_derivatives(f, 0, half_turn_curve());
  EXPECT_NEAR(dd.first, 0.0, 1e-15);
}

TEST(DirectionalDerivatives, DependentEigenspaceMembersGiveDescent) {
  // I_1 = two copies of span{e1} (w^2 = 2 each, lambda_1 = 4), I_J = {span{e2}}
  // with lambda_J = 1. z_2 = -z_1 makes sum_k w_k^2 conj(z_k) f_k vanish, h = e2.
  // Then first = 0 and second = 4 (lambda_J - lambda_1) sum w^2 |z|^2.
  const double w = std::sqrt(2.0);
  const FusionFrame<cplx> f(2, {{axis_line<cplx>(2, 0), w}, {axis_line<cplx>(2, 0), w}, {axis_line<cplx>(2, 1), 1.0}});
  const cplx z(0.3, 0.4);
  Vec<cplx> z1(1), z2(1);
  z1 << z;
  z2 << -z;
  const std::vector<MemberCurve<cplx>> moves{{0, PerturbationCurve<cplx>(f.subspace(0), z1, axis<cplx>(2, 1))},
                                             {1, PerturbationCurve<cplx>(f.subspace(1), z2, axis<cplx>(2, 1))}};
  const auto dd = ffp_directional_derivatives<cplx>(f, moves);
  EXPECT_NEAR(dd.first, 0.0, 1e-14);
  EXPECT_NEAR(dd.second, 4.0 * (1.0 - 4.0) * (2.0 * 0.25 + 2.0 * 0.25), 1e-13);
}

TEST(DirectionalDerivatives, DescentAtSplitPrefixOfStructuredFrames) {
  std::mt19937_64 rng(14);
  int checked = 0;
  while (checked < 30) {
    const auto spec = build::random_structured_spec(rng);
    if (spec.prefix_dims.empty()) continue;
    const auto [g, info] = build::structured_frame<cplx>(spec, rng());
    const std::size_t k = info.prefix_members[0];
    const auto f = build::split_member(g, k);  // copies at k and k + 1
    const auto e = eigenstructure<cplx>(frame_operator(f));
    const double lj = spec.prefix_w2[0];
    const double lJ = e.lambdas.back();
    const CMat& eJ = e.eigenbases.back();
    Vec<cplx> h = eJ * gaussian_matrix<cplx>(eJ.cols(), 1, rng).col(0);
    h.normalize();
    const auto L = f.dim(k);
    Vec<cplx> z(L);
    for (Eigen::Index l = 0; l < L; ++l) z(l) = std::polar(std::uniform_real_distribution<double>(0.05, 0.5)(rng),
                                                           std::uniform_real_distribution<double>(0, 6.28)(rng));
    const std::vector<MemberCurve<cplx>> moves{{k, PerturbationCurve<cplx>(f.subspace(k), z, h)},
                                               {k + 1, PerturbationCurve<cplx>(f.subspace(k + 1), -z, h)}};
    const auto dd = ffp_directional_derivatives<cplx>(f, moves);
    const double mass = 2.0 * (lj / 2.0) * z.squaredNorm();
    EXPECT_NEAR(dd.first, 0.0, 1e-10);
    EXPECT_NEAR(dd.second, 4.0 * (lJ - lj) * mass, 1e-9 * std::max(1.0, lj));
    EXPECT_LT(dd.second, 0.0);
    ++checked;
  }
}

TEST(DirectionalDerivatives, RejectsForeignCurve) {
  const FusionFrame<double> f(2, {{axis_line<double>(2, 1), 1.0}});
  EXPECT_THROW(ffp_directional_derivatives(f, 0, half_turn_curve()), Error);
}

TEST(Gradient, TightFramesAreStationary) {
  EXPECT_LE(gradient_norm(riemannian_gradient(build::harmonic_lines(5))), 1e-9);
  EXPECT_LE(gradient_norm(riemannian_gradient(build::union_of_ofbs<cplx>(6, {0.5, 1.0, 2.0}, 3))), 1e-9);
}

TEST(Gradient, OrthogonalSumIsStationary) {
  const FusionFrame<double> f(3, {{axis_line<double>(3, 0), 3.0}, {axis_line<double>(3, 1), 0.5},
                                  {axis_line<double>(3, 2), 1.0}});
  EXPECT_LE(gradient_norm(riemannian_gradient(f)), 1e-15);
}

TEST(Gradient, StructuredMinimizersAreStationary) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 40; ++trial) {
    const auto [f, info] = build::structured_frame<cplx>(build::random_structured_spec(rng), rng());
    EXPECT_LE(gradient_norm(riemannian_gradient(f)), 1e-8);
  }
}

TEST(Gradient, IsHorizontalAndPairsWithDirectionalDerivative) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 60; ++trial) {
    const auto f = random_frame<cplx>(random_profile<cplx>(rng), rng());
    const auto g = riemannian_gradient(f);
    for (std::size_t k = 0; k < f.size(); ++k) {
      EXPECT_LE((f.subspace(k).basis().adjoint() * g[k]).norm(), 1e-10);
    }
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, f.size() - 1)(rng);
    const auto c = random_curve(f.subspace(k), rng());
    const double pairing = std::real((g[k].adjoint() * c.velocity()).trace());
    const double first = ffp_directional_derivatives(f, k, c).first;
    EXPECT_NEAR(pairing, first, 1e-6 * std::max(1.0, std::abs(first)));
  }
}

TEST(Config, Validation) {
  OptimizerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.armijo_c = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.backtrack_factor = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.initial_step = -1.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.restarts = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Minimize, TightStartNeedsNoIterations) {
  const auto r = minimize(build::harmonic_lines(3), OptimizerConfig{});
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.converged());
  EXPECT_LE(r.gap, 1e-9);
}

TEST(Minimize, HistoryIsMonotoneAndIteratesFeasible) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_profile<cplx>(rng, 2, 6);
    OptimizerConfig cfg;
    cfg.max_iters = 300;
    const auto r = minimize(random_frame<cplx>(p, rng()), cfg);
    for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i].ffp, r.history[i - 1].ffp);
    EXPECT_EQ(static_cast<int>(r.history.size()), r.iterations + 1);
    for (std::size_t k = 0; k < r.frame.size(); ++k) {
      EXPECT_EQ(r.frame.dim(k), p.dims[k]);
      EXPECT_LE(Subspace<cplx>::orthonormality_defect(r.frame.subspace(k).basis()), 1e-10);
    }
    EXPECT_NEAR(r.ffp, ffp(r.frame), 1e-10 * r.ffp);
    EXPECT_GE(r.ffp, r.lower_bound - 1e-9);
  }
}

TEST(Minimize, ThreeLinesInPlaneReachTightFrame) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = minimize(random_frame<double>(DimProfile{2, {1, 1, 1}, {1, 1, 1}}, seed), OptimizerConfig{});
    EXPECT_NEAR(r.ffp, 4.5, 1e-8);
    ASSERT_TRUE(is_tight(r.frame, 1e-8));
    EXPECT_NEAR(*is_tight(r.frame, 1e-8), 1.5, 1e-8);
  }
}

TEST(Multistart, TwoPlanesInThreeSpace) {
  OptimizerConfig cfg;
  cfg.seed = 7;
  const auto r = multistart<double>(DimProfile{3, {2, 2}, {1, 1}}, cfg);
  EXPECT_NEAR(r.ffp, 6.0, 1e-6);
  EXPECT_GT(r.ffp, 16.0 / 3.0);
  EXPECT_FALSE(r.tight_alpha);
  EXPECT_FALSE(r.structure.in_class_E());
  EXPECT_EQ(r.restart_values.size(), 20u);
}

TEST(Multistart, HeavyWeightProfile) {
  const auto p = DimProfile::from_weights_squared(2, {1, 1, 1}, {4, 1, 1});
  OptimizerConfig cfg;
  cfg.restarts = 8;
  const auto r = multistart<double>(p, cfg);
  EXPECT_NEAR(r.ffp, minimum_value(p), 1e-6);
  EXPECT_TRUE(r.structure.passed()) << r.structure.failed_clause.value_or("");
}

TEST(Multistart, OrthogonalSumProfile) {
  const DimProfile p{5, {2, 1, 2}, {1, 1, 1}};
  OptimizerConfig cfg;
  cfg.restarts = 6;
  const auto r = multistart<cplx>(p, cfg);
  EXPECT_NEAR(r.ffp, 5.0, 1e-8);
}

TEST(Multistart, DeterministicAcrossThreadCounts) {
  const DimProfile p{3, {1, 2, 1}, {1.0, 0.7, 1.3}};
  OptimizerConfig a;
  a.restarts = 6;
  a.seed = 3;
  a.threads = 1;
  OptimizerConfig b = a;
  b.threads = 4;
  const auto ra = multistart<double>(p, a);
  const auto rb = multistart<double>(p, b);
  EXPECT_EQ(ra.ffp, rb.ffp);
  EXPECT_EQ(ra.best_restart, rb.best_restart);
  EXPECT_EQ(ra.restart_values, rb.restart_values);
  EXPECT_EQ(distance(ra.frame, rb.frame), 0.0);
}

TEST(Multistart, RejectsOversizedSubspaces) {
  try {
    multistart<double>(DimProfile{2, {3}, {1}}, OptimizerConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadDims);
  }
}
