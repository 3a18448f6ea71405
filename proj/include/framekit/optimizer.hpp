#pragma once

// Descent of the fusion frame potential over subspaces of fixed dimension.
//
// PerturbationCurve is the explicit curve A(t) whose columns are
//   sqrt(1 - t^2 |z_l|^2) f_l + t z_l h,
// which moves a subspace toward a unit direction h orthogonal to it. Its
// projection derivatives at t = 0 are available in closed form (curve_jet)
// and give the exact directional derivatives of the potential. The optimizer
// itself is Riemannian gradient descent on the product of Grassmannians with
// an Armijo line search and a QR retraction.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "framekit/core.hpp"
#include "framekit/verification.hpp"

namespace framekit {

template <FieldScalar S>
class PerturbationCurve {
 public:
  PerturbationCurve(Subspace<S> base, Vec<S> coeffs, Vec<S> direction)
      : base_(std::move(base)), coeffs_(std::move(coeffs)), direction_(std::move(direction)) {
    const auto& f = base_.basis();
    if (coeffs_.size() != f.cols()) throw Error(ErrorCode::ShapeMismatch, "need one coefficient per basis vector");
    if (direction_.size() != f.rows()) throw Error(ErrorCode::ShapeMismatch, "direction has wrong length");
    if (coeffs_.cwiseAbs().maxCoeff() > 0.5 + 1e-15) {
      throw Error(ErrorCode::InvalidArgument, "coefficients must satisfy |z_l| <= 1/2");
    }
    if (coeffs_.cwiseAbs().maxCoeff() == 0.0) throw Error(ErrorCode::InvalidArgument, "coefficients are all zero");
    if (std::abs(direction_.norm() - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "direction must be a unit vector");
    if ((f.adjoint() * direction_).cwiseAbs().maxCoeff() > 1e-12) {
      throw Error(ErrorCode::InvalidArgument, "direction must be orthogonal to the base subspace");
    }
  }

  const Subspace<S>& base() const { return base_; }
  const Vec<S>& coeffs() const { return coeffs_; }
  const Vec<S>& direction() const { return direction_; }
  Eigen::Index dim() const { return base_.dim(); }

  /// A(t); columns are linearly independent for |t| < 1.
  Mat<S> matrix_at(double t) const {
    const auto& f = base_.basis();
    Mat<S> a(f.rows(), f.cols());
    for (Eigen::Index l = 0; l < f.cols(); ++l) {
      const double z2 = std::norm(coeffs_(l));
      a.col(l) = std::sqrt(1.0 - t * t * z2) * f.col(l) + (t * coeffs_(l)) * direction_;
    }
    return a;
  }

  /// H(:, l) = z_l h, the velocity of A at t = 0.
  Mat<S> velocity() const { return direction_ * coeffs_.transpose(); }

  /// -|z_l|^2 f_l, the acceleration of A at t = 0.
  Mat<S> acceleration() const {
    Mat<S> out = base_.basis();
    for (Eigen::Index l = 0; l < out.cols(); ++l) out.col(l) *= -std::norm(coeffs_(l));
    return out;
  }

  /// Second derivative at t = 0 of (A^H A)^{-1}. A^H A = I + t^2 M with
  /// M(l, l') = conj(z_l) z_l' off the diagonal and 0 on it, so the result
  /// is -2 M: zero diagonal, trace zero.
  Mat<S> inverse_gram_second_derivative() const {
    const Eigen::Index n = coeffs_.size();
    Mat<S> dm = Mat<S>::Zero(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
      for (Eigen::Index m = 0; m < n; ++m) {
        if (l != m) dm(l, m) = -2.0 * conj_of(coeffs_(l)) * coeffs_(m);
      }
    }
    return dm;
  }

 private:
  static S conj_of(const S& x) {
    if constexpr (is_complex<S>::value) {
      return std::conj(x);
    } else {
      return x;
    }
  }

  Subspace<S> base_;
  Vec<S> coeffs_;
  Vec<S> direction_;
};

/// Curve from `base` toward a random unit direction orthogonal to it, with
/// coefficient magnitudes uniform in [min_mag, 1/2] and random phases.
template <FieldScalar S>
PerturbationCurve<S> random_curve(const Subspace<S>& base, std::uint64_t seed, double min_mag = 0.05) {
  if (base.dim() >= base.ambient_dim()) {
    throw Error(ErrorCode::BadDims, "a full-space subspace admits no orthogonal direction");
  }
  std::mt19937_64 rng(seed);
  const auto& f = base.basis();
  Vec<S> h = gaussian_matrix<S>(f.rows(), 1, rng).col(0);
  for (int pass = 0; pass < 2; ++pass) h -= f * (f.adjoint() * h);
  h.normalize();
  std::uniform_real_distribution<double> mag(min_mag, 0.5);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Vec<S> z(f.cols());
  for (Eigen::Index l = 0; l < f.cols(); ++l) {
    const double r = mag(rng);
    const double th = phase(rng);
    if constexpr (is_complex<S>::value) {
      z(l) = std::polar(r, th);
    } else {
      z(l) = th < std::numbers::pi ? r : -r;
    }
  }
  return PerturbationCurve<S>(base, std::move(z), std::move(h));
}

/// Orthonormalized R(A(t)), |t| < 1.
template <FieldScalar S>
Subspace<S> curve_point(const PerturbationCurve<S>& c, double t) {
  if (!(std::abs(t) < 1.0)) throw Error(ErrorCode::InvalidArgument, "curve parameter must satisfy |t| < 1");
  return orthonormalize<S>(c.matrix_at(t));
}

/// Projection of the curve and its first two derivatives at t = 0.
template <FieldScalar S>
struct CurveJet {
  Mat<S> p0;
  Mat<S> dp;
  Mat<S> d2p;
};

/// dP = H F^H + F H^H,  d2P = F~ F^H + 2 H H^H + F D F^H + F F~^H.
template <FieldScalar S>
CurveJet<S> curve_jet(const PerturbationCurve<S>& c) {
  const Mat<S>& f = c.base().basis();
  const Mat<S> h = c.velocity();
  const Mat<S> ft = c.acceleration();
  const Mat<S> dm = c.inverse_gram_second_derivative();
  CurveJet<S> jet;
  jet.p0 = f * f.adjoint();
  jet.dp = h * f.adjoint() + f * h.adjoint();
  jet.d2p = ft * f.adjoint() + 2.0 * h * h.adjoint() + f * dm * f.adjoint() + f * ft.adjoint();
  return jet;
}

template <FieldScalar S>
struct MemberCurve {
  std::size_t member;
  PerturbationCurve<S> curve;
};

struct DirectionalDerivatives {
  double first = 0.0;
  double second = 0.0;
};

/// First and second derivatives at t = 0 of the potential when each listed
/// member k moves along its curve (the others stay fixed). With
/// S(t) = S + sum_k w_k^2 (P_k(t) - P_k):
///   d/dt tr S^2   = 2 tr(S S'),
///   d2/dt2 tr S^2 = 2 tr(S'^2) + 2 tr(S S'').
template <FieldScalar S>
DirectionalDerivatives ffp_directional_derivatives(const FusionFrame<S>& f, std::span<const MemberCurve<S>> moves) {
  const Mat<S> s = frame_operator(f);
  Mat<S> ds = Mat<S>::Zero(f.d(), f.d());
  Mat<S> d2s = Mat<S>::Zero(f.d(), f.d());
  std::vector<bool> seen(f.size(), false);
  for (const auto& mv : moves) {
    if (mv.member >= f.size()) throw Error(ErrorCode::InvalidArgument, "member index out of range");
    if (seen[mv.member]) throw Error(ErrorCode::InvalidArgument, "member moved twice");
    seen[mv.member] = true;
    const auto& base = mv.curve.base();
    const auto& own = f.subspace(mv.member);
    if (base.dim() != own.dim() || (base.projection() - own.projection()).norm() > 1e-10) {
      throw Error(ErrorCode::InvalidArgument, "curve does not start at the member's subspace");
    }
    const auto jet = curve_jet(mv.curve);
    const double w2 = f.weight_squared(mv.member);
    ds += w2 * jet.dp;
    d2s += w2 * jet.d2p;
  }
  DirectionalDerivatives out;
  out.first = 2.0 * std::real((s * ds).trace());
  out.second = 2.0 * std::real((ds * ds).trace()) + 2.0 * std::real((s * d2s).trace());
  return out;
}

template <FieldScalar S>
DirectionalDerivatives ffp_directional_derivatives(const FusionFrame<S>& f, std::size_t k,
                                                   const PerturbationCurve<S>& c) {
  const MemberCurve<S> mv{k, c};
  return ffp_directional_derivatives<S>(f, std::span<const MemberCurve<S>>(&mv, 1));
}

/// G_k = 4 w_k^2 (I - P_k) S B_k: the gradient of tr(S^2) with respect to
/// basis B_k, projected onto the horizontal space at B_k.
template <FieldScalar S>
std::vector<Mat<S>> riemannian_gradient(const FusionFrame<S>& f) {
  const Mat<S> s = frame_operator(f);
  std::vector<Mat<S>> g;
  g.reserve(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Mat<S>& b = f.subspace(k).basis();
    const Mat<S> sb = s * b;
    g.push_back((4.0 * f.weight_squared(k)) * (sb - b * (b.adjoint() * sb)));
  }
  return g;
}

template <FieldScalar S>
double gradient_norm(const std::vector<Mat<S>>& g) {
  double acc = 0.0;
  for (const auto& gk : g) acc += gk.squaredNorm();
  return std::sqrt(acc);
}

/// Threads for multistart: hardware concurrency, capped by FRAMEKIT_THREADS.
inline int default_thread_count() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("FRAMEKIT_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<long>(n, cap);
  }
  return n;
}

struct OptimizerConfig {
  int max_iters = 5000;
  double grad_tol = 1e-10;
  /// First trial step; defaults to 1 / (1 + lambda_max(S)) of the start.
  std::optional<double> initial_step;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  int restarts = 20;
  std::uint64_t seed = 0;
  Field field = Field::Real;
  /// 0 selects default_thread_count().
  int threads = 0;
  /// Tolerance for the structure and tightness checks of the final frame.
  double verify_tol = 1e-6;

  void validate() const {
    if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be positive");
    if (!(grad_tol > 0.0)) throw Error(ErrorCode::ToleranceError, "grad_tol must be positive");
    if (initial_step && !(*initial_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial_step must be positive");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw Error(ErrorCode::InvalidArgument, "armijo_c must lie in (0, 1)");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "backtrack_factor must lie in (0, 1)");
    }
    if (restarts < 1) throw Error(ErrorCode::InvalidArgument, "restarts must be positive");
    if (threads < 0) throw Error(ErrorCode::InvalidArgument, "threads must be non-negative");
    if (!(verify_tol > 0.0)) throw Error(ErrorCode::ToleranceError, "verify_tol must be positive");
  }
};

enum class OptimizerStatus { Converged, MaxIterations, Stalled };

constexpr std::string_view to_string(OptimizerStatus s) {
  switch (s) {
    case OptimizerStatus::Converged: return "converged";
    case OptimizerStatus::MaxIterations: return "max_iterations";
    case OptimizerStatus::Stalled: return "stalled";
  }
  return "unknown";
}

struct IterationRecord {
  int iter;
  double ffp;
  double grad_norm;
  double step;
};

template <FieldScalar S>
struct OptimizerReport {
  FusionFrame<S> frame;
  double ffp = 0.0;
  double lower_bound = 0.0;
  double gap = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  OptimizerStatus status = OptimizerStatus::MaxIterations;
  std::vector<IterationRecord> history;
  std::optional<double> tight_alpha;
  VerificationOutcome structure;

  // Filled by multistart.
  int best_restart = 0;
  std::vector<double> restart_values;
  std::vector<std::uint64_t> restart_seeds;

  bool converged() const { return status == OptimizerStatus::Converged; }
};

namespace detail {

template <FieldScalar S>
FusionFrame<S> retract(const FusionFrame<S>& f, const std::vector<Mat<S>>& g, double step) {
  std::vector<Member<S>> members;
  members.reserve(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    members.push_back({orthonormalize<S>(f.subspace(k).basis() - step * g[k]), f.weight(k)});
  }
  return FusionFrame<S>(f.d(), std::move(members));
}

template <FieldScalar S>
double largest_eigenvalue(const Mat<S>& s) {
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(s.rows() - 1);
}

template <FieldScalar S>
void finish_report(OptimizerReport<S>& r, const OptimizerConfig& cfg) {
  r.lower_bound = ffp_lower_bound(r.frame.profile());
  r.gap = r.ffp - r.lower_bound;
  r.tight_alpha = is_tight(r.frame, cfg.verify_tol);
  r.structure = verify_all(r.frame, cfg.verify_tol);
}

}  // namespace detail

/// Armijo-backtracking gradient descent from `start`. Every accepted step
/// leaves the potential no larger than before; iterates are re-orthonormalized
/// after each step so dimensions are preserved exactly.
///
/// tr(S) = sum w_k^2 L_k is the same for every iterate, so the line search
/// works with the excess ||S - alpha I||_F^2 = tr(S^2) - d alpha^2, which is
/// resolved relative to its own size rather than to tr(S^2).
template <FieldScalar S>
OptimizerReport<S> minimize(const FusionFrame<S>& start, const OptimizerConfig& cfg) {
  cfg.validate();
  OptimizerReport<S> r{start};
  const DimProfile profile = start.profile();
  const double alpha = profile.weighted_dim() / start.d();
  const double base = start.d() * alpha * alpha;
  const Mat<S> centre = scalar_from<S>(alpha) * Mat<S>::Identity(start.d(), start.d());
  auto excess_of = [&](const FusionFrame<S>& f) { return (frame_operator(f) - centre).squaredNorm(); };

  FusionFrame<S> frame = start;
  const Mat<S> s0 = frame_operator(frame);
  const double s_norm = s0.norm();
  double excess = (s0 - centre).squaredNorm();
  auto grad = riemannian_gradient(frame);
  double gnorm = gradient_norm(grad);
  double step = cfg.initial_step.value_or(1.0 / (1.0 + detail::largest_eigenvalue<S>(s0)));
  r.history.push_back({0, base + excess, gnorm, 0.0});

  r.status = OptimizerStatus::MaxIterations;
  int iter = 0;
  while (true) {
    if (gnorm <= cfg.grad_tol) {
      r.status = OptimizerStatus::Converged;
      break;
    }
    if (iter >= cfg.max_iters) break;

    // Below this predicted decrease the Armijo test cannot be resolved in
    // double precision; accept any step that does not increase the excess.
    const double resolution =
        64.0 * std::numeric_limits<double>::epsilon() * (s_norm * std::sqrt(excess) + excess);
    double tau = step;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      const double wanted = cfg.armijo_c * tau * gnorm * gnorm;
      FusionFrame<S> trial = detail::retract(frame, grad, tau);
      const double trial_excess = excess_of(trial);
      if (trial_excess <= excess - wanted || (wanted <= resolution && trial_excess <= excess)) {
        frame = std::move(trial);
        excess = trial_excess;
        accepted = true;
        break;
      }
      tau *= cfg.backtrack_factor;
    }
    if (!accepted) {
      r.status = OptimizerStatus::Stalled;
      break;
    }
    ++iter;
    grad = riemannian_gradient(frame);
    gnorm = gradient_norm(grad);
    r.history.push_back({iter, base + excess, gnorm, tau});
    step = tau / cfg.backtrack_factor;
  }

  r.frame = std::move(frame);
  r.ffp = base + excess;
  r.iterations = iter;
  r.grad_norm = gnorm;
  detail::finish_report(r, cfg);
  return r;
}

/// Seed used for restart `index` of a multistart run with base seed `seed`.
constexpr std::uint64_t restart_seed(std::uint64_t seed, int index) {
  return mix_seed(mix_seed(seed) + static_cast<std::uint64_t>(index));
}

/// Runs `cfg.restarts` independent minimizations from random frames with
/// profile `p` and returns the best (lowest potential, lowest index on ties).
template <FieldScalar S>
OptimizerReport<S> multistart(const DimProfile& p, const OptimizerConfig& cfg) {
  cfg.validate();
  try {
    p.validate_realizable();
  } catch (const Error& e) {
    throw Error(ErrorCode::BadDims, e.what());
  }
  const int n = cfg.restarts;
  std::vector<std::optional<OptimizerReport<S>>> results(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      results[i] = minimize(random_frame<S>(p, restart_seed(cfg.seed, i)), cfg);
    }
  };
  const int threads = std::min(n, cfg.threads > 0 ? cfg.threads : default_thread_count());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (results[i]->ffp < results[best]->ffp) best = i;
  }
  OptimizerReport<S> out = std::move(*results[best]);
  out.best_restart = best;
  for (int i = 0; i < n; ++i) {
    out.restart_values.push_back(results[i]->ffp);
    out.restart_seeds.push_back(restart_seed(cfg.seed, i));
  }
  return out;
}

}  // namespace framekit
