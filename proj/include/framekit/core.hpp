#pragma once

// Subspaces, fusion frames and the quantities defined directly on them:
// frame operator, fusion frame potential, its lower bound, tightness,
// reconstruction and the projection distance between subspace families.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "framekit/error.hpp"
#include "framekit/linalg.hpp"

namespace framekit {

/// Rank threshold relative to the largest singular value.
inline constexpr double kRankTolerance = 1e-10;
/// Per-entry tolerance on basis^H basis - I for a stored basis.
inline constexpr double kOrthonormalTolerance = 1e-12;

template <FieldScalar S>
class Subspace;

template <FieldScalar S>
Subspace<S> orthonormalize(const Mat<S>& raw);

/// A subspace of F^d held as a d x L matrix with orthonormal columns.
template <FieldScalar S>
class Subspace {
 public:
  /// Adopts `basis` as-is after checking orthonormality.
  static Subspace from_orthonormal(Mat<S> basis, double tol = kOrthonormalTolerance) {
    if (basis.cols() < 1 || basis.cols() > basis.rows()) {
      throw Error(ErrorCode::BadDims, "subspace basis must be d x L with 1 <= L <= d");
    }
    const double defect = orthonormality_defect(basis);
    if (!(defect <= tol)) {
      throw Error(ErrorCode::InvalidArgument,
                  "basis columns are not orthonormal (defect " + std::to_string(defect) + ")");
    }
    return Subspace(std::move(basis));
  }

  Eigen::Index ambient_dim() const { return basis_.rows(); }
  Eigen::Index dim() const { return basis_.cols(); }
  const Mat<S>& basis() const { return basis_; }

  Mat<S> projection() const { return basis_ * basis_.adjoint(); }

  /// Max-entry deviation of basis^H basis from the identity.
  static double orthonormality_defect(const Mat<S>& basis) {
    const Mat<S> gram = basis.adjoint() * basis;
    return (gram - Mat<S>::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  }

 private:
  explicit Subspace(Mat<S> basis) : basis_(std::move(basis)) {}

  Mat<S> basis_;

  friend Subspace orthonormalize<S>(const Mat<S>& raw);
};

/// Orthonormal basis of the column space of `raw` (Householder QR with
/// column pivoting). Throws RankDeficient when the smallest singular value is
/// at most 1e-10 times the largest.
template <FieldScalar S>
Subspace<S> orthonormalize(const Mat<S>& raw) {
  const Eigen::Index d = raw.rows();
  const Eigen::Index cols = raw.cols();
  if (cols < 1 || cols > d) {
    throw Error(ErrorCode::BadDims, "cannot span " + std::to_string(cols) +
                                        " independent directions in dimension " + std::to_string(d));
  }
  const auto sv = raw.jacobiSvd().singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smax > 0.0) || !(smin > kRankTolerance * smax)) {
    throw Error(ErrorCode::RankDeficient, "input columns are numerically dependent");
  }
  Eigen::ColPivHouseholderQR<Mat<S>> qr(raw);
  Mat<S> q = qr.householderQ() * Mat<S>::Identity(d, cols);
  return Subspace<S>(std::move(q));
}

template <FieldScalar S>
Mat<S> projection(const Subspace<S>& w) {
  return w.projection();
}

/// Dimensions and weights of a fusion frame, without the subspaces.
struct DimProfile {
  int d = 0;
  std::vector<int> dims;
  std::vector<double> weights;

  static DimProfile from_weights_squared(int d, std::vector<int> dims, const std::vector<double>& w2) {
    DimProfile p{d, std::move(dims), {}};
    p.weights.reserve(w2.size());
    for (double c : w2) {
      if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "squared weights must be positive");
      p.weights.push_back(std::sqrt(c));
    }
    p.validate();
    return p;
  }

  std::size_t size() const { return dims.size(); }

  std::vector<double> weights_squared() const {
    std::vector<double> w2(weights.size());
    std::transform(weights.begin(), weights.end(), w2.begin(), [](double w) { return w * w; });
    return w2;
  }

  int total_dim() const { return std::accumulate(dims.begin(), dims.end(), 0); }

  /// sum_k w_k^2 L_k, which is also trace(S) for any frame with this profile.
  double weighted_dim() const {
    double s = 0.0;
    for (std::size_t k = 0; k < dims.size(); ++k) s += weights[k] * weights[k] * dims[k];
    return s;
  }

  void validate() const {
    if (d < 1) throw Error(ErrorCode::BadDims, "ambient dimension must be positive");
    if (dims.empty()) throw Error(ErrorCode::BadDims, "profile needs at least one member");
    if (dims.size() != weights.size()) {
      throw Error(ErrorCode::ShapeMismatch, "dims and weights have different lengths");
    }
    for (int l : dims) {
      if (l < 1) throw Error(ErrorCode::BadDims, "subspace dimensions must be >= 1");
    }
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw Error(ErrorCode::InvalidArgument, "weights must be positive and finite");
      }
    }
  }

  /// Additionally requires every L_k <= d, which realizable frames need.
  void validate_realizable() const {
    validate();
    for (int l : dims) {
      if (l > d) throw Error(ErrorCode::BadDims, "subspace dimension exceeds ambient dimension");
    }
  }
};

template <FieldScalar S>
struct Member {
  Subspace<S> subspace;
  double weight;
};

/// A finite family of weighted subspaces of F^d. Immutable after construction.
template <FieldScalar S>
class FusionFrame {
 public:
  using Scalar = S;

  FusionFrame(int d, std::vector<Member<S>> members) : d_(d), members_(std::move(members)) {
    if (d_ < 1) throw Error(ErrorCode::BadDims, "ambient dimension must be positive");
    if (members_.empty()) throw Error(ErrorCode::BadDims, "a fusion frame needs at least one member");
    for (const auto& m : members_) {
      if (m.subspace.ambient_dim() != d_) {
        throw Error(ErrorCode::ShapeMismatch, "member subspace lives in a different ambient space");
      }
      if (!(m.weight > 0.0) || !std::isfinite(m.weight)) {
        throw Error(ErrorCode::InvalidArgument, "weights must be positive and finite");
      }
    }
  }

  int d() const { return d_; }
  std::size_t size() const { return members_.size(); }
  const std::vector<Member<S>>& members() const { return members_; }
  const Member<S>& member(std::size_t k) const { return members_.at(k); }
  const Subspace<S>& subspace(std::size_t k) const { return members_.at(k).subspace; }
  double weight(std::size_t k) const { return members_.at(k).weight; }
  double weight_squared(std::size_t k) const { return weight(k) * weight(k); }
  int dim(std::size_t k) const { return static_cast<int>(members_.at(k).subspace.dim()); }

  DimProfile profile() const {
    DimProfile p{d_, {}, {}};
    for (const auto& m : members_) {
      p.dims.push_back(static_cast<int>(m.subspace.dim()));
      p.weights.push_back(m.weight);
    }
    return p;
  }

  /// Copy with member k's subspace replaced.
  FusionFrame with_subspace(std::size_t k, Subspace<S> w) const {
    auto members = members_;
    members.at(k).subspace = std::move(w);
    return FusionFrame(d_, std::move(members));
  }

 private:
  int d_;
  std::vector<Member<S>> members_;
};

/// S = sum_k w_k^2 P_k.
template <FieldScalar S>
Mat<S> frame_operator(const FusionFrame<S>& f) {
  const Eigen::Index d = f.d();
  Mat<S> s = Mat<S>::Zero(d, d);
  for (const auto& m : f.members()) {
    const auto& b = m.subspace.basis();
    s.noalias() += (m.weight * m.weight) * (b * b.adjoint());
  }
  return s;
}

/// Fusion frame potential tr(S^2) of an already-formed frame operator.
template <typename D>
double potential_of_operator(const Eigen::MatrixBase<D>& s) {
  return std::real((s * s).trace());
}

template <FieldScalar S>
double ffp(const FusionFrame<S>& f) {
  return potential_of_operator(frame_operator(f));
}

/// (1/d) (sum_k w_k^2 L_k)^2; attained exactly by tight frames.
inline double ffp_lower_bound(const DimProfile& p) {
  p.validate();
  const double t = p.weighted_dim();
  return t * t / static_cast<double>(p.d);
}

/// ||S - alpha I||_F with alpha = tr(S)/d.
template <FieldScalar S>
double tightness_residual(const FusionFrame<S>& f) {
  const Mat<S> s = frame_operator(f);
  const double alpha = std::real(s.trace()) / f.d();
  return (s - scalar_from<S>(alpha) * Mat<S>::Identity(f.d(), f.d())).norm();
}

/// Returns alpha when ||S - alpha I||_F <= tol * max(1, ||S||_F).
template <FieldScalar S>
std::optional<double> is_tight(const FusionFrame<S>& f, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::ToleranceError, "tightness tolerance must be positive");
  const Mat<S> s = frame_operator(f);
  const double alpha = std::real(s.trace()) / f.d();
  const double residual = (s - scalar_from<S>(alpha) * Mat<S>::Identity(f.d(), f.d())).norm();
  if (alpha > 0.0 && residual <= tol * std::max(1.0, s.norm())) return alpha;
  return std::nullopt;
}

/// (1/alpha) sum_k w_k^2 P_k f, the exact reconstruction for an alpha-tight
/// frame. Throws NotTight if S deviates from alpha I beyond `tol` (relative).
template <FieldScalar S>
Vec<S> reconstruct(const FusionFrame<S>& frame, double alpha, const Vec<S>& f, double tol = 1e-8) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
  if (f.size() != frame.d()) throw Error(ErrorCode::ShapeMismatch, "vector length differs from d");
  const Mat<S> s = frame_operator(frame);
  const double residual = (s - scalar_from<S>(alpha) * Mat<S>::Identity(frame.d(), frame.d())).norm();
  if (!(residual <= tol * std::max(1.0, s.norm()))) {
    throw Error(ErrorCode::NotTight, "frame operator is not alpha I (residual " + std::to_string(residual) + ")");
  }
  Vec<S> out = Vec<S>::Zero(frame.d());
  for (const auto& m : frame.members()) {
    const auto& b = m.subspace.basis();
    out.noalias() += (m.weight * m.weight) * (b * (b.adjoint() * f));
  }
  return out / alpha;
}

/// [sum_k ||P_{A_k} - P_{B_k}||_F^2]^{1/2}.
template <FieldScalar S>
double distance(std::span<const Subspace<S>> a, std::span<const Subspace<S>> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "families have different lengths");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].ambient_dim() != b[k].ambient_dim()) {
      throw Error(ErrorCode::ShapeMismatch, "subspaces live in different ambient spaces");
    }
    acc += (a[k].projection() - b[k].projection()).squaredNorm();
  }
  return std::sqrt(acc);
}

template <FieldScalar S>
std::vector<Subspace<S>> subspaces_of(const FusionFrame<S>& f) {
  std::vector<Subspace<S>> out;
  out.reserve(f.size());
  for (const auto& m : f.members()) out.push_back(m.subspace);
  return out;
}

template <FieldScalar S>
double distance(const FusionFrame<S>& a, const FusionFrame<S>& b) {
  if (a.d() != b.d()) throw Error(ErrorCode::ShapeMismatch, "frames live in different dimensions");
  const auto sa = subspaces_of(a);
  const auto sb = subspaces_of(b);
  return distance<S>(std::span<const Subspace<S>>(sa), std::span<const Subspace<S>>(sb));
}

/// Frame whose k-th subspace spans the columns of a d x L_k standard normal
/// matrix. Deterministic in `seed`.
template <FieldScalar S>
FusionFrame<S> random_frame(const DimProfile& p, std::uint64_t seed) {
  try {
    p.validate_realizable();
  } catch (const Error& e) {
    throw Error(ErrorCode::BadDims, e.what());
  }
  std::mt19937_64 rng(seed);
  std::vector<Member<S>> members;
  members.reserve(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    members.push_back({orthonormalize<S>(gaussian_matrix<S>(p.d, p.dims[k], rng)), p.weights[k]});
  }
  return FusionFrame<S>(p.d, std::move(members));
}

/// Image of the frame under a unitary U: every basis B_k becomes U B_k.
template <FieldScalar S>
FusionFrame<S> transformed(const FusionFrame<S>& f, const Mat<S>& u) {
  if (u.rows() != f.d() || u.cols() != f.d()) throw Error(ErrorCode::ShapeMismatch, "U must be d x d");
  std::vector<Member<S>> members;
  members.reserve(f.size());
  for (const auto& m : f.members()) {
    members.push_back({Subspace<S>::from_orthonormal(u * m.subspace.basis(), 1e-10), m.weight});
  }
  return FusionFrame<S>(f.d(), std::move(members));
}

}  // namespace framekit
