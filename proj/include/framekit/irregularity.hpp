#pragma once

// Irregularity of a decreasing weight sequence relative to (L, d), the
// fundamental inequality, the closed-form minimum of the potential and the
// prefix/suffix decomposition of structured minimizers.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "framekit/core.hpp"
#include "framekit/spectral.hpp"

namespace framekit {

struct IrregularityResult {
  /// First (1-based) index j at which (d - sum_{k<=j} L_k) c_j <= sum_{k>j} L_k c_k.
  int n0 = 1;
  /// The predicate for j = 1..K (stored 0-based).
  std::vector<bool> predicate_trace;

  int irregularity() const { return n0 - 1; }
};

/// Scans the inequality (d - sum_{k<=j} L_k) c_j <= sum_{k>j} L_k c_k for
/// j = 1..K. Requires c non-increasing and d <= sum L_k. Ties count as the
/// inequality holding; empty sums are zero.
inline IrregularityResult irregularity(int d, std::span<const int> dims, std::span<const double> c) {
  if (dims.size() != c.size()) throw Error(ErrorCode::ShapeMismatch, "dims and sequence lengths differ");
  if (dims.empty()) throw Error(ErrorCode::BadDims, "empty sequence");
  if (d < 1) throw Error(ErrorCode::BadDims, "ambient dimension must be positive");
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (dims[k] < 1) throw Error(ErrorCode::BadDims, "subspace dimensions must be >= 1");
    if (!(c[k] > 0.0)) throw Error(ErrorCode::InvalidArgument, "sequence must be positive");
    if (k > 0 && c[k] > c[k - 1]) throw Error(ErrorCode::NotSorted, "sequence must be non-increasing");
  }
  const long total = std::accumulate(dims.begin(), dims.end(), 0L);
  if (d > total) {
    throw Error(ErrorCode::DimensionDeficit,
                "d = " + std::to_string(d) + " exceeds sum of dimensions " + std::to_string(total));
  }

  const std::size_t K = c.size();
  // tail[j] = sum_{k >= j} L_k c_k (0-based), accumulated from the end.
  std::vector<double> tail(K + 1, 0.0);
  for (std::size_t k = K; k-- > 0;) tail[k] = tail[k + 1] + dims[k] * c[k];

  IrregularityResult r;
  r.predicate_trace.resize(K);
  long head = 0;
  bool found = false;
  for (std::size_t j = 0; j < K; ++j) {
    head += dims[j];
    const double lhs = static_cast<double>(d - head) * c[j];
    r.predicate_trace[j] = lhs <= tail[j + 1];
    if (r.predicate_trace[j] && !found) {
      r.n0 = static_cast<int>(j) + 1;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::InternalInvariantViolation, "inequality fails at j = K");
  return r;
}

/// max_k w_k^2 <= (1/d) sum_k w_k^2 L_k, evaluated as d max_k w_k^2 <= sum.
inline bool fundamental_inequality(const DimProfile& p) {
  p.validate();
  const auto w2 = p.weights_squared();
  const double top = *std::max_element(w2.begin(), w2.end());
  return static_cast<double>(p.d) * top <= p.weighted_dim();
}

/// Profile reordered by non-increasing weight. order[i] is the original
/// index of the member at sorted position i.
struct SortedProfile {
  DimProfile profile;
  std::vector<std::size_t> order;
};

/// Stable sort by weight; among equal weights, members flagged in
/// `last_among_ties` are placed after the others.
inline SortedProfile sort_by_weight(const DimProfile& p, const std::vector<bool>& last_among_ties = {}) {
  p.validate();
  SortedProfile s;
  s.order.resize(p.size());
  std::iota(s.order.begin(), s.order.end(), std::size_t{0});
  auto flag = [&](std::size_t k) { return !last_among_ties.empty() && last_among_ties[k]; };
  std::stable_sort(s.order.begin(), s.order.end(), [&](std::size_t a, std::size_t b) {
    if (p.weights[a] != p.weights[b]) return p.weights[a] > p.weights[b];
    return !flag(a) && flag(b);
  });
  s.profile.d = p.d;
  for (std::size_t k : s.order) {
    s.profile.dims.push_back(p.dims[k]);
    s.profile.weights.push_back(p.weights[k]);
  }
  return s;
}

inline IrregularityResult irregularity_of(const SortedProfile& s) {
  const auto c = s.profile.weights_squared();
  return irregularity(s.profile.d, s.profile.dims, c);
}

struct MinimumValue {
  double value = 0.0;
  int n0 = 1;
  std::vector<std::size_t> order;
};

/// sum_{k<N0} w_k^4 L_k + (sum_{k>=N0} w_k^2 L_k)^2 / (d - sum_{k<N0} L_k),
/// over weights sorted non-increasingly. Equals ffp_lower_bound when N0 = 1.
inline MinimumValue minimum_value_detail(const DimProfile& p) {
  const SortedProfile s = sort_by_weight(p);
  const auto ir = irregularity_of(s);
  MinimumValue mv;
  mv.n0 = ir.n0;
  mv.order = s.order;
  if (ir.n0 == 1) {
    mv.value = ffp_lower_bound(p);
    return mv;
  }
  const auto& q = s.profile;
  const std::size_t split = static_cast<std::size_t>(ir.n0 - 1);
  double head = 0.0;
  int head_dims = 0;
  for (std::size_t k = 0; k < split; ++k) {
    const double w2 = q.weights[k] * q.weights[k];
    head += w2 * w2 * q.dims[k];
    head_dims += q.dims[k];
  }
  const int rest = q.d - head_dims;
  if (rest < 1) {
    throw Error(ErrorCode::InternalInvariantViolation, "prefix exhausts the ambient dimension");
  }
  double tail = 0.0;
  for (std::size_t k = split; k < q.size(); ++k) tail += q.weights[k] * q.weights[k] * q.dims[k];
  mv.value = head + tail * tail / rest;
  return mv;
}

inline double minimum_value(const DimProfile& p) { return minimum_value_detail(p).value; }

namespace detail {

template <FieldScalar S>
IndexPartition partition_in_class_E(const FusionFrame<S>& f, double tol, double cluster_tol) {
  const auto e = eigenstructure<S>(frame_operator(f), cluster_tol);
  auto part = index_sets(f, e, tol);
  if (!part.in_class_E) throw Error(ErrorCode::NotInClassE, "frame is not in the eigenoperator class");
  return part;
}

}  // namespace detail

/// For a frame in the eigenoperator class, checks that the members of the
/// smallest eigenvalue are exactly the weight-sorted positions N0..K.
template <FieldScalar S>
bool check_IJ_prediction(const FusionFrame<S>& f, double tol = kDefaultMembershipTol,
                         double cluster_tol = kDefaultClusterTol) {
  const auto part = detail::partition_in_class_E(f, tol, cluster_tol);
  const auto& last = part.index_sets.back();
  std::vector<bool> in_last(f.size(), false);
  for (std::size_t k : last) in_last[k] = true;
  const SortedProfile s = sort_by_weight(f.profile(), in_last);
  const auto ir = irregularity_of(s);
  const std::size_t split = static_cast<std::size_t>(ir.n0 - 1);
  if (last.size() != f.size() - split) return false;
  for (std::size_t i = split; i < f.size(); ++i) {
    if (!in_last[s.order[i]]) return false;
  }
  return true;
}

struct Decomposition {
  int n0 = 1;
  std::vector<std::size_t> prefix;  // original member indices
  std::vector<std::size_t> suffix;
  /// Tight-frame constant of the suffix on the complement of the prefix.
  double alpha = 0.0;
  /// ||sum_{suffix} w_k^2 P_k - alpha Pi_complement||_F
  double residual = 0.0;
};

/// Splits a structured minimizer into its orthogonal prefix (sorted positions
/// 1..N0-1) and the suffix that is tight on the orthogonal complement of the
/// prefix. Throws StructureError naming the first failing clause.
template <FieldScalar S>
Decomposition decompose(const FusionFrame<S>& f, double tol = kDefaultMembershipTol,
                        double cluster_tol = kDefaultClusterTol) {
  const StructureReport report = verify_minimizer_structure(f, tol, cluster_tol);
  if (auto failed = report.first_failure()) {
    throw StructureError(*failed, "minimizer structure check failed");
  }
  std::vector<bool> in_last(f.size(), false);
  for (std::size_t k : report.partition.index_sets.back()) in_last[k] = true;
  const SortedProfile s = sort_by_weight(f.profile(), in_last);
  const auto ir = irregularity_of(s);

  Decomposition dec;
  dec.n0 = ir.n0;
  const std::size_t split = static_cast<std::size_t>(ir.n0 - 1);
  dec.prefix.assign(s.order.begin(), s.order.begin() + split);
  dec.suffix.assign(s.order.begin() + split, s.order.end());

  const Mat<S> s_op = frame_operator(f);
  const double scale = std::max(1.0, report.lambdas.front());
  Mat<S> complement = Mat<S>::Identity(f.d(), f.d());
  int prefix_dims = 0;
  for (std::size_t a = 0; a < dec.prefix.size(); ++a) {
    const auto& ba = f.subspace(dec.prefix[a]).basis();
    for (std::size_t b = a + 1; b < dec.prefix.size(); ++b) {
      if ((ba.adjoint() * f.subspace(dec.prefix[b]).basis()).norm() > tol) {
        throw StructureError("prefix_orthogonality", "prefix members are not mutually orthogonal");
      }
    }
    const double w2 = f.weight_squared(dec.prefix[a]);
    if ((s_op * ba - scalar_from<S>(w2) * ba).norm() > tol * scale) {
      throw StructureError("prefix_weights", "prefix member is not an eigen-subspace for w_k^2");
    }
    complement -= ba * ba.adjoint();
    prefix_dims += f.dim(dec.prefix[a]);
  }

  const int rest = f.d() - prefix_dims;
  if (rest < 1) throw StructureError("suffix_tight", "prefix fills the whole space");
  Mat<S> suffix_op = Mat<S>::Zero(f.d(), f.d());
  double mass = 0.0;
  for (std::size_t k : dec.suffix) {
    const auto& b = f.subspace(k).basis();
    suffix_op.noalias() += f.weight_squared(k) * (b * b.adjoint());
    mass += f.weight_squared(k) * f.dim(k);
  }
  dec.alpha = mass / rest;
  dec.residual = (suffix_op - scalar_from<S>(dec.alpha) * complement).norm();
  if (dec.residual > tol * std::max(1.0, dec.alpha)) {
    throw StructureError("suffix_tight", "suffix is not tight on the complement (residual " +
                                             std::to_string(dec.residual) + ")");
  }
  return dec;
}

}  // namespace framekit
