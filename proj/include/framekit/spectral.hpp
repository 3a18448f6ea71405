#pragma once

// Eigenstructure of the frame operator and the checks built on it: which
// members are eigen-subspaces (the class of frames whose projections are
// eigenoperators of S), the index sets I_j, and the structure clauses that
// hold for such frames and for their potential minimizers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "framekit/core.hpp"

namespace framekit {

inline constexpr double kDefaultClusterTol = 1e-8;
inline constexpr double kDefaultMembershipTol = 1e-8;
/// Eigenvalues below this fraction of lambda_1 count as zero.
inline constexpr double kZeroEigenvalueRatio = 1e-12;

/// Distinct eigenvalues (decreasing) with orthonormal eigenspace bases.
template <FieldScalar S>
struct Eigenstructure {
  std::vector<double> lambdas;
  std::vector<Mat<S>> eigenbases;
  double cluster_tol = kDefaultClusterTol;
  /// Smallest gap between consecutive clusters; +inf when J = 1.
  double min_gap = std::numeric_limits<double>::infinity();
  /// Largest spread of raw eigenvalues inside one cluster.
  double max_spread = 0.0;
  /// Set when min_gap is within 100x of the separation threshold.
  bool near_degenerate = false;

  std::size_t J() const { return lambdas.size(); }
  int multiplicity(std::size_t j) const { return static_cast<int>(eigenbases.at(j).cols()); }
  Mat<S> projector(std::size_t j) const { return eigenbases.at(j) * eigenbases.at(j).adjoint(); }
  Eigen::Index d() const { return eigenbases.empty() ? 0 : eigenbases.front().rows(); }
};

/// Groups the spectrum of a Hermitian matrix by single linkage: consecutive
/// sorted eigenvalues closer than cluster_tol * max(1, lambda_max) share a
/// cluster, whose value is the cluster mean.
template <FieldScalar S>
Eigenstructure<S> eigenstructure(const Mat<S>& s, double cluster_tol = kDefaultClusterTol) {
  if (s.rows() != s.cols() || s.rows() == 0) throw Error(ErrorCode::ShapeMismatch, "matrix must be square");
  if (!(cluster_tol > 0.0)) throw Error(ErrorCode::ToleranceError, "cluster_tol must be positive");
  if (!(hermitian_defect(s) <= 1e-10 * s.norm())) {
    throw Error(ErrorCode::NotHermitian, "matrix is not Hermitian within 1e-10 relative");
  }
  const Mat<S> sym = 0.5 * (s + s.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat<S>> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::InternalInvariantViolation, "eigensolver failed");
  }
  const auto& values = solver.eigenvalues();  // ascending
  const auto& vectors = solver.eigenvectors();
  const Eigen::Index d = s.rows();

  Eigenstructure<S> out;
  out.cluster_tol = cluster_tol;
  const double threshold = cluster_tol * std::max(1.0, values(d - 1));

  // Walk from the top of the spectrum down.
  Eigen::Index start = d - 1;
  while (start >= 0) {
    Eigen::Index end = start;  // cluster spans [end, start]
    while (end - 1 >= 0 && values(end) - values(end - 1) <= threshold) --end;
    const Eigen::Index count = start - end + 1;
    out.lambdas.push_back(values.segment(end, count).mean());
    out.max_spread = std::max(out.max_spread, values(start) - values(end));
    Mat<S> cols(d, count);
    for (Eigen::Index i = 0; i < count; ++i) cols.col(i) = vectors.col(start - i);
    out.eigenbases.push_back(orthonormalize<S>(cols).basis());
    if (end - 1 >= 0) out.min_gap = std::min(out.min_gap, values(end) - values(end - 1));
    start = end - 1;
  }
  out.near_degenerate = out.min_gap <= 100.0 * threshold;
  return out;
}

/// Assignment of members to eigenspaces.
struct IndexPartition {
  /// j(k) for each member, empty when W_k lies in no eigenspace.
  std::vector<std::optional<std::size_t>> assignment;
  /// I_j for j = 0..J-1, member indices ascending.
  std::vector<std::vector<std::size_t>> index_sets;
  bool in_class_E = false;
  /// ||(I - Pi_{E_j}) B_k||_F for the assigned j (minimum over j otherwise).
  std::vector<double> containment_residuals;
  /// ||S P_k - lambda_j P_k||_F for the same j.
  std::vector<double> operator_residuals;
};

/// k joins I_j when S P_k = lambda_j P_k, tested both as an operator identity
/// (||S P_k - lambda_j P_k||_F <= tol max(1, lambda_j) sqrt(L_k)) and as
/// containment (||(I - Pi_{E_j}) B_k||_F <= tol). The two tests must agree;
/// a disagreement means tol is too tight for the eigenvalue separation and
/// raises CriterionDisagreement.
template <FieldScalar S>
IndexPartition index_sets(const FusionFrame<S>& f, const Eigenstructure<S>& e, double tol = kDefaultMembershipTol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::ToleranceError, "membership tolerance must be positive");
  if (e.d() != f.d()) throw Error(ErrorCode::ShapeMismatch, "eigenstructure dimension differs from frame");
  const Mat<S> s = frame_operator(f);
  const std::size_t J = e.J();
  std::vector<Mat<S>> projectors;
  projectors.reserve(J);
  for (std::size_t j = 0; j < J; ++j) projectors.push_back(e.projector(j));

  IndexPartition part;
  part.index_sets.resize(J);
  part.assignment.resize(f.size());
  part.containment_residuals.assign(f.size(), std::numeric_limits<double>::infinity());
  part.operator_residuals.assign(f.size(), std::numeric_limits<double>::infinity());

  for (std::size_t k = 0; k < f.size(); ++k) {
    const Mat<S>& b = f.subspace(k).basis();
    const Mat<S> p = b * b.adjoint();
    const Mat<S> sp = s * p;
    const double root_l = std::sqrt(static_cast<double>(b.cols()));
    for (std::size_t j = 0; j < J; ++j) {
      const double lambda = e.lambdas[j];
      const double op_res = (sp - scalar_from<S>(lambda) * p).norm();
      const double cont_res = (b - projectors[j] * b).norm();
      const bool op_ok = op_res <= tol * std::max(1.0, lambda) * root_l;
      const bool cont_ok = cont_res <= tol;
      if (op_ok != cont_ok) {
        throw Error(ErrorCode::CriterionDisagreement,
                    "member " + std::to_string(k) + ", eigenvalue " + std::to_string(j) +
                        ": operator residual " + std::to_string(op_res) + " vs containment residual " +
                        std::to_string(cont_res));
      }
      if (op_ok) {
        if (part.assignment[k]) {
          throw Error(ErrorCode::ToleranceError, "tolerance admits member " + std::to_string(k) +
                                                     " into several eigenspaces");
        }
        part.assignment[k] = j;
        part.index_sets[j].push_back(k);
        part.containment_residuals[k] = cont_res;
        part.operator_residuals[k] = op_res;
      } else if (!part.assignment[k] && cont_res < part.containment_residuals[k]) {
        part.containment_residuals[k] = cont_res;
        part.operator_residuals[k] = op_res;
      }
    }
  }
  part.in_class_E = std::all_of(part.assignment.begin(), part.assignment.end(),
                                [](const auto& a) { return a.has_value(); });
  return part;
}

struct ClauseResult {
  std::string name;
  bool passed;
};

/// Clause-by-clause outcome of the structure checks.
struct StructureReport {
  IndexPartition partition;
  std::vector<double> lambdas;
  std::vector<int> multiplicities;
  double tol = kDefaultMembershipTol;
  bool near_degenerate = false;

  // Properties of every frame in the eigenoperator class.
  bool partition_ok = false;
  double lambdaJ_identity_residual = 0.0;
  std::vector<double> tight_residuals;  // per j
  bool zero_eigenvalue_ok = false;

  // Properties of potential minimizers in that class (per j < J).
  bool has_minimizer_checks = false;
  std::vector<bool> direct_sum;
  std::vector<bool> orthogonal;
  std::vector<bool> weights_match;
  std::vector<bool> ofb;
  bool last_tight = false;

  std::vector<ClauseResult> clauses;

  std::size_t J() const { return lambdas.size(); }

  bool passed() const {
    return std::all_of(clauses.begin(), clauses.end(), [](const ClauseResult& c) { return c.passed; });
  }

  std::optional<std::string> first_failure() const {
    for (const auto& c : clauses) {
      if (!c.passed) return c.name;
    }
    return std::nullopt;
  }
};

namespace detail {

template <FieldScalar S>
StructureReport class_E_report(const FusionFrame<S>& f, double tol, double cluster_tol) {
  const Mat<S> s = frame_operator(f);
  const auto e = eigenstructure<S>(s, cluster_tol);
  StructureReport r;
  r.partition = index_sets(f, e, tol);
  r.lambdas = e.lambdas;
  for (std::size_t j = 0; j < e.J(); ++j) r.multiplicities.push_back(e.multiplicity(j));
  r.tol = tol;
  r.near_degenerate = e.near_degenerate;
  if (!r.partition.in_class_E) {
    std::string missing;
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (!r.partition.assignment[k]) missing += (missing.empty() ? "" : ",") + std::to_string(k);
    }
    throw Error(ErrorCode::NotInClassE, "members not contained in any eigenspace: " + missing);
  }

  const std::size_t J = e.J();
  const double scale = std::max(1.0, e.lambdas.front());

  // (1), (3): the I_j cover {0..K-1} and are pairwise disjoint.
  std::vector<int> hits(f.size(), 0);
  for (const auto& set : r.partition.index_sets) {
    for (std::size_t k : set) ++hits.at(k);
  }
  r.partition_ok = std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });

  // (2): containment residuals live in the partition.
  const double max_containment =
      *std::max_element(r.partition.containment_residuals.begin(), r.partition.containment_residuals.end());

  // (4): lambda_J dim(E_J) = sum_{k in I_J} w_k^2 L_k.
  double last_sum = 0.0;
  for (std::size_t k : r.partition.index_sets.back()) last_sum += f.weight_squared(k) * f.dim(k);
  r.lambdaJ_identity_residual = std::abs(e.lambdas.back() - last_sum / e.multiplicity(J - 1));

  // (5): {W_k}_{k in I_j} is lambda_j-tight on E_j.
  r.tight_residuals.resize(J);
  for (std::size_t j = 0; j < J; ++j) {
    const Mat<S> pi = e.projector(j);
    Mat<S> partial = Mat<S>::Zero(f.d(), f.d());
    for (std::size_t k : r.partition.index_sets[j]) {
      const auto& b = f.subspace(k).basis();
      partial.noalias() += f.weight_squared(k) * (b * b.adjoint());
    }
    r.tight_residuals[j] = (pi * partial * pi - scalar_from<S>(e.lambdas[j]) * pi).norm();
  }

  // (6): I_j is empty exactly when lambda_j vanishes.
  r.zero_eigenvalue_ok = true;
  const double zero_cut = kZeroEigenvalueRatio * std::max(e.lambdas.front(), 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    const bool empty = r.partition.index_sets[j].empty();
    const bool zero = std::abs(e.lambdas[j]) <= zero_cut;
    if (empty != zero) r.zero_eigenvalue_ok = false;
  }

  const bool tight_ok = std::all_of(r.tight_residuals.begin(), r.tight_residuals.end(),
                                    [&](double t) { return t <= tol * scale; });
  r.clauses = {
      {"partition", r.partition_ok},
      {"containment", max_containment <= tol},
      {"lambdaJ_identity", r.lambdaJ_identity_residual <= tol * scale},
      {"tight", tight_ok},
      {"zero_eigenvalue", r.zero_eigenvalue_ok},
  };
  return r;
}

}  // namespace detail

/// Checks the six properties shared by all frames whose projections are
/// eigenoperators of S. Throws NotInClassE when some member lies in no
/// eigenspace.
template <FieldScalar S>
StructureReport verify_theorem31(const FusionFrame<S>& f, double tol = kDefaultMembershipTol,
                                 double cluster_tol = kDefaultClusterTol) {
  return detail::class_E_report(f, tol, cluster_tol);
}

/// Adds the minimizer clauses: for j < J the members of I_j are pairwise
/// orthogonal, fill E_j exactly (sum of L_k = dim E_j) and carry w_k^2 =
/// lambda_j; the members of I_J form a tight frame for E_J.
template <FieldScalar S>
StructureReport verify_minimizer_structure(const FusionFrame<S>& f, double tol = kDefaultMembershipTol,
                                           double cluster_tol = kDefaultClusterTol) {
  StructureReport r = detail::class_E_report(f, tol, cluster_tol);
  r.has_minimizer_checks = true;
  const std::size_t J = r.J();
  const double scale = std::max(1.0, r.lambdas.front());
  bool all_direct = true, all_orth = true, all_weights = true;
  for (std::size_t j = 0; j + 1 < J; ++j) {
    const auto& set = r.partition.index_sets[j];
    int dims = 0;
    for (std::size_t k : set) dims += f.dim(k);
    const bool direct = dims == r.multiplicities[j];
    bool orth = true;
    for (std::size_t a = 0; a < set.size(); ++a) {
      for (std::size_t b = a + 1; b < set.size(); ++b) {
        const auto& ba = f.subspace(set[a]).basis();
        const auto& bb = f.subspace(set[b]).basis();
        // ||P_a P_b||_F = ||B_a^H B_b||_F
        if ((ba.adjoint() * bb).norm() > tol) orth = false;
      }
    }
    bool weights = true;
    for (std::size_t k : set) {
      if (std::abs(f.weight_squared(k) - r.lambdas[j]) > tol * r.lambdas[j]) weights = false;
    }
    r.direct_sum.push_back(direct);
    r.orthogonal.push_back(orth);
    r.weights_match.push_back(weights);
    r.ofb.push_back(direct && orth && weights);
    all_direct = all_direct && direct;
    all_orth = all_orth && orth;
    all_weights = all_weights && weights;
  }
  r.last_tight = r.tight_residuals.back() <= tol * scale;
  r.clauses.push_back({"direct_sum", all_direct});
  r.clauses.push_back({"orthogonality", all_orth});
  r.clauses.push_back({"weights", all_weights});
  r.clauses.push_back({"last_tight", r.last_tight});
  return r;
}

/// T = [w_1 B_1, ..., w_K B_K], mapping block coefficient vectors to
/// sum_k w_k B_k c_k. T T^H is the frame operator.
template <FieldScalar S>
struct SynthesisOperator {
  Mat<S> matrix;
  std::vector<Eigen::Index> offsets;  // first column of each block

  Mat<S> frame_operator() const { return matrix * matrix.adjoint(); }
  Mat<S> gram() const { return matrix.adjoint() * matrix; }
};

template <FieldScalar S>
SynthesisOperator<S> synthesis(const FusionFrame<S>& f) {
  Eigen::Index total = 0;
  for (const auto& m : f.members()) total += m.subspace.dim();
  SynthesisOperator<S> t;
  t.matrix.resize(f.d(), total);
  Eigen::Index col = 0;
  for (const auto& m : f.members()) {
    t.offsets.push_back(col);
    t.matrix.middleCols(col, m.subspace.dim()) = m.weight * m.subspace.basis();
    col += m.subspace.dim();
  }
  return t;
}

}  // namespace framekit
