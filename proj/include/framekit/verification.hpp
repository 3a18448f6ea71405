#pragma once

// The full structure check run by `framekit verify`: class membership,
// eigenoperator-class properties, minimizer clauses, the I_J prediction and
// the prefix/suffix decomposition, stopping at the first failing clause.

#include <optional>
#include <string>
#include <vector>

#include "framekit/irregularity.hpp"
#include "framekit/spectral.hpp"

namespace framekit {

struct VerificationOutcome {
  std::vector<double> lambdas;
  std::vector<int> multiplicities;
  std::optional<IndexPartition> partition;
  std::optional<StructureReport> report;
  std::optional<bool> ij_prediction;
  std::optional<Decomposition> decomposition;
  bool near_degenerate = false;
  std::optional<std::string> failed_clause;
  std::string message;

  bool in_class_E() const { return partition && partition->in_class_E; }
  bool passed() const { return !failed_clause.has_value(); }
};

template <FieldScalar S>
VerificationOutcome verify_all(const FusionFrame<S>& f, double tol = kDefaultMembershipTol,
                               double cluster_tol = kDefaultClusterTol) {
  VerificationOutcome out;
  auto fail = [&](std::string clause, std::string message) {
    out.failed_clause = std::move(clause);
    out.message = std::move(message);
    return out;
  };

  const auto e = eigenstructure<S>(frame_operator(f), cluster_tol);
  out.lambdas = e.lambdas;
  for (std::size_t j = 0; j < e.J(); ++j) out.multiplicities.push_back(e.multiplicity(j));
  out.near_degenerate = e.near_degenerate;
  try {
    out.partition = index_sets(f, e, tol);
  } catch (const Error& err) {
    return fail("membership", err.what());
  }
  if (!out.partition->in_class_E) return fail("class_E", "some member lies in no eigenspace of S");

  out.report = verify_minimizer_structure(f, tol, cluster_tol);
  if (auto clause = out.report->first_failure()) return fail(*clause, "structure clause failed");

  try {
    out.ij_prediction = check_IJ_prediction(f, tol, cluster_tol);
  } catch (const Error& err) {
    return fail("IJ_prediction", err.what());
  }
  if (!*out.ij_prediction) return fail("IJ_prediction", "I_J differs from {N0, ..., K}");

  try {
    out.decomposition = decompose(f, tol, cluster_tol);
  } catch (const StructureError& err) {
    return fail(err.clause(), err.what());
  }
  return out;
}

}  // namespace framekit
