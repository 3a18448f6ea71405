#pragma once

// JSON reading and writing: the fusion frame file format, optimizer configs
// and the reports emitted by the command-line tool.
//
// Frame files look like
//   { "field": "real" | "complex", "d": 3,
//     "members": [ { "weight": 1.0, "basis": [[...], ...] } ] }
// where "basis" lists the d rows of a d x L matrix; complex entries are
// [re, im] pairs. Member indices in reports are 1-based.

#include <cstdio>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "framekit/core.hpp"
#include "framekit/optimizer.hpp"
#include "framekit/verification.hpp"

namespace framekit {

using json = nlohmann::json;

/// A loaded frame of either field plus loader warnings.
struct LoadedFrame {
  std::variant<FusionFrame<double>, FusionFrame<std::complex<double>>> frame;
  std::vector<std::string> warnings;

  Field field() const { return frame.index() == 0 ? Field::Real : Field::Complex; }
};

/// Bases within this orthonormality defect are kept as stored.
inline constexpr double kVerbatimBasisTolerance = 1e-14;
/// Projector change beyond which re-orthonormalization emits a warning.
inline constexpr double kSpanWarningTolerance = 1e-8;

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

inline double number_of(const json& v, const std::string& where) {
  if (!v.is_number()) parse_fail(where + ": expected a number");
  return v.get<double>();
}

template <FieldScalar S>
S scalar_of(const json& v, const std::string& where) {
  if constexpr (is_complex<S>::value) {
    if (v.is_number()) return S(v.get<double>(), 0.0);
    if (!v.is_array() || v.size() != 2) parse_fail(where + ": expected [re, im]");
    return S(number_of(v[0], where), number_of(v[1], where));
  } else {
    return number_of(v, where);
  }
}

template <FieldScalar S>
Mat<S> matrix_of(const json& rows, int d, const std::string& where) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != d) {
    parse_fail(where + ": basis must list " + std::to_string(d) + " rows");
  }
  if (!rows[0].is_array() || rows[0].empty()) parse_fail(where + ": basis rows must be non-empty arrays");
  const auto cols = static_cast<Eigen::Index>(rows[0].size());
  Mat<S> m(d, cols);
  for (int i = 0; i < d; ++i) {
    if (!rows[i].is_array() || static_cast<Eigen::Index>(rows[i].size()) != cols) {
      parse_fail(where + ": basis rows have unequal lengths");
    }
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scalar_of<S>(rows[i][j], where);
  }
  return m;
}

template <FieldScalar S>
FusionFrame<S> frame_of(const json& doc, int d, std::vector<std::string>& warnings) {
  const auto& members = doc.at("members");
  if (!members.is_array() || members.empty()) parse_fail("\"members\" must be a non-empty array");
  std::vector<Member<S>> out;
  for (std::size_t k = 0; k < members.size(); ++k) {
    const std::string where = "member " + std::to_string(k + 1);
    const auto& m = members[k];
    if (!m.is_object() || !m.contains("weight") || !m.contains("basis")) {
      parse_fail(where + ": needs \"weight\" and \"basis\"");
    }
    const double w = number_of(m["weight"], where);
    const Mat<S> raw = matrix_of<S>(m["basis"], d, where);
    if (!raw.allFinite()) parse_fail(where + ": non-finite basis entry");
    if (Subspace<S>::orthonormality_defect(raw) <= kVerbatimBasisTolerance) {
      out.push_back({Subspace<S>::from_orthonormal(raw, kOrthonormalTolerance), w});
      continue;
    }
    Subspace<S> sub = orthonormalize<S>(raw);
    // Compare against the least-squares projector of the raw columns.
    const Mat<S> ls = raw * raw.completeOrthogonalDecomposition().pseudoInverse();
    const double change = (sub.projection() - ls).norm();
    if (change > kSpanWarningTolerance) {
      warnings.push_back(where + ": re-orthonormalization moved the span by " + std::to_string(change));
    }
    out.push_back({std::move(sub), w});
  }
  return FusionFrame<S>(d, std::move(out));
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <FieldScalar S>
std::string format_scalar(const S& x) {
  if constexpr (is_complex<S>::value) {
    return "[" + format_double(x.real()) + ", " + format_double(x.imag()) + "]";
  } else {
    return format_double(x);
  }
}

}  // namespace detail

/// Parses a frame document. Malformed input raises ParseError; a
/// structurally invalid frame raises the corresponding core error.
inline LoadedFrame parse_frame(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!doc.is_object()) detail::parse_fail("frame document must be an object");
  if (!doc.contains("d") || !doc["d"].is_number_integer()) detail::parse_fail("\"d\" must be an integer");
  if (!doc.contains("members")) detail::parse_fail("missing \"members\"");
  const int d = doc["d"].get<int>();
  if (d < 1) throw Error(ErrorCode::BadDims, "ambient dimension must be positive");
  const std::string field = doc.value("field", "real");

  std::vector<std::string> warnings;
  if (field == "real") {
    auto f = detail::frame_of<double>(doc, d, warnings);
    return {std::move(f), std::move(warnings)};
  }
  if (field == "complex") {
    auto f = detail::frame_of<std::complex<double>>(doc, d, warnings);
    return {std::move(f), std::move(warnings)};
  }
  detail::parse_fail("\"field\" must be \"real\" or \"complex\"");
}

/// Canonical text: sorted keys, one member per line, %.17g numbers. Saving a
/// loaded canonical file reproduces it byte for byte.
template <FieldScalar S>
std::string format_frame(const FusionFrame<S>& f) {
  std::ostringstream os;
  os << "{\n  \"d\": " << f.d() << ",\n  \"field\": \"" << to_string(field_of<S>) << "\",\n  \"members\": [\n";
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Mat<S>& b = f.subspace(k).basis();
    os << "    {\"basis\": [";
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      os << (i ? ", [" : "[");
      for (Eigen::Index j = 0; j < b.cols(); ++j) os << (j ? ", " : "") << detail::format_scalar<S>(b(i, j));
      os << "]";
    }
    os << "], \"weight\": " << detail::format_double(f.weight(k)) << "}" << (k + 1 < f.size() ? "," : "") << "\n";
  }
  os << "  ]\n}\n";
  return os.str();
}

inline std::string format_frame(const LoadedFrame& f) {
  return std::visit([](const auto& fr) { return format_frame(fr); }, f.frame);
}

// Report serialization ------------------------------------------------------

inline json one_based(const std::vector<std::size_t>& idx) {
  json a = json::array();
  for (std::size_t k : idx) a.push_back(k + 1);
  return a;
}

inline json profile_json(const DimProfile& p) {
  return {{"d", p.d}, {"dims", p.dims}, {"weights", p.weights}, {"weights2", p.weights_squared()}};
}

inline json to_json(const IndexPartition& part) {
  json sets = json::array();
  for (const auto& s : part.index_sets) sets.push_back(one_based(s));
  json assign = json::array();
  for (const auto& a : part.assignment) assign.push_back(a ? json(*a + 1) : json(nullptr));
  return {{"in_class_E", part.in_class_E},
          {"index_sets", sets},
          {"assignment", assign},
          {"containment_residuals", part.containment_residuals},
          {"operator_residuals", part.operator_residuals}};
}

inline json to_json(const StructureReport& r) {
  json sets = json::array();
  for (const auto& s : r.partition.index_sets) sets.push_back(one_based(s));
  json clauses = {{"partition", r.partition_ok},
                  {"containment_residuals", r.partition.containment_residuals},
                  {"lambdaJ_identity_residual", r.lambdaJ_identity_residual},
                  {"tight_residuals", r.tight_residuals},
                  {"zero_eigenvalue", r.zero_eigenvalue_ok}};
  if (r.has_minimizer_checks) {
    clauses["direct_sum"] = r.direct_sum;
    clauses["orthogonal"] = r.orthogonal;
    clauses["weights_match"] = r.weights_match;
    clauses["ofb"] = r.ofb;
    clauses["last_tight"] = r.last_tight;
  }
  json named = json::object();
  for (const auto& c : r.clauses) named[c.name] = c.passed;
  return {{"in_class_E", r.partition.in_class_E},
          {"J", r.J()},
          {"lambdas", r.lambdas},
          {"multiplicities", r.multiplicities},
          {"index_sets", sets},
          {"near_degenerate", r.near_degenerate},
          {"clauses", clauses},
          {"clause_results", named},
          {"passed", r.passed()}};
}

inline json to_json(const Decomposition& d) {
  return {{"N0", d.n0},
          {"prefix", one_based(d.prefix)},
          {"suffix", one_based(d.suffix)},
          {"alpha", d.alpha},
          {"suffix_residual", d.residual}};
}

inline json to_json(const VerificationOutcome& v) {
  json out = {{"passed", v.passed()},
              {"in_class_E", v.in_class_E()},
              {"lambdas", v.lambdas},
              {"multiplicities", v.multiplicities},
              {"near_degenerate", v.near_degenerate},
              {"failed_clause", v.failed_clause ? json(*v.failed_clause) : json(nullptr)}};
  if (!v.message.empty()) out["message"] = v.message;
  if (v.partition) out["partition"] = to_json(*v.partition);
  if (v.report) out["structure"] = to_json(*v.report);
  if (v.ij_prediction) out["IJ_prediction"] = *v.ij_prediction;
  if (v.decomposition) out["decomposition"] = to_json(*v.decomposition);
  return out;
}

/// { "N0", "irregularity", "fundamental_inequality", "min_value", "lower_bound" }
/// plus the echoed profile and the weight order used.
inline json irregularity_report(const DimProfile& p) {
  const auto mv = minimum_value_detail(p);
  json out = profile_json(p);
  out["N0"] = mv.n0;
  out["irregularity"] = mv.n0 - 1;
  out["fundamental_inequality"] = fundamental_inequality(p);
  out["min_value"] = mv.value;
  out["lower_bound"] = ffp_lower_bound(p);
  out["sorted_order"] = one_based(mv.order);
  return out;
}

inline json to_json(const OptimizerConfig& c) {
  return {{"max_iters", c.max_iters},
          {"grad_tol", c.grad_tol},
          {"initial_step", c.initial_step ? json(*c.initial_step) : json(nullptr)},
          {"armijo_c", c.armijo_c},
          {"backtrack_factor", c.backtrack_factor},
          {"restarts", c.restarts},
          {"seed", c.seed},
          {"field", std::string(to_string(c.field))},
          {"threads", c.threads},
          {"verify_tol", c.verify_tol}};
}

/// Overlays the keys present in `j` onto `base`. Unknown keys are rejected.
inline OptimizerConfig config_from_json(const json& j, OptimizerConfig base = {}) {
  if (!j.is_object()) detail::parse_fail("optimizer config must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "max_iters") base.max_iters = v.get<int>();
      else if (key == "grad_tol") base.grad_tol = v.get<double>();
      else if (key == "initial_step") base.initial_step = v.is_null() ? std::nullopt : std::optional(v.get<double>());
      else if (key == "armijo_c") base.armijo_c = v.get<double>();
      else if (key == "backtrack_factor") base.backtrack_factor = v.get<double>();
      else if (key == "restarts") base.restarts = v.get<int>();
      else if (key == "seed") base.seed = v.get<std::uint64_t>();
      else if (key == "threads") base.threads = v.get<int>();
      else if (key == "verify_tol") base.verify_tol = v.get<double>();
      else if (key == "field") {
        const auto s = v.get<std::string>();
        if (s == "real") base.field = Field::Real;
        else if (s == "complex") base.field = Field::Complex;
        else detail::parse_fail("config field must be \"real\" or \"complex\"");
      } else {
        detail::parse_fail("unknown optimizer config key \"" + key + "\"");
      }
    }
  } catch (const json::exception& e) {
    detail::parse_fail(std::string("optimizer config: ") + e.what());
  }
  base.validate();
  return base;
}

template <FieldScalar S>
json to_json(const OptimizerReport<S>& r) {
  json hist = json::array();
  for (const auto& h : r.history) hist.push_back({h.iter, h.ffp, h.grad_norm});
  json out = profile_json(r.frame.profile());
  out["field"] = std::string(to_string(field_of<S>));
  out["ffp"] = r.ffp;
  out["lower_bound"] = r.lower_bound;
  out["gap"] = r.gap;
  out["iterations"] = r.iterations;
  out["grad_norm"] = r.grad_norm;
  out["status"] = std::string(to_string(r.status));
  out["converged"] = r.converged();
  out["tight"] = r.tight_alpha.has_value();
  out["alpha"] = r.tight_alpha ? json(*r.tight_alpha) : json(nullptr);
  out["history"] = hist;
  out["structure"] = to_json(r.structure);
  if (!r.restart_values.empty()) {
    out["best_restart"] = r.best_restart + 1;
    out["restart_ffp"] = r.restart_values;
    out["restart_seeds"] = r.restart_seeds;
  }
  return out;
}

}  // namespace framekit
