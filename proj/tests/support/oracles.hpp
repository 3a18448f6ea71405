#pragma once

// Reference computations that share no code with the library: extended
// precision projectors, finite differences, the pairwise trace form of the
// potential and a direct evaluation of the irregularity predicate.

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "framekit/framekit.hpp"

namespace oracle {

using framekit::FieldScalar;
using framekit::Mat;

template <typename S>
struct wide;
template <>
struct wide<double> {
  using type = long double;
};
template <>
struct wide<std::complex<double>> {
  using type = std::complex<long double>;
};
template <typename S>
using Wide = typename wide<S>::type;
template <typename S>
using WMat = Eigen::Matrix<Wide<S>, Eigen::Dynamic, Eigen::Dynamic>;

/// A (A^H A)^{-1} A^H in long double.
template <FieldScalar S>
WMat<S> ls_projector(const WMat<S>& a) {
  const WMat<S> g = a.adjoint() * a;
  return a * g.inverse() * a.adjoint();
}

/// A(t) of the perturbation curve, built from scratch in long double.
template <FieldScalar S>
WMat<S> curve_matrix(const framekit::PerturbationCurve<S>& c, long double t) {
  const auto& f = c.base().basis();
  WMat<S> a(f.rows(), f.cols());
  for (Eigen::Index l = 0; l < f.cols(); ++l) {
    const Wide<S> z = static_cast<Wide<S>>(c.coeffs()(l));
    const long double z2 = std::norm(z);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      a(i, l) = std::sqrt(1.0L - t * t * z2) * static_cast<Wide<S>>(f(i, l)) +
                t * z * static_cast<Wide<S>>(c.direction()(i));
    }
  }
  return a;
}

template <FieldScalar S>
Mat<S> narrow(const WMat<S>& m) {
  return m.template cast<S>();
}

/// Central differences of the projection path, step h.
template <FieldScalar S>
std::pair<Mat<S>, Mat<S>> projection_fd(const framekit::PerturbationCurve<S>& c, long double h = 1e-5L) {
  const WMat<S> p_plus = ls_projector<S>(curve_matrix(c, h));
  const WMat<S> p_zero = ls_projector<S>(curve_matrix(c, 0.0L));
  const WMat<S> p_minus = ls_projector<S>(curve_matrix(c, -h));
  const WMat<S> d1 = (p_plus - p_minus) / Wide<S>(2.0L * h);
  const WMat<S> d2 = (p_plus - Wide<S>(2.0L) * p_zero + p_minus) / Wide<S>(h * h);
  return {narrow<S>(d1), narrow<S>(d2)};
}

/// sum_{k,k'} w_k^2 w_k'^2 ||B_k^H B_k'||_F^2, which equals tr(S^2).
template <FieldScalar S>
double ffp_pairwise(const framekit::FusionFrame<S>& f) {
  long double acc = 0.0L;
  for (std::size_t a = 0; a < f.size(); ++a) {
    for (std::size_t b = 0; b < f.size(); ++b) {
      const double overlap = (f.subspace(a).basis().adjoint() * f.subspace(b).basis()).squaredNorm();
      acc += static_cast<long double>(f.weight_squared(a)) * f.weight_squared(b) * overlap;
    }
  }
  return static_cast<double>(acc);
}

/// Potential of the frame with member k moved to curve_point(c, t), with the
/// moved projector formed in long double.
template <FieldScalar S>
long double ffp_along(const framekit::FusionFrame<S>& f, std::size_t k, const framekit::PerturbationCurve<S>& c,
                      long double t) {
  WMat<S> s = WMat<S>::Zero(f.d(), f.d());
  for (std::size_t m = 0; m < f.size(); ++m) {
    WMat<S> p;
    if (m == k) {
      p = ls_projector<S>(curve_matrix(c, t));
    } else {
      const WMat<S> b = f.subspace(m).basis().template cast<Wide<S>>();
      p = b * b.adjoint();
    }
    s += Wide<S>(static_cast<long double>(f.weight_squared(m))) * p;
  }
  return std::real((s * s).trace());
}

/// Predicate values (d - sum_{k<=j} L_k) c_j <= sum_{k>j} L_k c_k for each j,
/// evaluated with explicit inner loops in long double.
inline std::vector<bool> irregularity_predicate(int d, const std::vector<int>& dims, const std::vector<double>& c) {
  std::vector<bool> out;
  for (std::size_t j = 0; j < c.size(); ++j) {
    long double head = 0;
    for (std::size_t k = 0; k <= j; ++k) head += dims[k];
    long double tail = 0;
    for (std::size_t k = j + 1; k < c.size(); ++k) tail += static_cast<long double>(dims[k]) * c[k];
    out.push_back((d - head) * c[j] <= tail);
  }
  return out;
}

/// 1-based first index at which the predicate holds; 0 if never.
inline int first_true(const std::vector<bool>& pred) {
  for (std::size_t j = 0; j < pred.size(); ++j) {
    if (pred[j]) return static_cast<int>(j) + 1;
  }
  return 0;
}

}  // namespace oracle
