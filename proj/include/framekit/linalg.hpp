#pragma once

// Dense linear-algebra vocabulary shared by every module. All matrices are
// column-major Eigen matrices over double or std::complex<double>.

#include <Eigen/Dense>

#include <complex>
#include <concepts>
#include <cstdint>
#include <random>
#include <string_view>
#include <type_traits>

#include "framekit/error.hpp"

namespace framekit {

enum class Field { Real, Complex };

constexpr std::string_view to_string(Field f) { return f == Field::Real ? "real" : "complex"; }

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

/// The two scalar types the library is instantiated for.
template <typename S>
concept FieldScalar = std::same_as<S, double> || std::same_as<S, std::complex<double>>;

template <FieldScalar S>
constexpr Field field_of = is_complex<S>::value ? Field::Complex : Field::Real;

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using RMat = Mat<double>;
using CMat = Mat<std::complex<double>>;

template <FieldScalar S>
S scalar_from(double re, double im = 0.0) {
  if constexpr (is_complex<S>::value) {
    return S(re, im);
  } else {
    return re;
  }
}

/// Real part of tr(A^H B), the real inner product used for gradients.
template <typename DA, typename DB>
double real_inner(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  return std::real(a.cwiseProduct(b.conjugate()).sum());
}

template <typename D>
double hermitian_defect(const Eigen::MatrixBase<D>& m) {
  return (m - m.adjoint()).norm();
}

/// Draws one standard normal scalar; complex draws have E|z|^2 = 1.
template <FieldScalar S, typename Rng>
S standard_normal(Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  if constexpr (is_complex<S>::value) {
    const double re = n01(rng);
    const double im = n01(rng);
    return S(re, im) * std::sqrt(0.5);
  } else {
    return n01(rng);
  }
}

template <FieldScalar S, typename Rng>
Mat<S> gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Mat<S> m(rows, cols);
  // Column-major fill order keeps draws reproducible across Eigen versions.
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      m(i, j) = standard_normal<S>(rng);
    }
  }
  return m;
}

/// Haar-distributed unitary (orthogonal in the real case): QR of a Gaussian
/// matrix with the phases of diag(R) folded back into Q.
template <FieldScalar S>
Mat<S> random_unitary(Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Mat<S> g = gaussian_matrix<S>(d, d, rng);
  Eigen::HouseholderQR<Mat<S>> qr(g);
  Mat<S> q = qr.householderQ() * Mat<S>::Identity(d, d);
  const Mat<S> r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

/// SplitMix64 finalizer, used to derive independent per-restart seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace framekit
