#pragma once

// Dense d x d matrices and d-vectors for d <= 3, with the closed-form
// spectral helpers the ellipticity certificate needs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "hshg/common.hpp"

namespace hshg {

inline constexpr int kMaxDim = 3;

using Vec = std::array<double, kMaxDim>;

struct Mat {
  // Row-major d x d block inside a 3 x 3 buffer; entries beyond dim are zero.
  std::array<double, 9> a{};
  int dim = 2;

  static Mat zero(int d) {
    Mat m;
    m.dim = d;
    return m;
  }
  static Mat identity(int d) {
    Mat m = zero(d);
    for (int i = 0; i < d; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat scalar(int d, double v) {
    Mat m = zero(d);
    for (int i = 0; i < d; ++i) m(i, i) = v;
    return m;
  }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(3 * i + j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(3 * i + j)]; }

  Mat transpose() const {
    Mat t = zero(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) t(i, j) = (*this)(j, i);
    return t;
  }

  Mat sym() const {
    Mat s = zero(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
    return s;
  }

  bool is_symmetric(double tol = 1e-14) const {
    for (int i = 0; i < dim; ++i)
      for (int j = i + 1; j < dim; ++j)
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
    return true;
  }

  bool is_diagonal(double tol = 0.0) const {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        if (i != j && std::abs((*this)(i, j)) > tol) return false;
    return true;
  }

  Vec apply(const Vec& v) const {
    Vec r{};
    for (int i = 0; i < dim; ++i) {
      double s = 0.0;
      for (int j = 0; j < dim; ++j) s += (*this)(i, j) * v[static_cast<std::size_t>(j)];
      r[static_cast<std::size_t>(i)] = s;
    }
    return r;
  }

  Mat mul(const Mat& o) const {
    Mat r = zero(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        double s = 0.0;
        for (int k = 0; k < dim; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  Mat scaled(double c) const {
    Mat r = *this;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) r(i, j) *= c;
    return r;
  }

  Mat plus(const Mat& o) const {
    Mat r = *this;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) r(i, j) += o(i, j);
    return r;
  }

  double det() const {
    if (dim == 1) return (*this)(0, 0);
    if (dim == 2) return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0);
    const Mat& m = *this;
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  }

  Mat inverse() const {
    const double d = det();
    if (std::abs(d) < 1e-300)
      throw InvariantError("singular matrix in harmonic average; field not elliptic");
    Mat r = zero(dim);
    if (dim == 1) {
      r(0, 0) = 1.0 / d;
      return r;
    }
    if (dim == 2) {
      r(0, 0) = (*this)(1, 1) / d;
      r(0, 1) = -(*this)(0, 1) / d;
      r(1, 0) = -(*this)(1, 0) / d;
      r(1, 1) = (*this)(0, 0) / d;
      return r;
    }
    const Mat& m = *this;
    r(0, 0) = (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) / d;
    r(0, 1) = (m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2)) / d;
    r(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) / d;
    r(1, 0) = (m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2)) / d;
    r(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) / d;
    r(1, 2) = (m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2)) / d;
    r(2, 0) = (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)) / d;
    r(2, 1) = (m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1)) / d;
    r(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) / d;
    return r;
  }

  double max_abs_offdiag() const {
    double m = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        if (i != j) m = std::max(m, std::abs((*this)(i, j)));
    return m;
  }
};

// Eigenvalues of a symmetric d x d matrix, ascending. Closed forms for d <= 3
// (trigonometric formula in 3D).
inline std::array<double, 3> sym_eigenvalues(const Mat& s) {
  std::array<double, 3> ev{0.0, 0.0, 0.0};
  if (s.dim == 1) {
    ev[0] = s(0, 0);
    return ev;
  }
  if (s.dim == 2) {
    const double tr = s(0, 0) + s(1, 1);
    const double dd = s(0, 0) - s(1, 1);
    const double disc = std::sqrt(dd * dd / 4.0 + s(0, 1) * s(0, 1));
    ev[0] = tr / 2.0 - disc;
    ev[1] = tr / 2.0 + disc;
    return ev;
  }
  const double p1 = s(0, 1) * s(0, 1) + s(0, 2) * s(0, 2) + s(1, 2) * s(1, 2);
  const double q = (s(0, 0) + s(1, 1) + s(2, 2)) / 3.0;
  if (p1 < 1e-300) {
    ev = {s(0, 0), s(1, 1), s(2, 2)};
    std::sort(ev.begin(), ev.end());
    return ev;
  }
  const double p2 = (s(0, 0) - q) * (s(0, 0) - q) + (s(1, 1) - q) * (s(1, 1) - q) +
                    (s(2, 2) - q) * (s(2, 2) - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  Mat b = s;
  for (int i = 0; i < 3; ++i) b(i, i) -= q;
  b = b.scaled(1.0 / p);
  double r = b.det() / 2.0;
  r = std::clamp(r, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e_hi = q + 2.0 * p * std::cos(phi);
  const double e_lo = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  ev = {e_lo, 3.0 * q - e_hi - e_lo, e_hi};
  return ev;
}

inline double sym_min_eigenvalue(const Mat& m) { return sym_eigenvalues(m.sym())[0]; }

// Operator (spectral) norm: sqrt of the largest eigenvalue of A^T A.
inline double operator_norm(const Mat& m) {
  const Mat ata = m.transpose().mul(m);
  const auto ev = sym_eigenvalues(ata);
  double top = ev[0];
  for (int i = 1; i < m.dim; ++i) top = std::max(top, ev[static_cast<std::size_t>(i)]);
  return std::sqrt(std::max(0.0, top));
}

// Harmonic mean of m matrices: m * (sum A_i^{-1})^{-1}. Reduces to the scalar
// harmonic mean for scalar multiples of the identity.
inline Mat harmonic_mean(const Mat* ms, int count) {
  Mat acc = Mat::zero(ms[0].dim);
  for (int i = 0; i < count; ++i) acc = acc.plus(ms[i].inverse());
  return acc.inverse().scaled(static_cast<double>(count));
}

}  // namespace hshg
