#pragma once

// Thin FFTW3 wrapper for spectral synthesis on the torus.
//
// Plans use FFTW_ESTIMATE on purpose: measured plans may select different
// algorithms between runs, which breaks bitwise reproducibility.

#include <array>
#include <complex>
#include <vector>

#include <fftw3.h>

#include "hshg/common.hpp"

namespace hshg {

// Unnormalized inverse DFT (exponent sign +1), in place. `data` is laid out
// with the first axis fastest, matching LatticeField; FFTW wants the last
// axis fastest, so the dimension list is reversed.
inline void inverse_dft(int dim, const std::array<int, 3>& cells,
                        std::vector<std::complex<double>>& data) {
  std::int64_t total = 1;
  for (int a = 0; a < dim; ++a) total *= cells[static_cast<std::size_t>(a)];
  if (static_cast<std::int64_t>(data.size()) != total)
    throw InvariantError("inverse_dft: buffer size does not match grid");
  std::array<int, 3> rev{1, 1, 1};
  for (int a = 0; a < dim; ++a) rev[static_cast<std::size_t>(a)] = cells[static_cast<std::size_t>(dim - 1 - a)];
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = fftw_plan_dft(dim, rev.data(), ptr, ptr, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!plan) throw InvariantError("inverse_dft: FFTW plan creation failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

// Signed integer frequency of index i on an axis of n cells, in [-n/2, n/2).
inline int signed_freq(int i, int n) { return i < n / 2 + n % 2 ? i : i - n; }

}  // namespace hshg
