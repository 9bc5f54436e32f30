#pragma once

// Random and deterministic coefficient field families. Each generator fills
// per-cell matrices on a torus, then hands off to edges_from_cells for the
// harmonic edge averaging and the ellipticity certificate.
//
// Randomness is addressed, never sequential: stream 1 holds the inclusion
// count, stream 2 the inclusion centers, stream 3 the spectral noise. Draws
// therefore do not depend on traversal or worker order.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hshg/coefficient_field.hpp"
#include "hshg/common.hpp"
#include "hshg/fft.hpp"
#include "hshg/grid.hpp"
#include "hshg/rng.hpp"
#include "hshg/smallmat.hpp"

namespace hshg {

namespace detail {

inline void check_scalar_value(double v, const char* what) {
  if (!(v > 0.0) || v > 1.0)
    throw ConfigError(std::string(what) + " must lie in (0, 1], got " + format_double(v));
}

inline double resolve_lambda(double declared, double auto_min) {
  if (declared == 0.0) return auto_min;
  if (!(declared > 0.0)) throw ConfigError("lambda must be positive");
  return declared;
}

inline long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace detail

// --------------------------------------------------------------------------
// constant
// --------------------------------------------------------------------------

struct ConstantParams {
  Mat matrix;       // d x d, must satisfy the ellipticity bounds itself
  double lambda = 0.0;  // 0: use the matrix's own symmetric-part minimum
};

inline CoefficientField make_constant(const GridSpec& grid, const ConstantParams& p) {
  if (p.matrix.dim != grid.dim) throw ConfigError("constant matrix dimension mismatch");
  const double lam = detail::resolve_lambda(p.lambda, sym_min_eigenvalue(p.matrix));
  CellMatField cells(grid);
  const std::int64_t n = grid.cell_count();
  for (std::int64_t c = 0; c < n; ++c) cells.set(c, p.matrix);
  nlohmann::json j;
  std::vector<double> flat;
  for (int i = 0; i < grid.dim; ++i)
    for (int k = 0; k < grid.dim; ++k) flat.push_back(p.matrix(i, k));
  j["matrix"] = flat;
  return edges_from_cells(cells, lam, "constant", 0, j.dump());
}

// --------------------------------------------------------------------------
// laminate: scalar-times-identity phases, layered along one axis
// --------------------------------------------------------------------------

struct LaminateParams {
  int axis = 0;
  double period = 0.0;               // physical length; must divide the torus width
  std::vector<double> breakpoints;   // increasing, last equals period
  std::vector<double> values;        // value on [b_{j-1}, b_j), b_{-1} = 0
  double lambda = 0.0;
};

inline CoefficientField make_laminate(const GridSpec& grid, const LaminateParams& p) {
  const int d = grid.dim;
  if (p.axis < 0 || p.axis >= d) throw ConfigError("laminate axis out of range");
  if (!(p.period > 0.0)) throw ConfigError("laminate period must be positive");
  const double width = grid.width(p.axis);
  const double ratio = width / p.period;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw ConfigError("laminate period must divide the torus width");
  if (p.breakpoints.empty() || p.breakpoints.size() != p.values.size())
    throw ConfigError("laminate needs matching breakpoints and values");
  for (std::size_t i = 0; i < p.breakpoints.size(); ++i) {
    if (!(p.breakpoints[i] > (i ? p.breakpoints[i - 1] : 0.0)))
      throw ConfigError("laminate breakpoints must be strictly increasing from 0");
    detail::check_scalar_value(p.values[i], "laminate value");
  }
  if (std::abs(p.breakpoints.back() - p.period) > 1e-12 * p.period)
    throw ConfigError("last laminate breakpoint must equal the period");

  const double auto_min = *std::min_element(p.values.begin(), p.values.end());
  const double lam = detail::resolve_lambda(p.lambda, auto_min);

  CellMatField cells(grid);
  const std::int64_t n = grid.cell_count();
  parallel_for(n, [&](std::int64_t flat) {
    std::array<int, 3> c{0, 0, 0};
    std::int64_t rem = flat;
    for (int a = 0; a < d; ++a) {
      c[static_cast<std::size_t>(a)] = static_cast<int>(rem % grid.cells[static_cast<std::size_t>(a)]);
      rem /= grid.cells[static_cast<std::size_t>(a)];
    }
    const double x = (c[static_cast<std::size_t>(p.axis)] + 0.5 -
                      grid.origin[static_cast<std::size_t>(p.axis)]) *
                     grid.spacing;
    double u = std::fmod(x, p.period);
    if (u < 0.0) u += p.period;
    auto it = std::upper_bound(p.breakpoints.begin(), p.breakpoints.end(), u);
    std::size_t seg = static_cast<std::size_t>(it - p.breakpoints.begin());
    if (seg >= p.values.size()) seg = p.values.size() - 1;
    cells.set(flat, Mat::scalar(d, p.values[seg]));
  });

  nlohmann::json j;
  j["axis"] = p.axis;
  j["period"] = p.period;
  j["breakpoints"] = p.breakpoints;
  j["values"] = p.values;
  return edges_from_cells(cells, lam, "laminate", 0, j.dump());
}

// --------------------------------------------------------------------------
// checkerboard: scalar-times-identity tiles, alternating by parity
// --------------------------------------------------------------------------

struct CheckerboardParams {
  double tile = 0.0;  // physical tile edge; must be a whole number of cells
  double v0 = 0.25;   // parity-0 tiles (the tile containing the origin corner)
  double v1 = 1.0;
  double lambda = 0.0;
};

inline CoefficientField make_checkerboard(const GridSpec& grid, const CheckerboardParams& p) {
  const int d = grid.dim;
  const double tc = p.tile / grid.spacing;
  if (!(p.tile > 0.0) || std::abs(tc - std::round(tc)) > 1e-9)
    throw ConfigError("checkerboard tile must be a whole number of cells");
  const long T = static_cast<long>(std::llround(tc));
  for (int a = 0; a < d; ++a)
    if (grid.cells[static_cast<std::size_t>(a)] % (2 * T) != 0)
      throw ConfigError("torus axis must hold a whole number of 2x2 tile blocks");
  detail::check_scalar_value(p.v0, "checkerboard value");
  detail::check_scalar_value(p.v1, "checkerboard value");
  const double lam = detail::resolve_lambda(p.lambda, std::min(p.v0, p.v1));

  CellMatField cells(grid);
  parallel_for(grid.cell_count(), [&](std::int64_t flat) {
    std::array<int, 3> c{0, 0, 0};
    std::int64_t rem = flat;
    long parity = 0;
    for (int a = 0; a < d; ++a) {
      c[static_cast<std::size_t>(a)] = static_cast<int>(rem % grid.cells[static_cast<std::size_t>(a)]);
      rem /= grid.cells[static_cast<std::size_t>(a)];
      const long rel = c[static_cast<std::size_t>(a)] -
                       static_cast<long>(grid.origin[static_cast<std::size_t>(a)]);
      parity += detail::floor_div(rel, T);
    }
    cells.set(flat, Mat::scalar(d, (parity & 1) ? p.v1 : p.v0));
  });

  nlohmann::json j;
  j["tile"] = p.tile;
  j["v0"] = p.v0;
  j["v1"] = p.v1;
  return edges_from_cells(cells, lam, "checkerboard", 0, j.dump());
}

// --------------------------------------------------------------------------
// poisson_inclusions: spherical inclusions at Poisson-process centers
// --------------------------------------------------------------------------

struct PoissonParams {
  double density = 0.0;  // expected centers per unit volume
  double radius = 0.0;
  double value_inside = 0.25;
  double value_outside = 1.0;
  double lambda = 0.0;
};

inline CoefficientField make_poisson(const GridSpec& grid, const PoissonParams& p,
                                     std::uint64_t seed, std::uint64_t* ball_count_out = nullptr) {
  const int d = grid.dim;
  if (!(p.density > 0.0)) throw ConfigError("poisson density must be positive");
  if (!(p.radius > 0.0) || p.radius >= 0.5 * grid.width(0))
    throw ConfigError("poisson radius must be positive and below half the torus width");
  if (p.radius < 2.0 * grid.spacing)
    throw ConfigError("poisson radius must cover at least two spacings");
  detail::check_scalar_value(p.value_inside, "poisson value");
  detail::check_scalar_value(p.value_outside, "poisson value");
  const double lam = detail::resolve_lambda(p.lambda, std::min(p.value_inside, p.value_outside));

  double volume = 1.0;
  for (int a = 0; a < d; ++a) volume *= grid.width(a);
  const double mean = p.density * volume;
  if (mean > 1e7) throw ConfigError("poisson mean count exceeds 1e7; lower the density");

  const CounterRng count_rng(seed, 1);
  const CounterRng center_rng(seed, 2);
  const std::uint64_t count = poisson_draw(count_rng, mean);
  if (ball_count_out) *ball_count_out = count;

  std::vector<std::array<double, 3>> centers(count, {0.0, 0.0, 0.0});
  for (std::uint64_t b = 0; b < count; ++b)
    for (int a = 0; a < d; ++a)
      centers[b][static_cast<std::size_t>(a)] = center_rng.uniform(
          b * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(a),
          -0.5 * grid.width(a), 0.5 * grid.width(a));

  // Rasterize each ball over its bounding box of cells; membership is the
  // min-image distance from the cell center, so balls wrap across the seam.
  std::vector<char> inside(static_cast<std::size_t>(grid.cell_count()), 0);
  const double h = grid.spacing;
  std::array<std::int64_t, 3> stride{1, 1, 1};
  for (int a = 1; a < d; ++a)
    stride[static_cast<std::size_t>(a)] =
        stride[static_cast<std::size_t>(a - 1)] * grid.cells[static_cast<std::size_t>(a - 1)];
  for (std::uint64_t b = 0; b < count; ++b) {
    std::array<long, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      const double ca = centers[b][static_cast<std::size_t>(a)] / h - 0.5 +
                        grid.origin[static_cast<std::size_t>(a)];
      lo[static_cast<std::size_t>(a)] = static_cast<long>(std::floor(ca - p.radius / h)) - 1;
      hi[static_cast<std::size_t>(a)] = static_cast<long>(std::ceil(ca + p.radius / h)) + 1;
    }
    std::array<long, 3> c = lo;
    while (true) {
      double dist2 = 0.0;
      std::int64_t flat = 0;
      for (int a = 0; a < d; ++a) {
        const long n = grid.cells[static_cast<std::size_t>(a)];
        long w = c[static_cast<std::size_t>(a)] % n;
        if (w < 0) w += n;
        flat += w * stride[static_cast<std::size_t>(a)];
        const double x = (c[static_cast<std::size_t>(a)] + 0.5 -
                          grid.origin[static_cast<std::size_t>(a)]) *
                         h;
        const double dx = std::remainder(x - centers[b][static_cast<std::size_t>(a)], grid.width(a));
        dist2 += dx * dx;
      }
      if (dist2 < p.radius * p.radius) inside[static_cast<std::size_t>(flat)] = 1;
      int a = 0;
      for (; a < d; ++a) {
        if (++c[static_cast<std::size_t>(a)] <= hi[static_cast<std::size_t>(a)]) break;
        c[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)];
      }
      if (a == d) break;
    }
  }

  CellMatField cells(grid);
  parallel_for(grid.cell_count(), [&](std::int64_t flat) {
    cells.set(flat, Mat::scalar(d, inside[static_cast<std::size_t>(flat)] ? p.value_inside
                                                                          : p.value_outside));
  });

  nlohmann::json j;
  j["density"] = p.density;
  j["radius"] = p.radius;
  j["value_inside"] = p.value_inside;
  j["value_outside"] = p.value_outside;
  j["ball_count"] = count;
  return edges_from_cells(cells, lam, "poisson_inclusions", seed, j.dump());
}

// --------------------------------------------------------------------------
// gaussian_lipschitz: clamped affine image of a stationary Gaussian field
// --------------------------------------------------------------------------

struct GaussianParams {
  double beta = 1.0;  // spectral exponent, in (0, d)
  double lo = 0.25;
  double hi = 1.0;
  double lambda = 0.0;
};

// Stationary unit-variance Gaussian sample on the torus cells. Spectrum
// |k|^(beta-d) in integer frequency; the zero mode is removed, so the sample
// has spatial mean zero in expectation and exactly mean-free spectrum.
inline std::vector<double> gaussian_sample(const GridSpec& grid, double beta, std::uint64_t seed) {
  const int d = grid.dim;
  const std::int64_t n = grid.cell_count();
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(n));
  const CounterRng noise(seed, 3);

  double amp2_sum = 0.0;
  std::vector<double> amp(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t flat = 0; flat < n; ++flat) {
    std::int64_t rem = flat;
    double k2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const int na = grid.cells[static_cast<std::size_t>(a)];
      const int ka = signed_freq(static_cast<int>(rem % na), na);
      rem /= na;
      k2 += static_cast<double>(ka) * ka;
    }
    if (k2 > 0.0) {
      const double v = std::pow(k2, 0.25 * (beta - d));
      amp[static_cast<std::size_t>(flat)] = v;
      amp2_sum += v * v;
    }
  }
  const double scale = 1.0 / std::sqrt(amp2_sum);
  parallel_for(n, [&](std::int64_t flat) {
    const double a = amp[static_cast<std::size_t>(flat)] * scale;
    if (a == 0.0) return;
    const auto idx = static_cast<std::uint64_t>(flat);
    spec[static_cast<std::size_t>(flat)] =
        a * std::complex<double>(noise.normal(2 * idx), noise.normal(2 * idx + 1)) *
        (1.0 / std::sqrt(2.0));
  });

  inverse_dft(d, grid.cells, spec);
  std::vector<double> out(static_cast<std::size_t>(n));
  const double root2 = std::sqrt(2.0);
  parallel_for(n, [&](std::int64_t flat) {
    out[static_cast<std::size_t>(flat)] = root2 * spec[static_cast<std::size_t>(flat)].real();
  });
  return out;
}

inline CoefficientField make_gaussian(const GridSpec& grid, const GaussianParams& p,
                                      std::uint64_t seed) {
  const int d = grid.dim;
  if (!(p.beta > 0.0) || !(p.beta < d))
    throw ConfigError("gaussian beta must lie in (0, dim)");
  if (!(p.lo > 0.0) || !(p.lo < p.hi) || p.hi > 1.0)
    throw ConfigError("gaussian clamp range must satisfy 0 < lo < hi <= 1");
  const double lam = detail::resolve_lambda(p.lambda, p.lo);

  const std::vector<double> x = gaussian_sample(grid, p.beta, seed);
  const double c0 = 0.5 * (p.lo + p.hi);
  const double c1 = 0.25 * (p.hi - p.lo);
  CellMatField cells(grid);
  parallel_for(grid.cell_count(), [&](std::int64_t flat) {
    const double v = std::clamp(c0 + c1 * x[static_cast<std::size_t>(flat)], p.lo, p.hi);
    cells.set(flat, Mat::scalar(d, v));
  });

  nlohmann::json j;
  j["beta"] = p.beta;
  j["lo"] = p.lo;
  j["hi"] = p.hi;
  return edges_from_cells(cells, lam, "gaussian_lipschitz", seed, j.dump());
}

}  // namespace hshg
