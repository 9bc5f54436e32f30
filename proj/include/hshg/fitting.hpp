#pragma once

// Small fits shared by the reports: log-log least squares for decay
// exponents, three-point Richardson extrapolation with a measured order,
// and Spearman rank correlation for monotone-trend verdicts.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hshg/common.hpp"

namespace hshg {

struct PowerFit {
  double exponent = 0.0;       // slope of log y against log x
  double log_prefactor = 0.0;  // intercept, natural log
  double rms_residual = 0.0;   // of log y around the line
};

// Least-squares line through (log x_i, log y_i). Data must be positive.
inline PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("power-law fit needs at least two matched samples");
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw ConfigError("power-law fit needs positive data");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300) throw ConfigError("power-law fit: degenerate abscissae");
  PowerFit out;
  out.exponent = (n * sxy - sx * sy) / det;
  out.log_prefactor = (sy - out.exponent * sx) / n;
  double rr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = std::log(y[i]) - (out.log_prefactor + out.exponent * std::log(x[i]));
    rr += e * e;
  }
  out.rms_residual = std::sqrt(rr / n);
  return out;
}

struct RichardsonFit {
  double value = 0.0;  // extrapolated limit
  double order = 0.0;  // measured convergence order (per refinement step 2x)
  double step = 0.0;   // last increment applied on top of the finest sample
};

// Extrapolates the limit of a sequence sampled at three dyadic refinements
// (coarse, medium, fine). The order is measured from the increment ratio, so
// the caller learns when the asymptotic regime has not set in: increments of
// equal sign and shrinking magnitude are required.
inline RichardsonFit richardson(double coarse, double medium, double fine) {
  const double d1 = medium - coarse;
  const double d2 = fine - medium;
  if (d1 == 0.0 && d2 == 0.0) return {fine, 0.0, 0.0};
  if (d2 == 0.0) return {fine, 0.0, 0.0};
  const double q = d1 / d2;
  if (!(q > 1.0))
    throw ConfigError("richardson: increments not contracting monotonically");
  RichardsonFit out;
  out.order = std::log2(q);
  out.step = d2 / (q - 1.0);
  out.value = fine + out.step;
  return out;
}

// Spearman rank correlation; ties get average ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("spearman needs at least two matched samples");
  const auto rank = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> rx = rank(x);
  const std::vector<double> ry = rank(y);
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double cxy = 0.0, cxx = 0.0, cyy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    cxy += (rx[i] - mx) * (ry[i] - my);
    cxx += (rx[i] - mx) * (rx[i] - mx);
    cyy += (ry[i] - my) * (ry[i] - my);
  }
  if (cxx == 0.0 || cyy == 0.0) return 0.0;
  return cxy / std::sqrt(cxx * cyy);
}

}  // namespace hshg
