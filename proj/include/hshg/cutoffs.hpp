#pragma once

// Dyadic cutoff systems: radial annular bump families summing to one, paired
// with slab profiles in the vertical coordinate. Profiles are C^1 smoothsteps,
// so the gradient bounds hold with margin (|theta'| <= 3/2 on the transition).

#include <cmath>
#include <vector>

#include "hshg/common.hpp"
#include "hshg/grid.hpp"

namespace hshg {

// 1 for t <= 1, 0 for t >= 2, cubic smoothstep in between.
inline double plateau_profile(double t) {
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  const double q = t - 1.0;
  return 1.0 - q * q * (3.0 - 2.0 * q);
}

class CutoffSystem {
 public:
  // L holds widths for levels m = -1..M (index m + 1).
  CutoffSystem(double r0, int levels_top, std::vector<double> widths, double spacing)
      : r0_(r0), top_(levels_top), widths_(std::move(widths)), spacing_(spacing) {
    if (r0_ < 8.0 * spacing_) throw ConfigError("cutoff base radius must be >= 8 spacings");
    if (static_cast<int>(widths_.size()) != top_ + 2)
      throw ConfigError("cutoff width list must cover levels -1..M");
    for (int m = -1; m <= top_; ++m) {
      const double L = width(m);
      const double cap = r0_ * std::pow(2.0, m + 1);
      if (!(L > 0.0)) throw ConfigError("cutoff width must be positive");
      if (L > cap + 1e-12) throw ConfigError("unsatisfiable cutoff width: L_m > r0*2^{m+1}");
    }
  }

  double base_radius() const { return r0_; }
  int top_level() const { return top_; }
  double width(int m) const { return widths_[static_cast<std::size_t>(m + 1)]; }
  double outer_radius(int m) const { return r0_ * std::pow(2.0, m + 1); }

  // Radial bump for level m. Level -1 is the core plateau (1 on |x| <= r0/2,
  // 0 beyond r0); level m >= 0 is supported in the annulus
  // r0*2^{m-1} <= |x| <= r0*2^{m+1}. The family telescopes exactly:
  // sum_{m=-1}^{M} bump = plateau(|x| / (r0*2^M)).
  double radial(int m, double radius) const {
    const double scale = r0_ * std::pow(2.0, m);
    if (m == -1) return plateau_profile(radius / scale);
    return plateau_profile(radius / scale) - plateau_profile(2.0 * radius / scale);
  }

  // Slab profile: 1 for |x_d| <= L_m, 0 for |x_d| >= 2 L_m.
  double slab(int m, double xd) const { return plateau_profile(std::abs(xd) / width(m)); }

  double chi(int m, double radius, double xd) const { return radial(m, radius) * slab(m, xd); }

  // Partial sum of radial bumps through level M.
  double radial_partial_sum(int top, double radius) const {
    return plateau_profile(radius / (r0_ * std::pow(2.0, top)));
  }

 private:
  double r0_;
  int top_;
  std::vector<double> widths_;
  double spacing_;
};

inline CutoffSystem build_cutoffs(double r0, int levels_top, std::vector<double> widths,
                                  double spacing) {
  return CutoffSystem(r0, levels_top, std::move(widths), spacing);
}

// Lateral radius of a sample position (min-image on periodic axes), with the
// vertical coordinate included: |x| for the radial cutoffs.
inline double sample_radius(const LatticeField& f, const std::array<int, 3>& i) {
  double r2 = 0.0;
  for (int a = 0; a < f.grid.dim; ++a) {
    const double x = f.displacement(a, i[static_cast<std::size_t>(a)]);
    r2 += x * x;
  }
  return std::sqrt(r2);
}

}  // namespace hshg
