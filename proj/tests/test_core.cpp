// Foundations: counter RNG vectors, grid geometry, discrete calculus
// identities, region quadrature, cutoff families, fits, config parsing.

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hshg/calculus.hpp"
#include "hshg/config.hpp"
#include "hshg/cutoffs.hpp"
#include "hshg/fitting.hpp"
#include "hshg/grid.hpp"
#include "hshg/region.hpp"
#include "hshg/rng.hpp"
#include "hshg/smallmat.hpp"
#include "hshg/snapshot.hpp"

using namespace hshg;

TEST_CASE("philox4x32-10 reference vectors") {
  // Official test vectors for the 10-round 4x32 configuration.
  const PhiloxBlock zero = philox4x32_10(0, 0, 0);
  CHECK(zero.w[0] == 0x6627e8d5u);
  CHECK(zero.w[1] == 0xe169c58du);
  CHECK(zero.w[2] == 0xbc57ac4cu);
  CHECK(zero.w[3] == 0x9b00dbd8u);

  const std::uint64_t ff = 0xffffffffffffffffull;
  const PhiloxBlock ones = philox4x32_10(ff, ff, ff);
  CHECK(ones.w[0] == 0x408f276du);
  CHECK(ones.w[1] == 0x41c83b0eu);
  CHECK(ones.w[2] == 0xa20bc7c6u);
  CHECK(ones.w[3] == 0x6d5451fdu);

  const PhiloxBlock pi =
      philox4x32_10(0x85a308d3243f6a88ull, 0x0370734413198a2eull, 0x299f31d0a4093822ull);
  CHECK(pi.w[0] == 0xd16cfe09u);
  CHECK(pi.w[1] == 0x94fdccebu);
  CHECK(pi.w[2] == 0x5001e420u);
  CHECK(pi.w[3] == 0x24126ea1u);
}

TEST_CASE("counter rng streams and ranges") {
  const CounterRng a(12345, 0);
  const CounterRng b(12345, 1);
  const CounterRng c(54321, 0);

  CHECK(a.raw64(7) == CounterRng(12345, 0).raw64(7));  // pure function of (seed, stream, index)
  CHECK(a.raw64(7) != b.raw64(7));
  CHECK(a.raw64(7) != c.raw64(7));

  double lo = 1.0, hi = 0.0, sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = a.uniform(static_cast<std::uint64_t>(i));
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    const double g = a.normal(static_cast<std::uint64_t>(i));
    sum += g;
    sum2 += g * g;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);
}

TEST_CASE("poisson draw is deterministic with the right scale") {
  const CounterRng rng(9, 1);
  const std::uint64_t k1 = poisson_draw(rng, 100.0);
  const std::uint64_t k2 = poisson_draw(rng, 100.0);
  CHECK(k1 == k2);
  CHECK(k1 > 60);
  CHECK(k1 < 140);
  // Split path (mean > 500) stays exact-in-distribution and deterministic.
  const std::uint64_t big = poisson_draw(rng, 2000.0);
  CHECK(big > 1700);
  CHECK(big < 2300);
}

TEST_CASE("grid coordinates and min-image displacement") {
  const GridSpec t = make_torus(2, 8, 0.5);  // width 4, origin at node 4
  const LatticeField f(t, {false, false, false});
  CHECK(f.coord(0, 4) == 0.0);
  CHECK(f.coord(0, 6) == 1.0);
  CHECK(f.displacement(0, 0) == -2.0);     // wraps to the near image
  CHECK(f.displacement(0, 7) == Catch::Approx(1.5));

  const GridSpec h = make_half_grid(2, 8, 8, 0.5);
  const LatticeField g(h, {false, false, false});
  CHECK(g.coord(1, 0) == 0.0);  // flat boundary on the bottom node row
  CHECK(g.coord(1, 8) == 4.0);
  CHECK(g.coord(0, 4) == 0.0);  // lateral origin mid-strip

  const GridSpec b = make_box_half_grid(2, 8, 8, 0.5);
  CHECK(!b.periodic(0));
  CHECK(!b.periodic(1));
  CHECK(b.nodes(0) == 9);
  const LatticeField bf(b, {false, false, false});
  CHECK(bf.coord(0, 4) == 0.0);  // same origin as the periodic strip
}

TEST_CASE("summation by parts on the torus") {
  const GridSpec g = make_torus(2, 32, 1.0);
  ScalarField u = make_scalar_field(g);
  EdgeField v(g);
  const CounterRng rng(77, 5);
  for (std::int64_t i = 0; i < u.count(); ++i)
    u.v[static_cast<std::size_t>(i)] = rng.uniform(static_cast<std::uint64_t>(i), -1.0, 1.0);
  for (int k = 0; k < 2; ++k)
    for (std::int64_t i = 0; i < v[k].count(); ++i)
      v[k].v[static_cast<std::size_t>(i)] =
          rng.uniform(static_cast<std::uint64_t>(1000000 + k * 100000 + i), -1.0, 1.0);

  const double a = inner_edges(gradient(u), v);
  const double b = inner_nodes(u, divergence(v));
  const double scale = std::abs(a) + std::abs(b) + 1e-300;
  CHECK(std::abs(a + b) / scale < 1e-10);
}

TEST_CASE("gradient of a coordinate profile is the unit edge field") {
  const GridSpec g = make_half_grid(2, 16, 16, 1.0);
  LatticeField u(g, {false, false, false});
  for (std::int64_t i = 0; i < u.count(); ++i) {
    std::array<int, 3> idx;
    u.decompose(i, idx);
    u.v[static_cast<std::size_t>(i)] = u.coord(1, idx[1]);
  }
  const EdgeField gu = gradient(u);
  for (std::int64_t i = 0; i < gu[1].count(); ++i)
    REQUIRE(gu[1].v[static_cast<std::size_t>(i)] == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("half-ball quadrature oracle") {
  // Continuum values on B_r^+ in 2D: mean of x_d^2 is r^2/4, so the
  // quadratic average of x_d is r/2; quadrature error is O(h/r).
  const GridSpec g = make_half_grid(2, 128, 128, 1.0);
  LatticeField xd(g, {false, false, false});
  for (std::int64_t i = 0; i < xd.count(); ++i) {
    std::array<int, 3> idx;
    xd.decompose(i, idx);
    xd.v[static_cast<std::size_t>(i)] = xd.coord(1, idx[1]);
  }
  for (double r : {16.0, 32.0, 48.0}) {
    const double q = quad_avg(xd, Region::half_ball_pos(r));
    CHECK(q == Catch::Approx(r / 2.0).epsilon(2.0 / r * 2.0));
  }
}

TEST_CASE("cutoff family telescopes to a partition of unity") {
  const std::vector<double> widths{8.0, 8.0, 12.0, 20.0, 40.0};  // levels -1..3
  const CutoffSystem cut = build_cutoffs(8.0, 3, widths, 1.0);
  for (double r = 0.0; r <= 200.0; r += 0.37) {
    double sum = 0.0;
    for (int m = -1; m <= 3; ++m) sum += cut.radial(m, r);
    REQUIRE(std::abs(sum - cut.radial_partial_sum(3, r)) < 1e-12);
    if (r <= 8.0 * 8.0) REQUIRE(std::abs(sum - 1.0) < 1e-12);
  }
  // Slab gradient bound: C^1 smoothstep keeps |d slab / d x| <= 1.5 / L_m < 2 / L_m.
  for (int m = -1; m <= 3; ++m) {
    const double L = cut.width(m);
    double worst = 0.0;
    for (double x = 0.0; x <= 2.5 * L; x += L / 128.0) {
      const double d = std::abs(cut.slab(m, x + 1e-6) - cut.slab(m, x)) / 1e-6;
      worst = std::max(worst, d);
    }
    CHECK(worst <= 2.0 / L);
  }
  CHECK_THROWS_AS(build_cutoffs(4.0, 0, {4.0, 4.0}, 1.0), ConfigError);   // base below 8h
  CHECK_THROWS_AS(build_cutoffs(8.0, 0, {8.0, 40.0}, 1.0), ConfigError);  // L_0 > 2 r0
}

TEST_CASE("power-law fit recovers exact synthetic data") {
  std::vector<double> x{8, 16, 32, 64, 128}, y;
  for (double v : x) y.push_back(3.5 * std::pow(v, -0.75));
  const PowerFit fit = fit_power_law(x, y);
  CHECK(fit.exponent == Catch::Approx(-0.75).margin(1e-12));
  CHECK(std::exp(fit.log_prefactor) == Catch::Approx(3.5).margin(1e-10));
  CHECK(fit.rms_residual < 1e-12);
  CHECK_THROWS_AS(fit_power_law({1.0, 2.0}, {1.0, -2.0}), ConfigError);
  CHECK_THROWS_AS(fit_power_law({2.0, 2.0}, {1.0, 1.0}), ConfigError);
}

TEST_CASE("richardson extrapolation on a second-order series") {
  // f(h) = 2 + 5 h^2 at h = 1, 1/2, 1/4.
  const RichardsonFit fit = richardson(7.0, 3.25, 2.3125);
  CHECK(fit.order == Catch::Approx(2.0).margin(1e-12));
  CHECK(fit.value == Catch::Approx(2.0).margin(1e-12));
  CHECK_THROWS_AS(richardson(1.0, 2.0, 4.0), ConfigError);  // increments growing
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == Catch::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == Catch::Approx(-1.0));
  CHECK(spearman({1, 1, 1}, {1, 2, 3}) == 0.0);
}

TEST_CASE("symmetric eigenvalue helper") {
  Mat m = Mat::zero(2);
  m(0, 0) = 2.0;
  m(1, 1) = 0.5;
  m(0, 1) = m(1, 0) = 0.25;
  const double lam = sym_min_eigenvalue(m);
  // Exact: (2.5 - sqrt(2.25 + 0.25)) / 2.
  CHECK(lam == Catch::Approx(0.5 * (2.5 - std::sqrt(2.5))).margin(1e-12));
}

TEST_CASE("field snapshot roundtrip is bit exact") {
  const std::string path = std::filesystem::temp_directory_path() / "hshg_core_field.snap";
  const GridSpec g = make_torus(2, 16, 1.0);
  GaussianParams p;
  p.beta = 1.0;
  const CoefficientField f = make_gaussian(g, p, 31u);
  write_field_snapshot(path, f);
  const CoefficientField f2 = read_field_snapshot(path);
  REQUIRE(f2.grid.same_layout(f.grid));
  CHECK(f2.lambda == f.lambda);
  for (int k = 0; k < 2; ++k)
    for (std::int64_t i = 0; i < f.edge[k].count(); ++i)
      REQUIRE(f2.edge[k].v[static_cast<std::size_t>(i)] ==
              f.edge[k].v[static_cast<std::size_t>(i)]);
  std::filesystem::remove(path);
}

TEST_CASE("config parses, validates, and hashes by bytes") {
  const std::string good = R"({
    "schema_version": 1,
    "name": "t",
    "grid": {"dim": 2, "cells": 64},
    "field": {"generator": "constant"},
    "analysis": {"radii": [8, 16]}
  })";
  const ExperimentConfig cfg = parse_config(good);
  CHECK(cfg.height_cells == 64);
  CHECK(cfg.solve.tol == 1e-10);
  CHECK(cfg.field.seeds == std::vector<std::uint64_t>{0});
  CHECK(config_hash(cfg) == config_hash(parse_config(good)));
  CHECK(config_hash(cfg) != config_hash(parse_config(good + "\n")));  // bytes, not values

  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 2, "name": "t",
    "grid": {"dim": 2, "cells": 64}, "field": {"generator": "constant"},
    "analysis": {"radii": [8]}})"),
                  ConfigError);  // wrong version
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "name": "t",
    "grid": {"dim": 2, "cells": 64}, "field": {"generator": "constant"},
    "analysis": {"radii": [8]}, "extra": 1})"),
                  ConfigError);  // unknown key
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "name": "t",
    "grid": {"dim": 2, "cells": 64}, "field": {"generator": "constant"},
    "analysis": {"radii": [64]}})"),
                  ConfigError);  // radius exceeds the half-width
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "name": "t",
    "grid": {"dim": 2, "cells": 64}, "field": {"generator": "nope"},
    "analysis": {"radii": [8]}})"),
                  ConfigError);  // unknown generator
}

TEST_CASE("config radii must fit the height too") {
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "name": "t",
    "grid": {"dim": 2, "cells": 64, "height_cells": 16},
    "field": {"generator": "constant"},
    "analysis": {"radii": [24]}})"),
                  ConfigError);
}
