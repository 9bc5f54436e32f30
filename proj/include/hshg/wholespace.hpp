#pragma once

// Whole-space correctors on the torus.
//
// For each direction i, phi_i is the mean-zero periodic solution of
//   -div(a grad phi_i) = div(a e_i),
// the effective matrix column is the edge average of the flux
// a (e_i + grad phi_i), and q_i is the flux minus that average (exactly
// mean-free, so its skew potential exists).
//
// The skew potential sigma has one scalar component per unordered axis pair
// (j, k), j < k, living on the doubly half-offset pair lattice. It solves a
// periodic Poisson problem with the flux curl as data; on the torus the pair
// lattice is index-isomorphic to the node lattice, so the same solver runs
// unchanged. The divergence identity sum_k D_k sigma_ijk = q_ij then holds
// to solver tolerance because the discrete difference operators commute.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hshg/calculus.hpp"
#include "hshg/coefficient_field.hpp"
#include "hshg/common.hpp"
#include "hshg/grid.hpp"
#include "hshg/region.hpp"
#include "hshg/smallmat.hpp"
#include "hshg/snapshot.hpp"
#include "hshg/solver.hpp"

namespace hshg {

inline int pair_count(int dim) { return dim * (dim - 1) / 2; }

// Pair order: (0,1), (0,2), (1,2).
inline std::pair<int, int> pair_axes(int dim, int p) {
  (void)dim;
  switch (p) {
    case 0: return {0, 1};
    case 1: return {0, 2};
    case 2: return {1, 2};
    default: throw InvariantError("pair index out of range");
  }
}

inline int pair_index(int j, int k) {
  if (j > k) std::swap(j, k);
  if (j == 0 && k == 1) return 0;
  if (j == 0 && k == 2) return 1;
  if (j == 1 && k == 2) return 2;
  throw InvariantError("bad axis pair");
}

struct CorrectorSet {
  GridSpec grid;
  double tol = 0.0;
  std::vector<LatticeField> phi;                       // [i], node fields, mean zero
  std::vector<std::vector<LatticeField>> sigma;        // [i][pair], pair lattices, mean zero
  Mat a_hom;
  std::vector<SolveStats> stats;
};

// Column i of the effective matrix: per-direction edge means of the flux
// a (e_i + grad phi_i). The gradient mean vanishes by telescoping, so this
// is the discrete version of the homogenized coefficient column.
inline std::array<double, 3> a_hom_column(const CoefficientField& a, const LatticeField& phi_i,
                                          int i) {
  EdgeField flux = apply_coeff(a, gradient(phi_i));
  add_edge_fields(flux, unit_flux(a, i));
  std::array<double, 3> col{0.0, 0.0, 0.0};
  for (int j = 0; j < a.grid.dim; ++j) col[static_cast<std::size_t>(j)] = field_mean(flux[j]);
  return col;
}

// q_i = a (e_i + grad phi_i) - (measured column mean): exactly mean-free.
inline EdgeField flux_correction(const CoefficientField& a, const LatticeField& phi_i, int i,
                                 const std::array<double, 3>& col) {
  EdgeField q = apply_coeff(a, gradient(phi_i));
  add_edge_fields(q, unit_flux(a, i));
  for (int j = 0; j < a.grid.dim; ++j) {
    const double m = col[static_cast<std::size_t>(j)];
    LatticeField& qj = q[j];
    parallel_for(qj.count(), [&](std::int64_t n) { qj.v[static_cast<std::size_t>(n)] -= m; });
  }
  return q;
}

namespace detail {

// Reinterpret a torus lattice field with arbitrary staggering as a node
// field (identical flat layout on a torus) and back.
inline LatticeField as_node_field(const LatticeField& f) {
  for (int a = 0; a < f.grid.dim; ++a)
    if (!f.grid.periodic(a)) throw InvariantError("staggering reinterpretation needs a torus");
  LatticeField out(f.grid, {false, false, false});
  out.v = f.v;
  return out;
}

}  // namespace detail

// Skew potential components for direction i: sigma_i(jk) solves
//   -lap sigma = D_j q_k - D_k q_j     (all on the (j,k) pair lattice).
inline std::vector<LatticeField> solve_sigma(const CoefficientField& a, const EdgeField& q,
                                             const SolveOptions& opts) {
  const GridSpec& g = a.grid;
  const int d = g.dim;
  std::vector<LatticeField> out;
  for (int p = 0; p < pair_count(d); ++p) {
    const auto [j, k] = pair_axes(d, p);
    LatticeField rhs = edge_diff_to_pair(q[k], k, j);       // D_j q_k
    const LatticeField djq = edge_diff_to_pair(q[j], j, k); // D_k q_j
    parallel_for(rhs.count(), [&](std::int64_t n) {
      rhs.v[static_cast<std::size_t>(n)] -= djq.v[static_cast<std::size_t>(n)];
    });

    EllipticProblem P;
    P.grid = g;
    P.coeff = nullptr;
    P.bc = BoundarySpec::from_grid(g);
    LatticeField rhs_node = detail::as_node_field(rhs);
    LatticeField u(g, {false, false, false});
    solve_elliptic(P, rhs_node, u, opts);

    LatticeField s = make_pair_field(g, j, k);
    s.v = u.v;
    subtract_mean(s);
    out.push_back(std::move(s));
  }
  return out;
}

inline CorrectorSet solve_correctors(const CoefficientField& a, const SolveOptions& opts = {}) {
  const GridSpec& g = a.grid;
  const int d = g.dim;
  for (int ax = 0; ax < d; ++ax)
    if (!g.periodic(ax)) throw ConfigError("correctors are solved on the torus");

  CorrectorSet cs;
  cs.grid = g;
  cs.tol = opts.tol;
  cs.a_hom = Mat::zero(d);

  for (int i = 0; i < d; ++i) {
    EllipticProblem P;
    P.grid = g;
    P.coeff = &a;
    P.bc = BoundarySpec::from_grid(g);
    LatticeField rhs = divergence(unit_flux(a, i));
    LatticeField phi(g, {false, false, false});
    cs.stats.push_back(solve_elliptic(P, rhs, phi, opts));
    subtract_mean(phi);

    const std::array<double, 3> col = a_hom_column(a, phi, i);
    for (int j = 0; j < d; ++j) cs.a_hom(j, i) = col[static_cast<std::size_t>(j)];

    EdgeField q = flux_correction(a, phi, i, col);
    cs.sigma.push_back(solve_sigma(a, q, opts));
    cs.phi.push_back(std::move(phi));
  }

  // The effective matrix inherits the ellipticity window.
  const double lo = sym_min_eigenvalue(cs.a_hom);
  const double hi = operator_norm(cs.a_hom);
  if (lo < a.lambda - 1e-9 || hi > 1.0 + 1e-9)
    throw InvariantError("effective matrix escaped the ellipticity window: eig in [" +
                         format_double(lo) + ", " + format_double(hi) + "]");
  return cs;
}

// Max over j of ||sum_k D_k sigma_ijk - q_ij||_2, relative to the flux norm
// ||a(e_i + grad phi_i)||_2. Not relative to ||q_i||_2: a laminate makes q
// vanish along its layering direction, and a q-relative error there would be
// solver noise divided by solver noise. q is exactly mean-free, so the flux
// norm splits as ||q_j||^2 + col_j^2 * count without forming the flux field.
inline double sigma_identity_error(const CoefficientField& a, const CorrectorSet& cs, int i) {
  const GridSpec& g = a.grid;
  const int d = g.dim;
  const std::array<double, 3> col = a_hom_column(a, cs.phi[static_cast<std::size_t>(i)], i);
  EdgeField q = flux_correction(a, cs.phi[static_cast<std::size_t>(i)], i, col);
  double fnorm2 = 0.0;
  for (int j = 0; j < d; ++j) {
    const double n = norm2(q[j]);
    const double c = col[static_cast<std::size_t>(j)];
    fnorm2 += n * n + c * c * static_cast<double>(q[j].count());
  }
  const double qn = std::sqrt(fnorm2) + 1e-300;
  double worst = 0.0;
  for (int j = 0; j < d; ++j) {
    LatticeField acc;
    bool first = true;
    for (int k = 0; k < d; ++k) {
      if (k == j) continue;
      // D_k sigma_i(jk), signed by the stored orientation j < k.
      const LatticeField& s = cs.sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(pair_index(j, k))];
      LatticeField dks = pair_diff(s, k);
      const double sign = j < k ? 1.0 : -1.0;
      if (first) {
        acc = dks;
        if (sign < 0) parallel_for(acc.count(), [&](std::int64_t n) { acc.v[static_cast<std::size_t>(n)] = -acc.v[static_cast<std::size_t>(n)]; });
        first = false;
      } else {
        axpy(sign, dks, acc);
      }
    }
    axpy(-1.0, q[j], acc);
    worst = std::max(worst, norm2(acc) / qn);
  }
  return worst;
}

// --------------------------------------------------------------------------
// Sublinearity measurement.
// --------------------------------------------------------------------------

// delta_R = (1/R) sqrt( region-mean over B_R of sum_i |phi_i|^2
//                       + sum_{i, j<k} |sigma_ijk|^2 ).
inline double sublinearity_delta(const CorrectorSet& cs, double R) {
  std::vector<const LatticeField*> fields;
  for (const auto& p : cs.phi) fields.push_back(&p);
  for (const auto& row : cs.sigma)
    for (const auto& s : row) fields.push_back(&s);
  const double m = quad_avg_squared_sum(fields, Region::ball(R));
  return std::sqrt(m) / R;
}

struct DeltaRow {
  int m = 0;        // dyadic level
  double radius = 0.0;
  double delta = 0.0;
};

// Dyadic table delta_{r0 2^m}, m = 0..levels-1. The largest admissible radius
// is half the torus width: the min-image rule keeps B_{W/2} a genuine ball.
inline std::vector<DeltaRow> delta_table(const CorrectorSet& cs, double r0, int levels) {
  if (!(r0 > 0.0)) throw ConfigError("delta table needs a positive base radius");
  std::vector<DeltaRow> rows;
  for (int m = 0; m < levels; ++m) {
    const double R = r0 * std::pow(2.0, m);
    if (R > 0.5 * cs.grid.width(0) * (1.0 + 1e-12)) break;
    rows.push_back(DeltaRow{m, R, sublinearity_delta(cs, R)});
  }
  if (rows.empty()) throw ConfigError("delta table: no dyadic radius fits the torus");
  return rows;
}

// Running partial sums of the two sublinearity series over the table rows:
// sum_m m delta_{2^m}^{1/3} and sum_m delta_{2^m}. The monotone flag records
// whether the table itself decays row to row.
struct ConditionReport {
  std::vector<double> weighted_partial;  // partial sums of m * delta^{1/3}
  std::vector<double> plain_partial;     // partial sums of delta
  bool monotone = true;
};

inline ConditionReport check_condition(const std::vector<DeltaRow>& table) {
  ConditionReport out;
  double w = 0.0, p = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    w += static_cast<double>(table[i].m) * std::cbrt(table[i].delta);
    p += table[i].delta;
    out.weighted_partial.push_back(w);
    out.plain_partial.push_back(p);
    if (i > 0 && table[i].delta > table[i - 1].delta) out.monotone = false;
  }
  return out;
}

// --------------------------------------------------------------------------
// Corrector artifact IO.
// --------------------------------------------------------------------------

inline std::string sigma_tag(int i, int j, int k) {
  return "sg" + std::to_string(i) + std::to_string(j) + std::to_string(k);
}

inline void write_corrector_container(const std::string& path, const CorrectorSet& cs,
                                      const nlohmann::json& extra = {}) {
  std::vector<SectionData> sections;
  const int d = cs.grid.dim;
  for (int i = 0; i < d; ++i)
    add_section(sections, "phi" + std::to_string(i), cs.phi[static_cast<std::size_t>(i)]);
  for (int i = 0; i < d; ++i)
    for (int p = 0; p < pair_count(d); ++p) {
      const auto [j, k] = pair_axes(d, p);
      add_section(sections, sigma_tag(i, j, k),
                  cs.sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)]);
    }
  SectionData ahom;
  ahom.tag = "ahom";
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) ahom.data.push_back(cs.a_hom(r, c));
  sections.push_back(ahom);

  nlohmann::json side;
  side["format"] = "hshg-correctors-v1";
  side["version"] = kVersion;
  side["tol"] = cs.tol;
  std::vector<double> flat;
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) flat.push_back(cs.a_hom(r, c));
  side["a_hom"] = flat;
  if (!extra.is_null()) side["run"] = extra;
  write_container(path, cs.grid, sections, side);
}

inline CorrectorSet read_corrector_container(const std::string& path) {
  Container c = read_container(path);
  const int d = c.grid.dim;
  CorrectorSet cs;
  cs.grid = c.grid;
  cs.tol = c.sidecar.value("tol", 0.0);
  for (int i = 0; i < d; ++i) cs.phi.push_back(section_field(c, "phi" + std::to_string(i)));
  for (int i = 0; i < d; ++i) {
    std::vector<LatticeField> row;
    for (int p = 0; p < pair_count(d); ++p) {
      const auto [j, k] = pair_axes(d, p);
      row.push_back(section_field(c, sigma_tag(i, j, k)));
    }
    cs.sigma.push_back(std::move(row));
  }
  const SectionData& ahom = c.find("ahom");
  if (static_cast<int>(ahom.data.size()) != d * d)
    throw InvariantError("corrector artifact: effective matrix has the wrong size");
  cs.a_hom = Mat::zero(d);
  for (int r = 0; r < d; ++r)
    for (int col = 0; col < d; ++col)
      cs.a_hom(r, col) = ahom.data[static_cast<std::size_t>(r * d + col)];
  return cs;
}

}  // namespace hshg
