// Experiment configuration: JSON in, validated parameters out.
//
// The on-disk format is pinned by schema/experiment.schema.json. The checks
// here enforce the same shape, so a config that loads also validates against
// the published schema and vice versa; keep the two in sync when adding keys.
// The raw bytes of the file are kept alongside the parsed values because the
// run record identifies a run by the hash of exactly those bytes.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "hshg/common.hpp"
#include "hshg/generators.hpp"
#include "hshg/grid.hpp"
#include "hshg/smallmat.hpp"
#include "hshg/solver.hpp"
#include "json.hpp"

namespace hshg {

inline constexpr int kConfigSchemaVersion = 1;

struct FieldConfig {
  std::string generator;  // constant | laminate | checkerboard | poisson | gaussian
  nlohmann::json params = nlohmann::json::object();  // generator-specific block
  std::vector<std::uint64_t> seeds{0};
};

struct ExperimentConfig {
  std::string name;
  int dim = 2;
  int cells = 0;         // torus cells per axis
  int height_cells = 0;  // vertical extent of the half grid; 0 resolves to cells
  double spacing = 1.0;
  FieldConfig field;
  SolveOptions solve;
  // Adaptation parameters, recorded with the run so results are replayable.
  double smallness_threshold = 0.1;
  int max_levels = 32;
  double psi_residual_limit = 0.02;
  // Analysis parameters.
  std::vector<double> radii;        // physical units, sorted ascending on load
  std::vector<double> alphas{0.5};  // decay exponents to check
  int samples = 5;                  // harmonic samples per field seed
  double c_pass = 10.0;             // decay-check constant
  std::string output;  // default run directory; a CLI --out flag wins
  std::string raw;     // exact bytes parsed, hashed for the run record
};

// Identity of a run: the hash of the config bytes, not of the parsed values,
// so any textual edit (even whitespace) makes a new run directory invalid.
inline std::string config_hash(const ExperimentConfig& cfg) { return hex64(fnv1a64(cfg.raw)); }

inline GridSpec torus_grid(const ExperimentConfig& cfg) {
  return make_torus(cfg.dim, cfg.cells, cfg.spacing);
}

inline GridSpec half_grid(const ExperimentConfig& cfg) {
  return make_half_grid(cfg.dim, cfg.cells, cfg.height_cells, cfg.spacing);
}

namespace detail {

// additionalProperties: false, with a message naming the offender.
inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const char* where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || item.key() == k;
    if (!ok)
      throw ConfigError(std::string("unknown key \"") + item.key() + "\" in " + where);
  }
}

inline const nlohmann::json& need(const nlohmann::json& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string("missing required key \"") + key + "\" in " + where);
  return *it;
}

inline std::vector<double> number_list(const nlohmann::json& j, const char* where) {
  if (!j.is_array()) throw ConfigError(std::string(where) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(std::string(where) + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace detail

// Structural and semantic validation; mirrors the published schema. The one
// check the schema cannot express is the radii/grid fit, done here.
inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.name.empty()) throw ConfigError("name must be a non-empty string");
  for (char c : cfg.name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' && c != '-')
      throw ConfigError("name may only contain letters, digits, '.', '_', '-'");
  if (cfg.dim != 2 && cfg.dim != 3) throw ConfigError("grid.dim must be 2 or 3");
  if (cfg.cells < 8) throw ConfigError("grid.cells must be at least 8");
  if (cfg.height_cells < 8 || cfg.height_cells > cfg.cells)
    throw ConfigError("grid.height_cells must lie in [8, cells]");
  if (!(cfg.spacing > 0.0)) throw ConfigError("grid.spacing must be positive");

  static const char* kGenerators[] = {"constant", "laminate", "checkerboard", "poisson",
                                      "gaussian"};
  if (std::find(std::begin(kGenerators), std::end(kGenerators), cfg.field.generator) ==
      std::end(kGenerators))
    throw ConfigError("field.generator \"" + cfg.field.generator + "\" is not known");
  if (cfg.field.seeds.empty()) throw ConfigError("field.seeds must not be empty");

  if (!(cfg.solve.tol > 0.0) || cfg.solve.tol > 1e-4)
    throw ConfigError("solver.tol must lie in (0, 1e-4]");
  if (cfg.solve.max_iter < 1) throw ConfigError("solver.max_iter must be positive");

  if (!(cfg.smallness_threshold > 0.0))
    throw ConfigError("adaptation.smallness_threshold must be positive");
  if (cfg.max_levels < 1) throw ConfigError("adaptation.max_levels must be positive");
  if (!(cfg.psi_residual_limit > 0.0) || cfg.psi_residual_limit > 1.0)
    throw ConfigError("adaptation.psi_residual_limit must lie in (0, 1]");

  if (cfg.radii.empty()) throw ConfigError("analysis.radii must not be empty");
  const double half_width = 0.5 * cfg.cells * cfg.spacing;
  const double height = cfg.height_cells * cfg.spacing;
  for (double r : cfg.radii) {
    if (!(r > 0.0)) throw ConfigError("analysis.radii must be positive");
    if (r > half_width || r > height) {
      std::ostringstream os;
      os << "analysis radius " << r << " does not fit the grid (half-width " << half_width
         << ", height " << height << ")";
      throw ConfigError(os.str());
    }
  }
  for (double a : cfg.alphas)
    if (!(a > 0.0) || !(a < 1.0)) throw ConfigError("analysis.alphas must lie in (0, 1)");
  if (cfg.samples < 0) throw ConfigError("analysis.samples must be non-negative");
  if (!(cfg.c_pass > 0.0)) throw ConfigError("analysis.c_pass must be positive");
}

// Parses and validates config text. All shape errors surface as ConfigError;
// the raw text is preserved verbatim in the result.
inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.raw = text;
  try {
    detail::check_keys(
        j, {"schema_version", "name", "grid", "field", "solver", "adaptation", "analysis",
            "output"},
        "config");
    const int version = detail::need(j, "schema_version", "config").get<int>();
    if (version != kConfigSchemaVersion) {
      std::ostringstream os;
      os << "unsupported schema_version " << version << " (tool expects " << kConfigSchemaVersion
         << ")";
      throw ConfigError(os.str());
    }
    cfg.name = detail::need(j, "name", "config").get<std::string>();

    const nlohmann::json& grid = detail::need(j, "grid", "config");
    detail::check_keys(grid, {"dim", "cells", "height_cells", "spacing"}, "grid");
    cfg.dim = detail::need(grid, "dim", "grid").get<int>();
    cfg.cells = detail::need(grid, "cells", "grid").get<int>();
    cfg.height_cells = grid.value("height_cells", 0);
    if (cfg.height_cells == 0) cfg.height_cells = cfg.cells;
    cfg.spacing = grid.value("spacing", 1.0);

    const nlohmann::json& field = detail::need(j, "field", "config");
    detail::check_keys(field, {"generator", "params", "seeds"}, "field");
    cfg.field.generator = detail::need(field, "generator", "field").get<std::string>();
    cfg.field.params = field.value("params", nlohmann::json::object());
    if (!cfg.field.params.is_object()) throw ConfigError("field.params must be an object");
    if (field.contains("seeds")) {
      cfg.field.seeds.clear();
      for (const auto& s : field.at("seeds")) {
        if (!s.is_number_integer() || s.get<std::int64_t>() < 0)
          throw ConfigError("field.seeds must be non-negative integers");
        cfg.field.seeds.push_back(s.get<std::uint64_t>());
      }
    }

    if (j.contains("solver")) {
      const nlohmann::json& solver = j.at("solver");
      detail::check_keys(solver, {"tol", "max_iter"}, "solver");
      cfg.solve.tol = solver.value("tol", cfg.solve.tol);
      cfg.solve.max_iter = solver.value("max_iter", cfg.solve.max_iter);
    }

    if (j.contains("adaptation")) {
      const nlohmann::json& ad = j.at("adaptation");
      detail::check_keys(ad, {"smallness_threshold", "max_levels", "psi_residual_limit"},
                         "adaptation");
      cfg.smallness_threshold = ad.value("smallness_threshold", cfg.smallness_threshold);
      cfg.max_levels = ad.value("max_levels", cfg.max_levels);
      cfg.psi_residual_limit = ad.value("psi_residual_limit", cfg.psi_residual_limit);
    }

    const nlohmann::json& an = detail::need(j, "analysis", "config");
    detail::check_keys(an, {"radii", "alphas", "samples", "c_pass"}, "analysis");
    cfg.radii = detail::number_list(detail::need(an, "radii", "analysis"), "analysis.radii");
    std::sort(cfg.radii.begin(), cfg.radii.end());
    if (an.contains("alphas"))
      cfg.alphas = detail::number_list(an.at("alphas"), "analysis.alphas");
    cfg.samples = an.value("samples", cfg.samples);
    cfg.c_pass = an.value("c_pass", cfg.c_pass);

    cfg.output = j.value("output", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config shape error: ") + e.what());
  }

  validate_config(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

// --------------------------------------------------------------------------
// Generator dispatch
// --------------------------------------------------------------------------

namespace detail {

inline Mat matrix_from_params(const nlohmann::json& p, int dim) {
  if (p.contains("matrix")) {
    const std::vector<double> flat = number_list(p.at("matrix"), "field.params.matrix");
    if (static_cast<int>(flat.size()) != dim * dim)
      throw ConfigError("field.params.matrix must have dim*dim entries (row-major)");
    Mat m = Mat::zero(dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c)
        m(r, c) = flat[static_cast<std::size_t>(r * dim + c)];
    return m;
  }
  return Mat::scalar(dim, p.value("value", 1.0));
}

}  // namespace detail

// Builds the coefficient field named by the config on the torus grid.
// Deterministic generators ignore the seed; seeded ones thread it through
// unchanged so the artifact name and the field content agree.
inline CoefficientField make_field(const ExperimentConfig& cfg, std::uint64_t seed) {
  const GridSpec g = torus_grid(cfg);
  const nlohmann::json& p = cfg.field.params;
  const std::string& id = cfg.field.generator;

  if (id == "constant") {
    detail::check_keys(p, {"value", "matrix", "lambda"}, "field.params (constant)");
    ConstantParams cp;
    cp.matrix = detail::matrix_from_params(p, cfg.dim);
    cp.lambda = p.value("lambda", 0.0);
    return make_constant(g, cp);
  }
  if (id == "laminate") {
    detail::check_keys(p, {"axis", "period", "breakpoints", "values", "lambda"},
                       "field.params (laminate)");
    LaminateParams lp;
    lp.axis = p.value("axis", 0);
    lp.period = detail::need(p, "period", "field.params (laminate)").get<double>();
    lp.breakpoints = detail::number_list(detail::need(p, "breakpoints", "field.params (laminate)"),
                                         "field.params.breakpoints");
    lp.values = detail::number_list(detail::need(p, "values", "field.params (laminate)"),
                                    "field.params.values");
    lp.lambda = p.value("lambda", 0.0);
    return make_laminate(g, lp);
  }
  if (id == "checkerboard") {
    detail::check_keys(p, {"tile", "v0", "v1", "lambda"}, "field.params (checkerboard)");
    CheckerboardParams cp;
    cp.tile = detail::need(p, "tile", "field.params (checkerboard)").get<double>();
    cp.v0 = p.value("v0", cp.v0);
    cp.v1 = p.value("v1", cp.v1);
    cp.lambda = p.value("lambda", 0.0);
    return make_checkerboard(g, cp);
  }
  if (id == "poisson") {
    detail::check_keys(p, {"density", "radius", "value_inside", "value_outside", "lambda"},
                       "field.params (poisson)");
    PoissonParams pp;
    pp.density = detail::need(p, "density", "field.params (poisson)").get<double>();
    pp.radius = detail::need(p, "radius", "field.params (poisson)").get<double>();
    pp.value_inside = p.value("value_inside", pp.value_inside);
    pp.value_outside = p.value("value_outside", pp.value_outside);
    pp.lambda = p.value("lambda", 0.0);
    return make_poisson(g, pp, seed);
  }
  if (id == "gaussian") {
    detail::check_keys(p, {"beta", "lo", "hi", "lambda"}, "field.params (gaussian)");
    GaussianParams gp;
    gp.beta = p.value("beta", gp.beta);
    gp.lo = p.value("lo", gp.lo);
    gp.hi = p.value("hi", gp.hi);
    gp.lambda = p.value("lambda", 0.0);
    return make_gaussian(g, gp, seed);
  }
  throw ConfigError("field.generator \"" + id + "\" is not known");
}

}  // namespace hshg
