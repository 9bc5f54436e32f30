#pragma once

// On-disk artifacts.
//
// Field snapshot (layout id 1), all little-endian:
//   "HSHG" | u16 version=1 | u8 dim | u32 cells[dim] | f64 spacing | f64 lambda
//   | u8 layout=1 | f64 entries
// Entries run direction-major (k = 0..d-1); within a direction, edges in flat
// lattice order (axis 0 fastest); per edge a d x d matrix, row-major. A JSON
// sidecar at <path>.json records generator provenance and the certificate.
//
// Section container (layout id 2) shares the header, then:
//   u8 topo_mask (bit a set: axis a periodic) | u32 nsections
//   | { char tag[8] NUL-padded | u8 half_mask | u64 count | f64 data[count] }*
// All sections live on the one grid named in the header. Used for corrector
// and adapted-corrector bundles.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hshg/coefficient_field.hpp"
#include "hshg/common.hpp"
#include "hshg/grid.hpp"
#include "hshg/rng.hpp"

namespace hshg {

static_assert(std::endian::native == std::endian::little,
              "snapshot writer assumes a little-endian host");

inline constexpr std::uint16_t kSnapshotVersion = 1;

namespace detail {

template <typename T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw InvariantError(std::string("corrupt snapshot: truncated ") + what);
  return v;
}

inline void put_doubles(std::ofstream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline void get_doubles(std::ifstream& is, std::vector<double>& v, const char* what) {
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw InvariantError(std::string("corrupt snapshot: truncated ") + what);
}

inline std::ifstream open_artifact(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError(path);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError(path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "HSHG", 4) != 0)
    throw InvariantError("corrupt snapshot: bad magic in " + path);
  const auto version = get<std::uint16_t>(is, "version");
  if (version != kSnapshotVersion)
    throw InvariantError("unsupported snapshot version " + std::to_string(version));
  return is;
}

struct Header {
  int dim;
  std::array<int, 3> cells;
  double spacing;
  double lambda;
  std::uint8_t layout;
};

inline Header read_header(std::ifstream& is) {
  Header h{};
  h.dim = get<std::uint8_t>(is, "dim");
  if (h.dim < 1 || h.dim > 3) throw InvariantError("corrupt snapshot: bad dimension");
  h.cells = {1, 1, 1};
  for (int a = 0; a < h.dim; ++a) {
    const auto c = get<std::uint32_t>(is, "cells");
    if (c == 0 || c > (1u << 24)) throw InvariantError("corrupt snapshot: bad cell count");
    h.cells[static_cast<std::size_t>(a)] = static_cast<int>(c);
  }
  h.spacing = get<double>(is, "spacing");
  h.lambda = get<double>(is, "lambda");
  h.layout = get<std::uint8_t>(is, "layout");
  return h;
}

inline void write_header(std::ofstream& os, const GridSpec& g, double lambda,
                         std::uint8_t layout) {
  os.write("HSHG", 4);
  put(os, kSnapshotVersion);
  put(os, static_cast<std::uint8_t>(g.dim));
  for (int a = 0; a < g.dim; ++a)
    put(os, static_cast<std::uint32_t>(g.cells[static_cast<std::size_t>(a)]));
  put(os, g.spacing);
  put(os, lambda);
  put(os, layout);
}

}  // namespace detail

// --------------------------------------------------------------------------
// Field snapshots (torus fields only; half grids are derived in memory).
// --------------------------------------------------------------------------

inline nlohmann::json field_sidecar(const CoefficientField& f) {
  nlohmann::json j;
  j["format"] = "hshg-field-v1";
  j["version"] = kVersion;
  j["dim"] = f.grid.dim;
  std::vector<int> cells(f.grid.cells.begin(), f.grid.cells.begin() + f.grid.dim);
  j["cells"] = cells;
  j["spacing"] = f.grid.spacing;
  j["lambda"] = f.lambda;
  j["generator"] = {{"id", f.generator_id},
                    {"seed", f.seed},
                    {"params", nlohmann::json::parse(f.params_json)}};
  j["rng"] = kRngId;
  j["certificate"] = {{"min_eig", f.cert.min_eig},
                      {"max_op_norm", f.cert.max_op_norm},
                      {"symmetric", f.cert.symmetric},
                      {"axis_diagonal", f.cert.axis_diagonal}};
  return j;
}

inline void write_field_snapshot(const std::string& path, const CoefficientField& f) {
  for (int a = 0; a < f.grid.dim; ++a)
    if (!f.grid.periodic(a)) throw InvariantError("field snapshots must live on a torus");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  detail::write_header(os, f.grid, f.lambda, 1);
  for (int k = 0; k < f.grid.dim; ++k)
    detail::put_doubles(os, f.entries[static_cast<std::size_t>(k)]);
  if (!os) throw ConfigError("write failed: " + path);
  os.close();

  std::ofstream js(path + ".json", std::ios::trunc);
  if (!js) throw ConfigError("cannot open " + path + ".json for writing");
  js << field_sidecar(f).dump(2) << "\n";
}

namespace detail {

// GridSpec from a stored header: periodic axes centre the origin, the bounded
// vertical axis anchors it at the flat boundary.
inline GridSpec grid_from_header(const Header& h, std::uint8_t topo) {
  GridSpec g;
  g.dim = h.dim;
  g.spacing = h.spacing;
  for (int a = 0; a < h.dim; ++a) {
    const bool periodic = (topo >> a) & 1;
    const int c = h.cells[static_cast<std::size_t>(a)];
    g.cells[static_cast<std::size_t>(a)] = c;
    g.topo[static_cast<std::size_t>(a)] = periodic ? AxisTopology::Periodic : AxisTopology::Bounded;
    g.origin[static_cast<std::size_t>(a)] = periodic ? c / 2 : 0.0;
  }
  g.validate();
  return g;
}

}  // namespace detail

inline CoefficientField read_field_snapshot(const std::string& path) {
  std::ifstream is = detail::open_artifact(path);
  const detail::Header h = detail::read_header(is);
  if (h.layout != 1) throw InvariantError("corrupt snapshot: expected field layout in " + path);
  CoefficientField f;
  f.grid = detail::grid_from_header(h, static_cast<std::uint8_t>((1u << h.dim) - 1));
  f.lambda = h.lambda;
  const int dd = h.dim * h.dim;
  for (int k = 0; k < h.dim; ++k) {
    auto& ek = f.entries[static_cast<std::size_t>(k)];
    ek.assign(static_cast<std::size_t>(f.edge_count(k)) * static_cast<std::size_t>(dd), 0.0);
    detail::get_doubles(is, ek, "entries");
  }

  const std::string sidecar_path = path + ".json";
  bool have_sidecar = false;
  if (std::filesystem::exists(sidecar_path)) {
    std::ifstream js(sidecar_path);
    nlohmann::json j = nlohmann::json::parse(js, nullptr, false);
    if (!j.is_discarded() && j.contains("generator")) {
      f.generator_id = j["generator"].value("id", "");
      f.seed = j["generator"].value("seed", 0ull);
      if (j["generator"].contains("params")) f.params_json = j["generator"]["params"].dump();
      if (j.contains("certificate")) {
        f.cert.min_eig = j["certificate"].value("min_eig", 0.0);
        f.cert.max_op_norm = j["certificate"].value("max_op_norm", 0.0);
        f.cert.symmetric = j["certificate"].value("symmetric", true);
        f.cert.axis_diagonal = j["certificate"].value("axis_diagonal", false);
        have_sidecar = true;
      }
    }
  }
  if (!have_sidecar) f.cert = compute_certificate(f);
  require_elliptic(f);
  return f;
}

// --------------------------------------------------------------------------
// Section containers.
// --------------------------------------------------------------------------

struct SectionData {
  std::string tag;  // at most 8 bytes
  std::array<bool, 3> half{false, false, false};
  std::vector<double> data;
};

struct Container {
  GridSpec grid;
  std::vector<SectionData> sections;
  nlohmann::json sidecar;

  const SectionData& find(const std::string& tag) const {
    for (const auto& s : sections)
      if (s.tag == tag) return s;
    throw MissingArtifactError("section '" + tag + "'");
  }

  bool has(const std::string& tag) const {
    for (const auto& s : sections)
      if (s.tag == tag) return true;
    return false;
  }
};

inline void add_section(std::vector<SectionData>& out, const std::string& tag,
                        const LatticeField& f) {
  if (tag.empty() || tag.size() > 8) throw InvariantError("section tag must be 1..8 bytes");
  out.push_back(SectionData{tag, f.half, f.v});
}

inline LatticeField section_field(const Container& c, const std::string& tag) {
  const SectionData& s = c.find(tag);
  LatticeField f(c.grid, s.half);
  if (f.v.size() != s.data.size())
    throw InvariantError("section '" + tag + "' size does not match the grid");
  f.v = s.data;
  return f;
}

inline void write_container(const std::string& path, const GridSpec& grid,
                            const std::vector<SectionData>& sections,
                            const nlohmann::json& sidecar) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  detail::write_header(os, grid, 0.0, 2);
  std::uint8_t topo = 0;
  for (int a = 0; a < grid.dim; ++a)
    if (grid.periodic(a)) topo |= static_cast<std::uint8_t>(1u << a);
  detail::put(os, topo);
  detail::put(os, static_cast<std::uint32_t>(sections.size()));
  for (const auto& s : sections) {
    char tag[8] = {0};
    std::memcpy(tag, s.tag.data(), std::min<std::size_t>(s.tag.size(), 8));
    os.write(tag, 8);
    std::uint8_t half = 0;
    for (int a = 0; a < grid.dim; ++a)
      if (s.half[static_cast<std::size_t>(a)]) half |= static_cast<std::uint8_t>(1u << a);
    detail::put(os, half);
    detail::put(os, static_cast<std::uint64_t>(s.data.size()));
    detail::put_doubles(os, s.data);
  }
  if (!os) throw ConfigError("write failed: " + path);
  os.close();

  std::ofstream js(path + ".json", std::ios::trunc);
  if (!js) throw ConfigError("cannot open " + path + ".json for writing");
  js << sidecar.dump(2) << "\n";
}

inline Container read_container(const std::string& path) {
  std::ifstream is = detail::open_artifact(path);
  const detail::Header h = detail::read_header(is);
  if (h.layout != 2) throw InvariantError("corrupt snapshot: expected container layout in " + path);
  const auto topo = detail::get<std::uint8_t>(is, "topology");
  // Supported shapes: full torus, or a bottom-anchored half grid (lateral
  // axes periodic, last axis bounded).
  const auto all = static_cast<std::uint8_t>((1u << h.dim) - 1);
  if (topo != all && topo != static_cast<std::uint8_t>(all >> 1))
    throw InvariantError("corrupt snapshot: unsupported topology mask");
  Container c;
  c.grid = detail::grid_from_header(h, topo);
  const auto nsec = detail::get<std::uint32_t>(is, "section count");
  if (nsec > 4096) throw InvariantError("corrupt snapshot: absurd section count");
  for (std::uint32_t i = 0; i < nsec; ++i) {
    char tag[9] = {0};
    is.read(tag, 8);
    if (!is) throw InvariantError("corrupt snapshot: truncated section tag");
    SectionData s;
    s.tag = tag;
    const auto half = detail::get<std::uint8_t>(is, "half mask");
    for (int a = 0; a < h.dim; ++a) s.half[static_cast<std::size_t>(a)] = (half >> a) & 1;
    const auto count = detail::get<std::uint64_t>(is, "section size");
    if (count > (1ull << 32)) throw InvariantError("corrupt snapshot: absurd section size");
    s.data.assign(count, 0.0);
    detail::get_doubles(is, s.data, "section data");
    c.sections.push_back(std::move(s));
  }

  const std::string sidecar_path = path + ".json";
  if (std::filesystem::exists(sidecar_path)) {
    std::ifstream js(sidecar_path);
    c.sidecar = nlohmann::json::parse(js, nullptr, false);
    if (c.sidecar.is_discarded()) c.sidecar = nlohmann::json::object();
  } else {
    c.sidecar = nlohmann::json::object();
  }
  return c;
}

}  // namespace hshg
