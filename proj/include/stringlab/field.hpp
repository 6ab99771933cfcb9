#pragma once

// Spatio-temporal displacement fields shared by the modal renderer and the
// finite-difference solver, plus their on-disk formats.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "stringlab/params.hpp"

namespace stringlab {

/// Discretization of the finite-difference solver. nx counts intervals, so a
/// field on this grid has nx + 1 nodes including both clamped ends. Output
/// frames are spaced by dt; the solver advances `oversample` internal steps
/// of dt / oversample between them.
struct SimGrid {
  int nx = 0;
  double dx = 0.0;
  double dt = 0.0;
  int nt = 0;
  int oversample = 1;

  double internal_dt() const { return dt / oversample; }
};

void to_json(nlohmann::json& j, const SimGrid& g);

struct FieldTrajectory {
  int n_space = 0;  // spatial nodes over [-L/2, L/2], endpoints included
  int n_time = 0;
  double sample_rate = 48000.0;
  double length = 1.0;
  std::vector<double> u;                    // frame-major: u[t * n_space + i]
  std::optional<std::vector<double>> zeta;  // same layout when retained
  std::vector<double> energy;               // per frame, solver output only
  StringParams params;
  std::optional<SimGrid> grid;
  std::optional<PluckProfile> pluck;

  double at(int i, int t) const { return u[static_cast<std::size_t>(t) * n_space + i]; }
  std::span<const double> frame(int t) const {
    return {u.data() + static_cast<std::size_t>(t) * n_space, static_cast<std::size_t>(n_space)};
  }
  std::span<const double> zeta_frame(int t) const {
    return {zeta->data() + static_cast<std::size_t>(t) * n_space, static_cast<std::size_t>(n_space)};
  }
  /// Displacement history of spatial node i.
  std::vector<double> row(int i) const;
  double dx() const { return length / (n_space - 1); }
  double position(int i) const { return -0.5 * length + i * dx(); }
};

/// Writes `<base>.bin` (little-endian float64, row-major with rows = space
/// and cols = time) next to a `<base>.json` header. When `zeta` is set the
/// longitudinal field goes to `<base>_zeta.bin` with the same header shape.
void write_field_binary(const FieldTrajectory& field, const std::filesystem::path& base);

/// Reads back a field written by write_field_binary (transverse part only).
FieldTrajectory read_field_binary(const std::filesystem::path& base);

/// CSV with one row per spatial node; the first column is x.
void write_field_csv(const FieldTrajectory& field, const std::filesystem::path& path);

}  // namespace stringlab
