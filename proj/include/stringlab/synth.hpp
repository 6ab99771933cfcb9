#pragma once

// Closed-form rendering of a projected mode set:
//   u(x, t) = sum_n X_n(x) exp(-sigma0 t) cos(omega_n t).
// Every sample is evaluated directly from t, so any (x, t) costs O(modes)
// and no phase accumulates across samples.

#include <optional>
#include <vector>

#include "stringlab/field.hpp"
#include "stringlab/modal.hpp"

namespace stringlab {

struct RenderSpec {
  double sample_rate = 48000.0;
  double duration = 1.0;
  double start_time = 0.0;
  std::optional<double> pickup_x;  // unset renders the full field
  int n_spatial = 256;

  int n_samples() const;
  void validate() const;
};

/// Displacement at a single point of space-time.
double evaluate(const ModeSet& mode_set, double x, double t);

std::vector<double> render_waveform(const ModeSet& mode_set, const RenderSpec& spec);

/// n_spatial x n_samples field on the uniform grid over [-L/2, L/2].
FieldTrajectory render_field(const ModeSet& mode_set, const RenderSpec& spec);

}  // namespace stringlab
