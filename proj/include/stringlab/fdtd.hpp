#pragma once

// Explicit finite-difference solver for the coupled transverse/longitudinal
// stiff string with clamped ends:
//
//   u_tt = g^2 u_xx + g^2 (a^2-1)/2 (q^3 + 2 p q)_x - k^2 u_xxxx - 2 s0 u_t + 2 s1 u_txx
//   z_tt = g^2 a^2 z_xx + g^2 (a^2-1)/2 (q^2)_x      - 2 s0 z_t + 2 s1 z_txx
//
// with q = u_x, p = z_x (g = gamma, a = alpha, k = kappa, s = sigma). u is
// clamped (u = u_x = 0) and z is fixed (z = 0) at both ends.

#include <span>
#include <vector>

#include "stringlab/field.hpp"
#include "stringlab/params.hpp"

namespace stringlab {

struct SimOptions {
  int nx = 0;          // interval count override; 0 picks the coarsest stable grid
  int oversample = 0;  // internal steps per output frame; 0 picks the smallest stable
  bool store_zeta = false;
};

/// Smallest spacing that keeps the transverse scheme stable at time step dt:
/// dx^2 >= (g^2 dt^2 + 4 s1 dt + sqrt((g^2 dt^2 + 4 s1 dt)^2 + 16 k^2 dt^2)) / 2.
double min_stable_dx(const StringParams& params, double dt);

/// Grid with dt = 1/sample_rate and the finest nx the stability bound allows.
/// When alpha > 1 the longitudinal wave travels alpha times faster; the
/// returned oversample factor subdivides each output step until the
/// longitudinal scheme is stable on the same spatial grid. Throws
/// Underresolved when nx < 8.
SimGrid stable_grid(const StringParams& params, double sample_rate);

/// Runs the solver from the given pluck with zero initial velocity.
FieldTrajectory simulate(const StringParams& params, const PluckProfile& pluck, double sample_rate,
                         double duration, const SimOptions& options = {});

/// Same as simulate, starting from an arbitrary displacement sampled on the
/// solver's nodes (u0.size() must equal nx + 1 of the grid the options pick;
/// see grid_for).
FieldTrajectory simulate_from(const StringParams& params, std::span<const double> u0, double sample_rate,
                              double duration, const SimOptions& options = {});

/// Grid that simulate/simulate_from will use for these inputs.
SimGrid grid_for(const StringParams& params, double sample_rate, const SimOptions& options = {});

/// Waveform at x0 by linear interpolation between the two nearest nodes.
std::vector<double> pickup(const FieldTrajectory& trajectory, double x0);

/// Energy of the state pair (now, prev) one time step dt apart on nodes
/// spaced by dx: kinetic + tension + stiffness, plus longitudinal and
/// nonlinear coupling terms when zeta spans are given. Products of spatial
/// differences mix both time levels, which makes the linear lossless scheme
/// conserve it to rounding.
double state_energy(const StringParams& params, double dx, double dt, std::span<const double> u_now,
                    std::span<const double> u_prev, std::span<const double> zeta_now = {},
                    std::span<const double> zeta_prev = {});

/// Energy the solver recorded at output frame `step` (>= 1).
double discrete_energy(const FieldTrajectory& trajectory, int step);

}  // namespace stringlab
