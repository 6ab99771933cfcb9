#pragma once

// Reference computations shared by the unit and acceptance tests. They avoid
// the library's own algorithms so agreement means something.

#include <vector>

#include "stringlab/params.hpp"

namespace oracle {

// Wavenumbers of the first `count` clamped-clamped modes found from the
// combined frequency determinant on [0, L]
//   G(mu) = 2 mu nu (sech(nu L) - cos(mu L)) + (nu^2 - mu^2) sin(mu L) tanh(nu L)
// by a fine sign-change scan and plain bisection to machine precision.
std::vector<double> clamped_roots(const stringlab::StringParams& params, int count);

// Frequencies (Hz) of the `count` lowest spectral peaks of x, from a
// Hann-windowed transform zero-padded to 2^20 points with log-parabolic
// interpolation. A peak must dominate +-guard_hz and exceed 1e-3 of the
// global maximum.
std::vector<double> spectral_peaks(const std::vector<double>& x, double sample_rate, int count,
                                   double guard_hz = 30.0);

// Linear mode frequencies (Hz) of the explicit clamped scheme on nx
// intervals with time step dt: eigenvalues lambda of the interior operator
// -gamma^2 D2 + kappa^2 D4 (ghost node mirrored evenly) mapped through
// cos(omega dt) = 1 - dt^2 lambda / 2.
std::vector<double> discrete_string_frequencies(const stringlab::StringParams& params, int nx, double dt);

// |X_k| for k = 0 .. n/2 by the defining sum.
std::vector<double> dft_magnitude(const std::vector<double>& x);

std::vector<double> sine(double freq_hz, double sample_rate, int n, double amplitude = 1.0, double phase = 0.0);

}  // namespace oracle
