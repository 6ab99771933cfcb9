#pragma once

// Modal decomposition of the clamped, damped, linear stiff string.
//
// Mode shapes on x in [-L/2, L/2]:
//   odd family : c1 (sin mu x - sin(mu L/2)/sinh(nu L/2) sinh nu x)
//   even family: c2 (cos mu x - cos(mu L/2)/cosh(nu L/2) cosh nu x)
// with nu = sqrt(mu^2 + gamma^2/kappa^2). The allowed wavenumbers satisfy
//   even: mu tan(mu L/2) = -nu tanh(nu L/2)
//   odd : nu tan(mu L/2) =  mu tanh(nu L/2)
// and each mode oscillates as exp(-sigma0 t) cos(omega t) with
// omega = sqrt(mu^4 kappa^2 + mu^2 gamma^2 - sigma0^2).

#include <span>
#include <vector>

#include "json.hpp"
#include "stringlab/params.hpp"

namespace stringlab {

enum class ModeFamily { Even, Odd };

struct Mode {
  int index = 0;  // 1-based, in order of increasing omega
  double mu = 0.0;
  double nu = 0.0;
  double omega = 0.0;
  ModeFamily family = ModeFamily::Even;
  double c1 = 0.0;  // sin/sinh coefficient, nonzero only for Odd
  double c2 = 0.0;  // cos/cosh coefficient, nonzero only for Even

  double amplitude() const { return family == ModeFamily::Odd ? c1 : c2; }
  double frequency_hz() const;
  void set_amplitude(double a);
};

struct ModeSet {
  StringParams params;
  std::vector<Mode> modes;
  double nyquist_hz = 0.0;

  bool empty() const { return modes.empty(); }
  std::size_t size() const { return modes.size(); }

  /// First n modes (all of them when n exceeds the size).
  ModeSet truncated(std::size_t n) const;
};

inline constexpr int kDefaultMaxOrder = 100;
inline constexpr int kDefaultModes = 40;

/// Pole-free residual of the boundary condition for a family, i.e. the
/// tangent form multiplied through by cos(mu L/2):
///   even: mu sin(a) + nu cos(a) tanh(b)
///   odd : nu sin(a) - mu cos(a) tanh(b),   a = mu L/2, b = nu L/2.
double boundary_residual(ModeFamily family, double mu, const StringParams& params);

/// Roots of both families, merged in increasing order, capped at max_order
/// and at modes whose frequency stays below nyquist_hz. Every root carries a
/// unit shape coefficient. Requires kappa > 0.
ModeSet find_mode_roots(const StringParams& params, int max_order = kDefaultMaxOrder,
                        double nyquist_hz = 24000.0);

/// omega = sqrt(mu^4 kappa^2 + mu^2 gamma^2 - sigma0^2); throws Overdamped when
/// the radicand is not positive.
double mode_frequency(double mu, const StringParams& params);

/// Shape value X(x). The hyperbolic ratios are evaluated from exponentials of
/// (|x| - L/2) so large nu L never overflows.
double mode_shape(const Mode& mode, double x, const StringParams& params);

/// Least-squares amplitudes fitting sum_n a_n X_n to u0 sampled on the
/// uniform grid over [-L/2, L/2]. Throws IllConditioned when the Gram matrix
/// condition number exceeds 1e12.
ModeSet project_initial_condition(std::span<const double> u0, const ModeSet& mode_set);

/// sum_n X_n(x_i) on the same uniform grid as u0.
std::vector<double> reconstruct(const ModeSet& mode_set, int n_points);

void to_json(nlohmann::json& j, const ModeSet& m);
void from_json(const nlohmann::json& j, ModeSet& m);

}  // namespace stringlab
