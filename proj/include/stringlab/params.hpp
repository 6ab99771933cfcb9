#pragma once

// Physical coefficients of a string in the scaled (gamma, kappa, alpha) form,
// damping calibration from decay times, and pluck initial conditions.

#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"

namespace stringlab {

inline constexpr double kPi = 3.14159265358979323846;

struct StringParams {
  double gamma = 440.0;   // wave speed coefficient, 1/s
  double kappa = 8.8;     // stiffness coefficient, 1/s
  double alpha = 1.0;     // tension ratio sqrt(EA/T0)
  double sigma0 = 0.0;    // frequency-independent damping, 1/s
  double sigma1 = 0.0;    // frequency-dependent damping
  double length = 1.0;

  /// Throws Error(InvalidParams) when a coefficient is out of range or the
  /// lowest mode would be overdamped. The underdamping check uses mu = pi/L,
  /// a lower bound for the first clamped wavenumber.
  void validate() const;

  bool operator==(const StringParams&) const = default;
};

struct T60Spec {
  double f1 = 1150.0;
  double f2 = 150.0;
  double t1 = 15.0;
  double t2 = 25.0;

  void validate() const;

  bool operator==(const T60Spec&) const = default;
};

enum class PluckShape { RaisedCosine, Triangular };

struct PluckProfile {
  double px = 0.5;   // pluck position as a fraction of the length, in (0, 1)
  double pa = 0.01;  // peak displacement
  PluckShape shape = PluckShape::RaisedCosine;
  std::optional<double> width;  // half-width as a fraction of the length

  void validate() const;

  bool operator==(const PluckProfile&) const = default;
};

struct Damping {
  double sigma0 = 0.0;
  double sigma1 = 0.0;
};

/// Stiffness-corrected squared-wavenumber term used by the decay-time
/// calibration: -gamma^2 + sqrt(gamma^4 + 4 kappa^2 (2 pi f)^2), evaluated in
/// the cancellation-free form.
double t60_xi(double freq_hz, double gamma, double kappa);

/// Two-point calibration of (sigma0, sigma1) from decay times. The rate
/// constant is 6 ln 10, so "T60" here means a 10^-6 amplitude decay.
/// Throws DegenerateSpec when the two xi terms coincide (always the case for
/// kappa = 0) and NegativeDamping when either coefficient comes out negative.
Damping damping_from_t60(const T60Spec& spec, double gamma, double kappa);

/// Ideal-string mapping f0 = gamma / (2 L). With kappa > 0 the realized
/// fundamental sits slightly above f0.
double gamma_from_f0(double f0_hz, double length = 1.0);

/// Samples of the initial displacement on n_points uniform nodes spanning
/// [-L/2, L/2] (endpoints included). The apex is snapped to the node nearest
/// x_p = -L/2 + px L so the discrete maximum equals pa exactly.
std::vector<double> make_pluck(const PluckProfile& profile, int n_points, double length = 1.0);

/// Uniform node positions over [-L/2, L/2], endpoints included.
std::vector<double> uniform_grid(int n_points, double length);

void to_json(nlohmann::json& j, const StringParams& p);
void from_json(const nlohmann::json& j, StringParams& p);
void to_json(nlohmann::json& j, const T60Spec& s);
void from_json(const nlohmann::json& j, T60Spec& s);
void to_json(nlohmann::json& j, const PluckProfile& p);
void from_json(const nlohmann::json& j, PluckProfile& p);

}  // namespace stringlab
