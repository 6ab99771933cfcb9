#include "stringlab/modal.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "stringlab/error.hpp"

namespace stringlab {

namespace {

struct Eval {
  double value;
  double slope;
};

double companion_nu(double mu, const StringParams& p) {
  const double two_l = p.gamma * p.gamma / (p.kappa * p.kappa);
  return std::sqrt(mu * mu + two_l);
}

// sech^2 without overflow for large arguments.
double sech2(double b) {
  const double e = std::exp(-2.0 * b);
  return 4.0 * e / ((1.0 + e) * (1.0 + e));
}

Eval residual_and_slope(ModeFamily family, double mu, const StringParams& p) {
  const double half = 0.5 * p.length;
  const double nu = companion_nu(mu, p);
  const double a = mu * half;
  const double b = nu * half;
  const double sa = std::sin(a);
  const double ca = std::cos(a);
  const double t = std::tanh(b);
  const double dt = sech2(b) * half * mu / nu;  // d tanh(b) / d mu
  const double dnu = mu / nu;
  if (family == ModeFamily::Even) {
    const double f = mu * sa + nu * ca * t;
    const double df = sa + mu * ca * half + dnu * ca * t - nu * sa * half * t + nu * ca * dt;
    return {f, df};
  }
  const double f = nu * sa - mu * ca * t;
  const double df = dnu * sa + nu * ca * half - ca * t + mu * sa * half * t - mu * ca * dt;
  return {f, df};
}

// Safeguarded Newton inside a sign-change bracket; falls back to bisection
// whenever the Newton iterate leaves the bracket or stalls.
double refine_root(ModeFamily family, double lo, double hi, const StringParams& p) {
  double flo = residual_and_slope(family, lo, p).value;
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const auto [f, df] = residual_and_slope(family, x, p);
    if (f == 0.0) return x;
    if ((f < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = f;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      return 0.5 * (lo + hi);
    }
    double next = x - f / df;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x)) &&
        std::abs(residual_and_slope(family, next, p).value) < 1e-12) {
      return next;
    }
    x = next;
  }
  std::ostringstream os;
  os << "root refinement stalled in bracket [" << lo << ", " << hi << "]";
  throw Error(ErrorKind::ConvergenceFailure, os.str());
}

// Undamped angular frequency; bounds omega from above.
double undamped_omega(double mu, const StringParams& p) {
  const double mu2 = mu * mu;
  return std::sqrt(mu2 * mu2 * p.kappa * p.kappa + mu2 * p.gamma * p.gamma);
}

// exp-based hyperbolic ratios sinh(nu x)/sinh(nu L/2) and cosh(nu x)/cosh(nu L/2).
double sinh_ratio(double nu, double x, double half) {
  const double ax = std::abs(x);
  if (nu * half < 20.0) return std::sinh(nu * x) / std::sinh(nu * half);
  const double r = std::exp(nu * (ax - half)) * (-std::expm1(-2.0 * nu * ax)) / (-std::expm1(-2.0 * nu * half));
  return x < 0.0 ? -r : r;
}

double cosh_ratio(double nu, double x, double half) {
  const double ax = std::abs(x);
  if (nu * half < 20.0) return std::cosh(nu * x) / std::cosh(nu * half);
  return std::exp(nu * (ax - half)) * (1.0 + std::exp(-2.0 * nu * ax)) / (1.0 + std::exp(-2.0 * nu * half));
}

double unit_shape(const Mode& mode, double x, double half) {
  if (mode.family == ModeFamily::Odd) {
    return std::sin(mode.mu * x) - std::sin(mode.mu * half) * sinh_ratio(mode.nu, x, half);
  }
  return std::cos(mode.mu * x) - std::cos(mode.mu * half) * cosh_ratio(mode.nu, x, half);
}

}  // namespace

double Mode::frequency_hz() const { return omega / (2.0 * kPi); }

void Mode::set_amplitude(double a) {
  if (family == ModeFamily::Odd) {
    c1 = a;
    c2 = 0.0;
  } else {
    c1 = 0.0;
    c2 = a;
  }
}

ModeSet ModeSet::truncated(std::size_t n) const {
  ModeSet out = *this;
  if (out.modes.size() > n) out.modes.resize(n);
  return out;
}

double boundary_residual(ModeFamily family, double mu, const StringParams& params) {
  return residual_and_slope(family, mu, params).value;
}

double mode_frequency(double mu, const StringParams& params) {
  const double mu2 = mu * mu;
  const double stiffness = mu2 * mu2 * params.kappa * params.kappa + mu2 * params.gamma * params.gamma;
  const double radicand = stiffness - params.sigma0 * params.sigma0;
  // Within rounding of critical damping counts as overdamped.
  if (!(radicand > 1e-12 * stiffness)) {
    std::ostringstream os;
    os << "mu = " << mu << " gives a non-positive radicand " << radicand;
    throw Error(ErrorKind::Overdamped, os.str());
  }
  return std::sqrt(radicand);
}

ModeSet find_mode_roots(const StringParams& params, int max_order, double nyquist_hz) {
  params.validate();
  if (!(params.kappa > 0.0)) throw Error(ErrorKind::InvalidParams, "root finding requires kappa > 0");
  if (max_order < 1) throw Error(ErrorKind::InvalidParams, "max_order must be >= 1");

  const double step = kPi / (4.0 * params.length);
  const double omega_cut = 2.0 * kPi * nyquist_hz;

  ModeSet set;
  set.params = params;
  set.nyquist_hz = nyquist_hz;

  // mu = 0 is a trivial zero of the odd residual; start just past it.
  double lo = 1e-3 * step;
  double f_even = boundary_residual(ModeFamily::Even, lo, params);
  double f_odd = boundary_residual(ModeFamily::Odd, lo, params);
  std::vector<Mode> found;
  while (static_cast<int>(found.size()) < max_order && undamped_omega(lo, params) < omega_cut) {
    const double hi = lo + step;
    const double g_even = boundary_residual(ModeFamily::Even, hi, params);
    const double g_odd = boundary_residual(ModeFamily::Odd, hi, params);
    std::vector<Mode> cell;
    auto add = [&](ModeFamily fam, double flo, double fhi) {
      if (fhi == 0.0 || (flo < 0.0) != (fhi < 0.0)) {
        Mode m;
        m.family = fam;
        m.mu = fhi == 0.0 ? hi : refine_root(fam, lo, hi, params);
        m.nu = companion_nu(m.mu, params);
        cell.push_back(m);
      }
    };
    add(ModeFamily::Even, f_even, g_even);
    add(ModeFamily::Odd, f_odd, g_odd);
    std::sort(cell.begin(), cell.end(), [](const Mode& a, const Mode& b) { return a.mu < b.mu; });
    for (auto& m : cell) {
      if (static_cast<int>(found.size()) >= max_order) break;
      if (undamped_omega(m.mu, params) >= omega_cut) break;
      m.omega = mode_frequency(m.mu, params);
      if (m.omega >= omega_cut) break;
      m.set_amplitude(1.0);
      m.index = static_cast<int>(found.size()) + 1;
      found.push_back(m);
    }
    lo = hi;
    f_even = g_even;
    f_odd = g_odd;
  }
  if (found.empty()) throw Error(ErrorKind::NoRoots, "no mode lies below the Nyquist limit");
  set.modes = std::move(found);
  return set;
}

double mode_shape(const Mode& mode, double x, const StringParams& params) {
  const double half = 0.5 * params.length;
  if (!(std::abs(x) <= half * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "x = " << x << " outside [" << -half << ", " << half << "]";
    throw Error(ErrorKind::OutOfDomain, os.str());
  }
  x = std::clamp(x, -half, half);
  return mode.amplitude() * unit_shape(mode, x, half);
}

ModeSet project_initial_condition(std::span<const double> u0, const ModeSet& mode_set) {
  if (mode_set.empty()) throw Error(ErrorKind::EmptyModeSet, "cannot project onto an empty mode set");
  if (u0.size() < 2) throw Error(ErrorKind::InvalidParams, "u0 needs at least two samples");
  const auto n = static_cast<Eigen::Index>(u0.size());
  const auto m = static_cast<Eigen::Index>(mode_set.size());
  const double half = 0.5 * mode_set.params.length;
  const auto x = uniform_grid(static_cast<int>(n), mode_set.params.length);

  Eigen::MatrixXd basis(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Mode& mode = mode_set.modes[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) basis(i, j) = unit_shape(mode, x[static_cast<std::size_t>(i)], half);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double gram_cond = smin > 0.0 ? (smax / smin) * (smax / smin) : std::numeric_limits<double>::infinity();
  if (m > n || !(gram_cond <= 1e12)) {
    std::ostringstream os;
    os << "shape Gram matrix condition number " << gram_cond << " exceeds 1e12";
    throw Error(ErrorKind::IllConditioned, os.str());
  }
  const Eigen::Map<const Eigen::VectorXd> rhs(u0.data(), n);
  const Eigen::VectorXd coeffs = svd.solve(rhs);

  ModeSet out = mode_set;
  for (Eigen::Index j = 0; j < m; ++j) out.modes[static_cast<std::size_t>(j)].set_amplitude(coeffs(j));
  return out;
}

std::vector<double> reconstruct(const ModeSet& mode_set, int n_points) {
  const auto x = uniform_grid(n_points, mode_set.params.length);
  std::vector<double> u(x.size(), 0.0);
  for (const auto& mode : mode_set.modes) {
    for (std::size_t i = 0; i < x.size(); ++i) u[i] += mode_shape(mode, x[i], mode_set.params);
  }
  return u;
}

void to_json(nlohmann::json& j, const ModeSet& m) {
  std::vector<double> mu, nu, omega, amp;
  std::vector<std::string> family;
  for (const auto& mode : m.modes) {
    mu.push_back(mode.mu);
    nu.push_back(mode.nu);
    omega.push_back(mode.omega);
    amp.push_back(mode.amplitude());
    family.emplace_back(mode.family == ModeFamily::Even ? "even" : "odd");
  }
  j = nlohmann::json{{"params", m.params}, {"nyquist_hz", m.nyquist_hz}, {"mu", mu},
                     {"nu", nu},           {"omega", omega},          {"family", family},
                     {"amplitude", amp}};
}

void from_json(const nlohmann::json& j, ModeSet& m) {
  j.at("params").get_to(m.params);
  j.at("nyquist_hz").get_to(m.nyquist_hz);
  const auto mu = j.at("mu").get<std::vector<double>>();
  const auto nu = j.at("nu").get<std::vector<double>>();
  const auto omega = j.at("omega").get<std::vector<double>>();
  const auto family = j.at("family").get<std::vector<std::string>>();
  const auto amp = j.at("amplitude").get<std::vector<double>>();
  if (nu.size() != mu.size() || omega.size() != mu.size() || family.size() != mu.size() ||
      amp.size() != mu.size()) {
    throw Error(ErrorKind::FormatError, "mode set arrays differ in length");
  }
  m.modes.clear();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    Mode mode;
    mode.index = static_cast<int>(i) + 1;
    mode.mu = mu[i];
    mode.nu = nu[i];
    mode.omega = omega[i];
    if (family[i] == "even") {
      mode.family = ModeFamily::Even;
    } else if (family[i] == "odd") {
      mode.family = ModeFamily::Odd;
    } else {
      throw Error(ErrorKind::FormatError, "unknown mode family '" + family[i] + "'");
    }
    mode.set_amplitude(amp[i]);
    m.modes.push_back(mode);
  }
}

}  // namespace stringlab
