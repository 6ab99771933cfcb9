#include "stringlab/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stringlab/error.hpp"

namespace stringlab {

namespace {

[[noreturn]] void invalid(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

std::string fmt_value(const char* name, double v) {
  std::ostringstream os;
  os << name << " = " << v;
  return os.str();
}

}  // namespace

void StringParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) invalid(ErrorKind::InvalidParams, fmt_value("gamma must be > 0, got gamma", gamma));
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) invalid(ErrorKind::InvalidParams, fmt_value("kappa must be >= 0, got kappa", kappa));
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) invalid(ErrorKind::InvalidParams, fmt_value("alpha must be >= 1, got alpha", alpha));
  if (!(sigma0 >= 0.0) || !std::isfinite(sigma0)) invalid(ErrorKind::InvalidParams, fmt_value("sigma0 must be >= 0, got sigma0", sigma0));
  if (!(sigma1 >= 0.0) || !std::isfinite(sigma1)) invalid(ErrorKind::InvalidParams, fmt_value("sigma1 must be >= 0, got sigma1", sigma1));
  if (!(length > 0.0) || !std::isfinite(length)) invalid(ErrorKind::InvalidParams, fmt_value("length must be > 0, got length", length));
  const double mu = kPi / length;
  const double radicand = mu * mu * mu * mu * kappa * kappa + mu * mu * gamma * gamma;
  if (!(sigma0 * sigma0 < radicand)) {
    invalid(ErrorKind::InvalidParams, fmt_value("first mode is not underdamped, sigma0", sigma0));
  }
}

void T60Spec::validate() const {
  if (!(f1 > 0.0) || !(f2 > 0.0)) invalid(ErrorKind::InvalidParams, "T60 probe frequencies must be > 0");
  if (f1 == f2) invalid(ErrorKind::DegenerateSpec, "T60 probe frequencies must differ");
  if (!(t1 > 0.0) || !(t2 > 0.0)) invalid(ErrorKind::InvalidParams, "T60 decay times must be > 0");
}

void PluckProfile::validate() const {
  if (!(px > 0.0 && px < 1.0)) invalid(ErrorKind::InvalidProfile, fmt_value("px must lie in (0, 1), got px", px));
  if (!(pa >= 0.0) || !std::isfinite(pa)) invalid(ErrorKind::InvalidProfile, fmt_value("pa must be >= 0, got pa", pa));
  if (width && !(*width > 0.0)) invalid(ErrorKind::InvalidProfile, fmt_value("width must be > 0, got width", *width));
}

double t60_xi(double freq_hz, double gamma, double kappa) {
  const double omega = 2.0 * kPi * freq_hz;
  const double g2 = gamma * gamma;
  const double s = 4.0 * kappa * kappa * omega * omega;
  // -g2 + sqrt(g2^2 + s) rewritten as s / (g2 + sqrt(g2^2 + s)).
  return s / (g2 + std::sqrt(g2 * g2 + s));
}

Damping damping_from_t60(const T60Spec& spec, double gamma, double kappa) {
  spec.validate();
  if (!(gamma > 0.0)) invalid(ErrorKind::InvalidParams, "gamma must be > 0");
  if (!(kappa >= 0.0)) invalid(ErrorKind::InvalidParams, "kappa must be >= 0");
  const double xi1 = t60_xi(spec.f1, gamma, kappa);
  const double xi2 = t60_xi(spec.f2, gamma, kappa);
  if (xi1 == xi2) invalid(ErrorKind::DegenerateSpec, "xi terms coincide (kappa = 0 or equal probes)");
  const double c = 6.0 * std::log(10.0) / (xi1 - xi2);
  Damping d;
  d.sigma0 = c * (xi1 / spec.t2 - xi2 / spec.t1);
  d.sigma1 = c * (1.0 / spec.t1 - 1.0 / spec.t2);
  if (spec.t1 == spec.t2) d.sigma1 = 0.0;
  if (d.sigma0 < 0.0) invalid(ErrorKind::NegativeDamping, fmt_value("sigma0", d.sigma0));
  if (d.sigma1 < 0.0) invalid(ErrorKind::NegativeDamping, fmt_value("sigma1", d.sigma1));
  return d;
}

double gamma_from_f0(double f0_hz, double length) { return 2.0 * length * f0_hz; }

std::vector<double> uniform_grid(int n_points, double length) {
  std::vector<double> x(static_cast<std::size_t>(n_points));
  const double h = length / (n_points - 1);
  for (int i = 0; i < n_points; ++i) x[static_cast<std::size_t>(i)] = -0.5 * length + i * h;
  x.back() = 0.5 * length;
  return x;
}

std::vector<double> make_pluck(const PluckProfile& profile, int n_points, double length) {
  profile.validate();
  if (n_points < 8) invalid(ErrorKind::InvalidProfile, "n_points must be >= 8");
  std::vector<double> u(static_cast<std::size_t>(n_points), 0.0);
  if (profile.pa == 0.0) return u;

  const int last = n_points - 1;
  const int apex = std::clamp(static_cast<int>(std::lround(profile.px * last)), 1, last - 1);
  const double h = length / last;
  const double xp = -0.5 * length + apex * h;
  const double left_room = xp + 0.5 * length;
  const double right_room = 0.5 * length - xp;
  const auto x = uniform_grid(n_points, length);

  if (profile.shape == PluckShape::RaisedCosine) {
    const double w = profile.width ? *profile.width * length : std::min(left_room, right_room);
    if (w > std::min(left_room, right_room) * (1.0 + 1e-12)) {
      invalid(ErrorKind::InvalidProfile, "raised-cosine support extends past a boundary");
    }
    for (int i = 1; i < last; ++i) {
      const double d = x[static_cast<std::size_t>(i)] - xp;
      if (std::abs(d) <= w) u[static_cast<std::size_t>(i)] = 0.5 * profile.pa * (1.0 + std::cos(kPi * d / w));
    }
  } else {
    double wl = left_room;
    double wr = right_room;
    if (profile.width) {
      wl = wr = *profile.width * length;
      if (wl > std::min(left_room, right_room) * (1.0 + 1e-12)) {
        invalid(ErrorKind::InvalidProfile, "triangular support extends past a boundary");
      }
    }
    for (int i = 1; i < last; ++i) {
      const double d = x[static_cast<std::size_t>(i)] - xp;
      const double w = d < 0.0 ? wl : wr;
      if (std::abs(d) < w) u[static_cast<std::size_t>(i)] = profile.pa * (1.0 - std::abs(d) / w);
    }
  }
  u[static_cast<std::size_t>(apex)] = profile.pa;
  return u;
}

void to_json(nlohmann::json& j, const StringParams& p) {
  j = nlohmann::json{{"gamma", p.gamma}, {"kappa", p.kappa}, {"alpha", p.alpha},
                     {"sigma0", p.sigma0}, {"sigma1", p.sigma1}, {"length", p.length}};
}

void from_json(const nlohmann::json& j, StringParams& p) {
  j.at("gamma").get_to(p.gamma);
  j.at("kappa").get_to(p.kappa);
  j.at("alpha").get_to(p.alpha);
  j.at("sigma0").get_to(p.sigma0);
  j.at("sigma1").get_to(p.sigma1);
  p.length = j.value("length", 1.0);
}

void to_json(nlohmann::json& j, const T60Spec& s) {
  j = nlohmann::json{{"f1", s.f1}, {"f2", s.f2}, {"t1", s.t1}, {"t2", s.t2}};
}

void from_json(const nlohmann::json& j, T60Spec& s) {
  j.at("f1").get_to(s.f1);
  j.at("f2").get_to(s.f2);
  j.at("t1").get_to(s.t1);
  j.at("t2").get_to(s.t2);
}

void to_json(nlohmann::json& j, const PluckProfile& p) {
  j = nlohmann::json{{"px", p.px},
                     {"pa", p.pa},
                     {"shape", p.shape == PluckShape::RaisedCosine ? "raised-cosine" : "triangular"}};
  j["width"] = p.width ? nlohmann::json(*p.width) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, PluckProfile& p) {
  j.at("px").get_to(p.px);
  j.at("pa").get_to(p.pa);
  const auto shape = j.value("shape", std::string("raised-cosine"));
  if (shape == "raised-cosine") {
    p.shape = PluckShape::RaisedCosine;
  } else if (shape == "triangular") {
    p.shape = PluckShape::Triangular;
  } else {
    throw Error(ErrorKind::FormatError, "unknown pluck shape '" + shape + "'");
  }
  if (j.contains("width") && !j.at("width").is_null()) {
    p.width = j.at("width").get<double>();
  } else {
    p.width.reset();
  }
}

}  // namespace stringlab
