#include "stringlab/synth.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "stringlab/error.hpp"

namespace stringlab {

int RenderSpec::n_samples() const { return static_cast<int>(std::lround(duration * sample_rate)); }

void RenderSpec::validate() const {
  if (!(sample_rate > 0.0)) throw Error(ErrorKind::InvalidParams, "sample_rate must be > 0");
  if (!(duration > 0.0)) throw Error(ErrorKind::InvalidParams, "duration must be > 0");
  if (n_spatial < 2) throw Error(ErrorKind::InvalidParams, "n_spatial must be >= 2");
}

double evaluate(const ModeSet& mode_set, double x, double t) {
  if (mode_set.empty()) throw Error(ErrorKind::EmptyModeSet, "nothing to render");
  double acc = 0.0;
  for (const auto& mode : mode_set.modes) acc += mode_shape(mode, x, mode_set.params) * std::cos(mode.omega * t);
  return std::exp(-mode_set.params.sigma0 * t) * acc;
}

std::vector<double> render_waveform(const ModeSet& mode_set, const RenderSpec& spec) {
  spec.validate();
  if (mode_set.empty()) throw Error(ErrorKind::EmptyModeSet, "nothing to render");
  if (!spec.pickup_x) throw Error(ErrorKind::InvalidParams, "render_waveform needs a pickup position");

  std::vector<double> weight;
  std::vector<double> omega;
  for (const auto& mode : mode_set.modes) {
    weight.push_back(mode_shape(mode, *spec.pickup_x, mode_set.params));
    omega.push_back(mode.omega);
  }
  const int n = spec.n_samples();
  std::vector<double> out(static_cast<std::size_t>(n));
  const double sigma0 = mode_set.params.sigma0;
  for (int i = 0; i < n; ++i) {
    const double t = spec.start_time + i / spec.sample_rate;
    double acc = 0.0;
    for (std::size_t k = 0; k < weight.size(); ++k) acc += weight[k] * std::cos(omega[k] * t);
    out[static_cast<std::size_t>(i)] = std::exp(-sigma0 * t) * acc;
  }
  return out;
}

FieldTrajectory render_field(const ModeSet& mode_set, const RenderSpec& spec) {
  spec.validate();
  if (mode_set.empty()) throw Error(ErrorKind::EmptyModeSet, "nothing to render");
  const auto m = static_cast<Eigen::Index>(mode_set.size());
  const int n_time = spec.n_samples();
  const auto x = uniform_grid(spec.n_spatial, mode_set.params.length);

  Eigen::MatrixXd shapes(spec.n_spatial, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (int i = 0; i < spec.n_spatial; ++i) {
      shapes(i, j) = mode_shape(mode_set.modes[static_cast<std::size_t>(j)], x[static_cast<std::size_t>(i)],
                                mode_set.params);
    }
  }
  Eigen::MatrixXd temporal(m, n_time);
  for (int t = 0; t < n_time; ++t) {
    const double time = spec.start_time + t / spec.sample_rate;
    const double env = std::exp(-mode_set.params.sigma0 * time);
    for (Eigen::Index j = 0; j < m; ++j) {
      temporal(j, t) = env * std::cos(mode_set.modes[static_cast<std::size_t>(j)].omega * time);
    }
  }

  FieldTrajectory field;
  field.n_space = spec.n_spatial;
  field.n_time = n_time;
  field.sample_rate = spec.sample_rate;
  field.length = mode_set.params.length;
  field.params = mode_set.params;
  field.u.resize(static_cast<std::size_t>(spec.n_spatial) * n_time);
  // Column-major (space x time) storage is exactly the frame-major layout.
  Eigen::Map<Eigen::MatrixXd>(field.u.data(), spec.n_spatial, n_time).noalias() = shapes * temporal;
  // Clamped ends are zero by construction; remove rounding residue.
  for (int t = 0; t < n_time; ++t) {
    field.u[static_cast<std::size_t>(t) * spec.n_spatial] = 0.0;
    field.u[static_cast<std::size_t>(t) * spec.n_spatial + spec.n_spatial - 1] = 0.0;
  }
  return field;
}

}  // namespace stringlab
