#include "stringlab/fdtd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stringlab/error.hpp"

namespace stringlab {

namespace {

// Node arrays carry one ghost cell per side: storage index i + 1 holds node i
// for i in [-1, N + 1].
class Padded {
 public:
  explicit Padded(int n_intervals) : n_(n_intervals), data_(static_cast<std::size_t>(n_intervals) + 3, 0.0) {}

  double& operator[](int i) { return data_[static_cast<std::size_t>(i + 1)]; }
  double operator[](int i) const { return data_[static_cast<std::size_t>(i + 1)]; }
  int intervals() const { return n_; }

  void assign_nodes(std::span<const double> nodes) {
    for (int i = 0; i <= n_; ++i) (*this)[i] = nodes[static_cast<std::size_t>(i)];
  }
  // Clamped ends: u = 0 on the boundary, even mirror so u_x = 0.
  void clamp_ends() {
    (*this)[0] = 0.0;
    (*this)[n_] = 0.0;
    (*this)[-1] = (*this)[1];
    (*this)[n_ + 1] = (*this)[n_ - 1];
  }
  // Fixed ends: zeta = 0 on the boundary, odd mirror.
  void fix_ends() {
    (*this)[0] = 0.0;
    (*this)[n_] = 0.0;
    (*this)[-1] = -(*this)[1];
    (*this)[n_ + 1] = -(*this)[n_ - 1];
  }
  void copy_nodes_to(double* out) const {
    for (int i = 0; i <= n_; ++i) out[i] = (*this)[i];
  }

 private:
  int n_;
  std::vector<double> data_;
};

double longitudinal_min_dx(const StringParams& p, double dt) {
  const double c = p.gamma * p.alpha * dt;
  return std::sqrt(c * c + 4.0 * p.sigma1 * dt);
}

int oversample_for(const StringParams& p, double dt, double dx) {
  for (int k = 1; k < 100000; ++k) {
    const double step = dt / k;
    if (min_stable_dx(p, step) <= dx * (1.0 + 1e-12) && longitudinal_min_dx(p, step) <= dx * (1.0 + 1e-12)) {
      return k;
    }
  }
  throw Error(ErrorKind::Underresolved, "no stable time subdivision found for this grid");
}

struct Stepper {
  const StringParams& p;
  double h;
  double k;
  bool coupled;
  double coupling;  // gamma^2 (alpha^2 - 1) / 2

  Padded u, u_prev, u_next, z, z_prev, z_next;
  std::vector<double> flux_u, flux_z;  // nodes 0..N

  Stepper(const StringParams& params, int n, double dx, double dt)
      : p(params),
        h(dx),
        k(dt),
        coupled(params.alpha > 1.0),
        coupling(0.5 * params.gamma * params.gamma * (params.alpha * params.alpha - 1.0)),
        u(n), u_prev(n), u_next(n), z(n), z_prev(n), z_next(n),
        flux_u(static_cast<std::size_t>(n) + 1, 0.0),
        flux_z(static_cast<std::size_t>(n) + 1, 0.0) {}

  int n() const { return u.intervals(); }

  // Nodewise q^3 + 2 p q and q^2 from centered slopes; both vanish at the
  // clamped ends because q does.
  void update_fluxes(const Padded& uu, const Padded& zz) {
    const double inv2h = 0.5 / h;
    for (int i = 1; i < n(); ++i) {
      const double q = (uu[i + 1] - uu[i - 1]) * inv2h;
      const double pz = (zz[i + 1] - zz[i - 1]) * inv2h;
      flux_u[static_cast<std::size_t>(i)] = q * q * q + 2.0 * pz * q;
      flux_z[static_cast<std::size_t>(i)] = q * q;
    }
  }

  double lap(const Padded& a, int i) const { return (a[i + 1] - 2.0 * a[i] + a[i - 1]) / (h * h); }
  double biharm(const Padded& a, int i) const {
    return (a[i + 2] - 4.0 * a[i + 1] + 6.0 * a[i] - 4.0 * a[i - 1] + a[i - 2]) / (h * h * h * h);
  }
  double dflux(const std::vector<double>& f, int i) const {
    return (f[static_cast<std::size_t>(i) + 1] - f[static_cast<std::size_t>(i) - 1]) / (2.0 * h);
  }

  double transverse_force(int i) const {
    double r = p.gamma * p.gamma * lap(u, i) - p.kappa * p.kappa * biharm(u, i);
    if (coupled) r += coupling * dflux(flux_u, i);
    return r;
  }

  // Second-order start for zero initial velocity. zeta starts at rest and
  // undisplaced, so both of its first two levels are zero.
  void start(std::span<const double> u0) {
    u_prev.assign_nodes(u0);
    u_prev.clamp_ends();
    u = u_prev;
    if (coupled) update_fluxes(u, z);
    for (int i = 1; i < n(); ++i) u_next[i] = u[i] + 0.5 * k * k * transverse_force(i);
    u_next.clamp_ends();
    std::swap(u, u_next);  // u = level 1, u_prev = level 0
  }

  void step() {
    const double a = p.sigma0 * k;
    const double inv = 1.0 / (1.0 + a);
    const double damp2 = 2.0 * p.sigma1 * k;
    if (coupled) update_fluxes(u, z);
    for (int i = 1; i < n(); ++i) {
      const double lu = lap(u, i);
      const double r = transverse_force(i);
      u_next[i] = (2.0 * u[i] - (1.0 - a) * u_prev[i] + k * k * r + damp2 * (lu - lap(u_prev, i))) * inv;
    }
    u_next.clamp_ends();
    if (coupled) {
      const double c2 = p.gamma * p.gamma * p.alpha * p.alpha;
      for (int i = 1; i < n(); ++i) {
        const double lz = lap(z, i);
        const double r = c2 * lz + coupling * dflux(flux_z, i);
        z_next[i] = (2.0 * z[i] - (1.0 - a) * z_prev[i] + k * k * r + damp2 * (lz - lap(z_prev, i))) * inv;
      }
      z_next.fix_ends();
      std::swap(z_prev, z);
      std::swap(z, z_next);
    }
    std::swap(u_prev, u);
    std::swap(u, u_next);
  }
};

std::vector<double> nodes_of(const Padded& a) {
  std::vector<double> out(static_cast<std::size_t>(a.intervals()) + 1);
  a.copy_nodes_to(out.data());
  return out;
}

}  // namespace

double min_stable_dx(const StringParams& params, double dt) {
  const double a = params.gamma * params.gamma * dt * dt + 4.0 * params.sigma1 * dt;
  const double b = 16.0 * params.kappa * params.kappa * dt * dt;
  return std::sqrt(0.5 * (a + std::sqrt(a * a + b)));
}

SimGrid stable_grid(const StringParams& params, double sample_rate) {
  return grid_for(params, sample_rate, {});
}

SimGrid grid_for(const StringParams& params, double sample_rate, const SimOptions& options) {
  params.validate();
  if (!(sample_rate > 0.0)) throw Error(ErrorKind::InvalidParams, "sample_rate must be > 0");
  SimGrid g;
  g.dt = 1.0 / sample_rate;
  if (options.nx > 0) {
    g.nx = options.nx;
  } else {
    g.nx = static_cast<int>(std::floor(params.length / min_stable_dx(params, g.dt) * (1.0 + 1e-12)));
  }
  if (g.nx < 8) {
    std::ostringstream os;
    os << "stable grid has only " << g.nx << " intervals";
    throw Error(ErrorKind::Underresolved, os.str());
  }
  g.dx = params.length / g.nx;
  g.oversample = options.oversample > 0 ? options.oversample : oversample_for(params, g.dt, g.dx);
  return g;
}

FieldTrajectory simulate(const StringParams& params, const PluckProfile& pluck, double sample_rate,
                         double duration, const SimOptions& options) {
  const SimGrid grid = grid_for(params, sample_rate, options);
  const auto u0 = make_pluck(pluck, grid.nx + 1, params.length);
  FieldTrajectory out = simulate_from(params, u0, sample_rate, duration, options);
  out.pluck = pluck;
  return out;
}

FieldTrajectory simulate_from(const StringParams& params, std::span<const double> u0, double sample_rate,
                              double duration, const SimOptions& options) {
  SimGrid grid = grid_for(params, sample_rate, options);
  if (u0.size() != static_cast<std::size_t>(grid.nx) + 1) {
    std::ostringstream os;
    os << "initial state has " << u0.size() << " nodes, grid needs " << grid.nx + 1;
    throw Error(ErrorKind::InvalidParams, os.str());
  }
  if (!(duration > 0.0)) throw Error(ErrorKind::InvalidParams, "duration must be > 0");
  grid.nt = static_cast<int>(std::lround(duration * sample_rate));
  const int n_nodes = grid.nx + 1;

  FieldTrajectory out;
  out.n_space = n_nodes;
  out.n_time = grid.nt;
  out.sample_rate = sample_rate;
  out.length = params.length;
  out.params = params;
  out.grid = grid;
  out.u.assign(static_cast<std::size_t>(n_nodes) * grid.nt, 0.0);
  out.energy.assign(static_cast<std::size_t>(grid.nt), 0.0);
  if (options.store_zeta) out.zeta.emplace(static_cast<std::size_t>(n_nodes) * grid.nt, 0.0);

  double peak0 = 0.0;
  for (double v : u0) peak0 = std::max(peak0, std::abs(v));
  const double limit = 1e6 * peak0;

  Stepper s(params, grid.nx, grid.dx, grid.internal_dt());
  s.start(u0);
  auto record_energy = [&](int frame) {
    if (s.coupled) {
      out.energy[static_cast<std::size_t>(frame)] =
          state_energy(params, grid.dx, grid.internal_dt(), nodes_of(s.u), nodes_of(s.u_prev), nodes_of(s.z),
                       nodes_of(s.z_prev));
    } else {
      out.energy[static_cast<std::size_t>(frame)] =
          state_energy(params, grid.dx, grid.internal_dt(), nodes_of(s.u), nodes_of(s.u_prev));
    }
  };

  // Frame 0 is the initial displacement; the energy slot holds the first
  // available (level 1, level 0) pair.
  s.u_prev.copy_nodes_to(out.u.data());
  record_energy(0);
  // After start() the solver sits at internal level 1.
  int level = 1;
  for (int frame = 1; frame < grid.nt; ++frame) {
    const int target = frame * grid.oversample;
    while (level < target) {
      s.step();
      ++level;
    }
    double* dst = out.u.data() + static_cast<std::size_t>(frame) * n_nodes;
    s.u.copy_nodes_to(dst);
    for (int i = 0; i < n_nodes; ++i) {
      if (!std::isfinite(dst[i]) || std::abs(dst[i]) > limit) {
        std::ostringstream os;
        os << "solution diverged at step " << frame << " (node " << i << ", value " << dst[i] << ")";
        throw Error(ErrorKind::Blowup, os.str());
      }
    }
    if (out.zeta) s.z.copy_nodes_to(out.zeta->data() + static_cast<std::size_t>(frame) * n_nodes);
    record_energy(frame);
  }
  return out;
}

std::vector<double> pickup(const FieldTrajectory& trajectory, double x0) {
  const double half = 0.5 * trajectory.length;
  if (!(std::abs(x0) <= half * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "pickup x0 = " << x0 << " outside [" << -half << ", " << half << "]";
    throw Error(ErrorKind::OutOfDomain, os.str());
  }
  const int last = trajectory.n_space - 1;
  const double s = std::clamp((x0 + half) / trajectory.dx(), 0.0, static_cast<double>(last));
  const double nearest = std::round(s);
  if (std::abs(s - nearest) < 1e-9) return trajectory.row(static_cast<int>(nearest));
  const int i = std::min(static_cast<int>(std::floor(s)), last - 1);
  const double w = s - i;
  std::vector<double> out(static_cast<std::size_t>(trajectory.n_time));
  for (int t = 0; t < trajectory.n_time; ++t) {
    out[static_cast<std::size_t>(t)] = (1.0 - w) * trajectory.at(i, t) + w * trajectory.at(i + 1, t);
  }
  return out;
}

double state_energy(const StringParams& params, double dx, double dt, std::span<const double> u_now,
                    std::span<const double> u_prev, std::span<const double> zeta_now,
                    std::span<const double> zeta_prev) {
  const int n = static_cast<int>(u_now.size()) - 1;
  if (n < 2 || u_prev.size() != u_now.size()) throw Error(ErrorKind::InvalidParams, "energy needs matching states");
  Padded a(n), b(n);
  a.assign_nodes(u_now);
  b.assign_nodes(u_prev);
  a.clamp_ends();
  b.clamp_ends();

  double kinetic = 0.0;
  double tension = 0.0;
  double stiffness = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double v = (a[i] - b[i]) / dt;
    kinetic += v * v;
    if (i < n) tension += (a[i + 1] - a[i]) * (b[i + 1] - b[i]) / (dx * dx);
    const double wa = (a[i + 1] - 2.0 * a[i] + a[i - 1]) / (dx * dx);
    const double wb = (b[i + 1] - 2.0 * b[i] + b[i - 1]) / (dx * dx);
    stiffness += (i == 0 || i == n ? 0.5 : 1.0) * wa * wb;
  }
  double energy = 0.5 * kinetic + 0.5 * params.gamma * params.gamma * tension +
                  0.5 * params.kappa * params.kappa * stiffness;

  if (!zeta_now.empty() && zeta_prev.size() == zeta_now.size() && zeta_now.size() == u_now.size()) {
    Padded z(n), zp(n);
    z.assign_nodes(zeta_now);
    zp.assign_nodes(zeta_prev);
    z.fix_ends();
    zp.fix_ends();
    double zkin = 0.0;
    double ztension = 0.0;
    double coupling = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double v = (z[i] - zp[i]) / dt;
      zkin += v * v;
      if (i < n) ztension += (z[i + 1] - z[i]) * (zp[i + 1] - zp[i]) / (dx * dx);
      if (i > 0 && i < n) {
        const double q = (a[i + 1] - a[i - 1]) / (2.0 * dx);
        const double p = (z[i + 1] - z[i - 1]) / (2.0 * dx);
        coupling += 0.5 * p * q * q + 0.125 * q * q * q * q;
      }
    }
    const double g2 = params.gamma * params.gamma;
    const double a2 = params.alpha * params.alpha;
    energy += 0.5 * zkin + 0.5 * g2 * a2 * ztension + g2 * (a2 - 1.0) * coupling;
  }
  return energy * dx;
}

double discrete_energy(const FieldTrajectory& trajectory, int step) {
  if (step < 1) throw Error(ErrorKind::InvalidParams, "discrete_energy needs step >= 1");
  if (trajectory.energy.empty()) throw Error(ErrorKind::InvalidParams, "trajectory carries no energy record");
  return trajectory.energy.at(static_cast<std::size_t>(step));
}

}  // namespace stringlab
