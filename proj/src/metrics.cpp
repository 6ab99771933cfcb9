#include "stringlab/metrics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

#include "stringlab/error.hpp"
#include "stringlab/params.hpp"

namespace stringlab {

namespace {

double cap_db(double v) {
  if (std::isnan(v)) return -kDbCap;
  return std::clamp(v, -kDbCap, kDbCap);
}

double ratio_db(double num, double den) {
  if (den == 0.0) return num == 0.0 ? -kDbCap : kDbCap;
  if (num == 0.0) return -kDbCap;
  return cap_db(10.0 * std::log10(num / den));
}

void check_pair(std::span<const double> est, std::span<const double> ref) {
  if (est.size() != ref.size()) {
    std::ostringstream os;
    os << "estimate has " << est.size() << " samples, reference " << ref.size();
    throw Error(ErrorKind::LengthMismatch, os.str());
  }
  if (ref.empty()) throw Error(ErrorKind::LengthMismatch, "empty waveforms");
}

double energy(std::span<const double> x) { return std::inner_product(x.begin(), x.end(), x.begin(), 0.0); }

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// YIN lag search on x[0 .. window + max_lag). Returns the period in samples.
std::optional<double> yin_period(std::span<const double> x, int window, int min_lag, int max_lag,
                                 double threshold) {
  std::vector<double> diff(static_cast<std::size_t>(max_lag) + 2, 0.0);
  for (int tau = 1; tau <= max_lag + 1; ++tau) {
    double acc = 0.0;
    for (int j = 0; j < window; ++j) {
      const double d = x[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(j + tau)];
      acc += d * d;
    }
    diff[static_cast<std::size_t>(tau)] = acc;
  }
  // Cumulative-mean-normalized difference.
  std::vector<double> cmnd(diff.size(), 1.0);
  double running = 0.0;
  for (std::size_t tau = 1; tau < diff.size(); ++tau) {
    running += diff[tau];
    cmnd[tau] = running > 0.0 ? diff[tau] * static_cast<double>(tau) / running : 1.0;
  }
  for (int tau = std::max(min_lag, 2); tau <= max_lag; ++tau) {
    if (cmnd[static_cast<std::size_t>(tau)] >= threshold) continue;
    while (tau + 1 <= max_lag && cmnd[static_cast<std::size_t>(tau) + 1] < cmnd[static_cast<std::size_t>(tau)]) ++tau;
    const double a = cmnd[static_cast<std::size_t>(tau) - 1];
    const double b = cmnd[static_cast<std::size_t>(tau)];
    const double c = cmnd[static_cast<std::size_t>(tau) + 1];
    const double denom = a - 2.0 * b + c;
    double shift = denom > 0.0 ? 0.5 * (a - c) / denom : 0.0;
    shift = std::clamp(shift, -1.0, 1.0);
    return tau + shift;
  }
  return std::nullopt;
}

// Fourth-order Butterworth low-pass (two cascaded biquads) applied before the
// lag search; partials above the search range only add inharmonic ripple to
// the difference function.
std::vector<double> lowpass(std::span<const double> x, double cutoff_hz, double sample_rate) {
  std::vector<double> y(x.begin(), x.end());
  if (!(cutoff_hz < 0.45 * sample_rate)) return y;
  const double w0 = 2.0 * kPi * cutoff_hz / sample_rate;
  for (double q : {0.54119610014619698, 1.3065629648763766}) {
    const double alpha = std::sin(w0) / (2.0 * q);
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    const double b0 = (1.0 - cw) / 2.0 / a0;
    const double b1 = (1.0 - cw) / a0;
    const double b2 = b0;
    const double a1 = -2.0 * cw / a0;
    const double a2 = (1.0 - alpha) / a0;
    double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
    for (double& v : y) {
      const double out = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = v;
      y2 = y1;
      y1 = out;
      v = out;
    }
  }
  return y;
}

void check_pitch_config(const PitchConfig& c, double sample_rate) {
  if (!(sample_rate > 0.0)) throw Error(ErrorKind::InvalidParams, "sample_rate must be > 0");
  if (!(c.fmin > 0.0 && c.fmax > c.fmin)) throw Error(ErrorKind::InvalidParams, "need 0 < fmin < fmax");
}

}  // namespace

double sdr(std::span<const double> est, std::span<const double> ref) {
  check_pair(est, ref);
  const double ref_energy = energy(ref);
  if (ref_energy == 0.0) throw Error(ErrorKind::ZeroReference, "reference is all zeros");
  double err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref[i] - est[i];
    err += d * d;
  }
  return ratio_db(ref_energy, err);
}

double si_sdr(std::span<const double> est, std::span<const double> ref) {
  check_pair(est, ref);
  const double ref_energy = energy(ref);
  if (ref_energy == 0.0) throw Error(ErrorKind::ZeroReference, "reference is all zeros");
  if (energy(est) == 0.0) throw Error(ErrorKind::ZeroEstimate, "estimate is all zeros");
  const double scale = std::inner_product(est.begin(), est.end(), ref.begin(), 0.0) / ref_energy;
  double target = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double s = scale * ref[i];
    target += s * s;
    const double e = est[i] - s;
    noise += e * e;
  }
  return ratio_db(target, noise);
}

void MssConfig::validate() const {
  if (fft_sizes.empty()) throw Error(ErrorKind::InvalidParams, "need at least one FFT size");
  for (int n : fft_sizes) {
    if (n < 2 || (n & (n - 1)) != 0) throw Error(ErrorKind::InvalidParams, "FFT sizes must be powers of two");
    if (n / hop_divisor < 1) throw Error(ErrorKind::InvalidParams, "hop would be zero");
  }
  if (hop_divisor < 1) throw Error(ErrorKind::InvalidParams, "hop_divisor must be >= 1");
  if (lin_weight < 0.0 || log_weight < 0.0) throw Error(ErrorKind::InvalidParams, "weights must be >= 0");
}

Spectrogram stft_magnitude(std::span<const double> x, int fft_size, int hop) {
  if (fft_size < 2 || hop < 1) throw Error(ErrorKind::InvalidParams, "bad STFT geometry");
  if (x.size() < static_cast<std::size_t>(fft_size)) {
    throw Error(ErrorKind::TooShort, "signal shorter than the FFT size");
  }
  Spectrogram s;
  s.frames = 1 + static_cast<int>((x.size() - static_cast<std::size_t>(fft_size)) / static_cast<std::size_t>(hop));
  s.bins = fft_size / 2 + 1;
  s.mag.resize(static_cast<std::size_t>(s.frames) * s.bins);

  std::vector<double> window(static_cast<std::size_t>(fft_size));
  for (int i = 0; i < fft_size; ++i) window[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / fft_size);

  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(static_cast<std::size_t>(fft_size)));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(static_cast<std::size_t>(s.bins)));
  std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(fft_size, in.get(), out.get(), FFTW_ESTIMATE));
  }
  for (int f = 0; f < s.frames; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * hop;
    for (int i = 0; i < fft_size; ++i) in.get()[i] = x[start + static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(i)];
    fftw_execute(plan.get());
    for (int b = 0; b < s.bins; ++b) {
      s.mag[static_cast<std::size_t>(f) * s.bins + b] = std::hypot(out.get()[b][0], out.get()[b][1]);
    }
  }
  return s;
}

double mss(std::span<const double> est, std::span<const double> ref, const MssConfig& config) {
  config.validate();
  check_pair(est, ref);
  const int largest = *std::max_element(config.fft_sizes.begin(), config.fft_sizes.end());
  if (ref.size() < static_cast<std::size_t>(largest)) {
    throw Error(ErrorKind::TooShort, "waveforms shorter than the largest FFT size");
  }
  double total = 0.0;
  for (int n : config.fft_sizes) {
    const int hop = n / config.hop_divisor;
    const auto me = stft_magnitude(est, n, hop);
    const auto mr = stft_magnitude(ref, n, hop);
    double lin = 0.0;
    double log_term = 0.0;
    for (std::size_t i = 0; i < me.mag.size(); ++i) {
      lin += std::abs(me.mag[i] - mr.mag[i]);
      log_term += std::abs(std::log(me.mag[i] + config.log_eps) - std::log(mr.mag[i] + config.log_eps));
    }
    const auto count = static_cast<double>(me.mag.size());
    total += config.lin_weight * lin / count + config.log_weight * log_term / count;
  }
  return total;
}

double estimate_f0(std::span<const double> x, double sample_rate, const PitchConfig& config) {
  check_pitch_config(config, sample_rate);
  const int max_lag = static_cast<int>(std::ceil(sample_rate / config.fmin));
  const int min_lag = static_cast<int>(std::floor(sample_rate / config.fmax));
  if (x.size() < static_cast<std::size_t>(2 * max_lag)) {
    throw Error(ErrorKind::TooShort, "pitch estimation needs at least 2 sample_rate / fmin samples");
  }
  // Skip the onset when enough signal remains after it.
  const auto skip = static_cast<std::size_t>(std::lround(0.05 * sample_rate));
  const auto filtered = lowpass(x, config.fmax, sample_rate);
  std::span<const double> seg = filtered;
  if (x.size() >= skip + static_cast<std::size_t>(2 * max_lag + 2)) seg = seg.subspan(skip);
  const int window = std::min(static_cast<int>(seg.size()) - max_lag - 2, 16384);
  if (energy(seg.first(static_cast<std::size_t>(window + max_lag + 2))) == 0.0) {
    throw Error(ErrorKind::Unvoiced, "signal is silent");
  }
  const auto period = yin_period(seg, window, min_lag, max_lag, config.threshold);
  if (!period) throw Error(ErrorKind::Unvoiced, "no lag passes the aperiodicity threshold");
  return sample_rate / *period;
}

double pitch_metric(std::span<const double> est, std::span<const double> ref, double sample_rate,
                    const PitchConfig& config) {
  return std::abs(estimate_f0(est, sample_rate, config) - estimate_f0(ref, sample_rate, config));
}

PitchTrack pitch_glide(std::span<const double> x, double sample_rate, const PitchConfig& config) {
  check_pitch_config(config, sample_rate);
  if (x.size() < static_cast<std::size_t>(std::lround(0.5 * sample_rate))) {
    throw Error(ErrorKind::TooShort, "pitch glide needs at least 0.5 s of audio");
  }
  PitchTrack track;
  const int max_lag = static_cast<int>(std::ceil(sample_rate / config.fmin));
  const int min_lag = static_cast<int>(std::floor(sample_rate / config.fmax));
  const int window = track.frame_size - max_lag - 2;
  if (window < max_lag / 2) throw Error(ErrorKind::InvalidParams, "fmin too low for 2048-sample frames");

  const auto filtered = lowpass(x, config.fmax, sample_rate);
  const std::span<const double> xs = filtered;
  std::vector<double> voiced;
  for (std::size_t start = 0; start + static_cast<std::size_t>(track.frame_size) <= xs.size();
       start += static_cast<std::size_t>(track.hop)) {
    track.times.push_back(static_cast<double>(start) / sample_rate);
    const auto frame = xs.subspan(start, static_cast<std::size_t>(track.frame_size));
    std::optional<double> f0;
    if (energy(frame) > 0.0) {
      if (const auto period = yin_period(frame, window, min_lag, max_lag, config.threshold)) f0 = sample_rate / *period;
    }
    track.f0.push_back(f0);
    if (f0) voiced.push_back(*f0);
  }
  if (voiced.size() < 15) {
    std::ostringstream os;
    os << "only " << voiced.size() << " voiced frames (need 15)";
    throw Error(ErrorKind::Unvoiced, os.str());
  }
  const std::vector<double> head(voiced.begin(), voiced.begin() + 5);
  const std::vector<double> tail(voiced.end() - 10, voiced.end());
  track.glide_hz = median(head) - median(tail);
  return track;
}

MetricsReport evaluate(std::span<const double> est, std::span<const double> ref, double sample_rate,
                       const MssConfig& mss_config, const PitchConfig& pitch_config) {
  MetricsReport r;
  r.sdr_db = sdr(est, ref);
  r.si_sdr_db = si_sdr(est, ref);
  r.mss = mss(est, ref, mss_config);
  r.est_f0_hz = estimate_f0(est, sample_rate, pitch_config);
  r.ref_f0_hz = estimate_f0(ref, sample_rate, pitch_config);
  r.pitch_err_hz = std::abs(r.est_f0_hz - r.ref_f0_hz);
  try {
    r.glide_hz = pitch_glide(est, sample_rate, pitch_config).glide_hz;
  } catch (const Error&) {
    r.glide_hz.reset();
  }
  return r;
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = nlohmann::json{{"id", r.id},
                     {"sdr_db", r.sdr_db},
                     {"si_sdr_db", r.si_sdr_db},
                     {"mss", r.mss},
                     {"pitch_err_hz", r.pitch_err_hz},
                     {"est_f0", r.est_f0_hz},
                     {"ref_f0", r.ref_f0_hz}};
  j["glide_hz"] = r.glide_hz ? nlohmann::json(*r.glide_hz) : nlohmann::json(nullptr);
}

std::string csv_header() { return "id,sdr_db,si_sdr_db,mss,pitch_err_hz,est_f0,ref_f0,glide_hz"; }

std::string csv_row(const MetricsReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.id << ',' << r.sdr_db << ',' << r.si_sdr_db << ',' << r.mss << ',' << r.pitch_err_hz << ','
     << r.est_f0_hz << ',' << r.ref_f0_hz << ',';
  if (r.glide_hz) os << *r.glide_hz;
  return os.str();
}

FieldScores compare_fields(const FieldTrajectory& est, const FieldTrajectory& ref) {
  if (est.n_space != ref.n_space || est.n_time != ref.n_time) {
    std::ostringstream os;
    os << "field shapes differ: " << est.n_space << "x" << est.n_time << " vs " << ref.n_space << "x" << ref.n_time;
    throw Error(ErrorKind::LengthMismatch, os.str());
  }
  FieldScores s;
  for (int i = 0; i < ref.n_space; ++i) {
    const auto r = ref.row(i);
    if (energy(r) == 0.0) continue;
    const auto e = est.row(i);
    s.rows.push_back(i);
    s.sdr_db.push_back(sdr(e, r));
    s.si_sdr_db.push_back(si_sdr(e, r));
  }
  if (s.rows.empty()) throw Error(ErrorKind::ZeroReference, "reference field is all zeros");
  const double n = static_cast<double>(s.rows.size());
  s.mean_sdr_db = std::accumulate(s.sdr_db.begin(), s.sdr_db.end(), 0.0) / n;
  s.mean_si_sdr_db = std::accumulate(s.si_sdr_db.begin(), s.si_sdr_db.end(), 0.0) / n;
  s.flat_sdr_db = sdr(est.u, ref.u);
  s.flat_si_sdr_db = si_sdr(est.u, ref.u);
  return s;
}

void to_json(nlohmann::json& j, const FieldScores& s) {
  j = nlohmann::json{{"rows", s.rows},
                     {"sdr_db", s.sdr_db},
                     {"si_sdr_db", s.si_sdr_db},
                     {"mean_sdr_db", s.mean_sdr_db},
                     {"mean_si_sdr_db", s.mean_si_sdr_db},
                     {"flat_sdr_db", s.flat_sdr_db},
                     {"flat_si_sdr_db", s.flat_si_sdr_db}};
}

}  // namespace stringlab
