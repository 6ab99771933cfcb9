#pragma once

// Waveform-domain and spectral evaluation metrics, a YIN-style pitch
// estimator, and pitch-glide measurement.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stringlab/field.hpp"

namespace stringlab {

inline constexpr double kDbCap = 300.0;

/// 10 log10(|ref|^2 / |ref - est|^2), capped at +-300 dB.
double sdr(std::span<const double> est, std::span<const double> ref);

/// Scale-invariant SDR: est is compared against its projection onto ref.
double si_sdr(std::span<const double> est, std::span<const double> ref);

struct MssConfig {
  std::vector<int> fft_sizes{1024, 512, 256};
  int hop_divisor = 4;
  double lin_weight = 2.0;
  double log_weight = 0.5;
  double log_eps = 1e-7;

  void validate() const;
};

/// STFT magnitudes with a periodic Hann window, no padding:
/// 1 + (n - fft_size) / hop frames of fft_size / 2 + 1 bins, frame-major.
struct Spectrogram {
  int frames = 0;
  int bins = 0;
  std::vector<double> mag;

  double at(int frame, int bin) const { return mag[static_cast<std::size_t>(frame) * bins + bin]; }
};

Spectrogram stft_magnitude(std::span<const double> x, int fft_size, int hop);

/// Sum over scales of lin_weight * mean|Me - Mr| + log_weight * mean|log(Me+eps) - log(Mr+eps)|.
double mss(std::span<const double> est, std::span<const double> ref, const MssConfig& config = {});

struct PitchConfig {
  double fmin = 50.0;
  double fmax = 1000.0;
  double threshold = 0.1;
};

/// YIN fundamental estimate on the signal after its first 50 ms. Both pitch
/// routines low-pass the input at fmax (4th-order Butterworth) first.
/// Throws Unvoiced when no lag falls below the threshold.
double estimate_f0(std::span<const double> x, double sample_rate, const PitchConfig& config = {});

/// |estimate_f0(est) - estimate_f0(ref)|.
double pitch_metric(std::span<const double> est, std::span<const double> ref, double sample_rate,
                    const PitchConfig& config = {});

struct PitchTrack {
  int frame_size = 2048;
  int hop = 512;
  std::vector<double> times;            // frame start, seconds
  std::vector<std::optional<double>> f0;  // unset for unvoiced frames
  double glide_hz = 0.0;  // median(first 5 voiced) - median(last 10 voiced)
};

/// Frame-wise pitch (2048-sample frames, 512 hop) and the onset-minus-tail
/// glide. Throws Unvoiced with fewer than 15 voiced frames.
PitchTrack pitch_glide(std::span<const double> x, double sample_rate, const PitchConfig& config = {});

struct MetricsReport {
  std::string id;
  double sdr_db = 0.0;
  double si_sdr_db = 0.0;
  double mss = 0.0;
  double pitch_err_hz = 0.0;
  double est_f0_hz = 0.0;
  double ref_f0_hz = 0.0;
  std::optional<double> glide_hz;  // of the estimate, when measurable
};

MetricsReport evaluate(std::span<const double> est, std::span<const double> ref, double sample_rate,
                       const MssConfig& mss_config = {}, const PitchConfig& pitch_config = {});

void to_json(nlohmann::json& j, const MetricsReport& r);

/// SDR and SI-SDR between two fields on the same grid, two ways: per spatial
/// row (each row is a pickup waveform) and over the whole flattened grid.
/// Rows whose reference is silent, such as the clamped ends, are skipped.
struct FieldScores {
  std::vector<int> rows;
  std::vector<double> sdr_db;
  std::vector<double> si_sdr_db;
  double mean_sdr_db = 0.0;
  double mean_si_sdr_db = 0.0;
  double flat_sdr_db = 0.0;
  double flat_si_sdr_db = 0.0;
};

FieldScores compare_fields(const FieldTrajectory& est, const FieldTrajectory& ref);

void to_json(nlohmann::json& j, const FieldScores& s);
std::string csv_header();
std::string csv_row(const MetricsReport& r);

}  // namespace stringlab
