#pragma once

// Randomized string corpus: parameter sampling, spatial resampling of solver
// output onto a fixed grid, and WAV + JSON persistence.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stringlab/field.hpp"
#include "stringlab/params.hpp"

namespace stringlab {

using Range = std::pair<double, double>;

/// Uniform sampling bounds. f2 is drawn from (f2.first, f1 - f2_offset).
struct SampleRanges {
  Range f0{98.0, 440.0};
  Range kappa_rel{0.01, 0.03};
  Range alpha{1.0, 25.0};
  Range t1{10.0, 25.0};
  Range t2{10.0, 30.0};
  Range f1{1100.0, 1200.0};
  Range f2{100.0, 0.0};
  double f2_offset = 1000.0;
  Range pa{0.001, 0.02};
  Range px{0.1, 0.5};

  void validate() const;
};

struct SampledString {
  double f0_hz = 0.0;
  double kappa_rel = 0.0;
  StringParams params;
  PluckProfile pluck;
  T60Spec t60;
  int attempts = 1;
};

/// Deterministic draw keyed by (seed, index); draws whose calibrated damping
/// is negative or overdamped are redrawn. Throws RejectionExhausted after
/// 1000 attempts.
SampledString sample_params(std::uint64_t seed, std::uint64_t index, const SampleRanges& ranges = {});

/// Per-frame cubic spline in space with zero end slopes, evaluated on
/// target_nx uniform nodes over [-L/2, L/2]. Time axis and transverse
/// displacement only.
FieldTrajectory resample_space(const FieldTrajectory& field, int target_nx = 256);

struct PickupFile {
  int column = 0;
  double x = 0.0;
  std::string path;  // relative to the dataset root

  bool operator==(const PickupFile&) const = default;
};

struct DatasetEntry {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  std::string id;
  std::string status = "ok";
  std::string error;
  double f0_hz = 0.0;
  double kappa_rel = 0.0;
  StringParams params;
  PluckProfile pluck;
  T60Spec t60;
  double sample_rate = 48000.0;
  double duration = 1.0;
  int n_spatial = 256;
  std::vector<PickupFile> audio;
  std::optional<std::string> field;

  bool operator==(const DatasetEntry&) const = default;
};

void to_json(nlohmann::json& j, const DatasetEntry& e);
void from_json(const nlohmann::json& j, DatasetEntry& e);

/// Stable 16-hex-digit id for (seed, index).
std::string entry_id(std::uint64_t seed, std::uint64_t index);

/// Interior columns of an n_spatial grid spread evenly for `count` pickups.
/// count >= n_spatial selects every column.
std::vector<int> pickup_columns(int count, int n_spatial = 256);

struct GenerateOptions {
  std::uint64_t seed = 0;
  int count = 32;
  std::filesystem::path out_dir = "dataset";
  std::vector<int> pickups;  // columns of the resampled grid; empty = all
  double sample_rate = 48000.0;
  double duration = 1.0;
  int n_spatial = 256;
  bool store_field = false;
  int jobs = 1;
  SampleRanges ranges;
};

struct Manifest {
  std::vector<DatasetEntry> entries;  // sorted by index
  int generated = 0;                  // entries simulated by this call
  int reused = 0;                     // entries found on disk
};

/// Layout: out_dir/{id}/pickup_{column}.wav, out_dir/{id}/meta.json,
/// out_dir/manifest.json. Entries whose meta.json already exists are read
/// back instead of regenerated. A solver blowup is recorded as
/// status = "failed" and generation continues.
Manifest generate(const GenerateOptions& options);

}  // namespace stringlab
