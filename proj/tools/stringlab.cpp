// stringlab: command-line front end. Every subcommand is a thin shell over
// the library; numbers printed here are exactly what the library returns.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stringlab/dataset.hpp"
#include "stringlab/error.hpp"
#include "stringlab/fdtd.hpp"
#include "stringlab/field.hpp"
#include "stringlab/metrics.hpp"
#include "stringlab/modal.hpp"
#include "stringlab/params.hpp"
#include "stringlab/synth.hpp"
#include "stringlab/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stringlab;

namespace {

// Samples used to project the pluck onto the modes.
constexpr int kProjectionPoints = 1025;

struct Globals {
  std::uint64_t seed = 0;
  std::string out = ".";
  double sample_rate = 48000.0;
  double duration = 1.0;
  bool json = false;
};

struct StringFlags {
  double f0 = 220.0;
  double kappa_rel = 0.02;
  double alpha = 1.0;
  std::string t60 = "1150:15,150:25";
  double px = 0.5;
  double pa = 0.01;
  std::string shape = "raised-cosine";
  std::string pickups = "0.25";
  bool store_field = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw CLI::ValidationError(what, "not a number: '" + s + "'");
  return v;
}

// "f1:t1,f2:t2", or "none" for a lossless string.
std::optional<T60Spec> parse_t60(const std::string& s) {
  if (s == "none") return std::nullopt;
  const auto pairs = split(s, ',');
  if (pairs.size() != 2) throw CLI::ValidationError("--t60", "expected f1:t1,f2:t2 or none");
  T60Spec spec;
  double* slots[2][2] = {{&spec.f1, &spec.t1}, {&spec.f2, &spec.t2}};
  for (int k = 0; k < 2; ++k) {
    const auto ft = split(pairs[static_cast<std::size_t>(k)], ':');
    if (ft.size() != 2) throw CLI::ValidationError("--t60", "expected f1:t1,f2:t2 or none");
    *slots[k][0] = parse_number(ft[0], "--t60");
    *slots[k][1] = parse_number(ft[1], "--t60");
  }
  return spec;
}

std::vector<double> parse_pickups(const std::string& s) {
  std::vector<double> xs;
  for (const auto& part : split(s, ',')) xs.push_back(parse_number(part, "--pickup"));
  if (xs.empty()) throw CLI::ValidationError("--pickup", "need at least one position");
  return xs;
}

PluckShape parse_shape(const std::string& s) {
  if (s == "raised-cosine") return PluckShape::RaisedCosine;
  if (s == "triangular") return PluckShape::Triangular;
  throw CLI::ValidationError("--shape", "expected raised-cosine or triangular");
}

void add_string_flags(CLI::App* cmd, StringFlags& f, bool with_alpha) {
  cmd->add_option("--f0", f.f0, "Nominal fundamental gamma / 2L in Hz")->capture_default_str();
  cmd->add_option("--kappa-rel", f.kappa_rel, "Stiffness kappa as a fraction of gamma")->capture_default_str();
  cmd->add_option("--alpha", f.alpha, with_alpha ? "Tension ratio (>= 1; 1 is linear)"
                                                 : "Ignored: the modal solution is linear")
      ->capture_default_str();
  cmd->add_option("--t60", f.t60, "Decay times as f1:t1,f2:t2 (Hz:s), or none")->capture_default_str();
  cmd->add_option("--px", f.px, "Pluck position as a fraction of the length")->capture_default_str();
  cmd->add_option("--pa", f.pa, "Pluck amplitude")->capture_default_str();
  cmd->add_option("--shape", f.shape, "raised-cosine or triangular")->capture_default_str();
  cmd->add_option("--pickup", f.pickups, "Pickup positions x0[,x0...] in [-L/2, L/2]")->capture_default_str();
  cmd->add_flag("--store-field", f.store_field, "Also write the displacement field");
}

struct Setup {
  StringParams params;
  PluckProfile pluck;
  std::optional<T60Spec> t60;
  std::vector<double> pickups;
};

Setup make_setup(const StringFlags& f, bool use_alpha) {
  Setup s;
  s.params.gamma = gamma_from_f0(f.f0);
  s.params.kappa = f.kappa_rel * s.params.gamma;
  s.params.alpha = use_alpha ? f.alpha : 1.0;
  s.t60 = parse_t60(f.t60);
  if (s.t60) {
    const Damping d = damping_from_t60(*s.t60, s.params.gamma, s.params.kappa);
    s.params.sigma0 = d.sigma0;
    s.params.sigma1 = d.sigma1;
  }
  s.params.validate();
  s.pluck.px = f.px;
  s.pluck.pa = f.pa;
  s.pluck.shape = parse_shape(f.shape);
  s.pluck.validate();
  s.pickups = parse_pickups(f.pickups);
  return s;
}

json setup_json(const Setup& s) {
  json j{{"params", s.params}, {"pluck", s.pluck}};
  j["t60"] = s.t60 ? json(*s.t60) : json(nullptr);
  return j;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Largest relative departure of the recorded energy from its first value.
double energy_drift(const FieldTrajectory& tr) {
  if (tr.energy.size() < 2 || tr.energy[1] == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t n = 1; n < tr.energy.size(); ++n) {
    worst = std::max(worst, std::abs(tr.energy[n] - tr.energy[1]) / std::abs(tr.energy[1]));
  }
  return worst;
}

json write_pickups(const fs::path& dir, const std::string& prefix, const std::vector<double>& xs,
                   const std::function<std::vector<double>(double)>& render, int sample_rate) {
  json files = json::array();
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const fs::path path = dir / (prefix + "_pickup_" + std::to_string(k) + ".wav");
    write_wav(path, render(xs[k]), sample_rate);
    files.push_back({{"x", xs[k]}, {"path", path.string()}});
  }
  return files;
}

int cmd_simulate(const Globals& g, const StringFlags& f, bool store_zeta) {
  const Setup s = make_setup(f, true);
  SimOptions options;
  options.store_zeta = store_zeta;
  const fs::path dir = g.out;
  fs::create_directories(dir);

  const auto start = std::chrono::steady_clock::now();
  const FieldTrajectory tr = simulate(s.params, s.pluck, g.sample_rate, g.duration, options);
  const double runtime = seconds_since(start);

  const int fs_int = static_cast<int>(std::lround(g.sample_rate));
  json summary = setup_json(s);
  summary["grid"] = *tr.grid;
  summary["runtime_s"] = runtime;
  summary["energy_drift"] = energy_drift(tr);
  summary["audio"] = write_pickups(dir, "fdtd", s.pickups, [&](double x) { return pickup(tr, x); }, fs_int);
  summary["field"] = nullptr;
  if (f.store_field) {
    write_field_binary(tr, dir / "fdtd_field");
    summary["field"] = (dir / "fdtd_field").string();
  }

  if (g.json) {
    std::cout << summary.dump(2) << '\n';
  } else {
    std::cout << "grid: nx=" << tr.grid->nx << " dx=" << tr.grid->dx << " oversample=" << tr.grid->oversample
              << " frames=" << tr.n_time << '\n'
              << "runtime: " << runtime << " s\n"
              << "energy drift: " << summary["energy_drift"].get<double>() << '\n';
    for (const auto& a : summary["audio"]) std::cout << "wrote " << a["path"].get<std::string>() << '\n';
  }
  return 0;
}

std::string cache_key(const StringParams& p, int max_order, double nyquist) {
  json key{{"gamma", p.gamma}, {"kappa", p.kappa}, {"sigma0", p.sigma0},
           {"length", p.length}, {"max_order", max_order}, {"nyquist_hz", nyquist}};
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << std::hash<std::string>{}(key.dump());
  return os.str();
}

int cmd_modal(const Globals& g, const StringFlags& f, const CLI::App& cmd, int modes, int max_order,
              const std::string& cache_flag) {
  if (cmd.count("--alpha") > 0 && f.alpha != 1.0) {
    std::cerr << "warning: --alpha is ignored by the linear modal solution\n";
  }
  const Setup s = make_setup(f, false);
  const fs::path dir = g.out;
  fs::create_directories(dir);
  const double nyquist = 0.5 * g.sample_rate;

  std::string cache_dir = cache_flag;
  if (cache_dir.empty()) {
    if (const char* env = std::getenv("STRINGLAB_CACHE_DIR")) cache_dir = env;
  }

  const auto start = std::chrono::steady_clock::now();
  ModeSet roots;
  bool cache_hit = false;
  std::optional<fs::path> cache_file;
  if (!cache_dir.empty()) {
    cache_file = fs::path(cache_dir) / ("modes_" + cache_key(s.params, max_order, nyquist) + ".json");
    if (fs::exists(*cache_file)) {
      std::ifstream in(*cache_file);
      try {
        roots = json::parse(in).get<ModeSet>();
        cache_hit = roots.params == s.params;
      } catch (const json::exception&) {
        cache_hit = false;
      }
    }
  }
  if (!cache_hit) {
    roots = find_mode_roots(s.params, max_order, nyquist);
    if (cache_file) {
      fs::create_directories(cache_file->parent_path());
      const fs::path tmp = cache_file->string() + ".tmp";
      std::ofstream(tmp) << json(roots).dump();
      fs::rename(tmp, *cache_file);
    }
  }
  const ModeSet projected = project_initial_condition(make_pluck(s.pluck, kProjectionPoints, s.params.length),
                                                      roots.truncated(static_cast<std::size_t>(modes)));
  RenderSpec spec;
  spec.sample_rate = g.sample_rate;
  spec.duration = g.duration;
  spec.validate();
  const int fs_int = static_cast<int>(std::lround(g.sample_rate));

  json summary = setup_json(s);
  summary["cache_hit"] = cache_hit;
  summary["cache_file"] = cache_file ? json(cache_file->string()) : json(nullptr);
  summary["modes"] = json::array();
  for (const Mode& m : projected.modes) {
    summary["modes"].push_back({{"n", m.index},
                                {"f_hz", m.frequency_hz()},
                                {"family", m.family == ModeFamily::Even ? "even" : "odd"},
                                {"amplitude", m.amplitude()}});
  }
  summary["audio"] = write_pickups(dir, "modal", s.pickups,
                                   [&](double x) {
                                     RenderSpec r = spec;
                                     r.pickup_x = x;
                                     return render_waveform(projected, r);
                                   },
                                   fs_int);
  summary["field"] = nullptr;
  if (f.store_field) {
    write_field_binary(render_field(projected, spec), dir / "modal_field");
    summary["field"] = (dir / "modal_field").string();
  }
  summary["runtime_s"] = seconds_since(start);

  if (g.json) {
    std::cout << summary.dump(2) << '\n';
  } else {
    std::cout << (cache_hit ? "cache hit" : "cache miss") << ": " << projected.size() << " modes\n";
    std::cout << std::setw(4) << "n" << std::setw(14) << "f_n [Hz]" << std::setw(16) << "amplitude" << '\n';
    for (const Mode& m : projected.modes) {
      std::cout << std::setw(4) << m.index << std::setw(14) << std::fixed << std::setprecision(4)
                << m.frequency_hz() << std::setw(16) << std::scientific << std::setprecision(6)
                << m.amplitude() << std::defaultfloat << '\n';
    }
    for (const auto& a : summary["audio"]) std::cout << "wrote " << a["path"].get<std::string>() << '\n';
  }
  return 0;
}

// Accepts a field base path with or without its .bin/.json suffix.
fs::path field_base(const std::string& path) {
  fs::path p(path);
  if (p.extension() == ".bin" || p.extension() == ".json") p.replace_extension();
  return p;
}

int cmd_compare_fields(const Globals& g, const std::string& est_path, const std::string& ref_path, bool truncate,
                       bool csv, const std::string& id) {
  FieldTrajectory est = read_field_binary(field_base(est_path));
  FieldTrajectory ref = read_field_binary(field_base(ref_path));
  if (est.sample_rate != ref.sample_rate) throw Error(ErrorKind::FormatError, "field sample rates differ");
  if (truncate) {
    const int n = std::min(est.n_time, ref.n_time);
    est.u.resize(static_cast<std::size_t>(n) * est.n_space);
    ref.u.resize(static_cast<std::size_t>(n) * ref.n_space);
    est.n_time = ref.n_time = n;
  }
  // Solver and modal fields live on different grids; compare on the common one.
  if (est.n_space != ref.n_space) {
    est = resample_space(est);
    ref = resample_space(ref);
  }
  const FieldScores s = compare_fields(est, ref);
  if (g.json) {
    json j = s;
    j["id"] = id;
    j["n_space"] = ref.n_space;
    j["n_time"] = ref.n_time;
    std::cout << j.dump(2) << '\n';
  } else if (csv) {
    std::cout << "id,mean_sdr_db,mean_si_sdr_db,flat_sdr_db,flat_si_sdr_db\n"
              << std::setprecision(10) << id << ',' << s.mean_sdr_db << ',' << s.mean_si_sdr_db << ','
              << s.flat_sdr_db << ',' << s.flat_si_sdr_db << '\n';
  } else {
    std::cout << "rows        " << s.rows.size() << " of " << ref.n_space << '\n'
              << "SDR     mean " << s.mean_sdr_db << " dB, flat " << s.flat_sdr_db << " dB\n"
              << "SI-SDR  mean " << s.mean_si_sdr_db << " dB, flat " << s.flat_si_sdr_db << " dB\n";
  }
  return 0;
}

int cmd_compare(const Globals& g, const std::string& est_path, const std::string& ref_path, bool truncate,
                bool csv, const std::string& id) {
  WavData est = read_wav(est_path);
  WavData ref = read_wav(ref_path);
  if (est.sample_rate != ref.sample_rate) {
    throw Error(ErrorKind::FormatError, "sample rates differ: " + std::to_string(est.sample_rate) + " vs " +
                                            std::to_string(ref.sample_rate));
  }
  if (truncate) {
    const std::size_t n = std::min(est.samples.size(), ref.samples.size());
    est.samples.resize(n);
    ref.samples.resize(n);
  }
  MetricsReport report = evaluate(est.samples, ref.samples, est.sample_rate);
  report.id = id;
  if (g.json) {
    std::cout << json(report).dump(2) << '\n';
  } else if (csv) {
    std::cout << csv_header() << '\n' << csv_row(report) << '\n';
  } else {
    std::cout << "SDR     " << report.sdr_db << " dB\n"
              << "SI-SDR  " << report.si_sdr_db << " dB\n"
              << "MSS     " << report.mss << '\n'
              << "Pitch   " << report.pitch_err_hz << " Hz (est " << report.est_f0_hz << ", ref "
              << report.ref_f0_hz << ")\n";
  }
  return 0;
}

int cmd_dataset(const Globals& g, int count, int n_pickups, int jobs, bool store_field) {
  GenerateOptions o;
  o.seed = g.seed;
  o.count = count;
  o.out_dir = g.out;
  o.pickups = pickup_columns(n_pickups, o.n_spatial);
  o.sample_rate = g.sample_rate;
  o.duration = g.duration;
  o.store_field = store_field;
  o.jobs = jobs > 0 ? jobs : static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  const Manifest m = generate(o);
  const auto failed = std::count_if(m.entries.begin(), m.entries.end(),
                                    [](const DatasetEntry& e) { return e.status != "ok"; });
  if (g.json) {
    std::cout << json{{"out", o.out_dir.string()},
                      {"entries", m.entries.size()},
                      {"generated", m.generated},
                      {"reused", m.reused},
                      {"failed", failed}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << m.entries.size() << " entries (" << m.generated << " generated, " << m.reused << " reused, "
              << failed << " failed) in " << o.out_dir.string() << '\n';
  }
  return 0;
}

int cmd_analyze(const Globals& g, const std::string& path, const std::string& f0_csv,
                const std::string& spectrogram, int fft, int hop) {
  const WavData wav = read_wav(path);
  const double f0 = estimate_f0(wav.samples, wav.sample_rate);
  std::optional<PitchTrack> track;
  try {
    track = pitch_glide(wav.samples, wav.sample_rate);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::TooShort && e.kind() != ErrorKind::Unvoiced) throw;
  }
  if (!f0_csv.empty() && track) {
    std::ofstream out(f0_csv);
    out << "time_s,f0_hz\n" << std::setprecision(10);
    for (std::size_t k = 0; k < track->times.size(); ++k) {
      out << track->times[k] << ',';
      if (track->f0[k]) out << *track->f0[k];
      out << '\n';
    }
  }
  std::optional<Spectrogram> spec;
  if (!spectrogram.empty()) {
    spec = stft_magnitude(wav.samples, fft, hop);
    // One row per frequency bin, one column per frame.
    std::ofstream out(spectrogram);
    out << std::setprecision(10);
    for (int b = 0; b < spec->bins; ++b) {
      for (int f = 0; f < spec->frames; ++f) out << (f ? "," : "") << spec->at(f, b);
      out << '\n';
    }
  }
  if (g.json) {
    json j{{"path", path}, {"sample_rate", wav.sample_rate}, {"samples", wav.samples.size()}, {"f0_hz", f0}};
    j["glide_hz"] = track ? json(track->glide_hz) : json(nullptr);
    j["spectrogram"] = spec ? json{{"path", spectrogram}, {"bins", spec->bins}, {"frames", spec->frames}}
                            : json(nullptr);
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "f0: " << f0 << " Hz\n";
    if (track) {
      std::cout << "glide: " << track->glide_hz << " Hz\n";
    } else {
      std::cout << "glide: n/a\n";
    }
    if (spec) std::cout << "spectrogram: " << spec->bins << " bins x " << spec->frames << " frames\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stiff-string modal/FDTD toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--sample-rate", g.sample_rate, "Sample rate in Hz")->capture_default_str();
  app.add_option("--duration", g.duration, "Duration in seconds")->capture_default_str();
  app.add_flag("--json", g.json, "Machine-readable output on stdout");

  StringFlags sim_flags;
  bool store_zeta = false;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run the finite-difference solver");
  add_string_flags(simulate_cmd, sim_flags, true);
  simulate_cmd->add_flag("--store-zeta", store_zeta, "Keep the longitudinal field as well");

  StringFlags modal_flags;
  int modes = kDefaultModes;
  int max_order = kDefaultMaxOrder;
  std::string cache;
  auto* modal_cmd = app.add_subcommand("modal", "Render the linear modal solution");
  add_string_flags(modal_cmd, modal_flags, false);
  modal_cmd->add_option("--modes", modes, "Modes kept in the projection")->capture_default_str()
      ->check(CLI::PositiveNumber);
  modal_cmd->add_option("--max-order", max_order, "Roots searched")->capture_default_str()
      ->check(CLI::PositiveNumber);
  modal_cmd->add_option("--cache", cache, "Decomposition cache directory (default $STRINGLAB_CACHE_DIR)");

  std::string est_path, ref_path, id;
  bool truncate = false, csv = false, fields = false;
  auto* compare_cmd = app.add_subcommand("compare", "Metrics between an estimate and a reference WAV or field");
  compare_cmd->add_option("est", est_path, "Estimate WAV (or field base with --field)")->required();
  compare_cmd->add_option("ref", ref_path, "Reference WAV (or field base with --field)")->required();
  compare_cmd->add_flag("--field", fields, "Compare stored fields: per-pickup and flattened SDR / SI-SDR");
  compare_cmd->add_flag("--truncate", truncate, "Cut both files to the shorter length");
  compare_cmd->add_flag("--csv", csv, "Print the CSV header and row");
  compare_cmd->add_option("--id", id, "Identifier stored in the report");

  int count = 32, n_pickups = 8, jobs = 0;
  bool dataset_field = false;
  auto* dataset_cmd = app.add_subcommand("dataset", "Generate a randomized string corpus");
  dataset_cmd->add_option("--count", count, "Strings to generate")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  dataset_cmd->add_option("--pickups", n_pickups, "Pickup columns per string")->capture_default_str()
      ->check(CLI::PositiveNumber);
  dataset_cmd->add_option("--jobs", jobs, "Worker threads (default: logical cores)")
      ->check(CLI::NonNegativeNumber);
  dataset_cmd->add_flag("--store-field", dataset_field, "Also store the resampled field");

  std::string wav_path, f0_csv, spectrogram;
  int fft = 1024, hop = 256;
  auto* analyze_cmd = app.add_subcommand("analyze", "Pitch, glide and spectrogram of a WAV file");
  analyze_cmd->add_option("wav", wav_path, "Input WAV")->required();
  analyze_cmd->add_option("--f0-csv", f0_csv, "Write the frame-wise f0 track here");
  analyze_cmd->add_option("--spectrogram", spectrogram, "Write STFT magnitudes (bins x frames) here");
  analyze_cmd->add_option("--fft", fft, "Spectrogram FFT size")->capture_default_str()
      ->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--hop", hop, "Spectrogram hop")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!(g.sample_rate > 0.0)) throw Error(ErrorKind::InvalidParams, "--sample-rate must be > 0");
    if (!(g.duration > 0.0)) throw Error(ErrorKind::InvalidParams, "--duration must be > 0");
    if (*simulate_cmd) return cmd_simulate(g, sim_flags, store_zeta);
    if (*modal_cmd) return cmd_modal(g, modal_flags, *modal_cmd, modes, max_order, cache);
    if (*compare_cmd && fields) return cmd_compare_fields(g, est_path, ref_path, truncate, csv, id);
    if (*compare_cmd) return cmd_compare(g, est_path, ref_path, truncate, csv, id);
    if (*dataset_cmd) return cmd_dataset(g, count, n_pickups, jobs, dataset_field);
    if (*analyze_cmd) return cmd_analyze(g, wav_path, f0_csv, spectrogram, fft, hop);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (g.json) std::cout << json{{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}}.dump(2) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (g.json) std::cout << json{{"error", {{"kind", "IoError"}, {"message", e.what()}}}}.dump(2) << '\n';
    return 1;
  }
  return 0;
}
