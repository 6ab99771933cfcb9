#include "stringlab/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "stringlab/error.hpp"
#include "stringlab/fdtd.hpp"
#include "stringlab/wav.hpp"

namespace stringlab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream: draw k of key K is splitmix64(K + k * golden).
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) : key_(key) {}

  double uniform(const Range& r) {
    const std::uint64_t bits = splitmix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return r.first + (r.second - r.first) * u;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

void check_range(const Range& r, const char* name) {
  if (!(r.first <= r.second)) throw Error(ErrorKind::InvalidParams, std::string("empty sampling range for ") + name);
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  // Write-then-rename so an interrupted run never leaves a half-written file
  // that a resumed run would mistake for a finished entry.
  const auto tmp = p.parent_path() / (p.filename().string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorKind::IoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

DatasetEntry build_entry(const GenerateOptions& opt, std::uint64_t index, const std::vector<int>& columns) {
  DatasetEntry e;
  e.index = index;
  e.seed = opt.seed;
  e.id = entry_id(opt.seed, index);
  e.sample_rate = opt.sample_rate;
  e.duration = opt.duration;
  e.n_spatial = opt.n_spatial;
  const auto draw = sample_params(opt.seed, index, opt.ranges);
  e.f0_hz = draw.f0_hz;
  e.kappa_rel = draw.kappa_rel;
  e.params = draw.params;
  e.pluck = draw.pluck;
  e.t60 = draw.t60;

  const auto dir = opt.out_dir / e.id;
  std::filesystem::create_directories(dir);
  try {
    const auto field = resample_space(simulate(e.params, e.pluck, opt.sample_rate, opt.duration), opt.n_spatial);
    for (int col : columns) {
      PickupFile pf;
      pf.column = col;
      pf.x = field.position(col);
      pf.path = e.id + "/pickup_" + std::to_string(col) + ".wav";
      write_wav(opt.out_dir / pf.path, field.row(col), static_cast<int>(std::lround(opt.sample_rate)));
      e.audio.push_back(pf);
    }
    if (opt.store_field) {
      write_field_binary(field, dir / "field");
      e.field = e.id + "/field.json";
    }
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::Blowup && err.kind() != ErrorKind::Underresolved) throw;
    e.status = "failed";
    e.error = err.what();
    e.audio.clear();
  }
  write_text(dir / "meta.json", nlohmann::json(e).dump(2) + "\n");
  return e;
}

}  // namespace

void SampleRanges::validate() const {
  check_range(f0, "f0");
  check_range(kappa_rel, "kappa_rel");
  check_range(alpha, "alpha");
  check_range(t1, "t1");
  check_range(t2, "t2");
  check_range(f1, "f1");
  check_range({f2.first, f1.first - f2_offset}, "f2");
  check_range(pa, "pa");
  check_range(px, "px");
}

SampledString sample_params(std::uint64_t seed, std::uint64_t index, const SampleRanges& ranges) {
  ranges.validate();
  const std::uint64_t base = splitmix64(splitmix64(seed) ^ splitmix64(index ^ 0x5bd1e995ULL));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    CounterStream rng(splitmix64(base + static_cast<std::uint64_t>(attempt)));
    SampledString s;
    s.attempts = attempt + 1;
    s.f0_hz = rng.uniform(ranges.f0);
    s.kappa_rel = rng.uniform(ranges.kappa_rel);
    s.params.alpha = rng.uniform(ranges.alpha);
    s.t60.t1 = rng.uniform(ranges.t1);
    s.t60.t2 = rng.uniform(ranges.t2);
    s.t60.f1 = rng.uniform(ranges.f1);
    s.t60.f2 = rng.uniform({ranges.f2.first, s.t60.f1 - ranges.f2_offset});
    s.pluck.pa = rng.uniform(ranges.pa);
    s.pluck.px = rng.uniform(ranges.px);
    s.params.gamma = gamma_from_f0(s.f0_hz, s.params.length);
    s.params.kappa = s.kappa_rel * s.params.gamma;
    try {
      const auto d = damping_from_t60(s.t60, s.params.gamma, s.params.kappa);
      s.params.sigma0 = d.sigma0;
      s.params.sigma1 = d.sigma1;
      s.params.validate();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NegativeDamping || e.kind() == ErrorKind::InvalidParams ||
          e.kind() == ErrorKind::DegenerateSpec) {
        continue;
      }
      throw;
    }
    return s;
  }
  throw Error(ErrorKind::RejectionExhausted, "no admissible draw after 1000 attempts");
}

FieldTrajectory resample_space(const FieldTrajectory& field, int target_nx) {
  if (field.n_space < 4) throw Error(ErrorKind::Underresolved, "resampling needs at least 4 spatial nodes");
  if (target_nx < 2) throw Error(ErrorKind::InvalidParams, "target_nx must be >= 2");
  using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

  FieldTrajectory out;
  out.n_space = target_nx;
  out.n_time = field.n_time;
  out.sample_rate = field.sample_rate;
  out.length = field.length;
  out.params = field.params;
  out.pluck = field.pluck;
  out.u.assign(static_cast<std::size_t>(target_nx) * field.n_time, 0.0);

  const double half = 0.5 * field.length;
  const auto xs = uniform_grid(target_nx, field.length);
  for (int t = 0; t < field.n_time; ++t) {
    const auto frame = field.frame(t);
    double* dst = out.u.data() + static_cast<std::size_t>(t) * target_nx;
    if (std::all_of(frame.begin(), frame.end(), [](double v) { return v == 0.0; })) continue;
    const Spline spline(frame.data(), frame.size(), -half, field.dx(), 0.0, 0.0);
    for (int i = 1; i + 1 < target_nx; ++i) dst[i] = spline(xs[static_cast<std::size_t>(i)]);
    dst[0] = frame.front();
    dst[target_nx - 1] = frame.back();
  }
  return out;
}

std::string entry_id(std::uint64_t seed, std::uint64_t index) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(splitmix64(splitmix64(seed) + splitmix64(~index))));
  return buf;
}

std::vector<int> pickup_columns(int count, int n_spatial) {
  std::vector<int> cols;
  if (count >= n_spatial) {
    for (int c = 0; c < n_spatial; ++c) cols.push_back(c);
    return cols;
  }
  for (int k = 0; k < count; ++k) {
    cols.push_back(static_cast<int>(std::lround(static_cast<double>(k + 1) * (n_spatial - 1) / (count + 1))));
  }
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  return cols;
}

void to_json(nlohmann::json& j, const DatasetEntry& e) {
  nlohmann::json audio = nlohmann::json::array();
  for (const auto& a : e.audio) audio.push_back({{"column", a.column}, {"x", a.x}, {"path", a.path}});
  j = nlohmann::json{{"index", e.index},       {"seed", e.seed},
                     {"id", e.id},             {"status", e.status},
                     {"error", e.error},       {"f0_hz", e.f0_hz},
                     {"kappa_rel", e.kappa_rel}, {"params", e.params},
                     {"pluck", e.pluck},       {"t60", e.t60},
                     {"sample_rate", e.sample_rate}, {"duration", e.duration},
                     {"n_spatial", e.n_spatial}, {"audio", audio}};
  j["field"] = e.field ? nlohmann::json(*e.field) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, DatasetEntry& e) {
  j.at("index").get_to(e.index);
  j.at("seed").get_to(e.seed);
  j.at("id").get_to(e.id);
  j.at("status").get_to(e.status);
  e.error = j.value("error", std::string());
  j.at("f0_hz").get_to(e.f0_hz);
  j.at("kappa_rel").get_to(e.kappa_rel);
  j.at("params").get_to(e.params);
  j.at("pluck").get_to(e.pluck);
  j.at("t60").get_to(e.t60);
  j.at("sample_rate").get_to(e.sample_rate);
  j.at("duration").get_to(e.duration);
  j.at("n_spatial").get_to(e.n_spatial);
  e.audio.clear();
  for (const auto& a : j.at("audio")) {
    e.audio.push_back({a.at("column").get<int>(), a.at("x").get<double>(), a.at("path").get<std::string>()});
  }
  if (j.contains("field") && !j.at("field").is_null()) {
    e.field = j.at("field").get<std::string>();
  } else {
    e.field.reset();
  }
}

Manifest generate(const GenerateOptions& options) {
  if (options.count < 0) throw Error(ErrorKind::InvalidParams, "count must be >= 0");
  options.ranges.validate();
  std::filesystem::create_directories(options.out_dir);
  const auto columns = options.pickups.empty() ? pickup_columns(options.n_spatial, options.n_spatial) : options.pickups;
  for (int c : columns) {
    if (c < 0 || c >= options.n_spatial) throw Error(ErrorKind::InvalidParams, "pickup column out of range");
  }

  Manifest manifest;
  manifest.entries.resize(static_cast<std::size_t>(options.count));
  std::atomic<int> next{0};
  std::atomic<int> generated{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (int i = next++; i < options.count; i = next++) {
      try {
        const auto index = static_cast<std::uint64_t>(i);
        const auto meta = options.out_dir / entry_id(options.seed, index) / "meta.json";
        if (std::filesystem::exists(meta)) {
          manifest.entries[static_cast<std::size_t>(i)] = nlohmann::json::parse(read_text(meta)).get<DatasetEntry>();
        } else {
          manifest.entries[static_cast<std::size_t>(i)] = build_entry(options, index, columns);
          ++generated;
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(options.jobs, 1, std::max(1, options.count));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  manifest.generated = generated;
  manifest.reused = options.count - generated;
  // Entries from an earlier, larger run stay listed.
  const auto manifest_path = options.out_dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    const auto previous = nlohmann::json::parse(read_text(manifest_path));
    for (const auto& j : previous.value("entries", nlohmann::json::array())) {
      auto e = j.get<DatasetEntry>();
      if (e.seed == options.seed && e.index >= static_cast<std::uint64_t>(options.count)) manifest.entries.push_back(e);
    }
  }
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest.entries) entries.push_back(e);
  write_text(manifest_path, nlohmann::json{{"seed", options.seed}, {"entries", entries}}.dump(2) + "\n");
  return manifest;
}

}  // namespace stringlab
