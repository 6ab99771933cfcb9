#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "stringlab/dataset.hpp"
#include "stringlab/metrics.hpp"
#include "stringlab/modal.hpp"
#include "stringlab/wav.hpp"

using namespace stringlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  json parsed() const { return json::parse(out); }
};

// Runs the CLI with stderr discarded and returns exit status plus stdout.
Run cli(const std::string& args) {
  const std::string cmd = std::string(STRINGLAB_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / ("stringlab_cli_" + std::string(name));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(cli("--help").code == 0);
  CHECK(cli("").code == 2);
  CHECK(cli("simulate --bogus").code == 2);
  CHECK(cli("simulate --alpha 0.5 --out " + scratch_dir("bad").string()).code == 1);
  CHECK(cli("analyze /nonexistent/file.wav").code == 1);
  const Run r = cli("simulate --alpha 0.5 --json --out " + scratch_dir("badjson").string());
  CHECK(r.code == 1);
  const json j = r.parsed();
  CHECK(j.at("error").at("kind") == "InvalidParams");
}

TEST_CASE("simulate writes audio and a parsable summary") {
  const fs::path dir = scratch_dir("sim");
  const Run r = cli("simulate --duration 0.1 --pickup 0.25,-0.1 --store-field --json --out " + dir.string());
  REQUIRE(r.code == 0);
  const json j = r.parsed();
  for (const char* key : {"params", "pluck", "t60", "grid", "runtime_s", "energy_drift", "audio", "field"}) {
    CHECK(j.contains(key));
  }
  REQUIRE(j.at("audio").size() == 2);
  const WavData w = read_wav(j.at("audio")[0].at("path").get<std::string>());
  CHECK(w.sample_rate == 48000);
  CHECK(w.samples.size() == 4800);
  CHECK(fs::exists(dir / "fdtd_field.bin"));
  CHECK(fs::exists(dir / "fdtd_field.json"));
}

TEST_CASE("nonlinear simulation glides and the linear one does not") {
  const fs::path dir = scratch_dir("glide");
  const std::string common = " --pa 0.02 --px 0.3 --pickup 0.25 --json --out ";
  REQUIRE(cli("simulate --alpha 1" + common + (dir / "lin").string()).code == 0);
  REQUIRE(cli("simulate --alpha 20" + common + (dir / "nl").string()).code == 0);
  const Run lin = cli("analyze --json " + (dir / "lin" / "fdtd_pickup_0.wav").string());
  const Run nl = cli("analyze --json " + (dir / "nl" / "fdtd_pickup_0.wav").string());
  REQUIRE(lin.code == 0);
  REQUIRE(nl.code == 0);
  const double g_lin = lin.parsed().at("glide_hz"), g_nl = nl.parsed().at("glide_hz");
  MESSAGE("glide linear " << g_lin << " Hz, nonlinear " << g_nl << " Hz");
  CHECK(std::abs(g_lin) < 1.0);
  CHECK(g_nl > 1.0);
}

TEST_CASE("silent pluck exits cleanly and analysis reports unvoiced") {
  const fs::path dir = scratch_dir("silent");
  REQUIRE(cli("simulate --pa 0 --duration 0.5 --out " + dir.string()).code == 0);
  const WavData w = read_wav(dir / "fdtd_pickup_0.wav");
  for (double v : w.samples) CHECK(v == 0.0);
  const Run r = cli("analyze --json " + (dir / "fdtd_pickup_0.wav").string());
  CHECK(r.code == 1);
  CHECK(r.parsed().at("error").at("kind") == "Unvoiced");
}

TEST_CASE("modal command caches the decomposition") {
  const fs::path dir = scratch_dir("modal");
  const std::string args = "modal --kappa-rel 0.001 --duration 0.2 --json --cache " + (dir / "cache").string() +
                           " --out " + dir.string();
  const Run first = cli(args);
  REQUIRE(first.code == 0);
  const json a = first.parsed();
  CHECK(a.at("cache_hit") == false);
  REQUIRE(a.at("modes").size() == 40);
  const double f1 = a.at("modes")[0].at("f_hz");
  CHECK(std::abs(f1 / 220.0 - 1.0) < 0.01);
  const Run second = cli(args);
  REQUIRE(second.code == 0);
  const json b = second.parsed();
  CHECK(b.at("cache_hit") == true);
  CHECK(b.at("modes") == a.at("modes"));
  CHECK(fs::exists(dir / "modal_pickup_0.wav"));
}

TEST_CASE("compare reports the library metrics") {
  const fs::path dir = scratch_dir("compare");
  const auto ref = oracle::sine(220.0, 48000.0, 48000, 0.5);
  const auto est = oracle::sine(221.0, 48000.0, 48000, 0.4, 0.3);
  write_wav(dir / "ref.wav", ref, 48000);
  write_wav(dir / "est.wav", est, 48000);

  const Run self = cli("compare --json " + (dir / "ref.wav").string() + " " + (dir / "ref.wav").string());
  REQUIRE(self.code == 0);
  const json s = self.parsed();
  CHECK(s.at("sdr_db") == kDbCap);
  CHECK(s.at("si_sdr_db") == kDbCap);
  CHECK(s.at("mss") == 0.0);
  CHECK(s.at("pitch_err_hz") == 0.0);

  const Run pair = cli("compare --json --id p7 " + (dir / "est.wav").string() + " " + (dir / "ref.wav").string());
  REQUIRE(pair.code == 0);
  const json j = pair.parsed();
  const MetricsReport lib = evaluate(read_wav(dir / "est.wav").samples, read_wav(dir / "ref.wav").samples, 48000.0);
  CHECK(j.at("id") == "p7");
  CHECK(j.at("sdr_db").get<double>() == doctest::Approx(lib.sdr_db).epsilon(1e-12));
  CHECK(j.at("si_sdr_db").get<double>() == doctest::Approx(lib.si_sdr_db).epsilon(1e-12));
  CHECK(j.at("mss").get<double>() == doctest::Approx(lib.mss).epsilon(1e-12));
  CHECK(j.at("pitch_err_hz").get<double>() == doctest::Approx(lib.pitch_err_hz).epsilon(1e-12));

  const Run csv = cli("compare --csv " + (dir / "est.wav").string() + " " + (dir / "ref.wav").string());
  REQUIRE(csv.code == 0);
  std::istringstream lines(csv.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == csv_header());
  CHECK(std::count(row.begin(), row.end(), ',') == 7);

  write_wav(dir / "short.wav", std::vector<double>(est.begin(), est.begin() + 30000), 48000);
  CHECK(cli("compare " + (dir / "short.wav").string() + " " + (dir / "ref.wav").string()).code == 1);
  CHECK(cli("compare --truncate " + (dir / "short.wav").string() + " " + (dir / "ref.wav").string()).code == 0);
  write_wav(dir / "other_rate.wav", ref, 44100);
  CHECK(cli("compare " + (dir / "other_rate.wav").string() + " " + (dir / "ref.wav").string()).code == 1);
}

TEST_CASE("compare fields from both solvers") {
  const fs::path dir = scratch_dir("fields");
  const std::string common = " --duration 0.05 --store-field --json --out " + dir.string();
  REQUIRE(cli("simulate" + common).code == 0);
  REQUIRE(cli("modal" + common + " --cache " + (dir / "cache").string()).code == 0);
  const Run self = cli("compare --field --json " + (dir / "fdtd_field").string() + " " + (dir / "fdtd_field.bin").string());
  REQUIRE(self.code == 0);
  CHECK(self.parsed().at("flat_sdr_db") == kDbCap);

  const Run r = cli("compare --field --json --id mf " + (dir / "modal_field").string() + " " +
                    (dir / "fdtd_field").string());
  REQUIRE(r.code == 0);
  const json j = r.parsed();
  CHECK(j.at("id") == "mf");
  CHECK(j.at("n_space") == 256);
  CHECK(j.at("rows").size() == 254);
  CHECK(j.at("sdr_db").size() == 254);
  const double flat = j.at("flat_sdr_db"), mean = j.at("mean_sdr_db");
  MESSAGE("modal vs solver field SDR: flat " << flat << " dB, per-pickup mean " << mean << " dB");
  CHECK(std::isfinite(flat));
  CHECK(flat < kDbCap);

  const Run csv = cli("compare --field --csv " + (dir / "modal_field").string() + " " + (dir / "fdtd_field").string());
  REQUIRE(csv.code == 0);
  CHECK(csv.out.rfind("id,mean_sdr_db,mean_si_sdr_db,flat_sdr_db,flat_si_sdr_db\n", 0) == 0);
}

TEST_CASE("dataset layout and resume") {
  const fs::path dir = scratch_dir("dataset");
  const std::string args = "dataset --count 2 --pickups 3 --seed 4 --json --out " + dir.string();
  const Run r = cli(args);
  REQUIRE(r.code == 0);
  CHECK(r.parsed().at("generated") == 2);
  CHECK(count_files(dir, ".wav") == 6);
  CHECK(count_files(dir, ".json") == 3);
  std::ifstream in(dir / "manifest.json");
  const json manifest = json::parse(in);
  for (const auto& e : manifest.at("entries")) {
    CHECK(e.at("id") == entry_id(4, e.at("index").get<std::uint64_t>()));
    CHECK(e.at("audio").size() == 3);
  }
  const Run again = cli(args);
  REQUIRE(again.code == 0);
  CHECK(again.parsed().at("generated") == 0);
  CHECK(again.parsed().at("reused") == 2);
  CHECK(count_files(dir, ".wav") == 6);
}

TEST_CASE("analyze writes spectrogram and pitch track") {
  const fs::path dir = scratch_dir("analyze");
  write_wav(dir / "tone.wav", oracle::sine(196.0, 48000.0, 48000, 0.3), 48000);
  const Run r = cli("analyze --json --fft 512 --hop 128 --spectrogram " + (dir / "spec.csv").string() + " --f0-csv " +
                    (dir / "f0.csv").string() + " " + (dir / "tone.wav").string());
  REQUIRE(r.code == 0);
  const json j = r.parsed();
  CHECK(std::abs(j.at("f0_hz").get<double>() - 196.0) < 0.5);
  CHECK(j.at("spectrogram").at("bins") == 257);
  const int frames = 1 + (48000 - 512) / 128;
  CHECK(j.at("spectrogram").at("frames") == frames);

  std::ifstream spec(dir / "spec.csv");
  std::string line;
  int rows = 0;
  while (std::getline(spec, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == frames - 1);
    ++rows;
  }
  CHECK(rows == 257);

  std::ifstream f0(dir / "f0.csv");
  std::getline(f0, line);
  CHECK(line == "time_s,f0_hz");
  int tracked = 0;
  while (std::getline(f0, line)) ++tracked;
  CHECK(tracked == 1 + (48000 - 2048) / 512);
}
