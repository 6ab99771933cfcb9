#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "stringlab/error.hpp"
#include "stringlab/fdtd.hpp"
#include "stringlab/field.hpp"
#include "stringlab/wav.hpp"

using namespace stringlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / ("stringlab_io_" + std::string(name));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T le(const std::vector<char>& b, std::size_t at) {
  T v;
  std::memcpy(&v, b.data() + at, sizeof(T));
  return v;
}

}  // namespace

TEST_CASE("wav header is the canonical 44-byte float layout") {
  const fs::path dir = scratch_dir("wav");
  const auto x = oracle::sine(440.0, 48000.0, 1000, 0.25);
  write_wav(dir / "a.wav", x, 48000);
  const auto b = slurp(dir / "a.wav");
  REQUIRE(b.size() == 44 + 4 * 1000);
  CHECK(std::string(b.data(), 4) == "RIFF");
  CHECK(le<std::uint32_t>(b, 4) == 36 + 4000);
  CHECK(std::string(b.data() + 8, 8) == "WAVEfmt ");
  CHECK(le<std::uint32_t>(b, 16) == 16);
  CHECK(le<std::uint16_t>(b, 20) == 3);
  CHECK(le<std::uint16_t>(b, 22) == 1);
  CHECK(le<std::uint32_t>(b, 24) == 48000);
  CHECK(le<std::uint32_t>(b, 28) == 48000 * 4);
  CHECK(le<std::uint16_t>(b, 32) == 4);
  CHECK(le<std::uint16_t>(b, 34) == 32);
  CHECK(std::string(b.data() + 36, 4) == "data");
  CHECK(le<std::uint32_t>(b, 40) == 4000);
  CHECK(le<float>(b, 44 + 4 * 7) == static_cast<float>(x[7]));

  const WavData back = read_wav(dir / "a.wav");
  CHECK(back.sample_rate == 48000);
  REQUIRE(back.samples.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(back.samples[i] == static_cast<double>(static_cast<float>(x[i])));
}

TEST_CASE("wav reader accepts pcm16 and rejects junk") {
  const fs::path dir = scratch_dir("pcm");
  std::vector<char> b;
  auto put32 = [&](std::uint32_t v) { b.insert(b.end(), reinterpret_cast<char*>(&v), reinterpret_cast<char*>(&v) + 4); };
  auto put16 = [&](std::uint16_t v) { b.insert(b.end(), reinterpret_cast<char*>(&v), reinterpret_cast<char*>(&v) + 2); };
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put32(36 + 4);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(16);
  put16(1);
  put16(1);
  put32(8000);
  put32(16000);
  put16(2);
  put16(16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put32(4);
  put16(16384);
  put16(static_cast<std::uint16_t>(-32768));
  std::ofstream(dir / "p.wav", std::ios::binary).write(b.data(), static_cast<std::streamsize>(b.size()));
  const WavData w = read_wav(dir / "p.wav");
  CHECK(w.sample_rate == 8000);
  REQUIRE(w.samples.size() == 2);
  CHECK(w.samples[0] == 0.5);
  CHECK(w.samples[1] == -1.0);

  std::ofstream(dir / "junk.wav") << "not a wave file at all";
  try {
    read_wav(dir / "junk.wav");
    FAIL("expected FormatError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FormatError);
  }
  CHECK_THROWS_AS(read_wav(dir / "missing.wav"), Error);
}

TEST_CASE("field binary round trip") {
  const fs::path dir = scratch_dir("field");
  StringParams p;
  p.alpha = 4.0;
  SimOptions o;
  o.store_zeta = true;
  const FieldTrajectory tr = simulate(p, {0.3, 0.01, PluckShape::RaisedCosine, std::nullopt}, 48000.0, 0.01, o);
  write_field_binary(tr, dir / "f");
  CHECK(fs::exists(dir / "f.bin"));
  CHECK(fs::exists(dir / "f.json"));
  CHECK(fs::exists(dir / "f_zeta.bin"));
  CHECK(fs::file_size(dir / "f.bin") == sizeof(double) * tr.u.size());

  // Rows are space: the second row on disk is node 1 over time.
  const auto raw = slurp(dir / "f.bin");
  for (int t : {0, 5, tr.n_time - 1}) {
    CHECK(le<double>(raw, sizeof(double) * (static_cast<std::size_t>(tr.n_time) + t)) == tr.at(1, t));
  }
  const FieldTrajectory back = read_field_binary(dir / "f");
  CHECK(back.n_space == tr.n_space);
  CHECK(back.n_time == tr.n_time);
  CHECK(back.u == tr.u);
  CHECK(back.params == tr.params);
  CHECK(back.pluck == tr.pluck);
  std::ifstream hin(dir / "f.json");
  const auto header = nlohmann::json::parse(hin);
  CHECK(header.at("rows") == tr.n_space);
  CHECK(header.at("cols") == tr.n_time);
  CHECK(header.at("grid").at("oversample") == tr.grid->oversample);
}

TEST_CASE("field csv has one row per node") {
  const fs::path dir = scratch_dir("csv");
  const FieldTrajectory tr = simulate(StringParams{}, {0.5, 0.01, PluckShape::RaisedCosine, std::nullopt}, 48000.0, 0.001);
  write_field_csv(tr, dir / "f.csv");
  std::ifstream in(dir / "f.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    double first = 0.0;
    while (std::getline(ss, cell, ',')) {
      if (cols == 0) first = std::stod(cell);
      ++cols;
    }
    CHECK(cols == tr.n_time + 1);
    CHECK(first == doctest::Approx(tr.position(rows)));
    ++rows;
  }
  CHECK(rows == tr.n_space);
}
