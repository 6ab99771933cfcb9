#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "stringlab/error.hpp"
#include "stringlab/modal.hpp"
#include "stringlab/synth.hpp"

using namespace stringlab;

namespace {

StringParams default_string(double sigma0 = 0.0) {
  StringParams p;
  p.sigma0 = sigma0;
  return p;
}

ModeSet single_mode(const StringParams& p, int k, double amplitude = 1.0) {
  ModeSet ms = find_mode_roots(p, 40);
  ModeSet one = ms;
  one.modes = {ms.modes[static_cast<std::size_t>(k)]};
  one.modes[0].set_amplitude(amplitude);
  return one;
}

ModeSet plucked(const StringParams& p) {
  const auto u0 = make_pluck({0.3, 0.01, PluckShape::RaisedCosine, std::nullopt}, 1025);
  return project_initial_condition(u0, find_mode_roots(p).truncated(40));
}

}  // namespace

TEST_CASE("single damped mode decays at sigma0") {
  const double s0 = 3.0;
  const ModeSet one = single_mode(default_string(s0), 0);
  RenderSpec spec;
  spec.pickup_x = 0.1;
  const auto w = render_waveform(one, spec);
  // Least-squares slope of log |peak| over successive half periods.
  const double period = 2.0 * kPi / one.modes[0].omega;
  const int span = static_cast<int>(period * spec.sample_rate);
  std::vector<double> t, logpeak;
  for (int start = 0; start + span < static_cast<int>(w.size()); start += span) {
    int best = start;
    for (int i = start; i < start + span; ++i) {
      if (std::abs(w[i]) > std::abs(w[best])) best = i;
    }
    t.push_back(best / spec.sample_rate);
    logpeak.push_back(std::log(std::abs(w[best])));
  }
  const double n = static_cast<double>(t.size());
  double st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sl += logpeak[i];
    stt += t[i] * t[i];
    stl += t[i] * logpeak[i];
  }
  const double slope = (n * stl - st * sl) / (n * stt - st * st);
  CHECK(-slope == doctest::Approx(s0).epsilon(0.01));
}

TEST_CASE("undamped single mode is a pure sinusoid") {
  const ModeSet one = single_mode(default_string(), 2);
  RenderSpec spec;
  spec.pickup_x = 0.13;
  const auto w = render_waveform(one, spec);
  const auto peaks = oracle::spectral_peaks(w, spec.sample_rate, 1);
  REQUIRE(peaks.size() == 1);
  CHECK(std::abs(peaks[0] - one.modes[0].frequency_hz()) < spec.sample_rate / static_cast<double>(w.size()));
  const double a = mode_shape(one.modes[0], 0.13, one.params);
  for (int i : {0, 17, 4800, 47999}) {
    CHECK(w[i] == doctest::Approx(a * std::cos(one.modes[0].omega * i / spec.sample_rate)).epsilon(1e-12));
  }
}

TEST_CASE("pickup at the walls is silent") {
  const ModeSet ms = plucked(default_string());
  for (double x : {-0.5, 0.5}) {
    RenderSpec spec;
    spec.duration = 0.05;
    spec.pickup_x = x;
    const auto w = render_waveform(ms, spec);
    for (double v : w) CHECK(std::abs(v) < 1e-15);
  }
}

TEST_CASE("field frame zero reproduces the projected pluck") {
  const StringParams p = default_string();
  const ModeSet ms = plucked(p);
  RenderSpec spec;
  spec.duration = 0.01;
  spec.n_spatial = 257;
  const FieldTrajectory f = render_field(ms, spec);
  CHECK(f.n_space == 257);
  CHECK(f.n_time == 480);
  const auto recon = reconstruct(ms, 257);
  for (int i = 0; i < 257; ++i) CHECK(f.at(i, 0) == doctest::Approx(recon[i]).epsilon(1e-12).scale(0.01));
  const auto u0 = make_pluck({0.3, 0.01, PluckShape::RaisedCosine, std::nullopt}, 257);
  double err = 0.0, ref = 0.0;
  for (int i = 0; i < 257; ++i) {
    err += (f.at(i, 0) - u0[i]) * (f.at(i, 0) - u0[i]);
    ref += u0[i] * u0[i];
  }
  CHECK(std::sqrt(err / ref) < 0.05);
  for (int t = 0; t < f.n_time; ++t) {
    CHECK(f.at(0, t) == 0.0);
    CHECK(f.at(256, t) == 0.0);
  }
}

TEST_CASE("field energy proxy decays under damping") {
  const ModeSet ms = plucked(default_string(10.0));
  RenderSpec spec;
  spec.duration = 0.5;
  spec.sample_rate = 8000.0;
  spec.n_spatial = 65;
  const FieldTrajectory f = render_field(ms, spec);
  std::vector<double> e(static_cast<std::size_t>(f.n_time));
  for (int t = 0; t < f.n_time; ++t) {
    for (double v : f.frame(t)) e[t] += v * v;
  }
  // Moving max over 50 ms windows absorbs the beating between partials.
  const int window = 400;
  std::vector<double> envelope;
  for (int t = 0; t + window <= f.n_time; t += window) {
    envelope.push_back(*std::max_element(e.begin() + t, e.begin() + t + window));
  }
  for (std::size_t k = 1; k < envelope.size(); ++k) CHECK(envelope[k] < envelope[k - 1]);
}

TEST_CASE("rendering is linear in the mode set") {
  const ModeSet ms = plucked(default_string(0.5));
  ModeSet a = ms, b = ms, both = ms;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const double amp = ms.modes[i].amplitude();
    a.modes[i].set_amplitude(i % 2 == 0 ? amp : 0.0);
    b.modes[i].set_amplitude(i % 2 == 0 ? 0.3 * amp : amp);
    both.modes[i].set_amplitude(a.modes[i].amplitude() + b.modes[i].amplitude());
  }
  RenderSpec spec;
  spec.duration = 0.05;
  spec.pickup_x = 0.21;
  const auto wa = render_waveform(a, spec), wb = render_waveform(b, spec), wab = render_waveform(both, spec);
  for (std::size_t i = 0; i < wa.size(); ++i) CHECK(std::abs(wa[i] + wb[i] - wab[i]) < 1e-12);
}

TEST_CASE("evaluation is stateless in time") {
  const ModeSet ms = plucked(default_string(0.5));
  RenderSpec full;
  full.duration = 0.2;
  full.pickup_x = -0.17;
  RenderSpec late = full;
  late.start_time = 0.1;
  late.duration = 0.1;
  const auto a = render_waveform(ms, full);
  const auto b = render_waveform(ms, late);
  REQUIRE(b.size() == 4800);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i] == doctest::Approx(a[i + 4800]).epsilon(1e-9).scale(1e-2));
  CHECK(evaluate(ms, -0.17, 100 / 48000.0) == doctest::Approx(a[100]).epsilon(1e-12).scale(1e-2));

  RenderSpec grid;
  grid.duration = 0.01;
  grid.n_spatial = 11;
  const FieldTrajectory f = render_field(ms, grid);
  CHECK(f.at(3, 7) == doctest::Approx(evaluate(ms, f.position(3), 7 / 48000.0)).epsilon(1e-12).scale(1e-2));
}

TEST_CASE("render errors") {
  RenderSpec spec;
  spec.pickup_x = 0.0;
  CHECK_THROWS_AS(render_waveform(ModeSet{}, spec), Error);
  spec.duration = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  const ModeSet ms = plucked(default_string());
  RenderSpec outside;
  outside.pickup_x = 0.7;
  outside.duration = 0.01;
  CHECK_THROWS_AS(render_waveform(ms, outside), Error);
}
