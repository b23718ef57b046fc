#include "doctest.h"

#include <cmath>
#include <complex>
#include <numeric>

#include "widur/features.hpp"
#include "widur/rng.hpp"

using namespace widur;

namespace {

// Frame-by-frame STFT oracle: windowed naive DFT, no FFT involved.
std::vector<double> naive_stft_power(const std::vector<double>& s, const StftConfig& cfg) {
  const size_t wl = cfg.window_len;
  std::vector<double> hann(wl);
  for (size_t k = 0; k < wl; ++k) {
    hann[k] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(k) /
                                    static_cast<double>(wl)));
  }
  const size_t frames = (s.size() - wl) / cfg.hop + 1;
  std::vector<double> power(frames * cfg.kept_bins);
  for (size_t t = 0; t < frames; ++t) {
    for (size_t f = 0; f < cfg.kept_bins; ++f) {
      std::complex<double> acc = 0.0;
      for (size_t k = 0; k < wl; ++k) {
        const double ang =
            -2.0 * M_PI * static_cast<double>(f * k) / static_cast<double>(wl);
        acc += hann[k] * s[t * cfg.hop + k] *
               std::complex<double>(std::cos(ang), std::sin(ang));
      }
      power[t * cfg.kept_bins + f] = std::norm(acc);
    }
  }
  return power;
}

// Synthesis-side DWT oracle: adjoint of the periodized analysis correlation,
// which inverts it exactly for orthonormal filters.
constexpr std::array<double, 8> kLo = {
    0.23037781330885523, 0.7148465705525415,   0.6308807679295904,
    -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945, -0.010597401784997278};

std::vector<double> synthesize_level(const std::vector<double>& a,
                                     const std::vector<double>& d) {
  std::array<double, 8> hi;
  for (size_t k = 0; k < 8; ++k) hi[k] = (k % 2 == 0 ? 1.0 : -1.0) * kLo[7 - k];
  const size_t n = 2 * a.size();
  std::vector<double> x(n, 0.0);
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t k = 0; k < 8; ++k) {
      x[(2 * i + k) % n] += kLo[k] * a[i] + hi[k] * d[i];
    }
  }
  return x;
}

std::vector<double> reconstruct(const DwtPyramid& pyr) {
  std::vector<double> cur = pyr.approx;
  for (size_t j = pyr.details.size(); j-- > 0;) {
    cur = synthesize_level(cur, pyr.details[j]);
  }
  return cur;
}

double sum_sq(const std::vector<double>& v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

}  // namespace

TEST_CASE("stft matches a naive windowed DFT") {
  Rng rng(61);
  std::vector<double> s(300);
  for (auto& v : s) v = rng.normal();
  StftConfig cfg;
  const auto spec = stft(s, cfg);
  const auto oracle = naive_stft_power(s, cfg);
  REQUIRE(spec.power.size() == oracle.size());
  for (size_t i = 0; i < oracle.size(); ++i) {
    CHECK(spec.power[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
  }
}

TEST_CASE("a pure tone lands in its bin") {
  const double fs = 200.0;
  StftConfig cfg;
  // Bin 4 of a 64-sample window at 200 Hz is 4 * 200/64 = 12.5 Hz.
  std::vector<double> s(512);
  for (size_t i = 0; i < s.size(); ++i) {
    s[i] = std::sin(2.0 * M_PI * 12.5 * static_cast<double>(i) / fs);
  }
  const auto spec = stft(s, cfg);
  for (size_t t = 0; t < spec.frames; ++t) {
    size_t arg = 0;
    for (size_t f = 1; f < spec.bins; ++f) {
      if (spec.at(t, f) > spec.at(t, arg)) arg = f;
    }
    CHECK(arg == 4);
    // Neighbours of an on-bin tone carry negligible energy.
    CHECK(spec.at(t, 6) < 1e-6 * spec.at(t, 4));
  }
}

TEST_CASE("stft frame energy satisfies Parseval") {
  Rng rng(62);
  std::vector<double> s(256);
  for (auto& v : s) v = rng.normal();
  StftConfig cfg;
  cfg.kept_bins = 33;  // full one-sided set for a 64-point window
  const auto spec = stft(s, cfg);
  std::vector<double> hann(cfg.window_len);
  for (size_t k = 0; k < cfg.window_len; ++k) {
    hann[k] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(k) /
                                    static_cast<double>(cfg.window_len)));
  }
  for (size_t t = 0; t < spec.frames; ++t) {
    double freq_energy = spec.at(t, 0) + spec.at(t, 32);
    for (size_t f = 1; f < 32; ++f) freq_energy += 2.0 * spec.at(t, f);
    double time_energy = 0.0;
    for (size_t k = 0; k < cfg.window_len; ++k) {
      const double w = hann[k] * s[t * cfg.hop + k];
      time_energy += w * w;
    }
    CHECK(freq_energy ==
          doctest::Approx(static_cast<double>(cfg.window_len) * time_energy).epsilon(1e-10));
  }
}

TEST_CASE("stft rejects short input and bad configs") {
  StftConfig cfg;
  CHECK_THROWS_AS(stft(std::vector<double>(32, 1.0), cfg), SeriesTooShort);
  cfg.window_len = 60;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = StftConfig{};
  cfg.kept_bins = 64;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
}

TEST_CASE("dwt is inverted exactly by the synthesis oracle") {
  Rng rng(63);
  DwtConfig cfg;
  for (size_t n : {256u, 512u, 1024u}) {
    std::vector<double> s(n);
    for (auto& v : s) v = rng.normal();
    const auto pyr = dwt_multilevel(s, n, cfg);
    REQUIRE(pyr.details.size() == 8);
    const auto back = reconstruct(pyr);
    REQUIRE(back.size() == n);
    for (size_t i = 0; i < n; ++i) {
      CHECK(back[i] == doctest::Approx(s[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("dwt conserves energy across the pyramid") {
  Rng rng(64);
  std::vector<double> s(512);
  for (auto& v : s) v = rng.normal();
  DwtConfig cfg;
  const auto pyr = dwt_multilevel(s, s.size(), cfg);
  double coeff_energy = sum_sq(pyr.approx);
  for (const auto& d : pyr.details) coeff_energy += sum_sq(d);
  CHECK(coeff_energy == doctest::Approx(sum_sq(s)).epsilon(1e-10));
}

TEST_CASE("dwt coefficient counts halve per level") {
  DwtConfig cfg;
  const auto pyr = dwt_multilevel(std::vector<double>(1024, 1.0), 1024, cfg);
  size_t expect = 512;
  for (const auto& d : pyr.details) {
    CHECK(d.size() == expect);
    expect /= 2;
  }
  CHECK(pyr.approx.size() == 4);
}

TEST_CASE("pad_for_dwt replicates the edge up to a power of two") {
  const auto padded = pad_for_dwt(std::vector<double>{1, 2, 3}, 3);
  REQUIRE(padded.size() == 8);
  CHECK(padded[2] == 3.0);
  for (size_t i = 3; i < 8; ++i) CHECK(padded[i] == 3.0);

  const auto longer = pad_for_dwt(std::vector<double>(200, 1.0), 8);
  CHECK(longer.size() == 256);
}

TEST_CASE("level bands at the 100 Hz effective rate") {
  const auto b1 = level_band(1, 100.0);
  CHECK(b1.first == doctest::Approx(25.0));
  CHECK(b1.second == doctest::Approx(50.0));
  const auto b2 = level_band(2, 100.0);
  CHECK(b2.first == doctest::Approx(12.5));
  CHECK(b2.second == doctest::Approx(25.0));
}

TEST_CASE("doppler speed mapping at 2.4 GHz") {
  CHECK(speed_of(25.0, 2.4) == doctest::Approx(1.5625).epsilon(0.01));
  CHECK(speed_of(50.0, 2.4) == doctest::Approx(3.125).epsilon(0.01));
  CHECK(speed_of(0.0, 2.4) == 0.0);
}

TEST_CASE("spectrogram grid is the identity at exactly 16 frames") {
  Spectrogram spec;
  spec.frames = 16;
  spec.bins = 16;
  spec.power.resize(256);
  Rng rng(65);
  for (auto& v : spec.power) v = std::abs(rng.normal(0.0, 2.0));
  const auto grid = spectrogram_grid(spec);
  for (size_t t = 0; t < 16; ++t) {
    for (size_t f = 0; f < 16; ++f) {
      CHECK(grid[t * 16 + f] ==
            doctest::Approx(std::log10(spec.at(t, f) + kLogFloor)).epsilon(1e-12));
    }
  }
}

TEST_CASE("spectrogram grid averages log power over time slots") {
  Spectrogram spec;
  spec.frames = 32;
  spec.bins = 16;
  spec.power.assign(32 * 16, 0.0);
  // Frames 0 and 1 fall in slot 0; powers 9 and 99 give logs ~1 and ~2.
  spec.power[0 * 16 + 3] = 10.0 - kLogFloor;
  spec.power[1 * 16 + 3] = 100.0 - kLogFloor;
  const auto grid = spectrogram_grid(spec);
  CHECK(grid[0 * 16 + 3] == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("wavelet energy map concentrates where the burst is") {
  // Burst in the second half of the signal: late slots dominate early ones.
  std::vector<double> s(512, 0.0);
  for (size_t i = 300; i < 480; ++i) {
    s[i] = std::sin(2.0 * M_PI * 0.3 * static_cast<double>(i));
  }
  DwtConfig cfg;
  const auto map = wavelet_energy_map(dwt_multilevel(s, s.size(), cfg));
  double early = 0.0, late = 0.0;
  for (size_t j = 0; j < 8; ++j) {
    for (size_t slot = 0; slot < 4; ++slot) early += map[j * 16 + slot];
    for (size_t slot = 10; slot < 14; ++slot) late += map[j * 16 + slot];
  }
  CHECK(late > early);
}

TEST_CASE("ablation modes blank the suppressed half with the log floor") {
  Rng rng(66);
  std::vector<double> seg(400);
  for (auto& v : seg) v = rng.normal(10.0, 1.0);
  StftConfig scfg;
  DwtConfig dcfg;
  const auto both = assemble_feature_vector(seg, scfg, dcfg, FeatureMode::Both);
  const auto so = assemble_feature_vector(seg, scfg, dcfg, FeatureMode::StftOnly);
  const auto dw = assemble_feature_vector(seg, scfg, dcfg, FeatureMode::DwtOnly);
  const double floor_log = std::log10(kLogFloor);
  for (int i = 0; i < kSpectrogramCells; ++i) {
    CHECK(so.values[i] == both.values[i]);
    CHECK(dw.values[i] == floor_log);
  }
  for (int i = kSpectrogramCells; i < kFeatureDim; ++i) {
    CHECK(dw.values[i] == both.values[i]);
    CHECK(so.values[i] == floor_log);
  }
}

TEST_CASE("feature assembly is deterministic and finite") {
  Rng rng(67);
  std::vector<double> seg(700);
  for (auto& v : seg) v = rng.normal(5.0, 2.0);
  StftConfig scfg;
  DwtConfig dcfg;
  const auto a = assemble_feature_vector(seg, scfg, dcfg);
  const auto b = assemble_feature_vector(seg, scfg, dcfg);
  CHECK(a.values == b.values);
  for (double v : a.values) CHECK(std::isfinite(v));
}

TEST_CASE("features CSV round-trips bitwise") {
  Rng rng(68);
  std::vector<FeatureVector> rows(5);
  for (size_t r = 0; r < rows.size(); ++r) {
    for (auto& v : rows[r].values) v = rng.normal();
    rows[r].label = static_cast<Label>(r % 5);
  }
  const auto csv = write_features_csv(rows);
  const auto back = parse_features_csv(csv);
  REQUIRE(back.size() == rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    CHECK(back[r].values == rows[r].values);
    CHECK(back[r].label == rows[r].label);
  }
  CHECK_THROWS_AS(parse_features_csv("bogus\n1,2\n"), MalformedHeader);
}
