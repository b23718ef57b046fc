#include "widur/features.hpp"

#include <algorithm>
#include <cmath>

#include "widur/kernels.hpp"

namespace widur {

namespace {

// Daubechies-4 orthonormal low-pass analysis filter (sums to sqrt(2)).
constexpr std::array<double, 8> kDb4Lo = {
    0.23037781330885523, 0.7148465705525415,   0.6308807679295904,
    -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945, -0.010597401784997278};

bool is_pow2(size_t v) { return v != 0 && (v & (v - 1)) == 0; }

size_t next_pow2(size_t v) {
  size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

// Area-based 1D resampling: src treated as piecewise-constant over [0, n),
// integrated over 16 equal slots. `average` divides by slot width, giving
// the mean; otherwise the slot holds the integral (sum).
template <size_t Slots>
std::array<double, Slots> area_resample(std::span<const double> src, double extent,
                                        bool average) {
  std::array<double, Slots> out{};
  if (extent <= 0.0) return out;
  const double slot_w = extent / static_cast<double>(Slots);
  for (size_t s = 0; s < Slots; ++s) {
    const double lo = slot_w * static_cast<double>(s);
    const double hi = slot_w * static_cast<double>(s + 1);
    double acc = 0.0;
    const size_t i0 = static_cast<size_t>(std::floor(lo));
    const size_t i1 = std::min(src.size(), static_cast<size_t>(std::ceil(hi)));
    for (size_t i = i0; i < i1; ++i) {
      const double a = std::max(lo, static_cast<double>(i));
      const double b = std::min(hi, static_cast<double>(i + 1));
      if (b > a) acc += src[i] * (b - a);
    }
    out[s] = average ? acc / slot_w : acc;
  }
  return out;
}

}  // namespace

void StftConfig::validate() const {
  if (!is_pow2(window_len)) throw InvalidConfig("window_len must be a power of two");
  if (hop < 1 || hop > window_len) throw InvalidConfig("hop must be in [1, window_len]");
  if (kept_bins > window_len / 2 + 1) throw InvalidConfig("kept_bins > window_len/2 + 1");
}

void DwtConfig::validate() const {
  if (levels_j < 1) throw InvalidConfig("levels_j must be >= 1");
  if (pre_decimate < 1) throw InvalidConfig("pre_decimate must be >= 1");
}

FeatureMode parse_feature_mode(const std::string& s) {
  if (s == "both") return FeatureMode::Both;
  if (s == "stft") return FeatureMode::StftOnly;
  if (s == "dwt") return FeatureMode::DwtOnly;
  throw InvalidConfig("feature mode '" + s + "' not in {both, stft, dwt}");
}

const std::string& feature_mode_name(FeatureMode m) {
  static const std::array<std::string, 3> names = {"both", "stft", "dwt"};
  return names[static_cast<int>(m)];
}

Spectrogram stft(std::span<const double> series, const StftConfig& cfg) {
  cfg.validate();
  const size_t n = series.size();
  const size_t wl = cfg.window_len;
  if (n < wl) {
    throw SeriesTooShort("stft: length " + std::to_string(n) + " < window " +
                         std::to_string(wl));
  }
  // Periodic Hann window.
  std::vector<double> hann(wl);
  for (size_t k = 0; k < wl; ++k) {
    hann[k] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(k) /
                                    static_cast<double>(wl)));
  }
  Spectrogram spec;
  spec.frames = (n - wl) / cfg.hop + 1;
  spec.bins = cfg.kept_bins;
  spec.power.assign(spec.frames * spec.bins, 0.0);
  const std::ptrdiff_t frames = static_cast<std::ptrdiff_t>(spec.frames);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < frames; ++t) {
    std::vector<std::complex<double>> buf(wl);
    const size_t off = static_cast<size_t>(t) * cfg.hop;
    for (size_t k = 0; k < wl; ++k) buf[k] = hann[k] * series[off + k];
    kernels::fft_radix2(buf);
    for (size_t f = 0; f < cfg.kept_bins; ++f) {
      spec.power[static_cast<size_t>(t) * cfg.kept_bins + f] = std::norm(buf[f]);
    }
  }
  return spec;
}

std::vector<double> pad_for_dwt(std::span<const double> series, int levels_j) {
  if (series.empty()) throw SegmentTooShort("pad_for_dwt: empty input");
  const size_t min_len = static_cast<size_t>(1) << levels_j;
  const size_t padded = next_pow2(std::max(series.size(), min_len));
  std::vector<double> out(series.begin(), series.end());
  out.resize(padded, series.back());  // edge replication
  return out;
}

DwtPyramid dwt_multilevel(std::span<const double> padded, size_t orig_len,
                          const DwtConfig& cfg) {
  cfg.validate();
  const size_t n = padded.size();
  if (!is_pow2(n)) throw InvalidConfig("dwt input length must be a power of two");
  if (n < (static_cast<size_t>(1) << cfg.levels_j)) {
    throw SegmentTooShort("dwt: padded length " + std::to_string(n) + " < 2^" +
                          std::to_string(cfg.levels_j));
  }
  // High-pass by quadrature mirror: g[k] = (-1)^k h[N-1-k].
  std::array<double, 8> hi;
  for (size_t k = 0; k < 8; ++k) {
    hi[k] = (k % 2 == 0 ? 1.0 : -1.0) * kDb4Lo[7 - k];
  }

  DwtPyramid pyr;
  pyr.padded_len = n;
  pyr.orig_len = orig_len;
  std::vector<double> approx(padded.begin(), padded.end());
  for (int level = 1; level <= cfg.levels_j; ++level) {
    const size_t len = approx.size();
    const size_t half = len / 2;
    std::vector<double> a(half), d(half);
    for (size_t i = 0; i < half; ++i) {
      double la = 0.0, ld = 0.0;
      for (size_t k = 0; k < 8; ++k) {
        const double x = approx[(2 * i + k) % len];  // periodized
        la += kDb4Lo[k] * x;
        ld += hi[k] * x;
      }
      a[i] = la;
      d[i] = ld;
    }
    pyr.details.push_back(std::move(d));
    approx = std::move(a);
  }
  pyr.approx = std::move(approx);
  return pyr;
}

std::pair<double, double> level_band(int level, double fs_effective) {
  const double hi = fs_effective / std::pow(2.0, level);
  return {hi / 2.0, hi};
}

double speed_of(double freq_hz, double carrier_ghz) {
  constexpr double kSpeedOfLight = 299792458.0;
  const double lambda = kSpeedOfLight / (carrier_ghz * 1e9);
  return freq_hz * lambda / 2.0;
}

std::array<double, kSpectrogramCells> spectrogram_grid(const Spectrogram& spec) {
  if (spec.frames == 0) throw EmptySpectrogram("no frames");
  if (spec.bins != 16) throw LengthMismatch("spectrogram_grid expects 16 bins");
  // log first, then resample the time axis.
  std::vector<double> logp(spec.power.size());
  for (size_t i = 0; i < spec.power.size(); ++i) {
    logp[i] = std::log10(spec.power[i] + kLogFloor);
  }
  std::array<double, kSpectrogramCells> out{};
  std::vector<double> column(spec.frames);
  for (size_t f = 0; f < 16; ++f) {
    for (size_t t = 0; t < spec.frames; ++t) column[t] = logp[t * 16 + f];
    const auto slots =
        area_resample<16>(column, static_cast<double>(spec.frames), /*average=*/true);
    for (size_t s = 0; s < 16; ++s) out[s * 16 + f] = slots[s];  // time-major
  }
  return out;
}

std::array<double, kWaveletCells> wavelet_energy_map(const DwtPyramid& pyr) {
  if (pyr.details.size() != 8) throw InvalidConfig("wavelet_energy_map expects 8 levels");
  std::array<double, kWaveletCells> out{};
  for (size_t j = 0; j < 8; ++j) {
    const auto& d = pyr.details[j];
    std::vector<double> energy(d.size());
    for (size_t i = 0; i < d.size(); ++i) energy[i] = d[i] * d[i];
    // Unpadded extent at this level, in coefficient units.
    const double extent = static_cast<double>(pyr.orig_len) /
                          std::pow(2.0, static_cast<double>(j + 1));
    const auto slots = area_resample<16>(energy, extent, /*average=*/false);
    for (size_t s = 0; s < 16; ++s) {
      out[j * 16 + s] = std::log10(slots[s] + kLogFloor);
    }
  }
  return out;
}

FeatureVector assemble_feature_vector(std::span<const double> segment,
                                      const StftConfig& stft_cfg, const DwtConfig& dwt_cfg,
                                      FeatureMode mode) {
  FeatureVector fv;
  const double floor_log = std::log10(kLogFloor);
  fv.values.fill(floor_log);

  if (mode != FeatureMode::DwtOnly) {
    const auto grid = spectrogram_grid(stft(segment, stft_cfg));
    std::copy(grid.begin(), grid.end(), fv.values.begin());
  }
  if (mode != FeatureMode::StftOnly) {
    dwt_cfg.validate();
    std::vector<double> decimated;
    decimated.reserve(segment.size() / dwt_cfg.pre_decimate + 1);
    for (size_t i = 0; i < segment.size(); i += dwt_cfg.pre_decimate) {
      decimated.push_back(segment[i]);
    }
    if (decimated.size() < 2) throw SegmentTooShort("assemble: segment too short for DWT");
    const auto padded = pad_for_dwt(decimated, dwt_cfg.levels_j);
    const auto pyr = dwt_multilevel(padded, decimated.size(), dwt_cfg);
    const auto wmap = wavelet_energy_map(pyr);
    std::copy(wmap.begin(), wmap.end(), fv.values.begin() + kSpectrogramCells);
  }
  for (double v : fv.values) {
    if (!std::isfinite(v)) throw NonFiniteValue("feature vector");
  }
  return fv;
}

std::string write_features_csv(const std::vector<FeatureVector>& rows) {
  std::string csv;
  for (int i = 0; i < kFeatureDim; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "f%03d,", i);
    csv += buf;
  }
  csv += "label\n";
  for (const auto& row : rows) {
    for (double v : row.values) {
      csv += format_double(v);
      csv += ',';
    }
    csv += label_name(row.label);
    csv += '\n';
  }
  return csv;
}

std::vector<FeatureVector> parse_features_csv(const std::string& csv_text) {
  std::vector<FeatureVector> out;
  size_t start = 0;
  bool header = true;
  size_t line_no = 0;
  while (start < csv_text.size()) {
    size_t end = csv_text.find('\n', start);
    if (end == std::string::npos) end = csv_text.size();
    const std::string line = csv_text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.substr(0, 5) != "f000,") throw MalformedHeader("features CSV header");
      continue;
    }
    FeatureVector fv;
    size_t pos = 0;
    for (int i = 0; i < kFeatureDim; ++i) {
      const size_t comma = line.find(',', pos);
      if (comma == std::string::npos) {
        throw MalformedHeader("features row " + std::to_string(line_no));
      }
      fv.values[i] = parse_double(line.substr(pos, comma - pos),
                                  "features row " + std::to_string(line_no));
      pos = comma + 1;
    }
    fv.label = parse_label(line.substr(pos));
    out.push_back(fv);
  }
  return out;
}

}  // namespace widur
