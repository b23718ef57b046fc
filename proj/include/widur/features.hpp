#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "widur/csi_model.hpp"

namespace widur {

inline constexpr int kSpectrogramCells = 256;  // 16 time slots x 16 bins
inline constexpr int kWaveletCells = 128;      // 8 levels x 16 time slots
inline constexpr int kFeatureDim = kSpectrogramCells + kWaveletCells;
inline constexpr double kLogFloor = 1e-12;

struct StftConfig {
  size_t window_len = 64;  // power of two
  size_t hop = 32;
  size_t kept_bins = 16;

  void validate() const;
};

struct DwtConfig {
  int levels_j = 8;       // Daubechies-4 pyramid depth
  int pre_decimate = 2;   // 200 Hz -> 100 Hz before the transform

  void validate() const;
};

enum class FeatureMode { Both, StftOnly, DwtOnly };
FeatureMode parse_feature_mode(const std::string& s);
const std::string& feature_mode_name(FeatureMode m);

struct Spectrogram {
  size_t frames = 0;
  size_t bins = 0;
  std::vector<double> power;  // frames x bins, row-major

  double at(size_t t, size_t f) const { return power[t * bins + f]; }
};

struct DwtPyramid {
  std::vector<std::vector<double>> details;  // d_1 .. d_J
  std::vector<double> approx;                // a_J
  size_t padded_len = 0;
  size_t orig_len = 0;  // pre-padding length, for unpadded-extent bookkeeping
};

struct FeatureVector {
  std::array<double, kFeatureDim> values{};
  Label label = Label::Empty;
};

// Hann-windowed power spectrogram, hop-strided frames, bins 0..kept_bins-1.
Spectrogram stft(std::span<const double> series, const StftConfig& cfg);

// Periodized Mallat pyramid with Daubechies-4 analysis filters on an
// already padded power-of-two input. orig_len records the unpadded extent.
DwtPyramid dwt_multilevel(std::span<const double> padded, size_t orig_len,
                          const DwtConfig& cfg);

// Edge-replicate pad to the next power of two >= 2^levels_j.
std::vector<double> pad_for_dwt(std::span<const double> series, int levels_j);

// Detail level j covers (fs/2^(j+1), fs/2^j).
std::pair<double, double> level_band(int level, double fs_effective);

// Doppler frequency -> body speed: v = f * lambda / 2.
double speed_of(double freq_hz, double carrier_ghz);

// log10(power + floor), time axis area-resampled onto 16 slots. 256 values,
// time-major.
std::array<double, kSpectrogramCells> spectrogram_grid(const Spectrogram& spec);

// Per level: squared coefficients area-binned into 16 time slots over the
// unpadded extent (slot value is the in-slot energy sum), then log10(+floor).
// 128 values, level-major.
std::array<double, kWaveletCells> wavelet_energy_map(const DwtPyramid& pyr);

// Full 384-vector: spectrogram grid ++ wavelet energy map. Ablation modes
// fill the suppressed half with log10(floor).
FeatureVector assemble_feature_vector(std::span<const double> segment,
                                      const StftConfig& stft_cfg, const DwtConfig& dwt_cfg,
                                      FeatureMode mode = FeatureMode::Both);

// Training-set interchange format: f000..f383,label rows.
std::string write_features_csv(const std::vector<FeatureVector>& rows);
std::vector<FeatureVector> parse_features_csv(const std::string& csv_text);

}  // namespace widur
