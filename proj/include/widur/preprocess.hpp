#pragma once

#include <span>
#include <vector>

#include "widur/csi_model.hpp"

namespace widur {

struct DenoiseConfig {
  int hampel_window = 11;  // odd, >= 3
  double hampel_nsigma = 3.0;
  int ma_window = 5;

  void validate() const;
};

// Outlier rejection: sample i is replaced by the median of its centered
// window when it deviates by more than nsigma * 1.4826 * MAD. Edge windows
// are truncated.
std::vector<double> hampel_filter(std::span<const double> series, int window, double nsigma);

// Centered moving mean with truncated edge windows.
std::vector<double> moving_average(std::span<const double> series, int window);

struct Pca1Result {
  std::vector<double> scores;                     // n, centered projection
  std::array<double, kNumSubcarriers> loading{};  // unit norm
  double explained_ratio = 0.0;                   // lambda1 / trace, 0 when degenerate
};

// Leading principal component of an n x 30 matrix (row-major). Power
// iteration with tolerance 1e-10 on the eigenvalue, max 10000 iterations.
// Sign convention: the loading entry of largest magnitude is positive.
// All-constant input takes the degenerate path (zero scores, uniform
// loading, explained_ratio 0) rather than throwing.
Pca1Result pca_first_component(const std::vector<double>& matrix, size_t n);

// hampel + moving average per subcarrier, then PCA across subcarriers.
// Returns the PC1 time series of the whole trace.
Pca1Result preprocess_trace(const CsiTrace& trace, const DenoiseConfig& cfg);

}  // namespace widur
