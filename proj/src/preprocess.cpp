#include "widur/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace widur {

void DenoiseConfig::validate() const {
  if (hampel_window < 3 || hampel_window % 2 == 0) {
    throw InvalidConfig("hampel_window must be odd and >= 3");
  }
  if (ma_window < 1) throw InvalidConfig("ma_window must be >= 1");
}

namespace {

double median_of(std::vector<double>& buf) {
  const size_t n = buf.size();
  auto mid = buf.begin() + n / 2;
  std::nth_element(buf.begin(), mid, buf.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(buf.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> hampel_filter(std::span<const double> series, int window, double nsigma) {
  const size_t n = series.size();
  if (n < static_cast<size_t>(window)) {
    throw SeriesTooShort("hampel: length " + std::to_string(n) + " < window " +
                         std::to_string(window));
  }
  const int half = window / 2;
  std::vector<double> out(series.begin(), series.end());
  std::vector<double> buf, dev;
  for (size_t i = 0; i < n; ++i) {
    const size_t lo = i >= static_cast<size_t>(half) ? i - half : 0;
    const size_t hi = std::min(n, i + half + 1);
    buf.assign(series.begin() + lo, series.begin() + hi);
    const double med = median_of(buf);
    dev.resize(buf.size());
    for (size_t k = 0; k < buf.size(); ++k) dev[k] = std::abs(buf[k] - med);
    const double mad = median_of(dev);
    if (std::abs(series[i] - med) > nsigma * 1.4826 * mad) out[i] = med;
  }
  return out;
}

std::vector<double> moving_average(std::span<const double> series, int window) {
  const size_t n = series.size();
  if (n < static_cast<size_t>(window)) {
    throw SeriesTooShort("moving_average: length " + std::to_string(n) + " < window " +
                         std::to_string(window));
  }
  const int half_lo = (window - 1) / 2;
  const int half_hi = window / 2;
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    const size_t lo = i >= static_cast<size_t>(half_lo) ? i - half_lo : 0;
    const size_t hi = std::min(n, i + half_hi + 1);
    double acc = 0.0;
    for (size_t k = lo; k < hi; ++k) acc += series[k];
    out[i] = acc / static_cast<double>(hi - lo);
  }
  return out;
}

Pca1Result pca_first_component(const std::vector<double>& matrix, size_t n) {
  constexpr int d = kNumSubcarriers;
  if (n < 2) throw SeriesTooShort("pca: need at least 2 rows");
  if (matrix.size() != n * d) throw LengthMismatch("pca: matrix size");

  std::array<double, d> mean{};
  for (size_t r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) mean[c] += matrix[r * d + c];
  }
  for (int c = 0; c < d; ++c) mean[c] /= static_cast<double>(n);

  // Sample covariance (divide by n-1) of the centered columns.
  std::array<double, d * d> cov{};
  for (size_t r = 0; r < n; ++r) {
    std::array<double, d> row;
    for (int c = 0; c < d; ++c) row[c] = matrix[r * d + c] - mean[c];
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) cov[a * d + b] += row[a] * row[b];
    }
  }
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      cov[a * d + b] /= static_cast<double>(n - 1);
      cov[b * d + a] = cov[a * d + b];
    }
  }

  double trace = 0.0;
  for (int a = 0; a < d; ++a) trace += cov[a * d + a];

  Pca1Result res;
  res.scores.assign(n, 0.0);
  if (trace <= 0.0) {
    // Zero covariance: all-constant matrix.
    const double u = 1.0 / std::sqrt(static_cast<double>(d));
    res.loading.fill(u);
    res.explained_ratio = 0.0;
    return res;
  }

  // Power iteration.
  std::array<double, d> v;
  for (int c = 0; c < d; ++c) v[c] = 1.0 / std::sqrt(static_cast<double>(d));
  double lambda = 0.0;
  for (int iter = 0; iter < 10000; ++iter) {
    std::array<double, d> w{};
    for (int a = 0; a < d; ++a) {
      double acc = 0.0;
      for (int b = 0; b < d; ++b) acc += cov[a * d + b] * v[b];
      w[a] = acc;
    }
    double norm = 0.0;
    for (int a = 0; a < d; ++a) norm += w[a] * w[a];
    norm = std::sqrt(norm);
    if (norm == 0.0) break;  // start vector orthogonal to range; keep current v
    for (int a = 0; a < d; ++a) w[a] /= norm;
    const double new_lambda = norm;
    const double delta = std::abs(new_lambda - lambda);
    v = w;
    lambda = new_lambda;
    if (iter > 0 && delta < 1e-10 * std::max(1.0, lambda)) {
      // Also require a small residual |Cv - lambda v|: the eigenvalue
      // stabilizes quadratically faster than the eigenvector.
      double res_sq = 0.0;
      for (int a = 0; a < d; ++a) {
        double acc = 0.0;
        for (int b = 0; b < d; ++b) acc += cov[a * d + b] * v[b];
        const double r = acc - lambda * v[a];
        res_sq += r * r;
      }
      if (std::sqrt(res_sq) < 1e-11 * lambda) break;
    }
  }

  // Sign: entry of largest magnitude positive.
  int arg = 0;
  for (int c = 1; c < d; ++c) {
    if (std::abs(v[c]) > std::abs(v[arg])) arg = c;
  }
  if (v[arg] < 0) {
    for (int c = 0; c < d; ++c) v[c] = -v[c];
  }

  res.loading = v;
  res.explained_ratio = lambda / trace;
  for (size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (int c = 0; c < d; ++c) acc += (matrix[r * d + c] - mean[c]) * v[c];
    res.scores[r] = acc;
  }
  return res;
}

Pca1Result preprocess_trace(const CsiTrace& trace, const DenoiseConfig& cfg) {
  cfg.validate();
  const size_t n = trace.frames.size();
  if (n < static_cast<size_t>(std::max(cfg.hampel_window, cfg.ma_window))) {
    throw SeriesTooShort("preprocess: trace of " + std::to_string(n) + " frames");
  }
  std::vector<double> matrix(n * kNumSubcarriers);
#pragma omp parallel for schedule(static)
  for (int sc = 0; sc < kNumSubcarriers; ++sc) {
    auto series = trace.subcarrier_series(sc);
    series = hampel_filter(series, cfg.hampel_window, cfg.hampel_nsigma);
    series = moving_average(series, cfg.ma_window);
    for (size_t i = 0; i < n; ++i) matrix[i * kNumSubcarriers + sc] = series[i];
  }
  return pca_first_component(matrix, n);
}

}  // namespace widur
