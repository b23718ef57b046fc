#include "widur/segment.hpp"

#include <algorithm>
#include <cmath>

#include "widur/kernels.hpp"

namespace widur {

void SegmenterConfig::validate() const {
  if (window_m < 2) throw InvalidConfig("window_m must be >= 2");
  if (merge_gap_s < 0 || min_duration_s < 0 || pad_s < 0) {
    throw InvalidConfig("durations must be >= 0");
  }
}

std::vector<double> sliding_variance(std::span<const double> series, size_t m) {
  if (series.size() < m) {
    throw SeriesTooShort("sliding_variance: length " + std::to_string(series.size()) +
                         " < m " + std::to_string(m));
  }
  return kernels::sliding_variance(series, m);
}

double estimate_threshold(std::span<const double> static_pc1, const SegmenterConfig& cfg) {
  cfg.validate();
  if (static_pc1.size() < 10 * cfg.window_m) {
    throw SeriesTooShort("estimate_threshold: need >= 10*window_m samples");
  }
  const auto vars = sliding_variance(static_pc1, cfg.window_m);
  double mean = 0.0;
  for (double v : vars) mean += v;
  mean /= static_cast<double>(vars.size());
  double acc = 0.0;
  for (double v : vars) {
    const double d = v - mean;
    acc += d * d;
  }
  const double sd = std::sqrt(acc / static_cast<double>(vars.size()));
  return mean + cfg.threshold_k * sd;
}

std::vector<IndexInterval> detect_intervals(std::span<const double> pc1, double threshold,
                                            const SegmenterConfig& cfg, double fs) {
  cfg.validate();
  if (threshold < 0) throw InvalidConfig("threshold must be >= 0");
  if (fs <= 0) throw InvalidConfig("fs must be > 0");
  if (pc1.size() < cfg.window_m) return {};

  const auto vars = sliding_variance(pc1, cfg.window_m);

  // Runs of on-windows -> candidate sample intervals. Window j covers
  // samples [j, j+m); a run [a, b) of windows covers [a, b-1+m).
  std::vector<IndexInterval> candidates;
  size_t run_start = 0;
  bool in_run = false;
  for (size_t j = 0; j <= vars.size(); ++j) {
    const bool on = j < vars.size() && vars[j] > threshold;
    if (on && !in_run) {
      run_start = j;
      in_run = true;
    } else if (!on && in_run) {
      in_run = false;
      if (j - run_start >= cfg.min_on_windows) {
        candidates.emplace_back(run_start, j - 1 + cfg.window_m);
      }
    }
  }

  // Merge candidates separated by less than merge_gap_s.
  const size_t gap_frames = static_cast<size_t>(std::llround(cfg.merge_gap_s * fs));
  std::vector<IndexInterval> merged;
  for (const auto& c : candidates) {
    if (!merged.empty() && c.first <= merged.back().second + gap_frames) {
      merged.back().second = std::max(merged.back().second, c.second);
    } else {
      merged.push_back(c);
    }
  }

  // Duration floor, then pad and clamp.
  const double min_frames = cfg.min_duration_s * fs;
  const size_t pad = static_cast<size_t>(std::llround(cfg.pad_s * fs));
  std::vector<IndexInterval> out;
  for (const auto& c : merged) {
    if (static_cast<double>(c.second - c.first) < min_frames) continue;
    const size_t start = c.first >= pad ? c.first - pad : 0;
    const size_t end = std::min(pc1.size(), c.second + pad);
    if (!out.empty() && start < out.back().second) {
      out.back().second = std::max(out.back().second, end);
    } else {
      out.emplace_back(start, end);
    }
  }
  return out;
}

double interval_iou(const IndexInterval& a, const IndexInterval& b) {
  const size_t lo = std::max(a.first, b.first);
  const size_t hi = std::min(a.second, b.second);
  if (hi <= lo) return 0.0;
  const size_t inter = hi - lo;
  const size_t uni = (a.second - a.first) + (b.second - b.first) - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_iou(const std::vector<IndexInterval>& detected,
                const std::vector<IndexInterval>& truth) {
  if (truth.empty()) return detected.empty() ? 1.0 : 0.0;
  std::vector<bool> used(detected.size(), false);
  double total = 0.0;
  for (const auto& t : truth) {
    double best = 0.0;
    size_t best_idx = detected.size();
    for (size_t i = 0; i < detected.size(); ++i) {
      if (used[i]) continue;
      const double iou = interval_iou(detected[i], t);
      if (iou > best) {
        best = iou;
        best_idx = i;
      }
    }
    if (best_idx < detected.size()) used[best_idx] = true;
    total += best;
  }
  return total / static_cast<double>(truth.size());
}

}  // namespace widur
