#pragma once

#include <span>
#include <utility>
#include <vector>

#include "widur/error.hpp"

namespace widur {

struct SegmenterConfig {
  size_t window_m = 10;       // sliding-variance window, packets
  double threshold_k = 3.0;   // threshold = mean + k * stddev of static variance
  size_t min_on_windows = 5;  // shortest run of above-threshold windows
  double merge_gap_s = 0.5;
  double min_duration_s = 1.0;
  double pad_s = 0.25;

  void validate() const;
};

using IndexInterval = std::pair<size_t, size_t>;  // [start, end)

// Population variance per length-m window, stride 1. Length n-m+1.
std::vector<double> sliding_variance(std::span<const double> series, size_t m);

// Static-environment threshold: mean + k*stddev of the sliding variance of
// a calibration (no-activity) stretch of PC1.
double estimate_threshold(std::span<const double> static_pc1, const SegmenterConfig& cfg);

// Threshold the sliding variance, keep runs of >= min_on_windows windows,
// merge candidates closer than merge_gap_s, drop intervals shorter than
// min_duration_s, then pad by pad_s each side and clamp.
std::vector<IndexInterval> detect_intervals(std::span<const double> pc1, double threshold,
                                            const SegmenterConfig& cfg, double fs);

// Intersection-over-union of two index intervals.
double interval_iou(const IndexInterval& a, const IndexInterval& b);

// Greedy one-to-one matching by best IoU; unmatched ground truth counts 0.
double mean_iou(const std::vector<IndexInterval>& detected,
                const std::vector<IndexInterval>& truth);

}  // namespace widur
