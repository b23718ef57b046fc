#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "widur/error.hpp"

namespace widur {

inline constexpr int kNumSubcarriers = 30;
inline constexpr int kNumClasses = 5;

// Activity labels, ordered; the integer value is the class index everywhere.
enum class Label : int { Empty = 0, Sit = 1, Dress = 2, Undress = 3, Other = 4 };

const std::string& label_name(Label l);
Label parse_label(const std::string& name);  // throws UnknownLabel

struct CsiFrame {
  double timestamp_s = 0.0;
  std::array<double, kNumSubcarriers> amplitudes{};
};

struct TraceManifest {
  double sampling_rate_hz = 200.0;
  double carrier_freq_ghz = 2.4;
  std::string domain_id;
  std::string trace_id;
};

struct CsiTrace {
  TraceManifest manifest;
  std::vector<CsiFrame> frames;

  // Throws if invariants are violated (empty, non-monotonic, non-finite,
  // frame spacing off by more than 20% of 1/sampling_rate_hz).
  void validate() const;

  // Column view: amplitudes of one subcarrier over time.
  std::vector<double> subcarrier_series(int sc) const;
};

struct LabeledInterval {
  size_t start_idx = 0;  // inclusive
  size_t end_idx = 0;    // exclusive
  Label label = Label::Empty;
};

// Canonical serialization (see README): CSV trace + JSON manifest.
CsiTrace parse_trace(const std::string& csv_text, const std::string& manifest_text);
std::pair<std::string, std::string> write_trace(const CsiTrace& trace);

std::vector<LabeledInterval> parse_labels(const std::string& csv_text, const CsiTrace& trace);
std::string write_labels(const std::vector<LabeledInterval>& intervals);

// Shortest decimal representation that parses back to the same 64-bit value.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);

}  // namespace widur
