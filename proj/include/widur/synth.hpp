#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "widur/csi_model.hpp"

namespace widur::synth {

// One Doppler burst component: a chirp from freq_start to freq_end with
// per-subcarrier body-part weighting.
struct BurstComponent {
  double freq_start_hz = 0.0;
  double freq_end_hz = 0.0;
  double amplitude = 0.0;
  double weight_phase = 0.0;  // shifts the subcarrier weighting pattern
};

struct ActivityProfile {
  Label label = Label::Empty;
  double duration_lo_s = 2.0;
  double duration_hi_s = 5.0;
  std::vector<BurstComponent> components;
};

struct DomainSpec {
  std::string domain_id;
  std::array<double, kNumSubcarriers> baseline{};  // static per-subcarrier level
  double noise_sigma = 0.1;
  double burst_gain = 1.0;
  double freq_scale = 1.0;  // body-size proxy, in [0.5, 2]
  uint64_t seed = 0;

  void validate() const;
};

struct ScenarioConfig {
  DomainSpec domain;
  std::map<Label, int> segment_counts;
  double gap_lo_s = 0.3;
  double gap_hi_s = 0.7;
  double calibration_s = 10.0;  // leading static stretch
  double sampling_rate_hz = 200.0;
  double carrier_freq_ghz = 2.4;

  void validate() const;
};

struct Scenario {
  CsiTrace trace;
  std::vector<LabeledInterval> intervals;  // ground truth, incl. empty windows
};

// Qualitative targets per class: dress 2-8 s sweeping into 8 Hz, undress
// 2-4 s up to 10 Hz at higher amplitude, other broadband, sit low-frequency
// micro-motion, empty pure noise.
std::map<Label, ActivityProfile> default_profiles();

Scenario generate_scenario(const ScenarioConfig& cfg);

struct TransferBenchmark {
  ScenarioConfig source_a;  // ~1500 segments
  ScenarioConfig target_b;  // ~300, mild shift
  ScenarioConfig target_c;  // ~250, strong shift
};

TransferBenchmark make_transfer_benchmark(uint64_t seed);

}  // namespace widur::synth
