#include "widur/synth.hpp"

#include <algorithm>
#include <cmath>

#include "widur/rng.hpp"

namespace widur::synth {

namespace {

constexpr double kMaxTraceSeconds = 7200.0;  // 2 h practical cap

// Subcarrier weighting: smooth pattern over the 30 subcarriers, shifted per
// component so different body parts light up different subcarrier groups.
double subcarrier_weight(int sc, double phase) {
  return 0.55 + 0.45 * std::sin(M_PI * (sc + 1) / 15.0 + phase);
}

}  // namespace

void DomainSpec::validate() const {
  if (noise_sigma <= 0) throw InvalidConfig("noise_sigma must be > 0");
  if (burst_gain <= 0) throw InvalidConfig("burst_gain must be > 0");
  if (freq_scale < 0.5 || freq_scale > 2.0) {
    throw InvalidConfig("freq_scale must be in [0.5, 2]");
  }
  for (double b : baseline) {
    if (b <= 0) throw InvalidConfig("baseline amplitudes must be > 0");
  }
}

void ScenarioConfig::validate() const {
  domain.validate();
  for (const auto& [label, count] : segment_counts) {
    if (count < 0) throw InvalidConfig("segment count < 0");
  }
  if (gap_lo_s < 0 || gap_hi_s < gap_lo_s) throw InvalidConfig("gap range");
  if (calibration_s < 5.0) throw InvalidConfig("calibration_s must be >= 5");
  if (sampling_rate_hz <= 0) throw InvalidConfig("sampling_rate_hz");
}

std::map<Label, ActivityProfile> default_profiles() {
  std::map<Label, ActivityProfile> p;
  // Frequencies stay below the 50 Hz effective Nyquist of the DWT path.
  p[Label::Dress] = {Label::Dress, 2.0, 8.0,
                     {{1.0, 8.0, 1.0, 0.0}, {2.0, 6.0, 0.6, 1.3}}};
  p[Label::Undress] = {Label::Undress, 2.0, 4.0,
                       {{2.0, 10.0, 1.4, 0.7}, {3.0, 8.0, 0.8, 2.1}}};
  p[Label::Other] = {Label::Other, 3.0, 6.0,
                     {{1.0, 15.0, 0.8, 0.4}, {14.0, 3.0, 0.5, 1.8}}};
  p[Label::Sit] = {Label::Sit, 2.0, 5.0, {{0.5, 2.0, 0.45, 1.0}}};
  p[Label::Empty] = {Label::Empty, 2.0, 5.0, {}};
  return p;
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto profiles = default_profiles();
  Rng rng(cfg.domain.seed);

  // Scheduled segment labels, seeded shuffle.
  std::vector<Label> schedule;
  for (const auto& [label, count] : cfg.segment_counts) {
    for (int i = 0; i < count; ++i) schedule.push_back(label);
  }
  rng.shuffle(schedule);

  struct Planned {
    Label label;
    double start_s, end_s;
    std::vector<BurstComponent> components;
  };
  std::vector<Planned> plan;
  double cursor = cfg.calibration_s;
  for (Label label : schedule) {
    const auto& prof = profiles.at(label);
    const double dur = rng.uniform(prof.duration_lo_s, prof.duration_hi_s);
    plan.push_back({label, cursor, cursor + dur, prof.components});
    cursor += dur + rng.uniform(cfg.gap_lo_s, cfg.gap_hi_s);
  }
  const double total_s = cursor;
  if (total_s > kMaxTraceSeconds) {
    throw ConfigInfeasible("scenario needs " + format_double(total_s) +
                           " s, cap is " + format_double(kMaxTraceSeconds));
  }

  const double fs = cfg.sampling_rate_hz;
  const size_t n = static_cast<size_t>(std::ceil(total_s * fs));

  Scenario scen;
  scen.trace.manifest.sampling_rate_hz = fs;
  scen.trace.manifest.carrier_freq_ghz = cfg.carrier_freq_ghz;
  scen.trace.manifest.domain_id = cfg.domain.domain_id;
  scen.trace.manifest.trace_id = cfg.domain.domain_id + "-" + std::to_string(cfg.domain.seed);
  scen.trace.frames.resize(n);

  // Static background: baseline + Gaussian noise, sample-by-sample in a
  // fixed order so the whole trace is a pure function of the seed.
  for (size_t i = 0; i < n; ++i) {
    auto& f = scen.trace.frames[i];
    f.timestamp_s = static_cast<double>(i) / fs;
    for (int sc = 0; sc < kNumSubcarriers; ++sc) {
      f.amplitudes[sc] = cfg.domain.baseline[sc] + cfg.domain.noise_sigma * rng.normal();
    }
  }

  // Doppler bursts: chirped phase following the profile's frequency
  // envelope, scaled by the domain's frequency and gain factors.
  for (const auto& seg : plan) {
    const size_t i0 = static_cast<size_t>(std::llround(seg.start_s * fs));
    const size_t i1 = std::min(n, static_cast<size_t>(std::llround(seg.end_s * fs)));
    const double dur = seg.end_s - seg.start_s;
    for (const auto& comp : seg.components) {
      const double f0 = comp.freq_start_hz * cfg.domain.freq_scale;
      const double f1 = comp.freq_end_hz * cfg.domain.freq_scale;
      const double phase0 = rng.uniform(0.0, 2.0 * M_PI);
      for (size_t i = i0; i < i1; ++i) {
        const double t = static_cast<double>(i) / fs - seg.start_s;
        const double u = t / dur;
        // Linear chirp: phi(t) = 2*pi*(f0*t + (f1-f0)*t^2/(2*dur)).
        const double phi = 2.0 * M_PI * (f0 * t + 0.5 * (f1 - f0) * t * t / dur) + phase0;
        // sin^2 taper over the first and last 10% keeps burst energy
        // inside the interval without hard edges.
        double env = 1.0;
        if (u < 0.1) {
          const double s = std::sin(5.0 * M_PI * u);
          env = s * s;
        } else if (u > 0.9) {
          const double s = std::sin(5.0 * M_PI * (1.0 - u));
          env = s * s;
        }
        const double burst = cfg.domain.burst_gain * comp.amplitude * env * std::sin(phi);
        for (int sc = 0; sc < kNumSubcarriers; ++sc) {
          scen.trace.frames[i].amplitudes[sc] += burst * subcarrier_weight(sc, comp.weight_phase);
        }
      }
    }
    LabeledInterval iv;
    iv.start_idx = i0;
    iv.end_idx = i1;
    iv.label = seg.label;
    scen.intervals.push_back(iv);
  }

  // Amplitudes are CSI magnitudes: clamp the (rare) noise excursion below zero.
  for (auto& f : scen.trace.frames) {
    for (double& a : f.amplitudes) a = std::max(0.0, a);
  }
  return scen;
}

TransferBenchmark make_transfer_benchmark(uint64_t seed) {
  TransferBenchmark bench;

  auto baseline_pattern = [](double base, double ripple, double phase) {
    std::array<double, kNumSubcarriers> b{};
    for (int sc = 0; sc < kNumSubcarriers; ++sc) {
      b[sc] = base + ripple * std::sin(2.0 * M_PI * sc / 30.0 + phase);
    }
    return b;
  };

  // Class mix follows the collection ratios of the reference datasets,
  // scaled to 1500 / 300 / 250 segments.
  bench.source_a.domain = {"A", baseline_pattern(10.0, 1.5, 0.0), 0.10, 1.0, 1.0, seed};
  bench.source_a.segment_counts = {{Label::Empty, 349},
                                   {Label::Sit, 351},
                                   {Label::Dress, 222},
                                   {Label::Undress, 223},
                                   {Label::Other, 352}};

  // Mild shift: new room baseline, slightly higher noise, smaller body
  // (frequency scale 0.85), damped gain.
  bench.target_b.domain = {"B", baseline_pattern(8.0, 2.0, 1.1), 0.13, 0.78, 0.85,
                           seed + 1000003};
  bench.target_b.segment_counts = {{Label::Empty, 70},
                                   {Label::Sit, 70},
                                   {Label::Dress, 45},
                                   {Label::Undress, 45},
                                   {Label::Other, 70}};

  // Strong shift: shorter subject proxy (frequency scale 0.8), 1.5x noise,
  // weaker reflections.
  bench.target_c.domain = {"C", baseline_pattern(7.0, 2.5, 2.3), 0.15, 0.7, 0.8,
                           seed + 2000003};
  bench.target_c.segment_counts = {{Label::Empty, 64},
                                   {Label::Sit, 57},
                                   {Label::Dress, 34},
                                   {Label::Undress, 32},
                                   {Label::Other, 64}};
  return bench;
}

}  // namespace widur::synth
