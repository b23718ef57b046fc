#include "widur/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "widur/sha256.hpp"

namespace widur::experiment {

namespace {

std::vector<Label> dataset_truth(const nn::Dataset& data) {
  std::vector<Label> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(s.label);
  return out;
}

ModelMetrics metrics_from(const std::vector<Label>& preds, const std::vector<Label>& truth) {
  ModelMetrics m;
  m.accuracy = nn::accuracy(preds, truth);
  m.macro_f1 = nn::macro_f1(preds, truth);
  m.confusion = nn::confusion_matrix(preds, truth);
  return m;
}

nlohmann::ordered_json metrics_json(const ModelMetrics& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["macro_f1"] = m.macro_f1;
  j["confusion"] = m.confusion;
  return j;
}

}  // namespace

nn::Dataset scenario_to_dataset(const synth::Scenario& scenario, FeatureMode mode) {
  DenoiseConfig denoise;
  const auto pca = preprocess_trace(scenario.trace, denoise);
  const StftConfig stft_cfg;
  const DwtConfig dwt_cfg;

  for (const auto& iv : scenario.intervals) {
    if (iv.end_idx - iv.start_idx < stft_cfg.window_len) {
      throw SeriesTooShort("interval [" + std::to_string(iv.start_idx) + "," +
                           std::to_string(iv.end_idx) + ") shorter than the STFT window");
    }
  }
  nn::Dataset data(scenario.intervals.size());
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(scenario.intervals.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto& iv = scenario.intervals[i];
    const std::span<const double> segment(pca.scores.data() + iv.start_idx,
                                          iv.end_idx - iv.start_idx);
    data[i] = assemble_feature_vector(segment, stft_cfg, dwt_cfg, mode);
    data[i].label = iv.label;
  }
  return data;
}

nn::Dataset mask_dataset(const nn::Dataset& both, FeatureMode mode) {
  if (mode == FeatureMode::Both) return both;
  nn::Dataset out = both;
  const double floor_log = std::log10(kLogFloor);
  for (auto& s : out) {
    if (mode == FeatureMode::StftOnly) {
      std::fill(s.values.begin() + kSpectrogramCells, s.values.end(), floor_log);
    } else {
      std::fill(s.values.begin(), s.values.begin() + kSpectrogramCells, floor_log);
    }
  }
  return out;
}

ModelMetrics evaluate_cnn(const nn::CnnModel& model, const nn::Dataset& test) {
  std::vector<Label> preds;
  preds.reserve(test.size());
  for (const auto& s : test) {
    const auto act = nn::forward(model, s.values);
    preds.push_back(static_cast<Label>(
        std::max_element(act.probs.begin(), act.probs.end()) - act.probs.begin()));
  }
  return metrics_from(preds, dataset_truth(test));
}

ModelMetrics evaluate_hybrid(const transfer::HybridModel& model, const nn::Dataset& test) {
  std::vector<Label> preds;
  preds.reserve(test.size());
  for (const auto& s : test) preds.push_back(transfer::hybrid_predict(model, s).label);
  return metrics_from(preds, dataset_truth(test));
}

EvalReport run_experiment(const ExperimentConfig& cfg) {
  EvalReport report;
  report.seed = cfg.seed;

  const auto bench = synth::make_transfer_benchmark(cfg.seed);
  {
    nlohmann::ordered_json cj;
    cj["seed"] = cfg.seed;
    cj["pretrain_epochs"] = cfg.pretrain_epochs;
    cj["finetune_epochs"] = cfg.finetune_epochs;
    cj["finetune_lr"] = cfg.finetune_lr;
    cj["domains"] = nlohmann::ordered_json::array();
    for (const auto* d : {&bench.source_a.domain, &bench.target_b.domain,
                          &bench.target_c.domain}) {
      cj["domains"].push_back({{"id", d->domain_id},
                               {"noise_sigma", d->noise_sigma},
                               {"burst_gain", d->burst_gain},
                               {"freq_scale", d->freq_scale},
                               {"seed", d->seed}});
    }
    report.config_digest = sha256_hex(cj.dump());
  }

  // Source domain: generate, featurize, pre-train.
  nn::Dataset source_both;
  {
    const auto scenario = synth::generate_scenario(bench.source_a);
    source_both = scenario_to_dataset(scenario, FeatureMode::Both);
  }
  nn::TrainConfig pretrain_cfg;
  pretrain_cfg.epochs = cfg.pretrain_epochs;
  pretrain_cfg.seed = cfg.seed;
  const auto pretrain = transfer::pretrain_source(source_both, pretrain_cfg);
  report.source_holdout_accuracy = pretrain.holdout_accuracy;
  report.source_holdout_macro_f1 = pretrain.holdout_macro_f1;

  // Targets: fine-tune on the train split, evaluate all four models.
  const std::array<std::pair<std::string, const synth::ScenarioConfig*>, 2> target_specs = {
      {{"B", &bench.target_b}, {"C", &bench.target_c}}};
  for (const auto& [name, scenario_cfg] : target_specs) {
    nn::Dataset target_both;
    {
      const auto scenario = synth::generate_scenario(*scenario_cfg);
      target_both = scenario_to_dataset(scenario, FeatureMode::Both);
    }
    auto [target_train, target_test] =
        transfer::split_dataset(target_both, cfg.target_train_fraction, cfg.seed);

    TargetReport tr;
    tr.source_only = evaluate_cnn(pretrain.model, target_test);

    transfer::TransferConfig tcfg;
    tcfg.finetune_epochs = cfg.finetune_epochs;
    tcfg.finetune_lr = cfg.finetune_lr;
    tcfg.seed = cfg.seed;
    const std::string conv_before = nn::conv_params_digest(pretrain.model);
    const auto trunk = transfer::transfer_finetune(pretrain.model, target_train, tcfg);
    const std::string conv_after = nn::conv_params_digest(trunk);
    if (name == "B") {
      report.conv_digest_before = conv_before;
      report.conv_digest_after = conv_after;
    }

    tr.tl_cnn = evaluate_hybrid(
        transfer::fit_head(trunk, target_train, transfer::HeadKind::None, cfg.seed),
        target_test);
    tr.tl_cnn_svm = evaluate_hybrid(
        transfer::fit_head(trunk, target_train, transfer::HeadKind::Svm, cfg.seed),
        target_test);
    tr.tl_cnn_rf = evaluate_hybrid(
        transfer::fit_head(trunk, target_train, transfer::HeadKind::Rf, cfg.seed),
        target_test);
    report.targets[name] = tr;
  }

  // Ablation over feature modes, source-domain model only.
  if (cfg.run_ablation) {
    report.ablation["both"] = report.source_holdout_accuracy;
    for (FeatureMode mode : {FeatureMode::StftOnly, FeatureMode::DwtOnly}) {
      const auto masked = mask_dataset(source_both, mode);
      const auto result = transfer::pretrain_source(masked, pretrain_cfg);
      report.ablation[feature_mode_name(mode)] = result.holdout_accuracy;
    }
  }

  // Segmentation quality on a small dedicated trace of the source domain.
  if (cfg.run_segmentation) {
    synth::ScenarioConfig seg_cfg = bench.source_a;
    seg_cfg.segment_counts = {{Label::Sit, 8},
                              {Label::Dress, 8},
                              {Label::Undress, 8},
                              {Label::Other, 8}};
    seg_cfg.domain.seed = cfg.seed + 77;
    // Gaps must exceed merge_gap_s, or adjacent ground-truth intervals are
    // indistinguishable from one activity by construction.
    seg_cfg.gap_lo_s = 2.0;
    seg_cfg.gap_hi_s = 3.0;
    const auto scenario = synth::generate_scenario(seg_cfg);
    DenoiseConfig denoise;
    const auto pca = preprocess_trace(scenario.trace, denoise);
    SegmenterConfig scfg;
    const double fs = scenario.trace.manifest.sampling_rate_hz;
    const size_t calib = static_cast<size_t>(seg_cfg.calibration_s * fs);
    const std::span<const double> calib_span(pca.scores.data(), calib);
    const double threshold = estimate_threshold(calib_span, scfg);
    const auto detected = detect_intervals(pca.scores, threshold, scfg, fs);
    std::vector<IndexInterval> truth;
    for (const auto& iv : scenario.intervals) {
      if (iv.label != Label::Empty) truth.emplace_back(iv.start_idx, iv.end_idx);
    }
    report.segmentation_mean_iou = mean_iou(detected, truth);

    // Pure static trace: calibration only, no scheduled activity.
    synth::ScenarioConfig static_cfg = bench.source_a;
    static_cfg.segment_counts.clear();
    static_cfg.calibration_s = 60.0;
    static_cfg.domain.seed = cfg.seed + 78;
    const auto static_scenario = synth::generate_scenario(static_cfg);
    const auto static_pca = preprocess_trace(static_scenario.trace, denoise);
    const std::span<const double> static_calib(static_pca.scores.data(),
                                               static_cast<size_t>(10.0 * fs));
    const double static_threshold = estimate_threshold(static_calib, scfg);
    report.static_false_detections = static_cast<int>(
        detect_intervals(static_pca.scores, static_threshold, scfg, fs).size());
  }

  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = "widur-eval-report";
  j["version"] = 1;
  j["seed"] = report.seed;
  j["config_digest"] = report.config_digest;
  j["source"] = {{"holdout_accuracy", report.source_holdout_accuracy},
                 {"holdout_macro_f1", report.source_holdout_macro_f1}};
  auto& targets = j["targets"] = nlohmann::ordered_json::object();
  for (const auto& [name, tr] : report.targets) {
    targets[name] = {{"source_only", metrics_json(tr.source_only)},
                     {"tl_cnn", metrics_json(tr.tl_cnn)},
                     {"tl_cnn_svm", metrics_json(tr.tl_cnn_svm)},
                     {"tl_cnn_rf", metrics_json(tr.tl_cnn_rf)}};
  }
  j["ablation"] = report.ablation;
  j["segmentation"] = {{"mean_iou", report.segmentation_mean_iou},
                       {"static_false_detections", report.static_false_detections}};
  j["freeze_contract"] = {{"conv_digest_before", report.conv_digest_before},
                          {"conv_digest_after", report.conv_digest_after}};
  return j.dump(2) + "\n";
}

}  // namespace widur::experiment
