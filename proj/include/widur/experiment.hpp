#pragma once

#include <map>
#include <string>

#include "widur/preprocess.hpp"
#include "widur/segment.hpp"
#include "widur/synth.hpp"
#include "widur/transfer.hpp"

namespace widur::experiment {

struct ModelMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::array<std::array<int, kNumClasses>, kNumClasses> confusion{};
};

struct TargetReport {
  ModelMetrics source_only;  // pre-trained CNN applied as-is
  ModelMetrics tl_cnn;       // fine-tuned trunk, softmax head
  ModelMetrics tl_cnn_svm;
  ModelMetrics tl_cnn_rf;
};

struct EvalReport {
  uint64_t seed = 0;
  std::string config_digest;
  double source_holdout_accuracy = 0.0;
  double source_holdout_macro_f1 = 0.0;
  std::map<std::string, TargetReport> targets;  // "B", "C"
  std::map<std::string, double> ablation;       // mode -> source holdout accuracy
  double segmentation_mean_iou = 0.0;
  int static_false_detections = 0;
  std::string conv_digest_before;  // freeze contract evidence (target B trunk)
  std::string conv_digest_after;
};

struct ExperimentConfig {
  uint64_t seed = 42;
  int pretrain_epochs = 30;
  int finetune_epochs = 15;
  double finetune_lr = 1e-4;
  bool run_ablation = true;
  bool run_segmentation = true;
  double target_train_fraction = 0.8;
};

// PC1 of the whole trace, then per-ground-truth-interval feature vectors.
nn::Dataset scenario_to_dataset(const synth::Scenario& scenario, FeatureMode mode);

// Re-mask an extracted both-mode dataset for the ablation modes; identical
// to extracting with that mode directly.
nn::Dataset mask_dataset(const nn::Dataset& both, FeatureMode mode);

ModelMetrics evaluate_cnn(const nn::CnnModel& model, const nn::Dataset& test);
ModelMetrics evaluate_hybrid(const transfer::HybridModel& model, const nn::Dataset& test);

// The full benchmark matrix: pretrain on the source domain, transfer to the
// B-like and C-like targets with all three heads, plus the feature-mode
// ablation and a segmentation quality check.
EvalReport run_experiment(const ExperimentConfig& cfg);

std::string report_to_json(const EvalReport& report);

}  // namespace widur::experiment
