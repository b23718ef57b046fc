#pragma once

#include <optional>
#include <string>

#include "widur/nn.hpp"
#include "widur/rf.hpp"
#include "widur/svm.hpp"

namespace widur::transfer {

enum class HeadKind { None, Svm, Rf };
HeadKind parse_head_kind(const std::string& s);
const std::string& head_kind_name(HeadKind k);

struct TransferConfig {
  int finetune_epochs = 15;
  double finetune_lr = 1e-4;
  HeadKind head_kind = HeadKind::None;
  uint64_t seed = 42;

  void validate() const;
};

// Fine-tuned trunk (frozen conv, fine-tuned feature layer + softmax head)
// plus an optional classical head on the feature activations.
struct HybridModel {
  nn::CnnModel trunk;
  HeadKind head_kind = HeadKind::None;
  std::optional<svm::SvmModel> svm_head;
  std::optional<rf::RfModel> rf_head;
};

struct PretrainResult {
  nn::CnnModel model;
  nn::TrainHistory history;
  double holdout_accuracy = 0.0;
  double holdout_macro_f1 = 0.0;
};

// Train the full CNN on the source domain with a seeded 90/10 split.
PretrainResult pretrain_source(const nn::Dataset& source, const nn::TrainConfig& cfg);

// Freeze conv1-3, drop the dense layers past the feature layer, attach a
// fresh softmax head, and train feature layer + head on target data.
nn::CnnModel transfer_finetune(const nn::CnnModel& pretrained, const nn::Dataset& target,
                               const TransferConfig& cfg);

// Feature-layer activations for every target sample feed the chosen head.
HybridModel fit_head(const nn::CnnModel& trunk, const nn::Dataset& target,
                     HeadKind head_kind, uint64_t seed);

svm::Prediction hybrid_predict(const HybridModel& model, const FeatureVector& feature);

// Seeded deterministic train/test split (fractions of the shuffled set).
std::pair<nn::Dataset, nn::Dataset> split_dataset(const nn::Dataset& data,
                                                  double train_fraction, uint64_t seed);

}  // namespace widur::transfer
