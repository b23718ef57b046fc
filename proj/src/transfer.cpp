#include "widur/transfer.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "widur/rng.hpp"

namespace widur::transfer {

HeadKind parse_head_kind(const std::string& s) {
  if (s == "none") return HeadKind::None;
  if (s == "svm") return HeadKind::Svm;
  if (s == "rf") return HeadKind::Rf;
  throw InvalidConfig("head '" + s + "' not in {none, svm, rf}");
}

const std::string& head_kind_name(HeadKind k) {
  static const std::array<std::string, 3> names = {"none", "svm", "rf"};
  return names[static_cast<int>(k)];
}

void TransferConfig::validate() const {
  if (finetune_epochs < 1) throw InvalidConfig("finetune_epochs must be >= 1");
  if (finetune_lr <= 0) throw InvalidConfig("finetune_lr must be > 0");
}

std::pair<nn::Dataset, nn::Dataset> split_dataset(const nn::Dataset& data,
                                                  double train_fraction, uint64_t seed) {
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  const size_t n_train = static_cast<size_t>(
      std::llround(train_fraction * static_cast<double>(data.size())));
  nn::Dataset train, test;
  for (size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? train : test).push_back(data[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

PretrainResult pretrain_source(const nn::Dataset& source, const nn::TrainConfig& cfg) {
  std::set<Label> classes;
  for (const auto& s : source) classes.insert(s.label);
  if (classes.size() < kNumClasses) {
    throw EmptyDataset("pretrain_source: source must cover all " +
                       std::to_string(kNumClasses) + " classes");
  }
  auto [train_set, holdout] = split_dataset(source, 0.9, cfg.seed);

  PretrainResult res;
  res.model = nn::init_model(cfg.seed);
  res.history = nn::train(res.model, train_set, cfg, &holdout);

  std::vector<Label> preds, truth;
  for (const auto& s : holdout) {
    const auto act = nn::forward(res.model, s.values);
    const auto arg = std::max_element(act.probs.begin(), act.probs.end()) -
                     act.probs.begin();
    preds.push_back(static_cast<Label>(arg));
    truth.push_back(s.label);
  }
  res.holdout_accuracy = nn::accuracy(preds, truth);
  res.holdout_macro_f1 = nn::macro_f1(preds, truth);
  return res;
}

nn::CnnModel transfer_finetune(const nn::CnnModel& pretrained, const nn::Dataset& target,
                               const TransferConfig& cfg) {
  cfg.validate();
  if (target.empty()) throw EmptyDataset("transfer_finetune");
  std::set<Label> classes;
  for (const auto& s : target) classes.insert(s.label);
  if (classes.size() < 2) throw SingleClass("transfer_finetune");

  nn::CnnModel trunk = nn::make_finetune_model(pretrained, cfg.seed);
  const std::string conv_before = nn::conv_params_digest(trunk);

  nn::TrainConfig train_cfg;
  train_cfg.epochs = cfg.finetune_epochs;
  train_cfg.learning_rate = cfg.finetune_lr;
  train_cfg.seed = cfg.seed;
  nn::train(trunk, target, train_cfg);

  if (nn::conv_params_digest(trunk) != conv_before) {
    // Internal assertion: the freeze contract may never be violated.
    throw Error("FrozenViolation: conv parameters changed during fine-tuning");
  }
  return trunk;
}

HybridModel fit_head(const nn::CnnModel& trunk, const nn::Dataset& target,
                     HeadKind head_kind, uint64_t seed) {
  HybridModel model;
  model.trunk = trunk;
  model.head_kind = head_kind;
  if (head_kind == HeadKind::None) return model;

  std::vector<std::vector<double>> activations;
  std::vector<Label> labels;
  activations.reserve(target.size());
  for (const auto& s : target) {
    activations.push_back(nn::forward(trunk, s.values).feature);
    labels.push_back(s.label);
  }
  if (head_kind == HeadKind::Svm) {
    model.svm_head = svm::svm_train(activations, labels);
  } else {
    rf::RfConfig cfg;
    model.rf_head = rf::rf_train(activations, labels, cfg, seed);
  }
  return model;
}

svm::Prediction hybrid_predict(const HybridModel& model, const FeatureVector& feature) {
  const auto act = nn::forward(model.trunk, feature.values);
  svm::Prediction pred;
  switch (model.head_kind) {
    case HeadKind::None: {
      const auto arg = std::max_element(act.probs.begin(), act.probs.end()) -
                       act.probs.begin();
      pred.label = static_cast<Label>(arg);
      std::copy(act.probs.begin(), act.probs.end(), pred.probs.begin());
      return pred;
    }
    case HeadKind::Svm:
      return svm::svm_predict(*model.svm_head, act.feature);
    case HeadKind::Rf:
      return rf::rf_predict(*model.rf_head, act.feature);
  }
  throw InvalidConfig("unreachable head kind");
}

}  // namespace widur::transfer
