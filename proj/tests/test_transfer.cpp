#include "doctest.h"

#include "widur/rng.hpp"
#include "widur/transfer.hpp"

using namespace widur;

namespace {

nn::Dataset clustered(size_t per_class, uint64_t seed, double spread = 0.2) {
  Rng rng(seed);
  nn::Dataset data;
  for (int c = 0; c < kNumClasses; ++c) {
    for (size_t i = 0; i < per_class; ++i) {
      nn::Sample s;
      s.label = static_cast<Label>(c);
      for (auto& v : s.values) v = spread * rng.normal();
      for (int f = c * 30; f < c * 30 + 30; ++f) s.values[f] += 2.5;
      data.push_back(s);
    }
  }
  return data;
}

}  // namespace

TEST_CASE("head kind names round-trip") {
  for (const char* name : {"none", "svm", "rf"}) {
    CHECK(transfer::head_kind_name(transfer::parse_head_kind(name)) == name);
  }
  CHECK_THROWS_AS(transfer::parse_head_kind("mlp"), InvalidConfig);
}

TEST_CASE("split_dataset is a seeded partition") {
  const auto data = clustered(10, 101);
  const auto [train, test] = transfer::split_dataset(data, 0.8, 7);
  CHECK(train.size() == 40);
  CHECK(test.size() == 10);
  const auto [train2, test2] = transfer::split_dataset(data, 0.8, 7);
  REQUIRE(train2.size() == train.size());
  for (size_t i = 0; i < train.size(); ++i) CHECK(train2[i].values == train[i].values);
  // A different seed reshuffles.
  const auto [train3, _] = transfer::split_dataset(data, 0.8, 8);
  bool same = true;
  for (size_t i = 0; i < train.size(); ++i) same = same && train3[i].values == train[i].values;
  CHECK_FALSE(same);
}

TEST_CASE("pretraining reaches high holdout accuracy on easy data") {
  const auto source = clustered(16, 102);
  nn::TrainConfig cfg;
  cfg.epochs = 20;
  const auto pre = transfer::pretrain_source(source, cfg);
  CHECK(pre.holdout_accuracy >= 0.9);
  CHECK(pre.holdout_macro_f1 >= 0.8);
  CHECK(pre.history.train_loss.size() == 20);
}

TEST_CASE("fine-tuning leaves the frozen conv trunk bit-identical") {
  const auto source = clustered(12, 103);
  nn::TrainConfig pre_cfg;
  pre_cfg.epochs = 8;
  const auto pre = transfer::pretrain_source(source, pre_cfg);
  const auto digest_before = nn::conv_params_digest(pre.model);

  const auto target = clustered(8, 104, 0.4);
  transfer::TransferConfig tcfg;
  tcfg.finetune_epochs = 5;
  const auto tuned = transfer::transfer_finetune(pre.model, target, tcfg);

  CHECK(nn::conv_params_digest(tuned) == digest_before);
  REQUIRE(tuned.dense.size() == 2);
  // The feature layer does move during fine-tuning.
  CHECK(tuned.dense[0].w != pre.model.dense[0].w);
  for (const auto& l : tuned.conv) CHECK(l.frozen);
}

TEST_CASE("hybrid heads classify target data; none-head matches the softmax") {
  const auto source = clustered(14, 105);
  nn::TrainConfig pre_cfg;
  pre_cfg.epochs = 15;
  const auto pre = transfer::pretrain_source(source, pre_cfg);

  const auto target = clustered(10, 106, 0.3);
  transfer::TransferConfig tcfg;
  tcfg.finetune_epochs = 10;
  const auto trunk = transfer::transfer_finetune(pre.model, target, tcfg);

  const auto none = transfer::fit_head(trunk, target, transfer::HeadKind::None, 1);
  const auto with_svm = transfer::fit_head(trunk, target, transfer::HeadKind::Svm, 1);
  const auto with_rf = transfer::fit_head(trunk, target, transfer::HeadKind::Rf, 1);
  CHECK(with_svm.svm_head.has_value());
  CHECK(with_rf.rf_head.has_value());

  size_t svm_ok = 0, rf_ok = 0;
  for (const auto& s : target) {
    const auto soft = nn::forward(trunk, s.values);
    int arg = 0;
    for (int c = 1; c < kNumClasses; ++c) {
      if (soft.probs[c] > soft.probs[arg]) arg = c;
    }
    CHECK(transfer::hybrid_predict(none, s).label == static_cast<Label>(arg));
    if (transfer::hybrid_predict(with_svm, s).label == s.label) ++svm_ok;
    if (transfer::hybrid_predict(with_rf, s).label == s.label) ++rf_ok;
  }
  CHECK(svm_ok >= target.size() * 9 / 10);
  CHECK(rf_ok >= target.size() * 9 / 10);
}

TEST_CASE("transfer config validation") {
  transfer::TransferConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.finetune_epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = transfer::TransferConfig{};
  cfg.finetune_lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
}

TEST_CASE("pretraining requires every class in the source set") {
  nn::Dataset partial = clustered(6, 107);
  std::erase_if(partial, [](const nn::Sample& s) { return s.label == Label::Other; });
  nn::TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(transfer::pretrain_source(partial, cfg), EmptyDataset);
}
