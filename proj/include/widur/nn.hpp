#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "widur/features.hpp"
#include "widur/kernels.hpp"

namespace widur::nn {

struct ConvLayer {
  kernels::ConvShape shape;
  std::vector<double> w;  // [out_ch][in_ch][k]
  std::vector<double> b;  // [out_ch]
  bool frozen = false;
};

struct DenseLayer {
  int out_dim = 0;
  int in_dim = 0;
  std::vector<double> w;  // [out][in]
  std::vector<double> b;
  bool frozen = false;
};

// 1D CNN over the 384-feature vector: three strided ReLU conv layers
// (16x7, 32x5, 64x3, all stride 2, same padding) followed by dense layers.
// The canonical predictor has dense dims 3072->128->64->5; the fine-tuned
// trunk keeps dense[0] (the feature layer) and replaces the rest with a
// fresh 128->5 head. The last dense layer is always the softmax output;
// every other dense layer is ReLU.
struct CnnModel {
  std::vector<ConvLayer> conv;
  std::vector<DenseLayer> dense;
  uint64_t rng_seed = 0;

  const DenseLayer& feature_layer() const { return dense.front(); }
  size_t param_count(bool trainable_only = false) const;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 42;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;      // per-epoch mean cross-entropy
  std::vector<double> train_accuracy;  // running over the epoch's batches
  std::vector<double> val_accuracy;    // empty when no validation set given
};

struct Activations {
  std::array<double, kNumClasses> logits{};
  std::array<double, kNumClasses> probs{};
  std::vector<double> feature;  // post-ReLU dense[0] activations
};

// He-normal init, zero biases; deterministic per seed.
CnnModel init_model(uint64_t seed);

// Truncate after the feature layer and attach a fresh seeded softmax head.
CnnModel make_finetune_model(const CnnModel& pretrained, uint64_t head_seed);

Activations forward(const CnnModel& model, std::span<const double> x);

// A training sample is a labeled feature vector.
using Sample = FeatureVector;
using Dataset = std::vector<Sample>;

// Adam + cross-entropy minibatch training. Frozen layers are never
// touched. Bit-deterministic given (model, data, config).
TrainHistory train(CnnModel& model, const Dataset& data, const TrainConfig& cfg,
                   const Dataset* validation = nullptr);

// Max relative error between backprop and central finite differences over
// a seeded random subset of trainable parameters.
double grad_check(const CnnModel& model, const Sample& sample, double epsilon = 1e-5,
                  int subset = 100, uint64_t seed = 0);

double accuracy(std::span<const Label> preds, std::span<const Label> truth);
double macro_f1(std::span<const Label> preds, std::span<const Label> truth);

// 5x5 confusion matrix, rows = truth, cols = prediction.
std::array<std::array<int, kNumClasses>, kNumClasses> confusion_matrix(
    std::span<const Label> preds, std::span<const Label> truth);

// Versioned binary checkpoint; round-trip is bit-exact.
std::string serialize_model(const CnnModel& model);
CnnModel deserialize_model(const std::string& bytes);
void save_model(const CnnModel& model, const std::string& path);
CnnModel load_model(const std::string& path);

// SHA-256 over the raw bytes of all conv parameters, for the freeze contract.
std::string conv_params_digest(const CnnModel& model);

bool models_identical(const CnnModel& a, const CnnModel& b);

}  // namespace widur::nn
