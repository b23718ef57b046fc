#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "widur/csi_model.hpp"
#include "widur/svm.hpp"  // Prediction

namespace widur::rf {

using svm::Prediction;

struct RfConfig {
  int num_trees = 100;
  int max_depth = 16;
  int min_split = 2;
  bool bootstrap = true;
  // features per split: floor(sqrt(d)), computed at train time

  void validate() const;
};

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  std::array<double, kNumClasses> distribution{};  // leaf class frequencies
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct RfModel {
  RfConfig config;
  uint64_t seed = 0;
  std::vector<Tree> trees;
};

// CART forest on Gini impurity; per-tree seed is seed + tree index, so the
// forest is deterministic and trees could be grown in parallel.
RfModel rf_train(const std::vector<std::vector<double>>& features,
                 const std::vector<Label>& labels, const RfConfig& cfg, uint64_t seed);

// probs = mean of per-tree leaf class distributions.
Prediction rf_predict(const RfModel& model, std::span<const double> x);

// Out-of-bag accuracy (samples never drawn into a tree's bootstrap vote on
// that tree only). Returns -1 when no sample has OOB votes.
double rf_oob_accuracy(const std::vector<std::vector<double>>& features,
                       const std::vector<Label>& labels, const RfConfig& cfg,
                       uint64_t seed);

std::string serialize_rf(const RfModel& model);
RfModel deserialize_rf(const std::string& json_text);

}  // namespace widur::rf
