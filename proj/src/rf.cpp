#include "widur/rf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"
#include "widur/rng.hpp"

namespace widur::rf {

namespace {

struct TreeBuilder {
  const std::vector<std::vector<double>>& x;
  const std::vector<Label>& y;
  const RfConfig& cfg;
  Rng& rng;
  int mtry;
  Tree tree;

  int build(std::vector<size_t>& idx, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    std::array<int, kNumClasses> counts{};
    for (size_t i : idx) counts[static_cast<int>(y[i])]++;
    const int total = static_cast<int>(idx.size());

    int majority = 0;
    bool pure = true;
    for (int c = 0; c < kNumClasses; ++c) {
      if (counts[c] > counts[majority]) majority = c;
      if (counts[c] != 0 && counts[c] != total) pure = false;
    }

    auto make_leaf = [&]() {
      auto& node = tree.nodes[node_id];
      for (int c = 0; c < kNumClasses; ++c) {
        node.distribution[c] = static_cast<double>(counts[c]) / total;
      }
      return node_id;
    };

    if (pure || depth >= cfg.max_depth || total < cfg.min_split) return make_leaf();

    // Candidate features: mtry distinct, seeded draw.
    const size_t d = x[0].size();
    std::vector<size_t> candidates;
    std::set<size_t> seen;
    while (candidates.size() < static_cast<size_t>(mtry) && seen.size() < d) {
      const size_t f = rng.uniform_int(d);
      if (seen.insert(f).second) candidates.push_back(f);
    }

    double best_gini = 2.0;
    size_t best_feature = 0;
    double best_threshold = 0.0;
    bool found = false;
    std::vector<std::pair<double, int>> vals(idx.size());
    for (size_t f : candidates) {
      for (size_t i = 0; i < idx.size(); ++i) {
        vals[i] = {x[idx[i]][f], static_cast<int>(y[idx[i]])};
      }
      std::sort(vals.begin(), vals.end());
      std::array<int, kNumClasses> left{};
      auto right = counts;
      for (size_t i = 0; i + 1 < vals.size(); ++i) {
        left[vals[i].second]++;
        right[vals[i].second]--;
        if (vals[i].first == vals[i + 1].first) continue;
        const int nl = static_cast<int>(i) + 1;
        const int nr = total - nl;
        double gl = 1.0, gr = 1.0;
        for (int c = 0; c < kNumClasses; ++c) {
          gl -= (static_cast<double>(left[c]) / nl) * (static_cast<double>(left[c]) / nl);
          gr -= (static_cast<double>(right[c]) / nr) * (static_cast<double>(right[c]) / nr);
        }
        const double gini = (nl * gl + nr * gr) / total;
        if (gini < best_gini - 1e-15) {
          best_gini = gini;
          best_feature = f;
          best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
          found = true;
        }
      }
    }
    if (!found) return make_leaf();

    std::vector<size_t> left_idx, right_idx;
    for (size_t i : idx) {
      (x[i][best_feature] <= best_threshold ? left_idx : right_idx).push_back(i);
    }
    if (left_idx.empty() || right_idx.empty()) return make_leaf();

    tree.nodes[node_id].feature = static_cast<int>(best_feature);
    tree.nodes[node_id].threshold = best_threshold;
    const int left_id = build(left_idx, depth + 1);
    tree.nodes[node_id].left = left_id;
    const int right_id = build(right_idx, depth + 1);
    tree.nodes[node_id].right = right_id;
    return node_id;
  }
};

Tree grow_tree(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
               const RfConfig& cfg, uint64_t tree_seed, std::vector<size_t>* bag_out) {
  Rng rng(tree_seed);
  std::vector<size_t> idx(x.size());
  if (cfg.bootstrap) {
    for (auto& i : idx) i = rng.uniform_int(x.size());
  } else {
    std::iota(idx.begin(), idx.end(), 0);
  }
  if (bag_out) *bag_out = idx;
  const int mtry =
      std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x[0].size())))));
  TreeBuilder builder{x, y, cfg, rng, mtry, {}};
  builder.build(idx, 0);
  return std::move(builder.tree);
}

const TreeNode& descend(const Tree& tree, std::span<const double> x) {
  int node = 0;
  while (tree.nodes[node].feature >= 0) {
    const auto& n = tree.nodes[node];
    node = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[node];
}

void check_dataset(const std::vector<std::vector<double>>& features,
                   const std::vector<Label>& labels) {
  if (features.empty()) throw EmptyDataset("rf_train");
  if (features.size() != labels.size()) throw LengthMismatch("rf_train");
  std::set<Label> classes(labels.begin(), labels.end());
  if (classes.size() < 2) throw SingleClass("rf_train");
}

}  // namespace

void RfConfig::validate() const {
  if (num_trees < 1) throw InvalidConfig("num_trees must be >= 1");
  if (max_depth < 0) throw InvalidConfig("max_depth must be >= 0");
  if (min_split < 2) throw InvalidConfig("min_split must be >= 2");
}

RfModel rf_train(const std::vector<std::vector<double>>& features,
                 const std::vector<Label>& labels, const RfConfig& cfg, uint64_t seed) {
  cfg.validate();
  check_dataset(features, labels);
  RfModel model;
  model.config = cfg;
  model.seed = seed;
  model.trees.resize(cfg.num_trees);
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < cfg.num_trees; ++t) {
    model.trees[t] = grow_tree(features, labels, cfg, seed + static_cast<uint64_t>(t),
                               nullptr);
  }
  return model;
}

Prediction rf_predict(const RfModel& model, std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NonFiniteInput("rf_predict");
  }
  Prediction pred;
  for (const auto& tree : model.trees) {
    const auto& leaf = descend(tree, x);
    for (int c = 0; c < kNumClasses; ++c) pred.probs[c] += leaf.distribution[c];
  }
  for (int c = 0; c < kNumClasses; ++c) {
    pred.probs[c] /= static_cast<double>(model.trees.size());
  }
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (pred.probs[c] > pred.probs[best]) best = c;
  }
  pred.label = static_cast<Label>(best);
  return pred;
}

double rf_oob_accuracy(const std::vector<std::vector<double>>& features,
                       const std::vector<Label>& labels, const RfConfig& cfg,
                       uint64_t seed) {
  cfg.validate();
  check_dataset(features, labels);
  std::vector<std::array<double, kNumClasses>> votes(features.size());
  for (int t = 0; t < cfg.num_trees; ++t) {
    std::vector<size_t> bag;
    const Tree tree = grow_tree(features, labels, cfg, seed + static_cast<uint64_t>(t), &bag);
    std::vector<bool> in_bag(features.size(), false);
    for (size_t i : bag) in_bag[i] = true;
    for (size_t i = 0; i < features.size(); ++i) {
      if (in_bag[i]) continue;
      const auto& leaf = descend(tree, features[i]);
      for (int c = 0; c < kNumClasses; ++c) votes[i][c] += leaf.distribution[c];
    }
  }
  size_t voted = 0, correct = 0;
  for (size_t i = 0; i < features.size(); ++i) {
    double total = 0.0;
    for (double v : votes[i]) total += v;
    if (total <= 0.0) continue;
    ++voted;
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
      if (votes[i][c] > votes[i][best]) best = c;
    }
    if (best == static_cast<int>(labels[i])) ++correct;
  }
  return voted > 0 ? static_cast<double>(correct) / voted : -1.0;
}

std::string serialize_rf(const RfModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "widur-rf";
  j["version"] = 1;
  j["num_trees"] = model.config.num_trees;
  j["max_depth"] = model.config.max_depth;
  j["min_split"] = model.config.min_split;
  j["bootstrap"] = model.config.bootstrap;
  j["seed"] = model.seed;
  auto& trees = j["trees"] = nlohmann::ordered_json::array();
  for (const auto& tree : model.trees) {
    nlohmann::ordered_json jt = nlohmann::ordered_json::array();
    for (const auto& n : tree.nodes) {
      jt.push_back({{"f", n.feature},
                    {"t", n.threshold},
                    {"l", n.left},
                    {"r", n.right},
                    {"d", n.distribution}});
    }
    trees.push_back(std::move(jt));
  }
  return j.dump();
}

RfModel deserialize_rf(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  if (j.at("format") != "widur-rf" || j.at("version") != 1) {
    throw IoError("unsupported rf model format");
  }
  RfModel model;
  model.config.num_trees = j.at("num_trees").get<int>();
  model.config.max_depth = j.at("max_depth").get<int>();
  model.config.min_split = j.at("min_split").get<int>();
  model.config.bootstrap = j.at("bootstrap").get<bool>();
  model.seed = j.at("seed").get<uint64_t>();
  for (const auto& jt : j.at("trees")) {
    Tree tree;
    for (const auto& jn : jt) {
      TreeNode n;
      n.feature = jn.at("f").get<int>();
      n.threshold = jn.at("t").get<double>();
      n.left = jn.at("l").get<int>();
      n.right = jn.at("r").get<int>();
      n.distribution = jn.at("d").get<std::array<double, kNumClasses>>();
      tree.nodes.push_back(n);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace widur::rf
