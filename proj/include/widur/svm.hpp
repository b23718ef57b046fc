#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "widur/csi_model.hpp"

namespace widur::svm {

enum class KernelKind { Linear, Rbf };

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;  // zero-variance features get std 1

  std::vector<double> apply(std::span<const double> x) const;
};

Standardizer fit_standardizer(const std::vector<std::vector<double>>& rows);

// One binary machine of the one-vs-one ensemble: +1 = class_pos, -1 = class_neg.
struct BinaryMachine {
  int class_pos = 0;
  int class_neg = 0;
  std::vector<std::vector<double>> support_vectors;  // standardized
  std::vector<double> coef;                          // alpha_i * y_i
  double bias = 0.0;
  int iterations = 0;
};

struct SvmConfig {
  double c = 1.0;
  KernelKind kernel = KernelKind::Linear;
  double tol = 1e-3;
  int max_passes = 10000;
};

struct SvmModel {
  SvmConfig config;
  double gamma = 0.0;  // RBF only; 1 / (d * mean feature variance)
  Standardizer standardizer;
  std::vector<BinaryMachine> machines;
  std::vector<int> classes_present;  // sorted class indices seen in training
};

struct Prediction {
  Label label = Label::Empty;
  std::array<double, kNumClasses> probs{};  // vote fractions
};

// One-vs-one SMO training. Throws SingleClass when labels are uniform and
// NoConvergence when a pair exceeds max_passes.
SvmModel svm_train(const std::vector<std::vector<double>>& features,
                   const std::vector<Label>& labels, const SvmConfig& cfg = {});

Prediction svm_predict(const SvmModel& model, std::span<const double> x);

// Decision value of one machine on a standardized input.
double decision_value(const SvmModel& model, const BinaryMachine& m,
                      std::span<const double> x_std);

// Largest KKT violation of a trained machine over its training set
// (0 when every point satisfies the conditions within tol).
double kkt_violation(const SvmModel& model, const BinaryMachine& m,
                     const std::vector<std::vector<double>>& x_std,
                     const std::vector<double>& y, const std::vector<double>& alpha);

std::string serialize_svm(const SvmModel& model);
SvmModel deserialize_svm(const std::string& json_text);

// Training-set alphas are kept per machine for the KKT invariant test.
struct SvmTrainDiagnostics {
  std::vector<std::vector<double>> machine_alphas;
  std::vector<std::vector<std::vector<double>>> machine_inputs;  // standardized
  std::vector<std::vector<double>> machine_targets;              // +-1
};

SvmModel svm_train(const std::vector<std::vector<double>>& features,
                   const std::vector<Label>& labels, const SvmConfig& cfg,
                   SvmTrainDiagnostics* diag);

}  // namespace widur::svm
