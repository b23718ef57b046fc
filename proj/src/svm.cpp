#include "widur/svm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace widur::svm {

namespace {

double kernel_eval(KernelKind kind, double gamma, std::span<const double> a,
                   std::span<const double> b) {
  if (kind == KernelKind::Linear) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
  }
  double d2 = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

// Platt-style SMO on one binary problem. x is standardized; y in {-1,+1}.
struct SmoSolver {
  const std::vector<std::vector<double>>& x;
  const std::vector<double>& y;
  double c;
  double tol;
  KernelKind kind;
  double gamma;

  std::vector<double> alpha;
  std::vector<double> error;  // f(x_i) - y_i
  double b = 0.0;
  int passes = 0;

  SmoSolver(const std::vector<std::vector<double>>& x_, const std::vector<double>& y_,
            const SvmConfig& cfg, double gamma_)
      : x(x_), y(y_), c(cfg.c), tol(cfg.tol), kind(cfg.kernel), gamma(gamma_) {
    alpha.assign(x.size(), 0.0);
    error.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) error[i] = -y[i];  // f = 0 initially
  }

  double k(size_t i, size_t j) const { return kernel_eval(kind, gamma, x[i], x[j]); }

  bool take_step(size_t i1, size_t i2) {
    if (i1 == i2) return false;
    const double a1_old = alpha[i1], a2_old = alpha[i2];
    const double y1 = y[i1], y2 = y[i2];
    const double e1 = error[i1], e2 = error[i2];
    const double s = y1 * y2;
    double lo, hi;
    if (s < 0) {
      lo = std::max(0.0, a2_old - a1_old);
      hi = std::min(c, c + a2_old - a1_old);
    } else {
      lo = std::max(0.0, a1_old + a2_old - c);
      hi = std::min(c, a1_old + a2_old);
    }
    if (lo >= hi) return false;
    const double k11 = k(i1, i1), k12 = k(i1, i2), k22 = k(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;
    double a2;
    if (eta > 0) {
      a2 = a2_old + y2 * (e1 - e2) / eta;
      a2 = std::clamp(a2, lo, hi);
    } else {
      // Degenerate curvature: evaluate the objective at both clip ends.
      const double f1 = y1 * e1 - a1_old * k11 - s * a2_old * k12;
      const double f2 = y2 * e2 - s * a1_old * k12 - a2_old * k22;
      const double l1 = a1_old + s * (a2_old - lo);
      const double h1 = a1_old + s * (a2_old - hi);
      const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                            s * lo * l1 * k12;
      const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                            s * hi * h1 * k12;
      if (obj_lo < obj_hi - 1e-12) {
        a2 = lo;
      } else if (obj_lo > obj_hi + 1e-12) {
        a2 = hi;
      } else {
        return false;
      }
    }
    if (std::abs(a2 - a2_old) < 1e-12 * (a2 + a2_old + 1e-12)) return false;
    const double a1 = a1_old + s * (a2_old - a2);

    const double b1 = b - e1 - y1 * (a1 - a1_old) * k11 - y2 * (a2 - a2_old) * k12;
    const double b2 = b - e2 - y1 * (a1 - a1_old) * k12 - y2 * (a2 - a2_old) * k22;
    const double b_new =
        (a1 > 0 && a1 < c) ? b1 : ((a2 > 0 && a2 < c) ? b2 : 0.5 * (b1 + b2));
    const double db = b_new - b;
    b = b_new;

    for (size_t i = 0; i < x.size(); ++i) {
      error[i] += y1 * (a1 - a1_old) * k(i1, i) + y2 * (a2 - a2_old) * k(i2, i) + db;
    }
    alpha[i1] = a1;
    alpha[i2] = a2;
    return true;
  }

  bool examine(size_t i2) {
    const double y2 = y[i2], a2 = alpha[i2], e2 = error[i2];
    const double r2 = e2 * y2;
    if (!((r2 < -tol && a2 < c) || (r2 > tol && a2 > 0))) return false;

    // Second-choice heuristic: max |e1 - e2| over non-bound points.
    size_t best = x.size();
    double best_gap = -1.0;
    for (size_t i = 0; i < x.size(); ++i) {
      if (alpha[i] > 0 && alpha[i] < c) {
        const double gap = std::abs(error[i] - e2);
        if (gap > best_gap) {
          best_gap = gap;
          best = i;
        }
      }
    }
    if (best < x.size() && take_step(best, i2)) return true;
    // Fall back to scanning all points, deterministic order.
    for (size_t i = 0; i < x.size(); ++i) {
      if (alpha[i] > 0 && alpha[i] < c && take_step(i, i2)) return true;
    }
    for (size_t i = 0; i < x.size(); ++i) {
      if (take_step(i, i2)) return true;
    }
    return false;
  }

  // Returns false when max_passes was exhausted before convergence.
  bool solve(int max_passes) {
    bool examine_all = true;
    int changed = 0;
    for (passes = 0; passes < max_passes; ++passes) {
      changed = 0;
      if (examine_all) {
        for (size_t i = 0; i < x.size(); ++i) changed += examine(i) ? 1 : 0;
      } else {
        for (size_t i = 0; i < x.size(); ++i) {
          if (alpha[i] > 0 && alpha[i] < c) changed += examine(i) ? 1 : 0;
        }
      }
      if (examine_all) {
        if (changed == 0) return true;
        examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
    }
    return false;
  }
};

}  // namespace

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / std[i];
  return out;
}

Standardizer fit_standardizer(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw EmptyDataset("standardizer");
  const size_t d = rows[0].size();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.std.assign(d, 0.0);
  for (const auto& r : rows) {
    for (size_t i = 0; i < d; ++i) s.mean[i] += r[i];
  }
  for (size_t i = 0; i < d; ++i) s.mean[i] /= static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (size_t i = 0; i < d; ++i) {
      const double dlt = r[i] - s.mean[i];
      s.std[i] += dlt * dlt;
    }
  }
  for (size_t i = 0; i < d; ++i) {
    s.std[i] = std::sqrt(s.std[i] / static_cast<double>(rows.size()));
    if (s.std[i] <= 0.0) s.std[i] = 1.0;
  }
  return s;
}

SvmModel svm_train(const std::vector<std::vector<double>>& features,
                   const std::vector<Label>& labels, const SvmConfig& cfg) {
  return svm_train(features, labels, cfg, nullptr);
}

SvmModel svm_train(const std::vector<std::vector<double>>& features,
                   const std::vector<Label>& labels, const SvmConfig& cfg,
                   SvmTrainDiagnostics* diag) {
  if (features.size() < 2) throw EmptyDataset("svm_train: need >= 2 samples");
  if (features.size() != labels.size()) throw LengthMismatch("svm_train");

  std::set<int> classes;
  for (Label l : labels) classes.insert(static_cast<int>(l));
  if (classes.size() < 2) throw SingleClass("svm_train");

  SvmModel model;
  model.config = cfg;
  model.classes_present.assign(classes.begin(), classes.end());
  model.standardizer = fit_standardizer(features);

  std::vector<std::vector<double>> x_std;
  x_std.reserve(features.size());
  for (const auto& f : features) x_std.push_back(model.standardizer.apply(f));

  if (cfg.kernel == KernelKind::Rbf) {
    // gamma = 1 / (d * mean feature variance) on the standardized data.
    const size_t d = x_std[0].size();
    std::vector<double> mean(d, 0.0);
    for (const auto& r : x_std) {
      for (size_t i = 0; i < d; ++i) mean[i] += r[i];
    }
    for (auto& v : mean) v /= static_cast<double>(x_std.size());
    double var_sum = 0.0;
    for (const auto& r : x_std) {
      for (size_t i = 0; i < d; ++i) {
        const double dlt = r[i] - mean[i];
        var_sum += dlt * dlt;
      }
    }
    const double mean_var = var_sum / static_cast<double>(x_std.size() * d);
    model.gamma = mean_var > 0 ? 1.0 / (static_cast<double>(d) * mean_var)
                               : 1.0 / static_cast<double>(d);
  }

  for (size_t a = 0; a < model.classes_present.size(); ++a) {
    for (size_t bb = a + 1; bb < model.classes_present.size(); ++bb) {
      const int ca = model.classes_present[a];
      const int cb = model.classes_present[bb];
      std::vector<std::vector<double>> px;
      std::vector<double> py;
      for (size_t i = 0; i < labels.size(); ++i) {
        const int li = static_cast<int>(labels[i]);
        if (li == ca) {
          px.push_back(x_std[i]);
          py.push_back(1.0);
        } else if (li == cb) {
          px.push_back(x_std[i]);
          py.push_back(-1.0);
        }
      }
      SmoSolver solver(px, py, cfg, model.gamma);
      if (!solver.solve(cfg.max_passes)) {
        throw NoConvergence("svm pair (" + std::to_string(ca) + "," + std::to_string(cb) +
                            ") after " + std::to_string(solver.passes) + " passes");
      }
      BinaryMachine m;
      m.class_pos = ca;
      m.class_neg = cb;
      m.bias = solver.b;
      m.iterations = solver.passes;
      for (size_t i = 0; i < px.size(); ++i) {
        if (solver.alpha[i] > 0) {
          m.support_vectors.push_back(px[i]);
          m.coef.push_back(solver.alpha[i] * py[i]);
        }
      }
      if (diag) {
        diag->machine_alphas.push_back(solver.alpha);
        diag->machine_inputs.push_back(std::move(px));
        diag->machine_targets.push_back(std::move(py));
      }
      model.machines.push_back(std::move(m));
    }
  }
  return model;
}

double decision_value(const SvmModel& model, const BinaryMachine& m,
                      std::span<const double> x_std) {
  double acc = m.bias;
  for (size_t i = 0; i < m.support_vectors.size(); ++i) {
    acc += m.coef[i] *
           kernel_eval(model.config.kernel, model.gamma, m.support_vectors[i], x_std);
  }
  return acc;
}

Prediction svm_predict(const SvmModel& model, std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NonFiniteInput("svm_predict");
  }
  const auto x_std = model.standardizer.apply(x);
  std::array<int, kNumClasses> votes{};
  for (const auto& m : model.machines) {
    votes[decision_value(model, m, x_std) > 0 ? m.class_pos : m.class_neg]++;
  }
  Prediction pred;
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (votes[c] > votes[best]) best = c;  // ties keep the lowest class index
  }
  pred.label = static_cast<Label>(best);
  const double total = static_cast<double>(model.machines.size());
  for (int c = 0; c < kNumClasses; ++c) {
    pred.probs[c] = total > 0 ? votes[c] / total : 0.0;
  }
  return pred;
}

double kkt_violation(const SvmModel& model, const BinaryMachine& m,
                     const std::vector<std::vector<double>>& x_std,
                     const std::vector<double>& y, const std::vector<double>& alpha) {
  const double c = model.config.c;
  double worst = 0.0;
  for (size_t i = 0; i < x_std.size(); ++i) {
    const double margin = y[i] * decision_value(model, m, x_std[i]);
    double viol = 0.0;
    if (alpha[i] <= 0.0) {
      viol = std::max(0.0, 1.0 - margin);  // should be >= 1
    } else if (alpha[i] >= c) {
      viol = std::max(0.0, margin - 1.0);  // should be <= 1
    } else {
      viol = std::abs(margin - 1.0);  // should be == 1
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

std::string serialize_svm(const SvmModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "widur-svm";
  j["version"] = 1;
  j["c"] = model.config.c;
  j["kernel"] = model.config.kernel == KernelKind::Linear ? "linear" : "rbf";
  j["gamma"] = model.gamma;
  j["classes_present"] = model.classes_present;
  j["standardizer"] = {{"mean", model.standardizer.mean}, {"std", model.standardizer.std}};
  auto& machines = j["machines"] = nlohmann::ordered_json::array();
  for (const auto& m : model.machines) {
    machines.push_back({{"class_pos", m.class_pos},
                        {"class_neg", m.class_neg},
                        {"bias", m.bias},
                        {"iterations", m.iterations},
                        {"coef", m.coef},
                        {"support_vectors", m.support_vectors}});
  }
  return j.dump(2);
}

SvmModel deserialize_svm(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  if (j.at("format") != "widur-svm" || j.at("version") != 1) {
    throw IoError("unsupported svm model format");
  }
  SvmModel model;
  model.config.c = j.at("c").get<double>();
  model.config.kernel =
      j.at("kernel") == "linear" ? KernelKind::Linear : KernelKind::Rbf;
  model.gamma = j.at("gamma").get<double>();
  model.classes_present = j.at("classes_present").get<std::vector<int>>();
  model.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
  model.standardizer.std = j.at("standardizer").at("std").get<std::vector<double>>();
  for (const auto& jm : j.at("machines")) {
    BinaryMachine m;
    m.class_pos = jm.at("class_pos").get<int>();
    m.class_neg = jm.at("class_neg").get<int>();
    m.bias = jm.at("bias").get<double>();
    m.iterations = jm.at("iterations").get<int>();
    m.coef = jm.at("coef").get<std::vector<double>>();
    m.support_vectors = jm.at("support_vectors").get<std::vector<std::vector<double>>>();
    model.machines.push_back(std::move(m));
  }
  return model;
}

}  // namespace widur::svm
