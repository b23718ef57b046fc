#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "widur/experiment.hpp"
#include "widur/kernels.hpp"
#include "widur/sha256.hpp"

namespace fs = std::filesystem;
using namespace widur;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw IoError("write failed: " + path.string());
}

synth::ScenarioConfig scenario_from_json(const nlohmann::json& j, uint64_t seed) {
  synth::ScenarioConfig cfg;
  cfg.domain.domain_id = j.value("domain_id", std::string("demo"));
  cfg.domain.noise_sigma = j.value("noise_sigma", 0.1);
  cfg.domain.burst_gain = j.value("burst_gain", 1.0);
  cfg.domain.freq_scale = j.value("freq_scale", 1.0);
  cfg.domain.seed = j.value("seed", seed);
  const double base = j.value("baseline", 10.0);
  for (int sc = 0; sc < kNumSubcarriers; ++sc) {
    cfg.domain.baseline[sc] = base + 1.5 * std::sin(2.0 * M_PI * sc / 30.0);
  }
  cfg.calibration_s = j.value("calibration_s", 10.0);
  cfg.gap_lo_s = j.value("gap_lo_s", 0.3);
  cfg.gap_hi_s = j.value("gap_hi_s", 0.7);
  if (j.contains("segment_counts")) {
    for (const auto& [key, value] : j.at("segment_counts").items()) {
      cfg.segment_counts[parse_label(key)] = value.get<int>();
    }
  } else {
    for (int c = 0; c < kNumClasses; ++c) {
      cfg.segment_counts[static_cast<Label>(c)] = 10;
    }
  }
  return cfg;
}

CsiTrace load_trace(const std::string& trace_path, const std::string& manifest_path) {
  auto trace = parse_trace(read_file(trace_path), read_file(manifest_path));
  trace.validate();
  return trace;
}

nn::Dataset dataset_from_csv(const std::string& path) {
  nn::Dataset data = parse_features_csv(read_file(path));
  if (data.empty()) throw EmptyDataset(path);
  return data;
}

int run(int argc, char** argv) {
  CLI::App app{"TL-WiDUR: WiFi CSI dressing/undressing recognition pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --seed appear after the subcommand name too

  uint64_t seed = 42;
  app.add_option("--seed", seed, "global RNG seed")->capture_default_str();

  // synth
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic CSI scenario");
  std::string synth_config, synth_out = "out";
  cmd_synth->add_option("--config", synth_config, "scenario config JSON path");
  cmd_synth->add_option("--out", synth_out, "output directory")->capture_default_str();

  // segment
  auto* cmd_segment = app.add_subcommand("segment", "detect activity intervals");
  std::string seg_trace, seg_manifest, seg_labels, seg_out = "out";
  double calib_s = 10.0;
  cmd_segment->add_option("--trace", seg_trace, "trace CSV")->required();
  cmd_segment->add_option("--manifest", seg_manifest, "manifest JSON")->required();
  cmd_segment->add_option("--labels", seg_labels, "ground-truth labels CSV (for IoU)");
  cmd_segment->add_option("--calib-s", calib_s, "leading static calibration seconds")
      ->capture_default_str();
  cmd_segment->add_option("--out", seg_out, "output directory")->capture_default_str();

  // featurize
  auto* cmd_feat = app.add_subcommand("featurize", "extract feature vectors per interval");
  std::string feat_trace, feat_manifest, feat_labels, feat_mode = "both",
              feat_out = "out";
  cmd_feat->add_option("--trace", feat_trace, "trace CSV")->required();
  cmd_feat->add_option("--manifest", feat_manifest, "manifest JSON")->required();
  cmd_feat->add_option("--labels", feat_labels, "labeled intervals CSV")->required();
  cmd_feat->add_option("--mode", feat_mode, "both|stft|dwt")->capture_default_str();
  cmd_feat->add_option("--out", feat_out, "output directory")->capture_default_str();

  // train
  auto* cmd_train = app.add_subcommand("train", "train the CNN on a feature CSV");
  std::string train_features, train_out = "out";
  int train_epochs = 30;
  cmd_train->add_option("--features", train_features, "training feature CSV")->required();
  cmd_train->add_option("--epochs", train_epochs, "training epochs")->capture_default_str();
  cmd_train->add_option("--out", train_out, "output directory")->capture_default_str();

  // transfer
  auto* cmd_transfer = app.add_subcommand("transfer", "fine-tune on a target domain");
  std::string tr_ckpt, tr_features, tr_head = "svm", tr_out = "bundle";
  int tr_epochs = 15;
  double tr_lr = 1e-4;
  cmd_transfer->add_option("--source-ckpt", tr_ckpt, "pre-trained model checkpoint")
      ->required();
  cmd_transfer->add_option("--features", tr_features, "target feature CSV")->required();
  cmd_transfer->add_option("--head", tr_head, "none|svm|rf")->capture_default_str();
  cmd_transfer->add_option("--epochs", tr_epochs, "fine-tune epochs")->capture_default_str();
  cmd_transfer->add_option("--lr", tr_lr, "fine-tune learning rate")->capture_default_str();
  cmd_transfer->add_option("--out", tr_out, "bundle output directory")
      ->capture_default_str();

  // predict
  auto* cmd_predict = app.add_subcommand("predict", "predict labels with a bundle");
  std::string pr_bundle, pr_features, pr_out;
  cmd_predict->add_option("--bundle", pr_bundle, "bundle directory")->required();
  cmd_predict->add_option("--features", pr_features, "feature CSV")->required();
  cmd_predict->add_option("--out", pr_out, "predictions CSV (default stdout)");

  // experiment
  auto* cmd_exp = app.add_subcommand("experiment", "run the full benchmark matrix");
  std::string exp_out = "out";
  int exp_pretrain_epochs = 30, exp_finetune_epochs = 15;
  cmd_exp->add_option("--out", exp_out, "output directory")->capture_default_str();
  cmd_exp->add_option("--pretrain-epochs", exp_pretrain_epochs, "pre-training epochs")
      ->capture_default_str();
  cmd_exp->add_option("--finetune-epochs", exp_finetune_epochs, "fine-tune epochs")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  kernels::configure_threads_from_env();

  if (cmd_synth->parsed()) {
    nlohmann::json j = nlohmann::json::object();
    if (!synth_config.empty()) j = nlohmann::json::parse(read_file(synth_config));
    const auto cfg = scenario_from_json(j, seed);
    const auto scenario = synth::generate_scenario(cfg);
    fs::create_directories(synth_out);
    const auto [csv, manifest] = write_trace(scenario.trace);
    write_file(fs::path(synth_out) / "trace.csv", csv);
    write_file(fs::path(synth_out) / "manifest.json", manifest);
    write_file(fs::path(synth_out) / "labels.csv", write_labels(scenario.intervals));
    std::cout << "wrote " << scenario.trace.frames.size() << " frames, "
              << scenario.intervals.size() << " intervals to " << synth_out << "\n";
    return 0;
  }

  if (cmd_segment->parsed()) {
    const auto trace = load_trace(seg_trace, seg_manifest);
    DenoiseConfig denoise;
    const auto pca = preprocess_trace(trace, denoise);
    SegmenterConfig scfg;
    const double fs = trace.manifest.sampling_rate_hz;
    const size_t calib_frames = static_cast<size_t>(calib_s * fs);
    if (calib_frames > pca.scores.size()) throw SeriesTooShort("calibration span");
    const double threshold = estimate_threshold(
        std::span<const double>(pca.scores.data(), calib_frames), scfg);
    const auto detected = detect_intervals(pca.scores, threshold, scfg, fs);
    fs::create_directories(seg_out);
    std::string csv = "start_idx,end_idx\n";
    for (const auto& [s, e] : detected) {
      csv += std::to_string(s) + ',' + std::to_string(e) + '\n';
    }
    write_file(fs::path(seg_out) / "detected.csv", csv);
    nlohmann::ordered_json j;
    j["threshold"] = threshold;
    j["detected"] = detected.size();
    if (!seg_labels.empty()) {
      const auto labels = parse_labels(read_file(seg_labels), trace);
      std::vector<IndexInterval> truth;
      for (const auto& iv : labels) {
        if (iv.label != Label::Empty) truth.emplace_back(iv.start_idx, iv.end_idx);
      }
      j["mean_iou"] = mean_iou(detected, truth);
    }
    write_file(fs::path(seg_out) / "segmentation.json", j.dump(2) + "\n");
    std::cout << j.dump() << "\n";
    return 0;
  }

  if (cmd_feat->parsed()) {
    const auto trace = load_trace(feat_trace, feat_manifest);
    const auto labels = parse_labels(read_file(feat_labels), trace);
    synth::Scenario scenario{trace, labels};
    const auto data =
        experiment::scenario_to_dataset(scenario, parse_feature_mode(feat_mode));
    fs::create_directories(feat_out);
    write_file(fs::path(feat_out) / "features.csv", write_features_csv(data));
    std::cout << "wrote " << data.size() << " feature rows to " << feat_out << "\n";
    return 0;
  }

  if (cmd_train->parsed()) {
    const auto data = dataset_from_csv(train_features);
    nn::TrainConfig cfg;
    cfg.epochs = train_epochs;
    cfg.seed = seed;
    const auto result = transfer::pretrain_source(data, cfg);
    fs::create_directories(train_out);
    nn::save_model(result.model, (fs::path(train_out) / "source_model.ckpt").string());
    nlohmann::ordered_json j;
    j["holdout_accuracy"] = result.holdout_accuracy;
    j["holdout_macro_f1"] = result.holdout_macro_f1;
    j["final_train_loss"] = result.history.train_loss.back();
    j["final_train_accuracy"] = result.history.train_accuracy.back();
    write_file(fs::path(train_out) / "metrics.json", j.dump(2) + "\n");
    std::cout << j.dump() << "\n";
    return 0;
  }

  if (cmd_transfer->parsed()) {
    const auto pretrained = nn::load_model(tr_ckpt);
    const auto target = dataset_from_csv(tr_features);
    transfer::TransferConfig tcfg;
    tcfg.finetune_epochs = tr_epochs;
    tcfg.finetune_lr = tr_lr;
    tcfg.head_kind = transfer::parse_head_kind(tr_head);
    tcfg.seed = seed;
    const std::string conv_before = nn::conv_params_digest(pretrained);
    const auto trunk = transfer::transfer_finetune(pretrained, target, tcfg);
    const auto hybrid = transfer::fit_head(trunk, target, tcfg.head_kind, seed);
    fs::create_directories(tr_out);
    nn::save_model(pretrained, (fs::path(tr_out) / "source_model.ckpt").string());
    nn::save_model(trunk, (fs::path(tr_out) / "trunk.ckpt").string());
    if (hybrid.head_kind == transfer::HeadKind::Svm) {
      write_file(fs::path(tr_out) / "head.json", svm::serialize_svm(*hybrid.svm_head));
    } else if (hybrid.head_kind == transfer::HeadKind::Rf) {
      write_file(fs::path(tr_out) / "head.json", rf::serialize_rf(*hybrid.rf_head));
    }
    const auto metrics = experiment::evaluate_hybrid(hybrid, target);
    nlohmann::ordered_json jm;
    jm["train_accuracy"] = metrics.accuracy;
    jm["train_macro_f1"] = metrics.macro_f1;
    write_file(fs::path(tr_out) / "metrics.json", jm.dump(2) + "\n");
    nlohmann::ordered_json jc;
    jc["seed"] = seed;
    jc["head"] = tr_head;
    jc["finetune_epochs"] = tr_epochs;
    jc["finetune_lr"] = tr_lr;
    jc["source_ckpt_digest"] = sha256_hex(read_file(tr_ckpt));
    jc["target_features_digest"] = sha256_hex(read_file(tr_features));
    jc["conv_digest_before"] = conv_before;
    jc["conv_digest_after"] = nn::conv_params_digest(trunk);
    write_file(fs::path(tr_out) / "config.json", jc.dump(2) + "\n");
    std::cout << jm.dump() << "\n";
    return 0;
  }

  if (cmd_predict->parsed()) {
    transfer::HybridModel hybrid;
    hybrid.trunk = nn::load_model((fs::path(pr_bundle) / "trunk.ckpt").string());
    const auto config =
        nlohmann::json::parse(read_file((fs::path(pr_bundle) / "config.json").string()));
    hybrid.head_kind = transfer::parse_head_kind(config.at("head").get<std::string>());
    if (hybrid.head_kind == transfer::HeadKind::Svm) {
      hybrid.svm_head =
          svm::deserialize_svm(read_file((fs::path(pr_bundle) / "head.json").string()));
    } else if (hybrid.head_kind == transfer::HeadKind::Rf) {
      hybrid.rf_head =
          rf::deserialize_rf(read_file((fs::path(pr_bundle) / "head.json").string()));
    }
    const auto data = dataset_from_csv(pr_features);
    std::string csv = "label,p_empty,p_sit,p_dress,p_undress,p_other\n";
    for (const auto& s : data) {
      const auto pred = transfer::hybrid_predict(hybrid, s);
      csv += label_name(pred.label);
      for (double p : pred.probs) {
        csv += ',';
        csv += format_double(p);
      }
      csv += '\n';
    }
    if (pr_out.empty()) {
      std::cout << csv;
    } else {
      write_file(pr_out, csv);
    }
    return 0;
  }

  if (cmd_exp->parsed()) {
    experiment::ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.pretrain_epochs = exp_pretrain_epochs;
    cfg.finetune_epochs = exp_finetune_epochs;
    const auto report = experiment::run_experiment(cfg);
    fs::create_directories(exp_out);
    write_file(fs::path(exp_out) / "metrics.json", experiment::report_to_json(report));

    // Plot data: time-frequency matrices for one sample per class.
    synth::ScenarioConfig plot_cfg =
        synth::make_transfer_benchmark(seed).source_a;
    plot_cfg.segment_counts.clear();
    for (int c = 0; c < kNumClasses; ++c) {
      plot_cfg.segment_counts[static_cast<Label>(c)] = 1;
    }
    plot_cfg.domain.seed = seed + 99;
    const auto scenario = synth::generate_scenario(plot_cfg);
    const auto data = experiment::scenario_to_dataset(scenario, FeatureMode::Both);
    for (const auto& s : data) {
      std::string spec_csv, wave_csv;
      for (int t = 0; t < 16; ++t) {
        for (int f = 0; f < 16; ++f) {
          spec_csv += format_double(s.values[t * 16 + f]);
          spec_csv += f + 1 < 16 ? ',' : '\n';
        }
      }
      for (int lvl = 0; lvl < 8; ++lvl) {
        for (int t = 0; t < 16; ++t) {
          wave_csv += format_double(s.values[kSpectrogramCells + lvl * 16 + t]);
          wave_csv += t + 1 < 16 ? ',' : '\n';
        }
      }
      write_file(fs::path(exp_out) / ("plot_spectrogram_" + label_name(s.label) + ".csv"),
                 spec_csv);
      write_file(fs::path(exp_out) / ("plot_wavelet_" + label_name(s.label) + ".csv"),
                 wave_csv);
    }
    std::cout << "report written to " << (fs::path(exp_out) / "metrics.json").string()
              << "\n";
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
