#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "widur/nn.hpp"
#include "widur/rng.hpp"

using namespace widur;
using nn::CnnModel;

namespace {

// Plain layer-by-layer reference forward pass written against the layer
// definitions directly, with naive loops and no shared kernel code.
std::array<double, kNumClasses> reference_forward(const CnnModel& model,
                                                  std::span<const double> x) {
  std::vector<double> cur(x.begin(), x.end());
  for (const auto& layer : model.conv) {
    const auto& sh = layer.shape;
    const int out_len = sh.len_out();
    const int pad = sh.pad_left();
    std::vector<double> next(static_cast<size_t>(sh.out_ch) * out_len, 0.0);
    for (int oc = 0; oc < sh.out_ch; ++oc) {
      for (int t = 0; t < out_len; ++t) {
        double acc = layer.b[oc];
        for (int ic = 0; ic < sh.in_ch; ++ic) {
          for (int k = 0; k < sh.kernel; ++k) {
            const int src = t * sh.stride + k - pad;
            if (src < 0 || src >= sh.len_in) continue;
            acc += layer.w[(static_cast<size_t>(oc) * sh.in_ch + ic) * sh.kernel + k] *
                   cur[static_cast<size_t>(ic) * sh.len_in + src];
          }
        }
        next[static_cast<size_t>(oc) * out_len + t] = std::max(0.0, acc);
      }
    }
    cur = std::move(next);
  }
  for (size_t li = 0; li < model.dense.size(); ++li) {
    const auto& layer = model.dense[li];
    std::vector<double> next(layer.out_dim);
    for (int o = 0; o < layer.out_dim; ++o) {
      double acc = layer.b[o];
      for (int i = 0; i < layer.in_dim; ++i) {
        acc += layer.w[static_cast<size_t>(o) * layer.in_dim + i] * cur[i];
      }
      next[o] = li + 1 < model.dense.size() ? std::max(0.0, acc) : acc;
    }
    cur = std::move(next);
  }
  // Softmax over the logits.
  double mx = cur[0];
  for (double v : cur) mx = std::max(mx, v);
  double z = 0.0;
  std::array<double, kNumClasses> probs{};
  for (int c = 0; c < kNumClasses; ++c) z += std::exp(cur[c] - mx);
  for (int c = 0; c < kNumClasses; ++c) probs[c] = std::exp(cur[c] - mx) / z;
  return probs;
}

// Four well-separated clusters in feature space, one per non-empty label,
// plus a near-zero cluster for "empty"; linearly separable by design.
nn::Dataset separable_dataset(size_t per_class, uint64_t seed) {
  Rng rng(seed);
  nn::Dataset data;
  for (int c = 0; c < kNumClasses; ++c) {
    for (size_t i = 0; i < per_class; ++i) {
      nn::Sample s;
      s.label = static_cast<Label>(c);
      for (int f = 0; f < kFeatureDim; ++f) s.values[f] = 0.1 * rng.normal();
      for (int f = c * 20; f < c * 20 + 20; ++f) s.values[f] += 3.0;
      data.push_back(s);
    }
  }
  return data;
}

nn::Sample random_sample(uint64_t seed) {
  Rng rng(seed);
  nn::Sample s;
  for (auto& v : s.values) v = rng.normal();
  s.label = Label::Dress;
  return s;
}

}  // namespace

TEST_CASE("model init is seed-deterministic with the documented shape") {
  const auto a = nn::init_model(7);
  const auto b = nn::init_model(7);
  const auto c = nn::init_model(8);
  CHECK(nn::models_identical(a, b));
  CHECK_FALSE(nn::models_identical(a, c));

  REQUIRE(a.conv.size() == 3);
  CHECK(a.conv[0].shape.len_in == kFeatureDim);
  CHECK(a.conv[0].shape.len_out() == 192);
  CHECK(a.conv[1].shape.len_out() == 96);
  CHECK(a.conv[2].shape.len_out() == 48);
  REQUIRE(a.dense.size() == 3);
  CHECK(a.dense[0].in_dim == 64 * 48);
  CHECK(a.dense[0].out_dim == 128);
  CHECK(a.dense[1].out_dim == 64);
  CHECK(a.dense[2].out_dim == kNumClasses);
  for (const auto& layer : a.conv) {
    for (double v : layer.b) CHECK(v == 0.0);
  }
}

TEST_CASE("softmax probabilities are normalized and shift-invariant") {
  auto model = nn::init_model(9);
  const auto s = random_sample(1);
  const auto act = nn::forward(model, s.values);
  double sum = 0.0;
  for (double p : act.probs) {
    CHECK(p > 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // Shifting every output-layer bias by a constant shifts all logits equally.
  for (auto& b : model.dense.back().b) b += 100.0;
  const auto shifted = nn::forward(model, s.values);
  for (int c = 0; c < kNumClasses; ++c) {
    CHECK(shifted.probs[c] == doctest::Approx(act.probs[c]).epsilon(1e-9));
    CHECK(shifted.logits[c] == doctest::Approx(act.logits[c] + 100.0).epsilon(1e-9));
  }
}

TEST_CASE("forward matches a naive reference network") {
  const auto model = nn::init_model(10);
  for (uint64_t seed : {2u, 3u, 4u}) {
    const auto s = random_sample(seed);
    const auto act = nn::forward(model, s.values);
    const auto ref = reference_forward(model, s.values);
    for (int c = 0; c < kNumClasses; ++c) {
      CHECK(act.probs[c] == doctest::Approx(ref[c]).epsilon(1e-10));
    }
  }
}

TEST_CASE("feature layer activations are 128-wide and non-negative") {
  const auto model = nn::init_model(11);
  const auto act = nn::forward(model, random_sample(5).values);
  REQUIRE(act.feature.size() == 128);
  for (double v : act.feature) CHECK(v >= 0.0);
}

TEST_CASE("training fits a separable dataset") {
  auto model = nn::init_model(12);
  const auto data = separable_dataset(20, 13);
  nn::TrainConfig cfg;
  cfg.epochs = 20;
  const auto hist = nn::train(model, data, cfg);
  REQUIRE(hist.train_loss.size() == 20);
  CHECK(hist.train_loss.back() < hist.train_loss.front());

  std::vector<Label> preds, truth;
  for (const auto& s : data) {
    int arg = 0;
    const auto act = nn::forward(model, s.values);
    for (int c = 1; c < kNumClasses; ++c) {
      if (act.probs[c] > act.probs[arg]) arg = c;
    }
    preds.push_back(static_cast<Label>(arg));
    truth.push_back(s.label);
  }
  CHECK(nn::accuracy(preds, truth) >= 0.99);
}

TEST_CASE("training is bit-deterministic per seed") {
  const auto data = separable_dataset(8, 14);
  nn::TrainConfig cfg;
  cfg.epochs = 3;
  auto m1 = nn::init_model(15);
  auto m2 = nn::init_model(15);
  const auto h1 = nn::train(m1, data, cfg);
  const auto h2 = nn::train(m2, data, cfg);
  CHECK(nn::models_identical(m1, m2));
  CHECK(h1.train_loss == h2.train_loss);
}

TEST_CASE("fully frozen model is untouched by training") {
  const auto data = separable_dataset(8, 16);
  auto model = nn::init_model(17);
  for (auto& l : model.conv) l.frozen = true;
  for (auto& l : model.dense) l.frozen = true;
  const auto before = nn::serialize_model(model);
  nn::TrainConfig cfg;
  cfg.epochs = 2;
  nn::train(model, data, cfg);
  CHECK(nn::serialize_model(model) == before);
}

TEST_CASE("finetune model keeps the trunk and swaps the head") {
  const auto src = nn::init_model(18);
  const auto ft = nn::make_finetune_model(src, 19);
  REQUIRE(ft.conv.size() == 3);
  REQUIRE(ft.dense.size() == 2);
  CHECK(nn::conv_params_digest(ft) == nn::conv_params_digest(src));
  for (const auto& l : ft.conv) CHECK(l.frozen);
  CHECK_FALSE(ft.dense[0].frozen);
  CHECK(ft.dense[0].w == src.dense[0].w);
  CHECK(ft.dense[1].out_dim == kNumClasses);
  CHECK(ft.dense[1].in_dim == 128);
}

TEST_CASE("backprop agrees with finite differences") {
  const auto model = nn::init_model(20);
  const auto s = random_sample(21);
  CHECK(nn::grad_check(model, s, 1e-5, 120, 22) < 1e-4);

  // Also on a fine-tune model, where frozen layers are excluded.
  const auto ft = nn::make_finetune_model(model, 23);
  CHECK(nn::grad_check(ft, s, 1e-5, 120, 24) < 1e-4);
}

TEST_CASE("metric fixtures") {
  using enum Label;
  const std::vector<Label> truth = {Empty, Empty, Sit, Sit, Dress};
  const std::vector<Label> preds = {Empty, Sit, Sit, Sit, Dress};
  CHECK(nn::accuracy(preds, truth) == doctest::Approx(0.8));
  // Per class: empty F1 = 2/3, sit F1 = 4/5, dress F1 = 1; macro = 0.82222...
  CHECK(nn::macro_f1(preds, truth) == doctest::Approx((2.0 / 3.0 + 0.8 + 1.0) / 3.0));

  const auto cm = nn::confusion_matrix(preds, truth);
  CHECK(cm[0][0] == 1);
  CHECK(cm[0][1] == 1);
  CHECK(cm[1][1] == 2);
  CHECK(cm[2][2] == 1);
  int total = 0;
  for (const auto& row : cm) {
    for (int v : row) total += v;
  }
  CHECK(total == 5);
}

TEST_CASE("macro F1 ignores classes absent from the truth") {
  using enum Label;
  const std::vector<Label> truth = {Sit, Sit, Sit};
  const std::vector<Label> preds = {Sit, Dress, Sit};
  // Only "sit" counts: F1 = 2*2/(2+3) = 0.8.
  CHECK(nn::macro_f1(preds, truth) == doctest::Approx(0.8));
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  auto model = nn::init_model(25);
  const auto data = separable_dataset(4, 26);
  nn::TrainConfig cfg;
  cfg.epochs = 1;
  nn::train(model, data, cfg);

  const auto bytes = nn::serialize_model(model);
  const auto back = nn::deserialize_model(bytes);
  CHECK(nn::models_identical(model, back));
  CHECK(nn::serialize_model(back) == bytes);

  const auto path = std::filesystem::temp_directory_path() / "widur_ckpt_test.bin";
  nn::save_model(model, path.string());
  const auto loaded = nn::load_model(path.string());
  CHECK(nn::models_identical(model, loaded));
  std::filesystem::remove(path);

  CHECK_THROWS(nn::deserialize_model("not a checkpoint"));
}

TEST_CASE("param_count distinguishes trainable from frozen") {
  auto model = nn::init_model(27);
  const size_t all = model.param_count();
  CHECK(all == model.param_count(true));
  for (auto& l : model.conv) l.frozen = true;
  size_t conv_params = 0;
  for (const auto& l : model.conv) conv_params += l.w.size() + l.b.size();
  CHECK(model.param_count(true) == all - conv_params);
}
