#include "widur/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "widur/rng.hpp"
#include "widur/sha256.hpp"

namespace widur::nn {

namespace {

constexpr uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[8] = {'W', 'I', 'D', 'U', 'R', 'C', 'K', '\n'};

ConvLayer make_conv(int in_ch, int len_in, int out_ch, int kernel, Rng& rng) {
  ConvLayer l;
  l.shape = {in_ch, len_in, out_ch, kernel, 2};
  l.w.resize(static_cast<size_t>(out_ch) * in_ch * kernel);
  l.b.assign(out_ch, 0.0);
  const double scale = std::sqrt(2.0 / (static_cast<double>(in_ch) * kernel));
  for (auto& v : l.w) v = scale * rng.normal();
  return l;
}

DenseLayer make_dense(int out_dim, int in_dim, Rng& rng) {
  DenseLayer l;
  l.out_dim = out_dim;
  l.in_dim = in_dim;
  l.w.resize(static_cast<size_t>(out_dim) * in_dim);
  l.b.assign(out_dim, 0.0);
  const double scale = std::sqrt(2.0 / static_cast<double>(in_dim));
  for (auto& v : l.w) v = scale * rng.normal();
  return l;
}

void softmax(const double* logits, double* probs, int n) {
  double mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (int i = 0; i < n; ++i) probs[i] /= sum;
}

// Per-layer activations kept for backprop.
struct Workspace {
  std::vector<std::vector<double>> conv_pre;   // pre-ReLU conv outputs
  std::vector<std::vector<double>> conv_post;  // post-ReLU
  std::vector<std::vector<double>> dense_pre;
  std::vector<std::vector<double>> dense_post;  // last entry: softmax probs
};

void forward_impl(const CnnModel& model, std::span<const double> x, Workspace& ws) {
  const size_t nc = model.conv.size();
  ws.conv_pre.resize(nc);
  ws.conv_post.resize(nc);
  const double* cur = x.data();
  for (size_t i = 0; i < nc; ++i) {
    const auto& l = model.conv[i];
    const size_t out_size = static_cast<size_t>(l.shape.out_ch) * l.shape.len_out();
    ws.conv_pre[i].resize(out_size);
    kernels::conv1d_forward(l.shape, cur, l.w.data(), l.b.data(), ws.conv_pre[i].data());
    ws.conv_post[i] = ws.conv_pre[i];
    for (auto& v : ws.conv_post[i]) v = std::max(0.0, v);
    cur = ws.conv_post[i].data();
  }
  const size_t nd = model.dense.size();
  ws.dense_pre.resize(nd);
  ws.dense_post.resize(nd);
  for (size_t i = 0; i < nd; ++i) {
    const auto& l = model.dense[i];
    ws.dense_pre[i].resize(l.out_dim);
    kernels::dense_forward(l.out_dim, l.in_dim, cur, l.w.data(), l.b.data(),
                           ws.dense_pre[i].data());
    ws.dense_post[i].resize(l.out_dim);
    if (i + 1 == nd) {
      softmax(ws.dense_pre[i].data(), ws.dense_post[i].data(), l.out_dim);
    } else {
      for (int o = 0; o < l.out_dim; ++o) {
        ws.dense_post[i][o] = std::max(0.0, ws.dense_pre[i][o]);
      }
    }
    cur = ws.dense_post[i].data();
  }
}

struct Grads {
  std::vector<std::vector<double>> conv_w, conv_b, dense_w, dense_b;

  explicit Grads(const CnnModel& m) {
    for (const auto& l : m.conv) {
      conv_w.emplace_back(l.w.size(), 0.0);
      conv_b.emplace_back(l.b.size(), 0.0);
    }
    for (const auto& l : m.dense) {
      dense_w.emplace_back(l.w.size(), 0.0);
      dense_b.emplace_back(l.b.size(), 0.0);
    }
  }

  void zero() {
    auto clear = [](std::vector<std::vector<double>>& vv) {
      for (auto& v : vv) std::fill(v.begin(), v.end(), 0.0);
    };
    clear(conv_w);
    clear(conv_b);
    clear(dense_w);
    clear(dense_b);
  }
};

// Backprop of cross-entropy loss for one sample; accumulates into grads.
void backward_impl(const CnnModel& model, std::span<const double> x, const Workspace& ws,
                   int true_class, Grads& grads) {
  const size_t nd = model.dense.size();
  const size_t nc = model.conv.size();

  // Softmax + CE: dlogits = probs - onehot.
  std::vector<double> grad_out(ws.dense_post[nd - 1]);
  grad_out[true_class] -= 1.0;

  for (size_t i = nd; i-- > 0;) {
    const auto& l = model.dense[i];
    const double* input =
        i > 0 ? ws.dense_post[i - 1].data() : ws.conv_post[nc - 1].data();
    std::vector<double> grad_in(l.in_dim);
    kernels::dense_backward(l.out_dim, l.in_dim, input, l.w.data(), grad_out.data(),
                            grad_in.data(), grads.dense_w[i].data(),
                            grads.dense_b[i].data());
    if (i > 0) {
      // Through the ReLU of the previous dense layer.
      for (int k = 0; k < l.in_dim; ++k) {
        if (ws.dense_pre[i - 1][k] <= 0.0) grad_in[k] = 0.0;
      }
    }
    grad_out = std::move(grad_in);
  }

  for (size_t i = nc; i-- > 0;) {
    const auto& l = model.conv[i];
    // grad_out currently refers to the post-ReLU output of conv i.
    for (size_t k = 0; k < grad_out.size(); ++k) {
      if (ws.conv_pre[i][k] <= 0.0) grad_out[k] = 0.0;
    }
    const double* input = i > 0 ? ws.conv_post[i - 1].data() : x.data();
    std::vector<double> grad_in;
    double* gx = nullptr;
    if (i > 0) {
      grad_in.resize(static_cast<size_t>(l.shape.in_ch) * l.shape.len_in);
      gx = grad_in.data();
    }
    kernels::conv1d_backward(l.shape, input, l.w.data(), grad_out.data(), gx,
                             grads.conv_w[i].data(), grads.conv_b[i].data());
    grad_out = std::move(grad_in);
  }
}

struct AdamState {
  Grads m, v;
  long t = 0;
  explicit AdamState(const CnnModel& model) : m(model), v(model) {}
};

void adam_update_tensor(std::vector<double>& param, const std::vector<double>& grad,
                        std::vector<double>& m, std::vector<double>& v,
                        const TrainConfig& cfg, double bc1, double bc2) {
  for (size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

void adam_step(CnnModel& model, const Grads& grads, AdamState& st, const TrainConfig& cfg) {
  ++st.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (size_t i = 0; i < model.conv.size(); ++i) {
    auto& l = model.conv[i];
    if (l.frozen) continue;
    adam_update_tensor(l.w, grads.conv_w[i], st.m.conv_w[i], st.v.conv_w[i], cfg, bc1, bc2);
    adam_update_tensor(l.b, grads.conv_b[i], st.m.conv_b[i], st.v.conv_b[i], cfg, bc1, bc2);
  }
  for (size_t i = 0; i < model.dense.size(); ++i) {
    auto& l = model.dense[i];
    if (l.frozen) continue;
    adam_update_tensor(l.w, grads.dense_w[i], st.m.dense_w[i], st.v.dense_w[i], cfg, bc1,
                       bc2);
    adam_update_tensor(l.b, grads.dense_b[i], st.m.dense_b[i], st.v.dense_b[i], cfg, bc1,
                       bc2);
  }
}

void check_finite_input(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NonFiniteInput("model input");
  }
}

void append_raw(std::string& out, const void* data, size_t len) {
  out.append(static_cast<const char*>(data), len);
}

template <typename T>
void append_pod(std::string& out, const T& v) {
  append_raw(out, &v, sizeof(T));
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  void read_raw(void* dst, size_t len) {
    if (pos + len > buf.size()) throw IoError("checkpoint truncated");
    std::memcpy(dst, buf.data() + pos, len);
    pos += len;
  }
  template <typename T>
  T read_pod() {
    T v;
    read_raw(&v, sizeof(T));
    return v;
  }
};

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidConfig("epochs must be >= 1");
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  if (learning_rate <= 0) throw InvalidConfig("learning_rate must be > 0");
}

size_t CnnModel::param_count(bool trainable_only) const {
  size_t n = 0;
  for (const auto& l : conv) {
    if (!trainable_only || !l.frozen) n += l.w.size() + l.b.size();
  }
  for (const auto& l : dense) {
    if (!trainable_only || !l.frozen) n += l.w.size() + l.b.size();
  }
  return n;
}

CnnModel init_model(uint64_t seed) {
  Rng rng(seed);
  CnnModel m;
  m.rng_seed = seed;
  m.conv.push_back(make_conv(1, kFeatureDim, 16, 7, rng));
  m.conv.push_back(make_conv(16, m.conv[0].shape.len_out(), 32, 5, rng));
  m.conv.push_back(make_conv(32, m.conv[1].shape.len_out(), 64, 3, rng));
  const int flat = 64 * m.conv[2].shape.len_out();  // 64 * 48 = 3072
  m.dense.push_back(make_dense(128, flat, rng));
  m.dense.push_back(make_dense(64, 128, rng));
  m.dense.push_back(make_dense(kNumClasses, 64, rng));
  return m;
}

CnnModel make_finetune_model(const CnnModel& pretrained, uint64_t head_seed) {
  Rng rng(head_seed);
  CnnModel m;
  m.rng_seed = head_seed;
  m.conv = pretrained.conv;
  for (auto& l : m.conv) l.frozen = true;
  m.dense.push_back(pretrained.dense.front());
  m.dense.front().frozen = false;
  m.dense.push_back(make_dense(kNumClasses, m.dense.front().out_dim, rng));
  return m;
}

Activations forward(const CnnModel& model, std::span<const double> x) {
  check_finite_input(x);
  Workspace ws;
  forward_impl(model, x, ws);
  Activations act;
  const auto& logits = ws.dense_pre.back();
  const auto& probs = ws.dense_post.back();
  std::copy(logits.begin(), logits.end(), act.logits.begin());
  std::copy(probs.begin(), probs.end(), act.probs.begin());
  act.feature = ws.dense_post.front();
  return act;
}

TrainHistory train(CnnModel& model, const Dataset& data, const TrainConfig& cfg,
                   const Dataset* validation) {
  cfg.validate();
  if (data.empty()) throw EmptyDataset("train");

  TrainHistory hist;
  AdamState adam(model);
  Grads grads(model);
  Rng rng(cfg.seed);

  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    size_t correct = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      grads.zero();
      for (size_t s = start; s < end; ++s) {
        const Sample& sample = data[order[s]];
        const int cls = static_cast<int>(sample.label);
        Workspace ws;
        forward_impl(model, sample.values, ws);
        const auto& probs = ws.dense_post.back();
        loss_sum += -std::log(std::max(probs[cls], 1e-300));
        const auto argmax =
            std::max_element(probs.begin(), probs.end()) - probs.begin();
        if (argmax == cls) ++correct;
        backward_impl(model, sample.values, ws, cls, grads);
      }
      // Mean gradient over the batch, fixed scaling order.
      for (auto* vv : {&grads.conv_w, &grads.conv_b, &grads.dense_w, &grads.dense_b}) {
        for (auto& v : *vv) {
          for (auto& g : v) g *= inv_batch;
        }
      }
      adam_step(model, grads, adam, cfg);
    }
    hist.train_loss.push_back(loss_sum / static_cast<double>(data.size()));
    hist.train_accuracy.push_back(static_cast<double>(correct) /
                                  static_cast<double>(data.size()));
    if (!std::isfinite(hist.train_loss.back())) {
      throw NonFiniteValue("training loss at epoch " + std::to_string(epoch));
    }
    if (validation && !validation->empty()) {
      size_t val_correct = 0;
      for (const auto& s : *validation) {
        const auto act = forward(model, s.values);
        const auto argmax =
            std::max_element(act.probs.begin(), act.probs.end()) - act.probs.begin();
        if (argmax == static_cast<int>(s.label)) ++val_correct;
      }
      hist.val_accuracy.push_back(static_cast<double>(val_correct) /
                                  static_cast<double>(validation->size()));
    }
  }
  return hist;
}

double grad_check(const CnnModel& model, const Sample& sample, double epsilon, int subset,
                  uint64_t seed) {
  CnnModel work = model;
  const int cls = static_cast<int>(sample.label);

  Grads grads(work);
  {
    Workspace ws;
    forward_impl(work, sample.values, ws);
    backward_impl(work, sample.values, ws, cls, grads);
  }

  // Gather trainable parameter slots.
  struct Slot {
    std::vector<double>* param;
    const std::vector<double>* grad;
    size_t idx;
  };
  std::vector<Slot> slots;
  for (size_t i = 0; i < work.conv.size(); ++i) {
    if (work.conv[i].frozen) continue;
    for (size_t k = 0; k < work.conv[i].w.size(); ++k) {
      slots.push_back({&work.conv[i].w, &grads.conv_w[i], k});
    }
    for (size_t k = 0; k < work.conv[i].b.size(); ++k) {
      slots.push_back({&work.conv[i].b, &grads.conv_b[i], k});
    }
  }
  for (size_t i = 0; i < work.dense.size(); ++i) {
    if (work.dense[i].frozen) continue;
    for (size_t k = 0; k < work.dense[i].w.size(); ++k) {
      slots.push_back({&work.dense[i].w, &grads.dense_w[i], k});
    }
    for (size_t k = 0; k < work.dense[i].b.size(); ++k) {
      slots.push_back({&work.dense[i].b, &grads.dense_b[i], k});
    }
  }

  auto loss_at = [&]() {
    Workspace ws;
    forward_impl(work, sample.values, ws);
    return -std::log(std::max(ws.dense_post.back()[cls], 1e-300));
  };

  Rng rng(seed);
  double max_err = 0.0;
  const int n = std::min<int>(subset, static_cast<int>(slots.size()));
  for (int i = 0; i < n; ++i) {
    const Slot& slot = slots[rng.uniform_int(slots.size())];
    double& p = (*slot.param)[slot.idx];
    const double orig = p;
    p = orig + epsilon;
    const double lp = loss_at();
    p = orig - epsilon;
    const double lm = loss_at();
    p = orig;
    const double g_fd = (lp - lm) / (2.0 * epsilon);
    const double g_bp = (*slot.grad)[slot.idx];
    const double denom = std::max(std::abs(g_bp) + std::abs(g_fd), 1e-8);
    max_err = std::max(max_err, std::abs(g_bp - g_fd) / denom);
  }
  return max_err;
}

double accuracy(std::span<const Label> preds, std::span<const Label> truth) {
  if (preds.size() != truth.size()) throw LengthMismatch("accuracy");
  if (truth.empty()) throw EmptyInput("accuracy");
  size_t hits = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (preds[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::array<std::array<int, kNumClasses>, kNumClasses> confusion_matrix(
    std::span<const Label> preds, std::span<const Label> truth) {
  if (preds.size() != truth.size()) throw LengthMismatch("confusion_matrix");
  std::array<std::array<int, kNumClasses>, kNumClasses> cm{};
  for (size_t i = 0; i < truth.size(); ++i) {
    cm[static_cast<int>(truth[i])][static_cast<int>(preds[i])]++;
  }
  return cm;
}

double macro_f1(std::span<const Label> preds, std::span<const Label> truth) {
  if (preds.size() != truth.size()) throw LengthMismatch("macro_f1");
  if (truth.empty()) throw EmptyInput("macro_f1");
  const auto cm = confusion_matrix(preds, truth);
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    int truth_count = 0, pred_count = 0;
    for (int k = 0; k < kNumClasses; ++k) {
      truth_count += cm[c][k];
      pred_count += cm[k][c];
    }
    if (truth_count == 0) continue;  // C counts classes present in truth
    ++present;
    const int tp = cm[c][c];
    // F1 = 2 tp / (pred + truth); zero denominators give F1 = 0.
    const int denom = pred_count + truth_count;
    sum += denom > 0 ? 2.0 * tp / static_cast<double>(denom) : 0.0;
  }
  return present > 0 ? sum / present : 0.0;
}

std::string serialize_model(const CnnModel& model) {
  std::string out;
  append_raw(out, kCheckpointMagic, sizeof(kCheckpointMagic));
  append_pod(out, kCheckpointVersion);
  append_pod(out, model.rng_seed);
  append_pod(out, static_cast<uint32_t>(model.conv.size()));
  append_pod(out, static_cast<uint32_t>(model.dense.size()));
  for (const auto& l : model.conv) {
    append_pod(out, l.shape);
    append_pod(out, static_cast<uint8_t>(l.frozen));
    append_raw(out, l.w.data(), l.w.size() * sizeof(double));
    append_raw(out, l.b.data(), l.b.size() * sizeof(double));
  }
  for (const auto& l : model.dense) {
    append_pod(out, l.out_dim);
    append_pod(out, l.in_dim);
    append_pod(out, static_cast<uint8_t>(l.frozen));
    append_raw(out, l.w.data(), l.w.size() * sizeof(double));
    append_raw(out, l.b.data(), l.b.size() * sizeof(double));
  }
  return out;
}

CnnModel deserialize_model(const std::string& bytes) {
  Reader r{bytes};
  char magic[8];
  r.read_raw(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw IoError("not a model checkpoint");
  }
  const auto version = r.read_pod<uint32_t>();
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  CnnModel m;
  m.rng_seed = r.read_pod<uint64_t>();
  const auto nc = r.read_pod<uint32_t>();
  const auto nd = r.read_pod<uint32_t>();
  for (uint32_t i = 0; i < nc; ++i) {
    ConvLayer l;
    l.shape = r.read_pod<kernels::ConvShape>();
    l.frozen = r.read_pod<uint8_t>() != 0;
    l.w.resize(static_cast<size_t>(l.shape.out_ch) * l.shape.in_ch * l.shape.kernel);
    l.b.resize(l.shape.out_ch);
    r.read_raw(l.w.data(), l.w.size() * sizeof(double));
    r.read_raw(l.b.data(), l.b.size() * sizeof(double));
    m.conv.push_back(std::move(l));
  }
  for (uint32_t i = 0; i < nd; ++i) {
    DenseLayer l;
    l.out_dim = r.read_pod<int>();
    l.in_dim = r.read_pod<int>();
    l.frozen = r.read_pod<uint8_t>() != 0;
    l.w.resize(static_cast<size_t>(l.out_dim) * l.in_dim);
    l.b.resize(l.out_dim);
    r.read_raw(l.w.data(), l.w.size() * sizeof(double));
    r.read_raw(l.b.data(), l.b.size() * sizeof(double));
    m.dense.push_back(std::move(l));
  }
  if (r.pos != bytes.size()) throw IoError("trailing bytes in checkpoint");
  return m;
}

void save_model(const CnnModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  const std::string bytes = serialize_model(model);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path);
}

CnnModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

std::string conv_params_digest(const CnnModel& model) {
  std::string bytes;
  for (const auto& l : model.conv) {
    bytes.append(reinterpret_cast<const char*>(l.w.data()), l.w.size() * sizeof(double));
    bytes.append(reinterpret_cast<const char*>(l.b.data()), l.b.size() * sizeof(double));
  }
  return sha256_hex(bytes);
}

bool models_identical(const CnnModel& a, const CnnModel& b) {
  return serialize_model(a) == serialize_model(b);
}

}  // namespace widur::nn
