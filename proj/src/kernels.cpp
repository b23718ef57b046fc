#include "widur/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace widur::kernels {

void configure_threads_from_env() {
#ifdef _OPENMP
  const char* env = std::getenv("WIDUR_THREADS");
  if (env) {
    const int n = std::atoi(env);
    omp_set_num_threads(n <= 0 ? 1 : n);
  }
#endif
}

namespace {

inline double window_variance(const double* x, size_t m) {
  double mean = 0.0;
  for (size_t k = 0; k < m; ++k) mean += x[k];
  mean /= static_cast<double>(m);
  double acc = 0.0;
  for (size_t k = 0; k < m; ++k) {
    const double d = x[k] - mean;
    acc += d * d;
  }
  return acc / static_cast<double>(m);
}

}  // namespace

std::vector<double> sliding_variance_serial(std::span<const double> series, size_t m) {
  const size_t n = series.size();
  std::vector<double> out(n - m + 1);
  for (size_t j = 0; j + m <= n; ++j) out[j] = window_variance(series.data() + j, m);
  return out;
}

std::vector<double> sliding_variance(std::span<const double> series, size_t m) {
  const size_t n = series.size();
  std::vector<double> out(n - m + 1);
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    out[j] = window_variance(series.data() + j, m);
  }
  return out;
}

// --- conv1d --------------------------------------------------------------

namespace {

inline double conv_out_element(const ConvShape& s, const double* x, const double* w,
                               const double* b, int oc, int t) {
  const int pad = s.pad_left();
  double acc = b[oc];
  for (int c = 0; c < s.in_ch; ++c) {
    const double* xc = x + static_cast<size_t>(c) * s.len_in;
    const double* wc = w + (static_cast<size_t>(oc) * s.in_ch + c) * s.kernel;
    for (int k = 0; k < s.kernel; ++k) {
      const int i = t * s.stride + k - pad;
      if (i >= 0 && i < s.len_in) acc += wc[k] * xc[i];
    }
  }
  return acc;
}

}  // namespace

void conv1d_forward_serial(const ConvShape& s, const double* x, const double* w,
                           const double* b, double* y) {
  const int len_out = s.len_out();
  for (int oc = 0; oc < s.out_ch; ++oc) {
    for (int t = 0; t < len_out; ++t) {
      y[static_cast<size_t>(oc) * len_out + t] = conv_out_element(s, x, w, b, oc, t);
    }
  }
}

void conv1d_forward(const ConvShape& s, const double* x, const double* w,
                    const double* b, double* y) {
  const int len_out = s.len_out();
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < s.out_ch; ++oc) {
    for (int t = 0; t < len_out; ++t) {
      y[static_cast<size_t>(oc) * len_out + t] = conv_out_element(s, x, w, b, oc, t);
    }
  }
}

namespace {

// Weight/bias gradients for one output channel; accumulates into gw/gb.
inline void conv_grad_wb_channel(const ConvShape& s, const double* x, const double* gy,
                                 double* gw, double* gb, int oc) {
  const int len_out = s.len_out();
  const int pad = s.pad_left();
  const double* gyc = gy + static_cast<size_t>(oc) * len_out;
  double gb_acc = 0.0;
  for (int t = 0; t < len_out; ++t) gb_acc += gyc[t];
  gb[oc] += gb_acc;
  for (int c = 0; c < s.in_ch; ++c) {
    const double* xc = x + static_cast<size_t>(c) * s.len_in;
    double* gwc = gw + (static_cast<size_t>(oc) * s.in_ch + c) * s.kernel;
    for (int k = 0; k < s.kernel; ++k) {
      double acc = 0.0;
      for (int t = 0; t < len_out; ++t) {
        const int i = t * s.stride + k - pad;
        if (i >= 0 && i < s.len_in) acc += gyc[t] * xc[i];
      }
      gwc[k] += acc;
    }
  }
}

// Input gradient, gather form: fixed reduction order per input element.
inline double conv_grad_x_element(const ConvShape& s, const double* w, const double* gy,
                                  int c, int i) {
  const int len_out = s.len_out();
  const int pad = s.pad_left();
  double acc = 0.0;
  for (int oc = 0; oc < s.out_ch; ++oc) {
    const double* wc = w + (static_cast<size_t>(oc) * s.in_ch + c) * s.kernel;
    const double* gyc = gy + static_cast<size_t>(oc) * len_out;
    for (int k = 0; k < s.kernel; ++k) {
      const int num = i + pad - k;
      if (num < 0 || num % s.stride != 0) continue;
      const int t = num / s.stride;
      if (t < len_out) acc += wc[k] * gyc[t];
    }
  }
  return acc;
}

}  // namespace

void conv1d_backward_serial(const ConvShape& s, const double* x, const double* w,
                            const double* gy, double* gx, double* gw, double* gb) {
  for (int oc = 0; oc < s.out_ch; ++oc) conv_grad_wb_channel(s, x, gy, gw, gb, oc);
  if (gx) {
    for (int c = 0; c < s.in_ch; ++c) {
      for (int i = 0; i < s.len_in; ++i) {
        gx[static_cast<size_t>(c) * s.len_in + i] = conv_grad_x_element(s, w, gy, c, i);
      }
    }
  }
}

void conv1d_backward(const ConvShape& s, const double* x, const double* w,
                     const double* gy, double* gx, double* gw, double* gb) {
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < s.out_ch; ++oc) conv_grad_wb_channel(s, x, gy, gw, gb, oc);
  if (gx) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < s.in_ch; ++c) {
      for (int i = 0; i < s.len_in; ++i) {
        gx[static_cast<size_t>(c) * s.len_in + i] = conv_grad_x_element(s, w, gy, c, i);
      }
    }
  }
}

// --- dense ---------------------------------------------------------------

void dense_forward_serial(int out_dim, int in_dim, const double* x, const double* w,
                          const double* b, double* y) {
  for (int o = 0; o < out_dim; ++o) {
    const double* row = w + static_cast<size_t>(o) * in_dim;
    double acc = b[o];
    for (int i = 0; i < in_dim; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

void dense_forward(int out_dim, int in_dim, const double* x, const double* w,
                   const double* b, double* y) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out_dim; ++o) {
    const double* row = w + static_cast<size_t>(o) * in_dim;
    double acc = b[o];
    for (int i = 0; i < in_dim; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

void dense_backward_serial(int out_dim, int in_dim, const double* x, const double* w,
                           const double* gy, double* gx, double* gw, double* gb) {
  for (int o = 0; o < out_dim; ++o) {
    gb[o] += gy[o];
    double* row = gw + static_cast<size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) row[i] += gy[o] * x[i];
  }
  if (gx) {
    for (int i = 0; i < in_dim; ++i) {
      double acc = 0.0;
      for (int o = 0; o < out_dim; ++o) acc += w[static_cast<size_t>(o) * in_dim + i] * gy[o];
      gx[i] = acc;
    }
  }
}

void dense_backward(int out_dim, int in_dim, const double* x, const double* w,
                    const double* gy, double* gx, double* gw, double* gb) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out_dim; ++o) {
    gb[o] += gy[o];
    double* row = gw + static_cast<size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) row[i] += gy[o] * x[i];
  }
  if (gx) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < in_dim; ++i) {
      double acc = 0.0;
      for (int o = 0; o < out_dim; ++o) acc += w[static_cast<size_t>(o) * in_dim + i] * gy[o];
      gx[i] = acc;
    }
  }
}

// --- FFT -----------------------------------------------------------------

void fft_radix2(std::vector<std::complex<double>>& data) {
  const size_t n = data.size();
  if (n < 2) return;
  // bit reversal
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    for (size_t i = 0; i < n; i += len) {
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w(std::cos(ang * static_cast<double>(k)),
                                     std::sin(ang * static_cast<double>(k)));
        const std::complex<double> u = data[i + k];
        const std::complex<double> v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
      }
    }
  }
}

}  // namespace widur::kernels
