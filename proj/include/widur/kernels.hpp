#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace widur::kernels {

// Reads WIDUR_THREADS (0 = single-threaded) and caps OpenMP accordingly.
// All kernels below compute each output element with a fixed serial
// reduction, so results are bitwise identical at any thread count; the
// env var only controls speed.
void configure_threads_from_env();

// --- Sliding variance (population, divide by m) -------------------------
// Serial reference: naive two-pass variance per window, O(n*m).
std::vector<double> sliding_variance_serial(std::span<const double> series, size_t m);
// OpenMP variant, identical per-window arithmetic.
std::vector<double> sliding_variance(std::span<const double> series, size_t m);

// --- 1D convolution with "same" padding and stride ----------------------
// Layouts: input [in_ch * len_in], weights [out_ch * in_ch * k],
// output [out_ch * len_out] with len_out = ceil(len_in / stride).
// Padding split: total = max((len_out-1)*stride + k - len_in, 0),
// pad_left = total / 2.
struct ConvShape {
  int in_ch, len_in, out_ch, kernel, stride;
  int len_out() const { return (len_in + stride - 1) / stride; }
  int pad_left() const {
    const int total = (len_out() - 1) * stride + kernel - len_in;
    return total > 0 ? total / 2 : 0;
  }
};

void conv1d_forward_serial(const ConvShape& s, const double* x, const double* w,
                           const double* b, double* y);
void conv1d_forward(const ConvShape& s, const double* x, const double* w,
                    const double* b, double* y);

// Backward pass: gy is grad wrt output; accumulates into gw/gb, writes gx.
// gx may be null (input layer).
void conv1d_backward_serial(const ConvShape& s, const double* x, const double* w,
                            const double* gy, double* gx, double* gw, double* gb);
void conv1d_backward(const ConvShape& s, const double* x, const double* w,
                     const double* gy, double* gx, double* gw, double* gb);

// --- Dense layer: y = W x + b, W is [out][in] row-major ------------------
void dense_forward_serial(int out_dim, int in_dim, const double* x, const double* w,
                          const double* b, double* y);
void dense_forward(int out_dim, int in_dim, const double* x, const double* w,
                   const double* b, double* y);
void dense_backward_serial(int out_dim, int in_dim, const double* x, const double* w,
                           const double* gy, double* gx, double* gw, double* gb);
void dense_backward(int out_dim, int in_dim, const double* x, const double* w,
                    const double* gy, double* gx, double* gw, double* gb);

// --- FFT -----------------------------------------------------------------
// In-place iterative radix-2 FFT; n must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& data);

}  // namespace widur::kernels
