// Microbenchmark comparing the serial reference kernels against the
// OpenMP variants. Run with WIDUR_THREADS set to the thread count under test.
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "widur/kernels.hpp"
#include "widur/rng.hpp"

using namespace widur;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warmup
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto end = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(end - start).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-24s serial %8.3f ms   omp %8.3f ms   speedup %5.2fx\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
  kernels::configure_threads_from_env();
  Rng rng(7);

  {
    std::vector<double> series(200000);
    for (auto& v : series) v = rng.normal();
    const auto serial = time_ms([&] { kernels::sliding_variance_serial(series, 10); }, 5);
    const auto par = time_ms([&] { kernels::sliding_variance(series, 10); }, 5);
    report("sliding_variance", serial, par);
  }

  {
    const kernels::ConvShape shape{16, 192, 32, 5, 2};
    std::vector<double> x(16 * 192), w(32 * 16 * 5), b(32, 0.0);
    std::vector<double> y(static_cast<size_t>(32) * shape.len_out());
    for (auto& v : x) v = rng.normal();
    for (auto& v : w) v = rng.normal();
    const auto serial = time_ms(
        [&] { kernels::conv1d_forward_serial(shape, x.data(), w.data(), b.data(), y.data()); },
        200);
    const auto par = time_ms(
        [&] { kernels::conv1d_forward(shape, x.data(), w.data(), b.data(), y.data()); }, 200);
    report("conv1d_forward", serial, par);

    std::vector<double> gy(y.size()), gx(x.size()), gw(w.size()), gb(b.size());
    for (auto& v : gy) v = rng.normal();
    const auto bserial = time_ms(
        [&] {
          kernels::conv1d_backward_serial(shape, x.data(), w.data(), gy.data(), gx.data(),
                                          gw.data(), gb.data());
        },
        200);
    const auto bpar = time_ms(
        [&] {
          kernels::conv1d_backward(shape, x.data(), w.data(), gy.data(), gx.data(),
                                   gw.data(), gb.data());
        },
        200);
    report("conv1d_backward", bserial, bpar);
  }

  {
    const int out_dim = 128, in_dim = 3072;
    std::vector<double> x(in_dim), w(static_cast<size_t>(out_dim) * in_dim), b(out_dim),
        y(out_dim);
    for (auto& v : x) v = rng.normal();
    for (auto& v : w) v = rng.normal();
    const auto serial = time_ms(
        [&] {
          kernels::dense_forward_serial(out_dim, in_dim, x.data(), w.data(), b.data(),
                                        y.data());
        },
        500);
    const auto par = time_ms(
        [&] { kernels::dense_forward(out_dim, in_dim, x.data(), w.data(), b.data(), y.data()); },
        500);
    report("dense_forward", serial, par);
  }
  return 0;
}
