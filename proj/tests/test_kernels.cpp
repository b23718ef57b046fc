#include "doctest.h"

#include <cmath>

#include "widur/kernels.hpp"
#include "widur/rng.hpp"

using namespace widur;

TEST_CASE("omp kernels match the serial reference bitwise") {
  Rng rng(11);
  std::vector<double> series(3000);
  for (auto& v : series) v = rng.normal();
  const auto a = kernels::sliding_variance_serial(series, 10);
  const auto b = kernels::sliding_variance(series, 10);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  const kernels::ConvShape shape{4, 64, 8, 5, 2};
  std::vector<double> x(4 * 64), w(8 * 4 * 5), bias(8);
  for (auto& v : x) v = rng.normal();
  for (auto& v : w) v = rng.normal();
  for (auto& v : bias) v = rng.normal();
  std::vector<double> y1(static_cast<size_t>(8) * shape.len_out());
  std::vector<double> y2(y1.size());
  kernels::conv1d_forward_serial(shape, x.data(), w.data(), bias.data(), y1.data());
  kernels::conv1d_forward(shape, x.data(), w.data(), bias.data(), y2.data());
  for (size_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);

  std::vector<double> gy(y1.size());
  for (auto& v : gy) v = rng.normal();
  std::vector<double> gx1(x.size()), gw1(w.size()), gb1(bias.size());
  std::vector<double> gx2(x.size()), gw2(w.size()), gb2(bias.size());
  kernels::conv1d_backward_serial(shape, x.data(), w.data(), gy.data(), gx1.data(),
                                  gw1.data(), gb1.data());
  kernels::conv1d_backward(shape, x.data(), w.data(), gy.data(), gx2.data(), gw2.data(),
                           gb2.data());
  for (size_t i = 0; i < gx1.size(); ++i) CHECK(gx1[i] == gx2[i]);
  for (size_t i = 0; i < gw1.size(); ++i) CHECK(gw1[i] == gw2[i]);
  for (size_t i = 0; i < gb1.size(); ++i) CHECK(gb1[i] == gb2[i]);
}

TEST_CASE("dense kernels match serial reference bitwise") {
  Rng rng(12);
  const int out_dim = 32, in_dim = 77;
  std::vector<double> x(in_dim), w(static_cast<size_t>(out_dim) * in_dim), b(out_dim);
  for (auto& v : x) v = rng.normal();
  for (auto& v : w) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  std::vector<double> y1(out_dim), y2(out_dim);
  kernels::dense_forward_serial(out_dim, in_dim, x.data(), w.data(), b.data(), y1.data());
  kernels::dense_forward(out_dim, in_dim, x.data(), w.data(), b.data(), y2.data());
  for (int i = 0; i < out_dim; ++i) CHECK(y1[i] == y2[i]);

  std::vector<double> gy(out_dim);
  for (auto& v : gy) v = rng.normal();
  std::vector<double> gx1(in_dim), gw1(w.size()), gb1(out_dim);
  std::vector<double> gx2(in_dim), gw2(w.size()), gb2(out_dim);
  kernels::dense_backward_serial(out_dim, in_dim, x.data(), w.data(), gy.data(), gx1.data(),
                                 gw1.data(), gb1.data());
  kernels::dense_backward(out_dim, in_dim, x.data(), w.data(), gy.data(), gx2.data(),
                          gw2.data(), gb2.data());
  for (int i = 0; i < in_dim; ++i) CHECK(gx1[i] == gx2[i]);
  for (size_t i = 0; i < gw1.size(); ++i) CHECK(gw1[i] == gw2[i]);
}

TEST_CASE("conv1d gradients match finite differences") {
  Rng rng(13);
  const kernels::ConvShape shape{2, 16, 3, 5, 2};
  std::vector<double> x(2 * 16), w(3 * 2 * 5), b(3);
  for (auto& v : x) v = rng.normal();
  for (auto& v : w) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  const size_t out_size = static_cast<size_t>(3) * shape.len_out();
  std::vector<double> gy(out_size);
  for (auto& v : gy) v = rng.normal();

  // Loss = sum(gy .* y); gradient via backward vs central differences.
  auto loss = [&](const std::vector<double>& xx, const std::vector<double>& ww,
                  const std::vector<double>& bb) {
    std::vector<double> y(out_size);
    kernels::conv1d_forward_serial(shape, xx.data(), ww.data(), bb.data(), y.data());
    double acc = 0.0;
    for (size_t i = 0; i < y.size(); ++i) acc += gy[i] * y[i];
    return acc;
  };

  std::vector<double> gx(x.size()), gw(w.size()), gb(b.size());
  kernels::conv1d_backward_serial(shape, x.data(), w.data(), gy.data(), gx.data(),
                                  gw.data(), gb.data());
  const double eps = 1e-6;
  for (size_t i = 0; i < w.size(); ++i) {
    auto wp = w, wm = w;
    wp[i] += eps;
    wm[i] -= eps;
    const double fd = (loss(x, wp, b) - loss(x, wm, b)) / (2 * eps);
    CHECK(gw[i] == doctest::Approx(fd).epsilon(1e-6));
  }
  for (size_t i = 0; i < x.size(); ++i) {
    auto xp = x, xm = x;
    xp[i] += eps;
    xm[i] -= eps;
    const double fd = (loss(xp, w, b) - loss(xm, w, b)) / (2 * eps);
    CHECK(gx[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("fft matches a naive DFT") {
  Rng rng(14);
  const size_t n = 64;
  std::vector<std::complex<double>> data(n);
  for (auto& v : data) v = {rng.normal(), rng.normal()};
  auto fft = data;
  kernels::fft_radix2(fft);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * M_PI * static_cast<double>(k * t) / static_cast<double>(n);
      acc += data[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    CHECK(std::abs(fft[k] - acc) < 1e-9 * (1.0 + std::abs(acc)));
  }
}
