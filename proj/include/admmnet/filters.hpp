#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "admmnet/fft.hpp"
#include "admmnet/grid.hpp"

namespace admmnet {

namespace detail {

inline void check_kernel_fits(const ComplexGrid& img, const Kernel& k, const char* where) {
  if (k.size() > std::min(img.height(), img.width()))
    throw DimensionMismatch(std::string(where) + ": kernel " + std::to_string(k.size()) + "x" +
                            std::to_string(k.size()) + " larger than image " + std::to_string(img.height()) + "x" +
                            std::to_string(img.width()));
}

// out(p) += t * in(p - (du, dv)) with periodic wrap.
inline void add_shifted(ComplexGrid& out, const ComplexGrid& in, double t, int du, int dv) {
  const int h = in.height();
  const int w = in.width();
  const int sv = wrap(dv, w);
  for (int r = 0; r < h; ++r) {
    const cplx* src = &in(wrap(r - du, h), 0);
    cplx* dst = &out(r, 0);
    // columns c with c - dv wrapped: first segment [0, sv) reads from w - sv, rest from 0
    for (int c = 0; c < sv; ++c) dst[c] += t * src[w - sv + c];
    for (int c = sv; c < w; ++c) dst[c] += t * src[c - sv];
  }
}

// sum_p Re(conj(g(p)) x(p - (du, dv)))
inline double shifted_real_dot(const ComplexGrid& g, const ComplexGrid& x, int du, int dv) {
  const int h = x.height();
  const int w = x.width();
  const int sv = wrap(dv, w);
  double s = 0.0;
  for (int r = 0; r < h; ++r) {
    const cplx* src = &x(wrap(r - du, h), 0);
    const cplx* gg = &g(r, 0);
    for (int c = 0; c < sv; ++c) s += gg[c].real() * src[w - sv + c].real() + gg[c].imag() * src[w - sv + c].imag();
    for (int c = sv; c < w; ++c) s += gg[c].real() * src[c - sv].real() + gg[c].imag() * src[c - sv].imag();
  }
  return s;
}

}  // namespace detail

/// Periodic 2-D convolution with a real center-anchored kernel:
/// out(p) = sum_{a,b} k(a,b) img(p - (a - r, b - r)), r = size/2.
/// Real and imaginary channels are convolved independently.
inline ComplexGrid conv2_circular(const ComplexGrid& img, const Kernel& kernel) {
  detail::check_kernel_fits(img, kernel, "conv2_circular");
  ComplexGrid out(img.height(), img.width());
  const int rad = kernel.radius();
  for (int a = 0; a < kernel.size(); ++a)
    for (int b = 0; b < kernel.size(); ++b) {
      const double t = kernel(a, b);
      if (t != 0.0) detail::add_shifted(out, img, t, a - rad, b - rad);
    }
  return out;
}

/// Adjoint of conv2_circular: convolution with the point-reflected kernel.
inline ComplexGrid conv2_adjoint(const ComplexGrid& img, const Kernel& kernel) {
  detail::check_kernel_fits(img, kernel, "conv2_adjoint");
  ComplexGrid out(img.height(), img.width());
  const int rad = kernel.radius();
  for (int a = 0; a < kernel.size(); ++a)
    for (int b = 0; b < kernel.size(); ++b) {
      const double t = kernel(a, b);
      if (t != 0.0) detail::add_shifted(out, img, t, rad - a, rad - b);
    }
  return out;
}

/// Gradient of Re<g, conv2_circular(x, k)> with respect to the taps of k.
inline Kernel conv2_kernel_gradient(const ComplexGrid& g, const ComplexGrid& x, int size) {
  g.check_shape(x, "conv2_kernel_gradient");
  Kernel out(size);
  const int rad = size / 2;
  for (int a = 0; a < size; ++a)
    for (int b = 0; b < size; ++b) out(a, b) = detail::shifted_real_dot(g, x, a - rad, b - rad);
  return out;
}

/// Per-frequency transfer function of conv2_circular: F(k * x) = spectrum .* F(x).
/// The kernel is placed top-left in an H x W zero grid, circularly shifted by
/// (-size/2, -size/2), and transformed with the unnormalized DFT.
inline ComplexGrid filter_spectrum(const Kernel& kernel, int height, int width) {
  if (kernel.size() > std::min(height, width))
    throw DimensionMismatch("filter_spectrum: kernel larger than grid");
  ComplexGrid padded(height, width);
  const int rad = kernel.radius();
  for (int a = 0; a < kernel.size(); ++a)
    for (int b = 0; b < kernel.size(); ++b)
      padded(detail::wrap(a - rad, height), detail::wrap(b - rad, width)) = cplx(kernel(a, b), 0.0);
  ComplexGrid spec = fft2_unitary(padded);
  spec *= std::sqrt(static_cast<double>(height) * static_cast<double>(width));
  return spec;
}

/// Orthonormal 2-D DCT-II basis kernels of size w x w.
///
/// Kernels are ordered by total frequency u+v, then by vertical frequency u, so the
/// constant kernel comes first and the first two non-constant kernels are the
/// horizontal and vertical first differences. With discard_constant the constant
/// kernel is dropped, leaving w*w - 1 kernels.
inline FilterBank dct_filter_bank(int size, bool discard_constant = true) {
  if (size <= 0 || size % 2 == 0) throw std::invalid_argument("dct_filter_bank: size must be odd and positive");
  auto basis = [size](int u, int x) {
    const double alpha = u == 0 ? std::sqrt(1.0 / size) : std::sqrt(2.0 / size);
    return alpha * std::cos(std::numbers::pi * (2.0 * x + 1.0) * u / (2.0 * size));
  };
  std::vector<std::array<int, 2>> order;
  for (int u = 0; u < size; ++u)
    for (int v = 0; v < size; ++v) order.push_back({u, v});
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a[0] + a[1] != b[0] + b[1]) return a[0] + a[1] < b[0] + b[1];
    return a[0] < b[0];
  });
  std::vector<Kernel> kernels;
  for (const auto& [u, v] : order) {
    if (discard_constant && u == 0 && v == 0) continue;
    Kernel k(size);
    for (int a = 0; a < size; ++a)
      for (int b = 0; b < size; ++b) k(a, b) = basis(u, a) * basis(v, b);
    kernels.push_back(std::move(k));
  }
  return FilterBank(std::move(kernels));
}

}  // namespace admmnet
