#pragma once

// Test-side oracles built straight from the definitions with dense Eigen matrices.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "admmnet.hpp"

namespace oracle {

using admmnet::ComplexGrid;
using admmnet::cplx;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Vec to_vec(const ComplexGrid& g) {
  Vec v(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) v(static_cast<Eigen::Index>(i)) = g[i];
  return v;
}

inline ComplexGrid to_grid(const Vec& v, int h, int w) {
  ComplexGrid g(h, w);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = v(static_cast<Eigen::Index>(i));
  return g;
}

/// Unitary 2-D DFT as a dense (HW x HW) matrix on row-major vectors.
inline Mat dft_matrix(int h, int w) {
  const int n = h * w;
  Mat F(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < h; ++k)
    for (int l = 0; l < w; ++l)
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const double ph = -2.0 * std::numbers::pi * (static_cast<double>(k * r) / h + static_cast<double>(l * c) / w);
          F(k * w + l, r * w + c) = s * std::polar(1.0, ph);
        }
  return F;
}

/// Circular convolution out(p) = sum_{a,b} k(a,b) x(p - (a - r, b - r)) as a dense matrix.
inline Mat conv_matrix(const admmnet::Kernel& k, int h, int w) {
  const int r = k.radius();
  Mat C = Mat::Zero(h * w, h * w);
  for (int pr = 0; pr < h; ++pr)
    for (int pc = 0; pc < w; ++pc)
      for (int a = 0; a < k.size(); ++a)
        for (int b = 0; b < k.size(); ++b) {
          const int sr = ((pr - (a - r)) % h + h) % h;
          const int sc = ((pc - (b - r)) % w + w) % w;
          C(pr * w + pc, sr * w + sc) += k(a, b);
        }
  return C;
}

inline Mat mask_matrix(const admmnet::SamplingMask& m) {
  const int n = m.height() * m.width();
  Mat P = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) P(i, i) = m.kept(static_cast<std::size_t>(i)) ? 1.0 : 0.0;
  return P;
}

inline ComplexGrid random_grid(int h, int w, std::mt19937_64& rng, bool real = false) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexGrid out(h, w);
  for (auto& v : out.data()) {
    const double re = g(rng);
    v = cplx(re, real ? 0.0 : g(rng));
  }
  return out;
}

inline admmnet::Kernel random_kernel(int size, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  admmnet::Kernel k(size);
  for (double& t : k.taps()) t = g(rng);
  return k;
}

inline admmnet::SamplingMask random_mask(int h, int w, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution b(rate);
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(h) * w);
  for (auto& k : keep) k = b(rng) ? 1 : 0;
  keep[0] = 1;
  return admmnet::SamplingMask(h, w, keep);
}

}  // namespace oracle
