#pragma once

// Synthetic data: pseudo-radial masks, ellipse phantoms and simulated k-space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "admmnet/fft.hpp"
#include "admmnet/sampling.hpp"

namespace admmnet {

namespace detail {

/// Diametral lines through the zero frequency at angles j*pi/lines, rasterized in
/// unshifted (DC at the origin) coordinates. Every drawn offset d is paired with -d,
/// so the mask is exactly point symmetric modulo n.
inline std::vector<std::uint8_t> radial_lines(int n, int lines) {
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(n) * n, 0);
  auto mark = [&](long r, long c) {
    const long rr = ((r % n) + n) % n;
    const long cc = ((c % n) + n) % n;
    keep[static_cast<std::size_t>(rr) * n + cc] = 1;
  };
  const double half = 0.5 * n;
  for (int j = 0; j < lines; ++j) {
    const double th = std::numbers::pi * j / lines;
    const double dr = std::sin(th);
    const double dc = std::cos(th);
    for (double t = 0.0;; t += 0.5) {
      const double r = t * dr;
      const double c = t * dc;
      if (std::max(std::abs(r), std::abs(c)) > half) break;
      const long ir = std::lround(r);
      const long ic = std::lround(c);
      mark(ir, ic);
      mark(-ir, -ic);
    }
  }
  return keep;
}

inline double kept_fraction(const std::vector<std::uint8_t>& keep) {
  return static_cast<double>(std::count(keep.begin(), keep.end(), std::uint8_t{1})) / static_cast<double>(keep.size());
}

}  // namespace detail

/// Pseudo-radial mask of an n x n spectrum with sampling rate close to target_rate.
/// The line count is found by bisection; the achieved rate is within one line's
/// worth (1/n) of the target or an error is raised.
inline SamplingMask pseudo_radial_mask(int n, double target_rate) {
  if (n < 8) throw std::invalid_argument("pseudo_radial_mask: n must be >= 8");
  if (!(target_rate > 0.01 && target_rate <= 1.0))
    throw std::invalid_argument("pseudo_radial_mask: target rate must be in (0.01, 1]");
  if (target_rate == 1.0) return SamplingMask::full(n, n);

  int lo = 1;
  int hi = 8 * n;
  if (detail::kept_fraction(detail::radial_lines(n, hi)) < target_rate) {
    throw std::invalid_argument("pseudo_radial_mask: rate " + std::to_string(target_rate) +
                                " is unreachable with radial lines at n = " + std::to_string(n));
  }
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (detail::kept_fraction(detail::radial_lines(n, mid)) < target_rate)
      lo = mid + 1;
    else
      hi = mid;
  }
  int best = lo;
  double best_err = std::abs(detail::kept_fraction(detail::radial_lines(n, lo)) - target_rate);
  if (lo > 1) {
    const double e = std::abs(detail::kept_fraction(detail::radial_lines(n, lo - 1)) - target_rate);
    if (e < best_err) {
      best = lo - 1;
      best_err = e;
    }
  }
  if (best_err > 1.0 / n)
    throw std::invalid_argument("pseudo_radial_mask: rate " + std::to_string(target_rate) +
                                " is unreachable within one line at n = " + std::to_string(n));
  return SamplingMask(n, n, detail::radial_lines(n, best));
}

struct PhantomOptions {
  bool phase = false;  // multiply by a smooth synthetic phase map
  int ellipses = 6;    // inner ellipses on top of the body
};

/// Piecewise-smooth ellipse phantom, max magnitude 1. Deterministic in (n, seed, opts).
inline ComplexGrid make_phantom(int n, std::uint64_t seed, PhantomOptions opts = {}) {
  if (n < 4) throw std::invalid_argument("make_phantom: n must be >= 4");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * U(rng); };

  struct Ellipse {
    double cx, cy, ax, ay, angle, value;
  };
  std::vector<Ellipse> es;
  es.push_back({uni(-0.05, 0.05), uni(-0.05, 0.05), uni(0.70, 0.85), uni(0.80, 0.92), uni(-0.2, 0.2), uni(0.6, 0.8)});
  for (int k = 0; k < opts.ellipses; ++k) {
    es.push_back({uni(-0.45, 0.45), uni(-0.5, 0.5), uni(0.08, 0.35), uni(0.08, 0.35), uni(0.0, std::numbers::pi),
                  uni(-0.35, 0.35)});
  }
  // smooth multiplicative field
  const double bx = uni(-0.2, 0.2), by = uni(-0.2, 0.2), bf = uni(0.5, 1.5), bp = uni(0.0, 2 * std::numbers::pi);

  std::vector<double> mag(static_cast<std::size_t>(n) * n, 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double py = 2.0 * (r + 0.5) / n - 1.0;
      const double px = 2.0 * (c + 0.5) / n - 1.0;
      double v = 0.0;
      for (const auto& e : es) {
        const double ca = std::cos(e.angle), sa = std::sin(e.angle);
        const double u = ((px - e.cx) * ca + (py - e.cy) * sa) / e.ax;
        const double w = (-(px - e.cx) * sa + (py - e.cy) * ca) / e.ay;
        if (u * u + w * w <= 1.0) v += e.value;
      }
      v = std::max(v, 0.0);
      const double bias = 1.0 + bx * px + by * py + 0.1 * std::sin(bf * (px + py) + bp);
      mag[static_cast<std::size_t>(r) * n + c] = v * bias;
    }
  }
  const double peak = *std::max_element(mag.begin(), mag.end());
  if (!(peak > 0.0)) throw std::runtime_error("make_phantom: degenerate phantom");

  ComplexGrid x(n, n);
  double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
  if (opts.phase) {
    a0 = uni(-std::numbers::pi, std::numbers::pi);
    a1 = uni(-1.5, 1.5);
    a2 = uni(-1.5, 1.5);
    a3 = uni(0.3, 1.0);
  }
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double m = mag[static_cast<std::size_t>(r) * n + c] / peak;
      if (!opts.phase) {
        x(r, c) = cplx(m, 0.0);
        continue;
      }
      const double py = 2.0 * (r + 0.5) / n - 1.0;
      const double px = 2.0 * (c + 0.5) / n - 1.0;
      const double phi = a0 + a1 * px + a2 * py + a3 * std::cos(std::numbers::pi * px * py);
      x(r, c) = std::polar(m, phi);
    }
  }
  return x;
}

/// y = apply_mask(F(xgt) + eps) with eps complex Gaussian, std sigma per component.
inline ComplexGrid simulate_kspace(const ComplexGrid& xgt, const SamplingMask& mask, double noise_sigma,
                                   std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("simulate_kspace: noise sigma must be nonnegative");
  mask.check_matches(xgt, "simulate_kspace");
  ComplexGrid k = fft2_unitary(xgt);
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise_sigma);
    for (auto& v : k.data()) {
      const double re = g(rng);
      const double im = g(rng);
      v += cplx(re, im);
    }
  }
  return apply_mask(k, mask);
}

struct Sample {
  ComplexGrid y;    // masked k-space
  ComplexGrid xgt;  // ground truth image
  double noise_sigma = 0.0;
};

struct Dataset {
  std::vector<Sample> samples;
  SamplingMask mask;
  double sampling_rate = 0.0;
  double noise_sigma = 0.0;  // upper end of the per-sample sigma range

  std::size_t size() const noexcept { return samples.size(); }

  void validate() const {
    for (const auto& s : samples) {
      mask.check_matches(s.y, "Dataset");
      mask.check_matches(s.xgt, "Dataset");
      for (std::size_t i = 0; i < s.y.size(); ++i)
        if (!mask.kept(i) && s.y[i] != cplx{}) throw std::invalid_argument("Dataset: nonzero k-space off the mask");
    }
  }
};

struct DatasetSpec {
  int n = 32;
  int count = 20;
  double rate = 0.2;
  double sigma_min = 0.0;  // per-sample sigma drawn uniformly from [sigma_min, sigma_max]
  double sigma_max = 0.0;
  bool phase = false;
  std::uint64_t seed = 1;
};

/// Fully determined by the spec; sample i uses phantom seed (seed, i).
inline Dataset make_dataset(const DatasetSpec& spec, const SamplingMask& mask) {
  if (spec.count < 0) throw std::invalid_argument("make_dataset: negative count");
  if (!(spec.sigma_min >= 0.0 && spec.sigma_max >= spec.sigma_min))
    throw std::invalid_argument("make_dataset: need 0 <= sigma_min <= sigma_max");
  if (mask.height() != spec.n || mask.width() != spec.n) throw DimensionMismatch("make_dataset: mask size differs from n");
  Dataset ds{{}, mask, mask.sampling_rate(), spec.sigma_max};
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> U(spec.sigma_min, spec.sigma_max);
  for (int i = 0; i < spec.count; ++i) {
    const std::uint64_t s = spec.seed * 1000003ull + static_cast<std::uint64_t>(i);
    ComplexGrid x = make_phantom(spec.n, s, {spec.phase});
    const double sigma = spec.sigma_max > spec.sigma_min ? U(rng) : spec.sigma_min;
    ComplexGrid y = simulate_kspace(x, mask, sigma, s + 0x51ed27ull);
    ds.samples.push_back({std::move(y), std::move(x), sigma});
  }
  return ds;
}

inline Dataset make_dataset(const DatasetSpec& spec) { return make_dataset(spec, pseudo_radial_mask(spec.n, spec.rate)); }

}  // namespace admmnet
