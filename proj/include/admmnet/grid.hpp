#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "admmnet/errors.hpp"

namespace admmnet {

using cplx = std::complex<double>;

/// H x W array of complex samples, row-major. Used for images, k-space and feature maps.
class ComplexGrid {
 public:
  ComplexGrid() = default;
  ComplexGrid(int height, int width) : ComplexGrid(height, width, cplx{}) {}
  ComplexGrid(int height, int width, cplx fill) : height_(height), width_(width) {
    if (height <= 0 || width <= 0) throw std::invalid_argument("ComplexGrid: dimensions must be positive");
    data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
  }
  ComplexGrid(int height, int width, std::vector<cplx> data) : height_(height), width_(width), data_(std::move(data)) {
    if (height <= 0 || width <= 0) throw std::invalid_argument("ComplexGrid: dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
      throw DimensionMismatch("ComplexGrid: data length does not match height*width");
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  cplx& operator()(int r, int c) noexcept { return data_[static_cast<std::size_t>(r) * width_ + c]; }
  const cplx& operator()(int r, int c) const noexcept { return data_[static_cast<std::size_t>(r) * width_ + c]; }
  cplx& operator[](std::size_t i) noexcept { return data_[i]; }
  const cplx& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }
  std::vector<cplx>& storage() noexcept { return data_; }
  const std::vector<cplx>& storage() const noexcept { return data_; }

  bool same_shape(const ComplexGrid& o) const noexcept { return height_ == o.height_ && width_ == o.width_; }

  ComplexGrid& operator+=(const ComplexGrid& o) {
    check_shape(o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  ComplexGrid& operator-=(const ComplexGrid& o) {
    check_shape(o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  ComplexGrid& operator*=(double s) noexcept {
    for (auto& v : data_) v *= s;
    return *this;
  }

  /// this += a * x
  void axpy(double a, const ComplexGrid& x) {
    check_shape(x, "axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
  }

  void check_shape(const ComplexGrid& o, const char* where) const {
    if (!same_shape(o))
      throw DimensionMismatch(std::string(where) + ": grid " + std::to_string(height_) + "x" + std::to_string(width_) +
                              " vs " + std::to_string(o.height_) + "x" + std::to_string(o.width_));
  }

  friend bool operator==(const ComplexGrid&, const ComplexGrid&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<cplx> data_;
};

inline ComplexGrid operator+(ComplexGrid a, const ComplexGrid& b) { return a += b; }
inline ComplexGrid operator-(ComplexGrid a, const ComplexGrid& b) { return a -= b; }
inline ComplexGrid operator*(double s, ComplexGrid a) { return a *= s; }

/// Real inner product Re<a, b> = sum Re(conj(a_i) b_i). Matches the gradient pairing used throughout.
inline double real_dot(const ComplexGrid& a, const ComplexGrid& b) {
  a.check_shape(b, "real_dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return s;
}

/// Complex inner product <a, b> = sum conj(a_i) b_i.
inline cplx inner(const ComplexGrid& a, const ComplexGrid& b) {
  a.check_shape(b, "inner");
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline double norm2(const ComplexGrid& a) { return std::sqrt(real_dot(a, a)); }

inline double max_abs_diff(const ComplexGrid& a, const ComplexGrid& b) {
  a.check_shape(b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline bool all_finite(const ComplexGrid& a) {
  for (const auto& v : a.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

/// Real part only (imaginary set to exactly zero).
inline ComplexGrid real_part(const ComplexGrid& a) {
  ComplexGrid out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = cplx(a[i].real(), 0.0);
  return out;
}

/// Binary indicator of acquired k-space frequencies; DC at (0, 0) of the unshifted spectrum.
class SamplingMask {
 public:
  SamplingMask() = default;
  SamplingMask(int height, int width, std::vector<std::uint8_t> keep)
      : height_(height), width_(width), keep_(std::move(keep)) {
    if (height <= 0 || width <= 0) throw std::invalid_argument("SamplingMask: dimensions must be positive");
    if (keep_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
      throw DimensionMismatch("SamplingMask: keep length does not match height*width");
    for (auto& k : keep_) k = k ? 1 : 0;
    if (kept_count() == 0) throw std::invalid_argument("SamplingMask: at least one frequency must be kept");
  }

  static SamplingMask full(int height, int width) {
    return SamplingMask(height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, 1));
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return keep_.size(); }
  bool kept(int r, int c) const noexcept { return keep_[static_cast<std::size_t>(r) * width_ + c] != 0; }
  bool kept(std::size_t i) const noexcept { return keep_[i] != 0; }
  double weight(std::size_t i) const noexcept { return keep_[i] ? 1.0 : 0.0; }
  std::span<const std::uint8_t> keep() const noexcept { return keep_; }

  std::size_t kept_count() const noexcept {
    std::size_t n = 0;
    for (auto k : keep_) n += k;
    return n;
  }
  double sampling_rate() const noexcept { return static_cast<double>(kept_count()) / static_cast<double>(keep_.size()); }

  void check_matches(const ComplexGrid& g, const char* where) const {
    if (g.height() != height_ || g.width() != width_)
      throw DimensionMismatch(std::string(where) + ": mask " + std::to_string(height_) + "x" + std::to_string(width_) +
                              " vs grid " + std::to_string(g.height()) + "x" + std::to_string(g.width()));
  }

  friend bool operator==(const SamplingMask&, const SamplingMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> keep_;
};

/// Real odd-sized square kernel anchored at its center tap.
class Kernel {
 public:
  Kernel() = default;
  explicit Kernel(int size) : Kernel(size, std::vector<double>(static_cast<std::size_t>(size) * size, 0.0)) {}
  Kernel(int size, std::vector<double> taps) : size_(size), taps_(std::move(taps)) {
    if (size <= 0 || size % 2 == 0) throw std::invalid_argument("Kernel: size must be odd and positive");
    if (taps_.size() != static_cast<std::size_t>(size) * size)
      throw DimensionMismatch("Kernel: taps length does not match size*size");
  }

  static Kernel impulse(int size) {
    Kernel k(size);
    k(size / 2, size / 2) = 1.0;
    return k;
  }

  int size() const noexcept { return size_; }
  int radius() const noexcept { return size_ / 2; }
  double& operator()(int a, int b) noexcept { return taps_[static_cast<std::size_t>(a) * size_ + b]; }
  double operator()(int a, int b) const noexcept { return taps_[static_cast<std::size_t>(a) * size_ + b]; }
  std::span<double> taps() noexcept { return taps_; }
  std::span<const double> taps() const noexcept { return taps_; }

  /// Point reflection through the center tap; the adjoint of circular convolution.
  Kernel reflected() const {
    Kernel k(size_);
    for (int a = 0; a < size_; ++a)
      for (int b = 0; b < size_; ++b) k(a, b) = (*this)(size_ - 1 - a, size_ - 1 - b);
    return k;
  }

  Kernel scaled(double s) const {
    Kernel k = *this;
    for (auto& t : k.taps_) t *= s;
    return k;
  }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  int size_ = 0;
  std::vector<double> taps_;
};

/// L real kernels sharing one odd size.
struct FilterBank {
  std::vector<Kernel> kernels;

  FilterBank() = default;
  explicit FilterBank(std::vector<Kernel> k) : kernels(std::move(k)) { validate(); }
  FilterBank(int count, int size) : kernels(static_cast<std::size_t>(count), Kernel(size)) {}

  int count() const noexcept { return static_cast<int>(kernels.size()); }
  int size() const noexcept { return kernels.empty() ? 0 : kernels.front().size(); }
  Kernel& operator[](std::size_t l) noexcept { return kernels[l]; }
  const Kernel& operator[](std::size_t l) const noexcept { return kernels[l]; }

  void validate() const {
    if (kernels.empty()) throw std::invalid_argument("FilterBank: needs at least one kernel");
    for (const auto& k : kernels) {
      if (k.size() != kernels.front().size()) throw DimensionMismatch("FilterBank: kernels differ in size");
      for (double t : k.taps())
        if (!std::isfinite(t)) throw std::invalid_argument("FilterBank: non-finite tap");
    }
  }

  friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

}  // namespace admmnet
