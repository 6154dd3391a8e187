#pragma once

// Unitary 2-D DFT pair backed by FFTW.
//
// Real and imaginary channels are transformed separately through real-to-complex
// plans and the half spectra are expanded with exact Hermitian symmetry. A grid with
// an identically zero imaginary part therefore has a spectrum that is bitwise
// conjugate-symmetric, and a bitwise conjugate-symmetric spectrum inverts to a grid
// whose imaginary part is exactly zero.

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "admmnet/grid.hpp"

namespace admmnet {

namespace detail {

struct RealPlans {
  fftw_plan forward = nullptr;  // r2c, H x W -> H x (W/2+1)
  fftw_plan inverse = nullptr;  // c2r, H x (W/2+1) -> H x W
};

// Plan creation is not thread-safe in FFTW; execution on new arrays is.
inline const RealPlans& real_plans(int h, int w) {
  static std::mutex mtx;
  static std::map<std::pair<int, int>, RealPlans> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find({h, w});
  if (it != cache.end()) return it->second;
  const int wh = w / 2 + 1;
  double* r = fftw_alloc_real(static_cast<std::size_t>(h) * w);
  fftw_complex* c = fftw_alloc_complex(static_cast<std::size_t>(h) * wh);
  RealPlans p;
  p.forward = fftw_plan_dft_r2c_2d(h, w, r, c, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inverse = fftw_plan_dft_c2r_2d(h, w, c, r, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(r);
  fftw_free(c);
  return cache.emplace(std::make_pair(h, w), p).first->second;
}

inline int wrap(int i, int n) noexcept {
  int m = i % n;
  return m < 0 ? m + n : m;
}

// Unnormalized DFT of a real H x W array, expanded to the full spectrum with
// exact conjugate symmetry (self-conjugate bins forced real).
inline std::vector<cplx> real_dft_full(std::vector<double>& in, int h, int w) {
  const int wh = w / 2 + 1;
  std::vector<cplx> half(static_cast<std::size_t>(h) * wh);
  fftw_execute_dft_r2c(real_plans(h, w).forward, in.data(), reinterpret_cast<fftw_complex*>(half.data()));
  std::vector<cplx> full(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r) {
    const int mr = wrap(-r, h);
    for (int c = 0; c < w; ++c) {
      const int mc = wrap(-c, w);
      const std::size_t idx = static_cast<std::size_t>(r) * w + c;
      const std::size_t midx = static_cast<std::size_t>(mr) * w + mc;
      if (idx == midx) {
        full[idx] = cplx(half[static_cast<std::size_t>(r) * wh + c].real(), 0.0);
      } else if (idx < midx) {
        full[idx] = c < wh ? half[static_cast<std::size_t>(r) * wh + c]
                           : std::conj(half[static_cast<std::size_t>(mr) * wh + mc]);
      }
    }
  }
  for (std::size_t idx = 0; idx < full.size(); ++idx) {
    const int r = static_cast<int>(idx / w);
    const int c = static_cast<int>(idx % w);
    const std::size_t midx = static_cast<std::size_t>(wrap(-r, h)) * w + wrap(-c, w);
    if (idx > midx) full[idx] = std::conj(full[midx]);
  }
  return full;
}

}  // namespace detail

/// Unitary forward 2-D DFT, DC at (0, 0), scale 1/sqrt(HW).
inline ComplexGrid fft2_unitary(const ComplexGrid& img) {
  const int h = img.height();
  const int w = img.width();
  const std::size_t n = img.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> re(n), im(n);
  bool has_imag = false;
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = img[i].real();
    im[i] = img[i].imag();
    has_imag = has_imag || im[i] != 0.0;
  }
  const auto a = detail::real_dft_full(re, h, w);
  ComplexGrid out(h, w);
  if (!has_imag) {
    for (std::size_t i = 0; i < n; ++i) out[i] = cplx(a[i].real() * scale, a[i].imag() * scale);
    return out;
  }
  const auto b = detail::real_dft_full(im, h, w);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = cplx((a[i].real() - b[i].imag()) * scale, (a[i].imag() + b[i].real()) * scale);
  return out;
}

/// Unitary inverse 2-D DFT; the exact adjoint and inverse of fft2_unitary.
inline ComplexGrid ifft2_unitary(const ComplexGrid& ksp) {
  const int h = ksp.height();
  const int w = ksp.width();
  const int wh = w / 2 + 1;
  const std::size_t n = ksp.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  // Split into Hermitian part E (real image) and anti-Hermitian part O (imaginary image).
  std::vector<cplx> even(static_cast<std::size_t>(h) * wh), odd_rot(static_cast<std::size_t>(h) * wh);
  bool has_odd = false;
  for (int r = 0; r < h; ++r) {
    const int mr = detail::wrap(-r, h);
    for (int c = 0; c < wh; ++c) {
      const int mc = detail::wrap(-c, w);
      const cplx x = ksp(r, c);
      const cplx xm = std::conj(ksp(mr, mc));
      const cplx e = (x + xm) * 0.5;
      const cplx o = (x - xm) * 0.5;
      even[static_cast<std::size_t>(r) * wh + c] = e;
      // -j * o is Hermitian; its inverse is the imaginary channel.
      odd_rot[static_cast<std::size_t>(r) * wh + c] = cplx(o.imag(), -o.real());
      has_odd = has_odd || o != cplx{};
    }
  }
  const auto& plans = detail::real_plans(h, w);
  std::vector<double> re(n), im(n, 0.0);
  fftw_execute_dft_c2r(plans.inverse, reinterpret_cast<fftw_complex*>(even.data()), re.data());
  if (has_odd) fftw_execute_dft_c2r(plans.inverse, reinterpret_cast<fftw_complex*>(odd_rot.data()), im.data());
  ComplexGrid out(h, w);
  for (std::size_t i = 0; i < n; ++i) out[i] = cplx(re[i] * scale, im[i] * scale);
  return out;
}

}  // namespace admmnet
