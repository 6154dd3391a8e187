#pragma once

#include "admmnet/fft.hpp"
#include "admmnet/grid.hpp"

namespace admmnet {

/// P^T P applied to k-space: kept frequencies pass through, the rest are zeroed.
inline ComplexGrid apply_mask(const ComplexGrid& ksp, const SamplingMask& mask) {
  mask.check_matches(ksp, "apply_mask");
  ComplexGrid out(ksp.height(), ksp.width());
  for (std::size_t i = 0; i < ksp.size(); ++i)
    if (mask.kept(i)) out[i] = ksp[i];
  return out;
}

/// Zero-filled reconstruction F^T P^T P y.
inline ComplexGrid zero_filled(const ComplexGrid& y, const SamplingMask& mask) {
  return ifft2_unitary(apply_mask(y, mask));
}

}  // namespace admmnet
