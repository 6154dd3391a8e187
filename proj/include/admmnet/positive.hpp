#pragma once

#include <cmath>

namespace admmnet {

// Penalty parameters are stored unconstrained (raw) and mapped through
// softplus, so optimizers can move them freely while rho stays positive.

inline double softplus(double s) noexcept { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

/// d softplus / ds
inline double sigmoid(double s) noexcept {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

/// Inverse of softplus for rho > 0: s = rho + log(1 - exp(-rho)).
inline double softplus_inverse(double rho) noexcept { return rho + std::log(-std::expm1(-rho)); }

}  // namespace admmnet
