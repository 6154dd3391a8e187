#pragma once

// Classical ADMM solvers for
//   min_x 1/2 ||P F x - y||^2 + sum_l lambda_l g(D_l x)
// with fixed parameters. Solver I splits in the filter domain (z_l = D_l x), solver II
// in the image domain (z = x) and runs gradient descent on the z-subproblem. Both are
// written independently of the network code so they can serve as oracles for the
// initialized networks.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "admmnet/filters.hpp"
#include "admmnet/plf.hpp"
#include "admmnet/sampling.hpp"

namespace admmnet {

struct Solver1Config {
  FilterBank filters;
  std::vector<double> rho;    // penalty per filter, > 0
  std::vector<double> eta;    // multiplier update rate per filter
  std::vector<double> theta;  // shrinkage threshold lambda_l / rho_l per filter
  int iterations = 1;

  /// Soft-threshold ADMM for lambda sum ||D_l x||_1 with shared rho and eta = 1.
  static Solver1Config model_based(FilterBank filters, double rho, double lambda, int iterations) {
    const auto n = static_cast<std::size_t>(filters.count());
    Solver1Config c;
    c.filters = std::move(filters);
    c.rho.assign(n, rho);
    c.eta.assign(n, 1.0);
    c.theta.assign(n, lambda / rho);
    c.iterations = iterations;
    return c;
  }

  void validate() const {
    filters.validate();
    const auto n = static_cast<std::size_t>(filters.count());
    if (rho.size() != n || eta.size() != n || theta.size() != n)
      throw DimensionMismatch("Solver1Config: rho/eta/theta must have one entry per filter");
    for (double r : rho)
      if (!(r > 0.0)) throw std::invalid_argument("Solver1Config: rho must be positive");
    for (double t : theta)
      if (!(t >= 0.0)) throw std::invalid_argument("Solver1Config: theta must be nonnegative");
    if (iterations < 1) throw std::invalid_argument("Solver1Config: iterations must be >= 1");
  }
};

struct Solver1Trace {
  std::vector<ComplexGrid> x;                  // x^(1..N)
  std::vector<std::vector<ComplexGrid>> z;     // z_l^(1..N)
  std::vector<std::vector<ComplexGrid>> beta;  // beta_l^(1..N)
};

struct Solver2Config {
  double rho = 1.0;
  double eta = 1.0;
  double mu1 = 0.9;
  double mu2 = 0.1;
  std::vector<double> lambda_tilde;  // l_r * lambda_l per filter
  FilterBank filters;
  std::function<double(double)> h;   // scalar nonlinearity applied per real/imag component
  int inner_iterations = 1;
  int iterations = 1;

  /// Gradient-descent ADMM with step l_r: mu1 = 1 - l_r rho, mu2 = l_r rho, lambda~ = l_r lambda.
  /// The default nonlinearity is the piecewise-linear Huber gradient with threshold lambda / rho,
  /// which is what the initialized network evaluates.
  static Solver2Config model_based(FilterBank filters, double rho, double lambda, double step, int inner,
                                   int iterations, int controls = PiecewiseLinear::default_controls) {
    Solver2Config c;
    c.rho = rho;
    c.eta = 1.0;
    c.mu1 = 1.0 - step * rho;
    c.mu2 = step * rho;
    c.lambda_tilde.assign(static_cast<std::size_t>(filters.count()), step * lambda);
    c.filters = std::move(filters);
    c.h = [plf = PiecewiseLinear::from_huber_gradient(lambda / rho, controls)](double a) { return plf(a); };
    c.inner_iterations = inner;
    c.iterations = iterations;
    return c;
  }

  void validate() const {
    filters.validate();
    if (!(rho > 0.0)) throw std::invalid_argument("Solver2Config: rho must be positive");
    if (lambda_tilde.size() != static_cast<std::size_t>(filters.count()))
      throw DimensionMismatch("Solver2Config: lambda_tilde must have one entry per filter");
    if (!h) throw std::invalid_argument("Solver2Config: nonlinearity h is not set");
    if (inner_iterations < 1) throw std::invalid_argument("Solver2Config: inner iterations must be >= 1");
    if (iterations < 1) throw std::invalid_argument("Solver2Config: iterations must be >= 1");
  }
};

struct Solver2Trace {
  std::vector<ComplexGrid> x;                    // x^(n)
  std::vector<std::vector<ComplexGrid>> z_inner;  // z^(n,k), k = 0..N_t
  std::vector<ComplexGrid> z;                    // z^(n) = z^(n,N_t)
  std::vector<ComplexGrid> beta;                 // beta^(n)
};

namespace detail {

inline ComplexGrid apply_componentwise(const ComplexGrid& a, const std::function<double(double)>& f) {
  ComplexGrid out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = cplx(f(a[i].real()), f(a[i].imag()));
  return out;
}

}  // namespace detail

/// ADMM solver I: filter-domain splitting, soft-thresholding Z-step.
inline Solver1Trace admm_solver1(const ComplexGrid& y, const SamplingMask& mask, const Solver1Config& cfg) {
  cfg.validate();
  mask.check_matches(y, "admm_solver1");
  const int h = y.height();
  const int w = y.width();
  const auto L = static_cast<std::size_t>(cfg.filters.count());
  const ComplexGrid ym = apply_mask(y, mask);

  std::vector<ComplexGrid> spec;
  std::vector<double> denom(y.size());
  for (std::size_t i = 0; i < denom.size(); ++i) denom[i] = mask.weight(i);
  for (std::size_t l = 0; l < L; ++l) {
    spec.push_back(filter_spectrum(cfg.filters[l], h, w));
    for (std::size_t i = 0; i < denom.size(); ++i) denom[i] += cfg.rho[l] * std::norm(spec[l][i]);
  }
  detail::check_denominators(denom, w);

  std::vector<ComplexGrid> z(L, ComplexGrid(h, w)), beta(L, ComplexGrid(h, w));
  Solver1Trace trace;
  for (int n = 0; n < cfg.iterations; ++n) {
    ComplexGrid num = ym;
    for (std::size_t l = 0; l < L; ++l) {
      const ComplexGrid f = fft2_unitary(z[l] - beta[l]);
      for (std::size_t i = 0; i < num.size(); ++i) num[i] += cfg.rho[l] * std::conj(spec[l][i]) * f[i];
    }
    for (std::size_t i = 0; i < num.size(); ++i) num[i] /= denom[i];
    ComplexGrid x = ifft2_unitary(num);

    for (std::size_t l = 0; l < L; ++l) {
      const ComplexGrid dx = conv2_circular(x, cfg.filters[l]);
      const double th = cfg.theta[l];
      z[l] = detail::apply_componentwise(dx + beta[l], [th](double a) { return soft_threshold(a, th); });
      beta[l].axpy(cfg.eta[l], dx - z[l]);
    }
    trace.x.push_back(std::move(x));
    trace.z.push_back(z);
    trace.beta.push_back(beta);
  }
  return trace;
}

/// Augmented Lagrangian of solver I with g = l1 (per real/imag component), scaled-dual form:
/// 1/2||PFx - y||^2 + sum_l [lambda_l ||z_l||_1 + rho_l/2 (||D_l x - z_l + beta_l||^2 - ||beta_l||^2)].
inline double solver1_augmented_lagrangian(const ComplexGrid& x, const std::vector<ComplexGrid>& z,
                                           const std::vector<ComplexGrid>& beta, const ComplexGrid& y,
                                           const SamplingMask& mask, const Solver1Config& cfg) {
  const ComplexGrid r = apply_mask(fft2_unitary(x), mask) - apply_mask(y, mask);
  double val = 0.5 * real_dot(r, r);
  for (std::size_t l = 0; l < z.size(); ++l) {
    double l1 = 0.0;
    for (const auto& v : z[l].data()) l1 += std::abs(v.real()) + std::abs(v.imag());
    const ComplexGrid res = conv2_circular(x, cfg.filters[l]) - z[l] + beta[l];
    val += cfg.theta[l] * cfg.rho[l] * l1 + 0.5 * cfg.rho[l] * (real_dot(res, res) - real_dot(beta[l], beta[l]));
  }
  return val;
}

/// ADMM solver II: image-domain splitting, N_t gradient steps on the Z-subproblem.
inline Solver2Trace admm_solver2(const ComplexGrid& y, const SamplingMask& mask, const Solver2Config& cfg) {
  cfg.validate();
  mask.check_matches(y, "admm_solver2");
  const int h = y.height();
  const int w = y.width();
  const ComplexGrid ym = apply_mask(y, mask);
  ComplexGrid z(h, w), beta(h, w);
  Solver2Trace trace;
  for (int n = 0; n < cfg.iterations; ++n) {
    const ComplexGrid f = fft2_unitary(z - beta);
    ComplexGrid xs(h, w);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double m = mask.weight(i);
      xs[i] = (m * ym[i] + cfg.rho * f[i]) / (m + cfg.rho);
    }
    ComplexGrid x = ifft2_unitary(xs);

    const ComplexGrid v = x + beta;
    std::vector<ComplexGrid> inner{v};
    ComplexGrid zk = v;
    for (int k = 0; k < cfg.inner_iterations; ++k) {
      ComplexGrid reg(h, w);
      for (int l = 0; l < cfg.filters.count(); ++l) {
        const auto lu = static_cast<std::size_t>(l);
        const ComplexGrid hz = detail::apply_componentwise(conv2_circular(zk, cfg.filters[lu]), cfg.h);
        reg.axpy(cfg.lambda_tilde[lu], conv2_adjoint(hz, cfg.filters[lu]));
      }
      ComplexGrid next = cfg.mu1 * zk;
      next.axpy(cfg.mu2, v);
      next -= reg;
      zk = std::move(next);
      inner.push_back(zk);
    }
    beta.axpy(cfg.eta, x - zk);
    z = zk;
    trace.x.push_back(std::move(x));
    trace.z_inner.push_back(std::move(inner));
    trace.z.push_back(z);
    trace.beta.push_back(beta);
  }
  return trace;
}

}  // namespace admmnet
