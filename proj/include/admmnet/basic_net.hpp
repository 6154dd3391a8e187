#pragma once

// Basic-ADMM-Net: N_s unrolled iterations of filter-domain ADMM. Each stage runs
//   X: per-frequency reconstruction with filters H and penalties rho
//   C: c_l = D_l x
//   S: z_l = S_PLF,l(c_l + beta_l)
//   M: beta_l += eta_l (c_l - z_l)
// followed by a terminal reconstruction layer with its own (H, rho).

#include <algorithm>
#include <array>
#include <concepts>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "admmnet/detail/fingerprint.hpp"
#include "admmnet/filters.hpp"
#include "admmnet/plf.hpp"
#include "admmnet/positive.hpp"
#include "admmnet/sampling.hpp"

namespace admmnet {

struct BasicStageParams {
  FilterBank H;                     // reconstruction-layer filters
  std::vector<double> rho_raw;      // rho_l = softplus(rho_raw_l)
  FilterBank D;                     // convolution-layer filters
  std::vector<PiecewiseLinear> plf; // one nonlinearity per filter
  std::vector<double> eta;          // multiplier update rates

  double rho(std::size_t l) const noexcept { return softplus(rho_raw[l]); }
};

struct BasicFinalParams {
  FilterBank H;
  std::vector<double> rho_raw;

  double rho(std::size_t l) const noexcept { return softplus(rho_raw[l]); }
};

/// Learnable parameters of a Basic-ADMM-Net. The same type holds gradients, in
/// which case rho_raw carries dE/d(rho_raw).
struct BasicNetParams {
  std::vector<BasicStageParams> stages;
  BasicFinalParams final_layer;

  int stage_count() const noexcept { return static_cast<int>(stages.size()); }
  int filter_count() const noexcept { return final_layer.H.count(); }
  int filter_size() const noexcept { return final_layer.H.size(); }

  void validate() const {
    if (stages.empty()) throw std::invalid_argument("BasicNetParams: needs at least one stage");
    final_layer.H.validate();
    const int L = filter_count();
    const int wf = filter_size();
    auto check_bank = [&](const FilterBank& b, const char* what) {
      b.validate();
      if (b.count() != L || b.size() != wf)
        throw DimensionMismatch(std::string("BasicNetParams: inconsistent filter bank ") + what);
    };
    if (final_layer.rho_raw.size() != static_cast<std::size_t>(L))
      throw DimensionMismatch("BasicNetParams: final rho count");
    for (const auto& s : stages) {
      check_bank(s.H, "H");
      check_bank(s.D, "D");
      const auto n = static_cast<std::size_t>(L);
      if (s.rho_raw.size() != n || s.plf.size() != n || s.eta.size() != n)
        throw DimensionMismatch("BasicNetParams: per-filter parameter count");
    }
  }
};

/// Visit every learnable slice in a fixed order: f(class, name, span<double>).
template <typename Params, typename F>
  requires std::same_as<std::remove_const_t<Params>, BasicNetParams>
void visit_params(Params& p, F&& f) {
  for (std::size_t n = 0; n < p.stages.size(); ++n) {
    auto& s = p.stages[n];
    const std::string pre = "stage" + std::to_string(n + 1) + ".";
    for (std::size_t l = 0; l < s.H.kernels.size(); ++l) f("H", pre + "H" + std::to_string(l), s.H[l].taps());
    f("rho", pre + "rho", std::span(s.rho_raw));
    for (std::size_t l = 0; l < s.D.kernels.size(); ++l) f("D", pre + "D" + std::to_string(l), s.D[l].taps());
    for (std::size_t l = 0; l < s.plf.size(); ++l) f("q", pre + "q" + std::to_string(l), s.plf[l].values());
    f("eta", pre + "eta", std::span(s.eta));
  }
  for (std::size_t l = 0; l < p.final_layer.H.kernels.size(); ++l)
    f("H", "final.H" + std::to_string(l), p.final_layer.H[l].taps());
  f("rho", "final.rho", std::span(p.final_layer.rho_raw));
}

/// All-zero parameter set with the same shape (used for gradients).
/// Gradients share the parameter layout.
using BasicGradients = BasicNetParams;

inline BasicNetParams zeros_like(const BasicNetParams& p) {
  BasicNetParams z = p;
  visit_params(z, [](auto&&, auto&&, std::span<double> s) { std::fill(s.begin(), s.end(), 0.0); });
  return z;
}

inline std::uint64_t fingerprint(const BasicNetParams& p) {
  detail::Fingerprint fp;
  visit_params(p, [&](auto&&, auto&&, std::span<const double> s) { fp.add(s); });
  return fp.value();
}

/// Cached per-frequency quantities of one reconstruction layer.
struct BasicReconRecord {
  std::vector<ComplexGrid> spectra;  // h_hat_l
  std::vector<ComplexGrid> v_hat;    // F(z_l - beta_l)
  std::vector<double> denom;         // m_k + sum_l rho_l |h_hat_l,k|^2
  ComplexGrid x_hat;
};

struct BasicStageTape {
  BasicReconRecord recon;
  ComplexGrid x;
  std::vector<ComplexGrid> c;     // D_l x
  std::vector<ComplexGrid> a;     // c_l + beta_l^(n-1), PLF input
  std::vector<ComplexGrid> z;
  std::vector<ComplexGrid> beta;
};

struct BasicTape {
  std::vector<BasicStageTape> stages;
  BasicReconRecord final_recon;
  ComplexGrid output;
  std::uint64_t params_fingerprint = 0;
  bool recorded = false;
};

struct BasicForwardResult {
  ComplexGrid image;
  BasicTape tape;  // populated iff recording was requested
};

namespace detail {

inline ComplexGrid plf_componentwise(const PiecewiseLinear& f, const ComplexGrid& a) {
  ComplexGrid out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = cplx(f.eval(a[i].real()), f.eval(a[i].imag()));
  return out;
}

// Reconstruction solve x_hat = [m y + sum rho_l conj(h_l) F(z_l - beta_l)] / [m + sum rho_l |h_l|^2].
// Empty z / beta mean zeros.
inline ComplexGrid basic_recon_impl(const ComplexGrid& y, const SamplingMask& mask, const FilterBank& H,
                                    std::span<const double> rho, const std::vector<ComplexGrid>& z,
                                    const std::vector<ComplexGrid>& beta, BasicReconRecord* rec) {
  mask.check_matches(y, "basic_recon_layer");
  H.validate();
  const int h = y.height();
  const int w = y.width();
  const auto L = static_cast<std::size_t>(H.count());
  if (rho.size() != L) throw DimensionMismatch("basic_recon_layer: rho count differs from filter count");
  if ((!z.empty() && z.size() != L) || (!beta.empty() && beta.size() != L))
    throw DimensionMismatch("basic_recon_layer: z/beta channel count differs from filter count");
  for (double r : rho)
    if (!(r > 0.0)) throw std::invalid_argument("basic_recon_layer: rho must be positive");

  BasicReconRecord local;
  BasicReconRecord& R = rec ? *rec : local;
  R.spectra.clear();
  R.v_hat.clear();
  R.denom.assign(y.size(), 0.0);
  ComplexGrid num(h, w);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (mask.kept(i)) {
      num[i] = y[i];
      R.denom[i] = 1.0;
    }
  }
  const bool has_v = !z.empty() || !beta.empty();
  for (std::size_t l = 0; l < L; ++l) {
    R.spectra.push_back(filter_spectrum(H[l], h, w));
    const ComplexGrid& sp = R.spectra.back();
    for (std::size_t i = 0; i < y.size(); ++i) R.denom[i] += rho[l] * std::norm(sp[i]);
    if (has_v) {
      ComplexGrid v = z.empty() ? ComplexGrid(h, w) : z[l];
      if (!beta.empty()) v -= beta[l];
      R.v_hat.push_back(fft2_unitary(v));
      const ComplexGrid& vh = R.v_hat.back();
      for (std::size_t i = 0; i < y.size(); ++i) num[i] += rho[l] * std::conj(sp[i]) * vh[i];
    } else {
      R.v_hat.emplace_back(h, w);
    }
  }
  detail::check_denominators(R.denom, w);
  for (std::size_t i = 0; i < y.size(); ++i) num[i] /= R.denom[i];
  R.x_hat = num;
  return ifft2_unitary(num);
}

struct BasicReconGrad {
  FilterBank dH;
  std::vector<double> drho;         // w.r.t. rho itself
  std::vector<ComplexGrid> g_v;     // w.r.t. v_l = z_l - beta_l
};

inline BasicReconGrad basic_recon_backward(const BasicReconRecord& R, std::span<const double> rho, int filter_size,
                                           const ComplexGrid& g_x) {
  const int h = g_x.height();
  const int w = g_x.width();
  const double sqrt_n = std::sqrt(static_cast<double>(g_x.size()));
  const std::size_t L = R.spectra.size();
  const ComplexGrid G = fft2_unitary(g_x);
  BasicReconGrad out;
  out.dH = FilterBank(static_cast<int>(L), filter_size);
  out.drho.assign(L, 0.0);
  const int rad = filter_size / 2;
  for (std::size_t l = 0; l < L; ++l) {
    const ComplexGrid& sp = R.spectra[l];
    const ComplexGrid& vh = R.v_hat[l];
    ComplexGrid A(h, w), Bh(h, w), gvh(h, w);
    double drho = 0.0;
    for (std::size_t k = 0; k < G.size(); ++k) {
      const double d = R.denom[k];
      const cplx cg = std::conj(G[k]);
      const cplx dx = (std::conj(sp[k]) * vh[k] - R.x_hat[k] * std::norm(sp[k])) / d;
      drho += (cg * dx).real();
      A[k] = cg * rho[l] * vh[k] / d;
      const double b = (cg * R.x_hat[k]).real() * rho[l] / d;
      Bh[k] = b * std::conj(sp[k]);
      gvh[k] = rho[l] * sp[k] * G[k] / d;
    }
    out.drho[l] = drho;
    const ComplexGrid t1 = ifft2_unitary(A);
    const ComplexGrid t2 = fft2_unitary(Bh);
    Kernel& dk = out.dH[l];
    for (int a = 0; a < filter_size; ++a)
      for (int b = 0; b < filter_size; ++b) {
        const int r = wrap(a - rad, h);
        const int c = wrap(b - rad, w);
        dk(a, b) = sqrt_n * (t1(r, c).real() - 2.0 * t2(r, c).real());
      }
    out.g_v.push_back(ifft2_unitary(gvh));
  }
  return out;
}

inline std::vector<double> rho_values(std::span<const double> raw) {
  std::vector<double> r(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) r[i] = softplus(raw[i]);
  return r;
}

}  // namespace detail

/// Reconstruction layer X. z and beta hold one grid per filter; pass empty vectors for zeros.
inline ComplexGrid basic_recon_layer(const ComplexGrid& y, const SamplingMask& mask, const FilterBank& H,
                                     std::span<const double> rho, const std::vector<ComplexGrid>& z = {},
                                     const std::vector<ComplexGrid>& beta = {}) {
  return detail::basic_recon_impl(y, mask, H, rho, z, beta, nullptr);
}

/// Convolution layer C: c_l = D_l x.
inline std::vector<ComplexGrid> basic_conv_layer(const ComplexGrid& x, const FilterBank& D) {
  std::vector<ComplexGrid> c;
  for (const auto& k : D.kernels) c.push_back(conv2_circular(x, k));
  return c;
}

/// Nonlinear layer S: z_l = S_PLF,l(c_l + beta_l), real and imaginary parts separately.
inline std::vector<ComplexGrid> basic_nonlinear_layer(const std::vector<ComplexGrid>& c,
                                                      const std::vector<ComplexGrid>& beta,
                                                      const std::vector<PiecewiseLinear>& plf) {
  std::vector<ComplexGrid> z;
  for (std::size_t l = 0; l < c.size(); ++l) z.push_back(detail::plf_componentwise(plf[l], c[l] + beta[l]));
  return z;
}

/// Multiplier layer M: beta_l + eta_l (c_l - z_l).
inline std::vector<ComplexGrid> basic_multiplier_layer(const std::vector<ComplexGrid>& beta,
                                                       const std::vector<ComplexGrid>& c,
                                                       const std::vector<ComplexGrid>& z,
                                                       std::span<const double> eta) {
  std::vector<ComplexGrid> out = beta;
  for (std::size_t l = 0; l < out.size(); ++l) out[l].axpy(eta[l], c[l] - z[l]);
  return out;
}

inline BasicForwardResult basic_forward(const ComplexGrid& y, const SamplingMask& mask, const BasicNetParams& params,
                                        bool record = false) {
  params.validate();
  mask.check_matches(y, "basic_forward");
  const int h = y.height();
  const int w = y.width();
  const auto L = static_cast<std::size_t>(params.filter_count());
  BasicForwardResult res;
  BasicTape& tape = res.tape;
  std::vector<ComplexGrid> z, beta;  // empty = zeros at stage 1
  for (const auto& s : params.stages) {
    BasicStageTape st;
    const auto rho = detail::rho_values(s.rho_raw);
    ComplexGrid x = detail::basic_recon_impl(y, mask, s.H, rho, z, beta, record ? &st.recon : nullptr);
    if (beta.empty()) beta.assign(L, ComplexGrid(h, w));
    std::vector<ComplexGrid> c = basic_conv_layer(x, s.D);
    std::vector<ComplexGrid> a(L), zn(L);
    for (std::size_t l = 0; l < L; ++l) {
      a[l] = c[l] + beta[l];
      zn[l] = detail::plf_componentwise(s.plf[l], a[l]);
    }
    std::vector<ComplexGrid> bn = basic_multiplier_layer(beta, c, zn, s.eta);
    if (record) {
      st.x = std::move(x);
      st.c = std::move(c);
      st.a = std::move(a);
      st.z = zn;
      st.beta = bn;
      tape.stages.push_back(std::move(st));
    }
    z = std::move(zn);
    beta = std::move(bn);
  }
  const auto rho = detail::rho_values(params.final_layer.rho_raw);
  res.image = detail::basic_recon_impl(y, mask, params.final_layer.H, rho, z, beta,
                                       record ? &tape.final_recon : nullptr);
  if (!all_finite(res.image)) throw std::runtime_error("basic_forward: non-finite output");
  if (record) {
    tape.output = res.image;
    tape.params_fingerprint = fingerprint(params);
    tape.recorded = true;
  }
  return res;
}

/// Reverse-mode gradient of a scalar loss given dE/d(output). Returns a parameter-shaped
/// gradient; rho entries are with respect to the raw (pre-softplus) values.
inline BasicGradients basic_backward(const BasicTape& tape, const ComplexGrid& y, const SamplingMask& mask,
                                     const BasicNetParams& params, const ComplexGrid& grad_at_output) {
  if (!tape.recorded) throw MissingTape("basic_backward: tape was not recorded");
  if (tape.stages.size() != params.stages.size() || tape.params_fingerprint != fingerprint(params))
    throw MissingTape("basic_backward: tape is stale (recorded with different parameters)");
  mask.check_matches(y, "basic_backward");
  tape.output.check_shape(grad_at_output, "basic_backward");

  const int wf = params.filter_size();
  const auto L = static_cast<std::size_t>(params.filter_count());
  BasicNetParams grad = zeros_like(params);

  // terminal reconstruction
  auto fin = detail::basic_recon_backward(tape.final_recon, detail::rho_values(params.final_layer.rho_raw), wf,
                                          grad_at_output);
  grad.final_layer.H = fin.dH;
  for (std::size_t l = 0; l < L; ++l)
    grad.final_layer.rho_raw[l] = fin.drho[l] * sigmoid(params.final_layer.rho_raw[l]);
  // gradients w.r.t. z^(n), beta^(n) of the current stage
  std::vector<ComplexGrid> gz = fin.g_v;
  std::vector<ComplexGrid> gb;
  for (auto& g : fin.g_v) gb.push_back(-1.0 * g);

  for (std::size_t n = params.stages.size(); n-- > 0;) {
    const auto& s = params.stages[n];
    const auto& st = tape.stages[n];
    auto& gs = grad.stages[n];
    const int h = st.x.height();
    const int w = st.x.width();
    std::vector<ComplexGrid> gb_prev(L, ComplexGrid(h, w));
    ComplexGrid gx(h, w);
    for (std::size_t l = 0; l < L; ++l) {
      // M: beta = beta_prev + eta (c - z)
      ComplexGrid cz = st.c[l] - st.z[l];
      gs.eta[l] = real_dot(gb[l], cz);
      gb_prev[l] += gb[l];
      ComplexGrid gc = s.eta[l] * gb[l];
      gz[l].axpy(-s.eta[l], gb[l]);
      // S: z = plf(a), a = c + beta_prev
      ComplexGrid ga(h, w);
      auto dq = gs.plf[l].values();
      for (std::size_t i = 0; i < ga.size(); ++i) {
        const cplx a = st.a[l][i];
        const cplx g = gz[l][i];
        ga[i] = cplx(s.plf[l].grad_input(a.real()) * g.real(), s.plf[l].grad_input(a.imag()) * g.imag());
        s.plf[l].accumulate_control_grad(a.real(), g.real(), dq);
        s.plf[l].accumulate_control_grad(a.imag(), g.imag(), dq);
      }
      gc += ga;
      gb_prev[l] += ga;
      // C: c = D x
      Kernel dD = conv2_kernel_gradient(gc, st.x, wf);
      gs.D[l] = dD;
      gx += conv2_adjoint(gc, s.D[l]);
    }
    // X
    auto rec = detail::basic_recon_backward(st.recon, detail::rho_values(s.rho_raw), wf, gx);
    gs.H = rec.dH;
    for (std::size_t l = 0; l < L; ++l) gs.rho_raw[l] = rec.drho[l] * sigmoid(s.rho_raw[l]);
    for (std::size_t l = 0; l < L; ++l) {
      gz[l] = rec.g_v[l];
      gb_prev[l] -= rec.g_v[l];
    }
    gb = std::move(gb_prev);
  }
  return grad;
}

/// Model-based initialization: DCT filters for H and D, soft-threshold PLFs with
/// threshold lambda / rho, eta = 1. Reproduces soft-threshold ADMM solver I.
inline BasicNetParams basic_model_init(int filters, int filter_size, int stages, int controls, double rho,
                                       double lambda) {
  const FilterBank dct = dct_filter_bank(filter_size, true);
  if (filters < 1 || filters > dct.count())
    throw std::invalid_argument("basic_model_init: model-based init supports 1.." + std::to_string(dct.count()) +
                                " filters for size " + std::to_string(filter_size));
  FilterBank bank(std::vector<Kernel>(dct.kernels.begin(), dct.kernels.begin() + filters));
  const auto L = static_cast<std::size_t>(filters);
  BasicNetParams p;
  for (int n = 0; n < stages; ++n) {
    BasicStageParams s;
    s.H = bank;
    s.D = bank;
    s.rho_raw.assign(L, softplus_inverse(rho));
    s.plf.assign(L, PiecewiseLinear::from_soft_threshold(lambda / rho, controls));
    s.eta.assign(L, 1.0);
    p.stages.push_back(std::move(s));
  }
  p.final_layer.H = bank;
  p.final_layer.rho_raw.assign(L, softplus_inverse(rho));
  p.validate();
  return p;
}

/// Random initialization: He-scaled Gaussian filters, ReLU PLFs, scalars as in the model-based case.
inline BasicNetParams basic_random_init(int filters, int filter_size, int stages, int controls, double rho,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / (filter_size * filter_size)));
  auto random_bank = [&] {
    FilterBank b(filters, filter_size);
    for (auto& k : b.kernels)
      for (double& t : k.taps()) t = gauss(rng);
    return b;
  };
  const auto L = static_cast<std::size_t>(filters);
  BasicNetParams p;
  for (int n = 0; n < stages; ++n) {
    BasicStageParams s;
    s.H = random_bank();
    s.D = random_bank();
    s.rho_raw.assign(L, softplus_inverse(rho));
    s.plf.assign(L, PiecewiseLinear::from_relu(controls));
    s.eta.assign(L, 1.0);
    p.stages.push_back(std::move(s));
  }
  p.final_layer.H = random_bank();
  p.final_layer.rho_raw.assign(L, softplus_inverse(rho));
  p.validate();
  return p;
}

}  // namespace admmnet
