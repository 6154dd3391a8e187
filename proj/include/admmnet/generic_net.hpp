#pragma once

// Generic-ADMM-Net: N_s unrolled iterations of image-domain ADMM whose z-update is an
// N_t-step learned denoiser. Stage n:
//   X: x_hat = (m y_hat + rho F(z - beta)) / (m + rho)
//   Z: z^0 = x + beta; for k = 1..N_t
//        c1_l = w1_l * z^(k-1) + b1_l
//        h_l  = S_PLF(c1_l)
//        c2   = sum_l w2_l * h_l + b2
//        z^k  = mu1 z^(k-1) + mu2 (x + beta) - c2
//   M: beta += eta (x - z^(N_t))
// then a terminal reconstruction with final_rho.
//
// In real mode the reconstruction output is projected onto its real part and the
// PLF acts on the real channel only. In complex mode (Complex-ADMM-Net) every grid is
// complex, filters stay real, biases are real offsets, and the PLF is applied to the
// real and imaginary channels separately with shared control values.

#include <algorithm>
#include <concepts>
#include <cstdint>
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

struct GenericSubIterParams {
  double mu1 = 0.0;
  double mu2 = 1.0;
  FilterBank w1;            // L kernels, w_f x w_f
  std::vector<double> b1;   // L biases
  FilterBank w2;            // fusion kernel: one f x f kernel per input channel
  double b2 = 0.0;
  PiecewiseLinear plf;
};

struct GenericStageParams {
  double rho_raw = 0.0;  // rho = softplus(rho_raw)
  std::vector<GenericSubIterParams> sub;
  double eta = 1.0;

  double rho() const noexcept { return softplus(rho_raw); }
};

/// Learnable parameters of a Generic-ADMM-Net. The same type holds gradients.
struct GenericNetParams {
  std::vector<GenericStageParams> stages;
  double final_rho_raw = 0.0;
  bool complex_mode = false;  // architecture flag, not learned

  double final_rho() const noexcept { return softplus(final_rho_raw); }
  int stage_count() const noexcept { return static_cast<int>(stages.size()); }
  int filter_count() const noexcept { return stages.empty() || stages[0].sub.empty() ? 0 : stages[0].sub[0].w1.count(); }

  void validate() const {
    if (stages.empty()) throw std::invalid_argument("GenericNetParams: needs at least one stage");
    const int L = filter_count();
    for (const auto& s : stages) {
      if (s.sub.empty()) throw std::invalid_argument("GenericNetParams: needs at least one sub-iteration per stage");
      for (const auto& k : s.sub) {
        k.w1.validate();
        k.w2.validate();
        if (k.w1.count() != L || static_cast<int>(k.b1.size()) != L)
          throw DimensionMismatch("GenericNetParams: w1/b1 channel count mismatch");
        if (k.w2.count() != L)
          throw DimensionMismatch("GenericNetParams: w2 input channels (" + std::to_string(k.w2.count()) +
                                  ") differ from w1 output channels (" + std::to_string(L) + ")");
      }
    }
  }
};

template <typename Params, typename F>
  requires std::same_as<std::remove_const_t<Params>, GenericNetParams>
void visit_params(Params& p, F&& f) {
  for (std::size_t n = 0; n < p.stages.size(); ++n) {
    auto& s = p.stages[n];
    const std::string pre = "stage" + std::to_string(n + 1) + ".";
    f("rho", pre + "rho", std::span(&s.rho_raw, 1));
    for (std::size_t k = 0; k < s.sub.size(); ++k) {
      auto& t = s.sub[k];
      const std::string sp = pre + "sub" + std::to_string(k + 1) + ".";
      f("mu1", sp + "mu1", std::span(&t.mu1, 1));
      f("mu2", sp + "mu2", std::span(&t.mu2, 1));
      for (std::size_t l = 0; l < t.w1.kernels.size(); ++l) f("w1", sp + "w1." + std::to_string(l), t.w1[l].taps());
      f("b1", sp + "b1", std::span(t.b1));
      for (std::size_t l = 0; l < t.w2.kernels.size(); ++l) f("w2", sp + "w2." + std::to_string(l), t.w2[l].taps());
      f("b2", sp + "b2", std::span(&t.b2, 1));
      f("q", sp + "q", t.plf.values());
    }
    f("eta", pre + "eta", std::span(&s.eta, 1));
  }
  f("rho", "final.rho", std::span(&p.final_rho_raw, 1));
}

using GenericGradients = GenericNetParams;

inline GenericNetParams zeros_like(const GenericNetParams& p) {
  GenericNetParams z = p;
  visit_params(z, [](auto&&, auto&&, std::span<double> s) { std::fill(s.begin(), s.end(), 0.0); });
  return z;
}

inline std::uint64_t fingerprint(const GenericNetParams& p) {
  detail::Fingerprint fp;
  visit_params(p, [&](auto&&, auto&&, std::span<const double> s) { fp.add(s); });
  fp.add(p.complex_mode ? 1.0 : 0.0);
  return fp.value();
}

struct GenericReconRecord {
  ComplexGrid v_hat;  // F(z - beta)
  ComplexGrid x_hat;
  double rho = 0.0;
};

struct GenericSubTape {
  ComplexGrid z_prev;
  std::vector<ComplexGrid> c1;  // PLF inputs
  std::vector<ComplexGrid> h;
  ComplexGrid c2;
  ComplexGrid z;
};

struct GenericStageTape {
  GenericReconRecord recon;
  ComplexGrid x;
  ComplexGrid v;  // x + beta^(n-1)
  std::vector<GenericSubTape> sub;
  ComplexGrid z;
  ComplexGrid beta;
};

struct GenericTape {
  std::vector<GenericStageTape> stages;
  GenericReconRecord final_recon;
  ComplexGrid output;
  std::uint64_t params_fingerprint = 0;
  bool recorded = false;
};

struct GenericForwardResult {
  ComplexGrid image;
  GenericTape tape;
};

struct DenoiseResult {
  ComplexGrid z;
  std::vector<GenericSubTape> sub;  // populated iff recording
};

/// Gradients flowing out of one multiplier layer, logged during the backward pass.
struct MultiplierAdjoint {
  ComplexGrid grad_x;  // contribution to dE/dx^(n)
  ComplexGrid grad_z;  // contribution to dE/dz^(n)
};

namespace detail {

inline ComplexGrid generic_recon_impl(const ComplexGrid& y, const SamplingMask& mask, double rho,
                                      const ComplexGrid* z, const ComplexGrid* beta, bool real_only,
                                      GenericReconRecord* rec) {
  mask.check_matches(y, "generic_recon_layer");
  if (!(rho > 0.0)) throw std::invalid_argument("generic_recon_layer: rho must be positive");
  const int h = y.height();
  const int w = y.width();
  ComplexGrid v(h, w);
  if (z) v += *z;
  if (beta) v -= *beta;
  ComplexGrid vh = (z || beta) ? fft2_unitary(v) : ComplexGrid(h, w);
  ComplexGrid xh(h, w);
  for (std::size_t i = 0; i < xh.size(); ++i) {
    const double m = mask.weight(i);
    xh[i] = (m * (mask.kept(i) ? y[i] : cplx{}) + rho * vh[i]) / (m + rho);
  }
  ComplexGrid x = ifft2_unitary(xh);
  if (rec) {
    rec->v_hat = std::move(vh);
    rec->x_hat = xh;
    rec->rho = rho;
  }
  return real_only ? real_part(x) : x;
}

struct GenericReconGrad {
  double drho = 0.0;  // w.r.t. rho
  ComplexGrid g_v;    // w.r.t. v = z - beta
};

inline GenericReconGrad generic_recon_backward(const GenericReconRecord& R, const SamplingMask& mask,
                                               const ComplexGrid& g_x, bool real_only) {
  const ComplexGrid G = fft2_unitary(real_only ? real_part(g_x) : g_x);
  GenericReconGrad out;
  ComplexGrid gvh(G.height(), G.width());
  for (std::size_t k = 0; k < G.size(); ++k) {
    const double q = 1.0 / (mask.weight(k) + R.rho);
    out.drho += (std::conj(G[k]) * (q * (R.v_hat[k] - R.x_hat[k]))).real();
    gvh[k] = (R.rho * q) * G[k];
  }
  out.g_v = ifft2_unitary(gvh);
  return out;
}

inline ComplexGrid plf_channels(const PiecewiseLinear& f, const ComplexGrid& a, bool complex_mode) {
  ComplexGrid out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = cplx(f.eval(a[i].real()), complex_mode ? f.eval(a[i].imag()) : 0.0);
  return out;
}

inline void add_real_bias(ComplexGrid& g, double b) {
  for (auto& v : g.data()) v = cplx(v.real() + b, v.imag());
}

}  // namespace detail

/// Reconstruction layer X with z = beta = 0.
inline ComplexGrid generic_recon_layer(const ComplexGrid& y, const SamplingMask& mask, double rho) {
  return detail::generic_recon_impl(y, mask, rho, nullptr, nullptr, false, nullptr);
}

/// Reconstruction layer X: x = F^T (P^T P + rho I)^-1 [P^T y + rho F (z - beta)].
inline ComplexGrid generic_recon_layer(const ComplexGrid& y, const SamplingMask& mask, double rho,
                                       const ComplexGrid& z, const ComplexGrid& beta) {
  z.check_shape(beta, "generic_recon_layer");
  return detail::generic_recon_impl(y, mask, rho, &z, &beta, false, nullptr);
}

/// Denoising sub-stage Z: N_t rounds of addition, two convolutions and a PLF.
inline DenoiseResult denoise_substage(const ComplexGrid& x, const ComplexGrid& beta,
                                      std::span<const GenericSubIterParams> params, bool complex_mode = false,
                                      bool record = false) {
  x.check_shape(beta, "denoise_substage");
  const ComplexGrid v = x + beta;
  DenoiseResult res;
  ComplexGrid z = v;
  for (const auto& p : params) {
    if (p.w2.count() != p.w1.count() || p.b1.size() != static_cast<std::size_t>(p.w1.count()))
      throw DimensionMismatch("denoise_substage: w1 produces " + std::to_string(p.w1.count()) +
                              " channels but w2 consumes " + std::to_string(p.w2.count()));
    GenericSubTape st;
    ComplexGrid c2(x.height(), x.width());
    for (std::size_t l = 0; l < p.w1.kernels.size(); ++l) {
      ComplexGrid c1 = conv2_circular(z, p.w1[l]);
      detail::add_real_bias(c1, p.b1[l]);
      ComplexGrid h = detail::plf_channels(p.plf, c1, complex_mode);
      c2 += conv2_circular(h, p.w2[l]);
      if (record) {
        st.c1.push_back(std::move(c1));
        st.h.push_back(std::move(h));
      }
    }
    detail::add_real_bias(c2, p.b2);
    ComplexGrid next = p.mu1 * z;
    next.axpy(p.mu2, v);
    next -= c2;
    if (record) {
      st.z_prev = std::move(z);
      st.c2 = std::move(c2);
      st.z = next;
      res.sub.push_back(std::move(st));
    }
    z = std::move(next);
  }
  res.z = std::move(z);
  return res;
}

inline GenericForwardResult generic_forward(const ComplexGrid& y, const SamplingMask& mask,
                                            const GenericNetParams& params, bool record = false) {
  params.validate();
  mask.check_matches(y, "generic_forward");
  const bool real_only = !params.complex_mode;
  GenericForwardResult res;
  GenericTape& tape = res.tape;
  ComplexGrid z(y.height(), y.width()), beta(y.height(), y.width());
  bool first = true;
  for (const auto& s : params.stages) {
    GenericStageTape st;
    ComplexGrid x = detail::generic_recon_impl(y, mask, s.rho(), first ? nullptr : &z, first ? nullptr : &beta,
                                               real_only, record ? &st.recon : nullptr);
    first = false;
    DenoiseResult dn = denoise_substage(x, beta, s.sub, params.complex_mode, record);
    ComplexGrid bn = beta;
    bn.axpy(s.eta, x - dn.z);
    if (record) {
      st.v = x + beta;
      st.x = std::move(x);
      st.sub = std::move(dn.sub);
      st.z = dn.z;
      st.beta = bn;
      tape.stages.push_back(std::move(st));
    }
    z = std::move(dn.z);
    beta = std::move(bn);
  }
  res.image = detail::generic_recon_impl(y, mask, params.final_rho(), &z, &beta, real_only,
                                         record ? &tape.final_recon : nullptr);
  if (!all_finite(res.image)) throw std::runtime_error("generic_forward: non-finite output");
  if (record) {
    tape.output = res.image;
    tape.params_fingerprint = fingerprint(params);
    tape.recorded = true;
  }
  return res;
}

/// Multiplier layer backward: given dE/dbeta^(n), the contributions to x^(n) and z^(n).
inline MultiplierAdjoint generic_multiplier_backward(const ComplexGrid& grad_beta, double eta) {
  return {eta * grad_beta, -eta * grad_beta};
}

/// Reverse-mode gradient of a scalar loss given dE/d(output). rho entries are with
/// respect to the raw (pre-softplus) values. If log is non-null, the multiplier-layer
/// adjoints of every stage are appended to it (last stage first).
inline GenericGradients generic_backward(const GenericTape& tape, const ComplexGrid& y, const SamplingMask& mask,
                                         const GenericNetParams& params, const ComplexGrid& grad_at_output,
                                         std::vector<MultiplierAdjoint>* log = nullptr) {
  if (!tape.recorded) throw MissingTape("generic_backward: tape was not recorded");
  if (tape.stages.size() != params.stages.size() || tape.params_fingerprint != fingerprint(params))
    throw MissingTape("generic_backward: tape is stale (recorded with different parameters)");
  mask.check_matches(y, "generic_backward");
  tape.output.check_shape(grad_at_output, "generic_backward");
  const bool cm = params.complex_mode;
  const bool real_only = !cm;

  GenericNetParams grad = zeros_like(params);
  auto fin = detail::generic_recon_backward(tape.final_recon, mask, grad_at_output, real_only);
  grad.final_rho_raw = fin.drho * sigmoid(params.final_rho_raw);
  ComplexGrid gz = fin.g_v;          // dE/dz^(n)
  ComplexGrid gb = -1.0 * fin.g_v;   // dE/dbeta^(n)

  for (std::size_t n = params.stages.size(); n-- > 0;) {
    const auto& s = params.stages[n];
    const auto& st = tape.stages[n];
    auto& gs = grad.stages[n];
    // M
    gs.eta = real_dot(gb, st.x - st.z);
    const MultiplierAdjoint m = generic_multiplier_backward(gb, s.eta);
    if (log) log->push_back(m);
    ComplexGrid gx = m.grad_x;
    ComplexGrid gb_prev = gb;
    gz += m.grad_z;
    // Z, sub-iterations in reverse
    ComplexGrid gv(gx.height(), gx.width());
    ComplexGrid gzk = std::move(gz);
    for (std::size_t k = s.sub.size(); k-- > 0;) {
      const auto& p = s.sub[k];
      const auto& t = st.sub[k];
      auto& gp = gs.sub[k];
      gp.mu1 = real_dot(gzk, t.z_prev);
      gp.mu2 = real_dot(gzk, st.v);
      gv.axpy(p.mu2, gzk);
      ComplexGrid gprev = p.mu1 * gzk;
      // c2 enters with a minus sign
      const ComplexGrid gc2 = -1.0 * gzk;
      double db2 = 0.0;
      for (const auto& v : gc2.data()) db2 += v.real();
      gp.b2 = db2;
      auto dq = gp.plf.values();
      for (std::size_t l = 0; l < p.w1.kernels.size(); ++l) {
        gp.w2[l] = conv2_kernel_gradient(gc2, t.h[l], p.w2.size());
        const ComplexGrid gh = conv2_adjoint(gc2, p.w2[l]);
        ComplexGrid gc1(gh.height(), gh.width());
        const ComplexGrid& c1 = t.c1[l];
        for (std::size_t i = 0; i < gc1.size(); ++i) {
          const double gr = gh[i].real();
          p.plf.accumulate_control_grad(c1[i].real(), gr, dq);
          double gi = 0.0;
          if (cm) {
            p.plf.accumulate_control_grad(c1[i].imag(), gh[i].imag(), dq);
            gi = p.plf.grad_input(c1[i].imag()) * gh[i].imag();
          }
          gc1[i] = cplx(p.plf.grad_input(c1[i].real()) * gr, gi);
        }
        double db1 = 0.0;
        for (const auto& v : gc1.data()) db1 += v.real();
        gp.b1[l] = db1;
        gp.w1[l] = conv2_kernel_gradient(gc1, t.z_prev, p.w1.size());
        gprev += conv2_adjoint(gc1, p.w1[l]);
      }
      gzk = std::move(gprev);
    }
    gv += gzk;  // z^(n,0) = v
    gx += gv;
    gb_prev += gv;
    // X
    auto rec = detail::generic_recon_backward(st.recon, mask, gx, real_only);
    gs.rho_raw = rec.drho * sigmoid(s.rho_raw);
    gz = rec.g_v;
    gb_prev -= rec.g_v;
    gb = std::move(gb_prev);
  }
  return grad;
}

/// Nonlinearity used by the model-based initialization of the Z-layer.
enum class DenoiserInit {
  huber_gradient,  // q_i = clip(p_i / theta, -1, 1): gradient of the smoothed l1 penalty
  soft_threshold,  // q_i = S(p_i; theta)
};

struct GenericArch {
  int filters = 8;         // L
  int filter_size = 3;     // w_f
  int fusion_size = 3;     // f
  int stages = 3;          // N_s
  int sub_iterations = 1;  // N_t
  int controls = PiecewiseLinear::default_controls;
  bool complex_mode = false;
};

/// Model-based initialization reproducing ADMM solver II with DCT filters:
/// w1 = D_l, w2_l = l_r lambda D_l^T (centered in f x f), mu1 = 1 - l_r rho, mu2 = l_r rho, eta = 1.
inline GenericNetParams generic_model_init(const GenericArch& arch, double rho, double lambda, double step,
                                           DenoiserInit h = DenoiserInit::huber_gradient) {
  const FilterBank dct = dct_filter_bank(arch.filter_size, true);
  if (arch.filters < 1 || arch.filters > dct.count())
    throw std::invalid_argument("generic_model_init: model-based init supports 1.." + std::to_string(dct.count()) +
                                " filters for size " + std::to_string(arch.filter_size));
  if (arch.fusion_size < arch.filter_size)
    throw std::invalid_argument("generic_model_init: fusion size must be >= filter size");
  const double theta = lambda / rho;
  GenericSubIterParams sub;
  sub.mu1 = 1.0 - step * rho;
  sub.mu2 = step * rho;
  sub.b1.assign(static_cast<std::size_t>(arch.filters), 0.0);
  sub.b2 = 0.0;
  sub.plf = h == DenoiserInit::huber_gradient ? PiecewiseLinear::from_huber_gradient(theta, arch.controls)
                                              : PiecewiseLinear::from_soft_threshold(theta, arch.controls);
  const int off = (arch.fusion_size - arch.filter_size) / 2;
  for (int l = 0; l < arch.filters; ++l) {
    const Kernel& d = dct[static_cast<std::size_t>(l)];
    sub.w1.kernels.push_back(d);
    Kernel w2(arch.fusion_size);
    const Kernel r = d.reflected().scaled(step * lambda);
    for (int a = 0; a < d.size(); ++a)
      for (int b = 0; b < d.size(); ++b) w2(a + off, b + off) = r(a, b);
    sub.w2.kernels.push_back(std::move(w2));
  }
  GenericNetParams p;
  p.complex_mode = arch.complex_mode;
  for (int n = 0; n < arch.stages; ++n) {
    GenericStageParams s;
    s.rho_raw = softplus_inverse(rho);
    s.sub.assign(static_cast<std::size_t>(arch.sub_iterations), sub);
    s.eta = 1.0;
    p.stages.push_back(std::move(s));
  }
  p.final_rho_raw = softplus_inverse(rho);
  p.validate();
  return p;
}

/// Random initialization: He-scaled Gaussian w1, w2 (w2 additionally scaled by the
/// gradient step l_r rho), zero biases, ReLU PLFs, scalar parameters as in the model-based case.
inline GenericNetParams generic_random_init(const GenericArch& arch, double rho, double step, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g1(0.0, std::sqrt(2.0 / (arch.filter_size * arch.filter_size)));
  std::normal_distribution<double> g2(0.0, step * rho * std::sqrt(2.0 / (arch.fusion_size * arch.fusion_size * arch.filters)));
  GenericNetParams p;
  p.complex_mode = arch.complex_mode;
  for (int n = 0; n < arch.stages; ++n) {
    GenericStageParams s;
    s.rho_raw = softplus_inverse(rho);
    for (int k = 0; k < arch.sub_iterations; ++k) {
      GenericSubIterParams sub;
      sub.mu1 = 1.0 - step * rho;
      sub.mu2 = step * rho;
      sub.w1 = FilterBank(arch.filters, arch.filter_size);
      sub.w2 = FilterBank(arch.filters, arch.fusion_size);
      for (auto& k1 : sub.w1.kernels)
        for (double& t : k1.taps()) t = g1(rng);
      for (auto& k2 : sub.w2.kernels)
        for (double& t : k2.taps()) t = g2(rng);
      sub.b1.assign(static_cast<std::size_t>(arch.filters), 0.0);
      sub.plf = PiecewiseLinear::from_relu(arch.controls);
      s.sub.push_back(std::move(sub));
    }
    s.eta = 1.0;
    p.stages.push_back(std::move(s));
  }
  p.final_rho_raw = softplus_inverse(rho);
  p.validate();
  return p;
}

}  // namespace admmnet
