#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace admmnet;
using oracle::Mat;
using oracle::Vec;

namespace {

struct Problem {
  ComplexGrid x0, y;
  SamplingMask mask;
};

Problem problem(int n, double rate, std::uint64_t seed, bool phase = false) {
  SamplingMask m = pseudo_radial_mask(n, rate);
  ComplexGrid x = make_phantom(n, seed, {phase});
  ComplexGrid y = simulate_kspace(x, m, 0.0, seed);
  return {std::move(x), std::move(y), std::move(m)};
}

GenericArch tiny_arch(bool complex_mode = false) {
  GenericArch a;
  a.filters = 2;
  a.filter_size = 3;
  a.fusion_size = 3;
  a.stages = 2;
  a.sub_iterations = 2;
  a.controls = 11;
  a.complex_mode = complex_mode;
  return a;
}

std::vector<Sample> samples(const SamplingMask& m, int count, std::uint64_t seed, bool phase) {
  std::vector<Sample> s;
  for (int i = 0; i < count; ++i) {
    const ComplexGrid x = make_phantom(m.height(), seed + static_cast<std::uint64_t>(i), {phase});
    s.push_back({simulate_kspace(x, m, 0.01, seed + 50 + static_cast<std::uint64_t>(i)), x, 0.01});
  }
  return s;
}

}  // namespace

TEST_CASE("generic reconstruction layer solves the dense system", "[generic][oracle]") {
  const int n = GENERATE(4, 8);
  std::mt19937_64 rng(static_cast<std::uint64_t>(n));
  const SamplingMask m = oracle::random_mask(n, n, 0.4, rng);
  const ComplexGrid y = apply_mask(oracle::random_grid(n, n, rng), m);
  const ComplexGrid z = oracle::random_grid(n, n, rng);
  const ComplexGrid beta = oracle::random_grid(n, n, rng);
  const double rho = 0.6;
  const ComplexGrid x = generic_recon_layer(y, m, rho, z, beta);
  const Mat F = oracle::dft_matrix(n, n);
  const Mat P = oracle::mask_matrix(m);
  const Mat A = F.adjoint() * P.transpose() * P * F + rho * Mat::Identity(n * n, n * n);
  const Vec b = F.adjoint() * P.transpose() * oracle::to_vec(y) + rho * oracle::to_vec(z - beta);
  CHECK((A * oracle::to_vec(x) - b).norm() < 1e-10);
}

TEST_CASE("generic reconstruction special cases", "[generic]") {
  SECTION("full mask and rho = 1 halves the image") {
    const auto p = problem(8, 1.0, 2);
    CHECK(max_abs_diff(generic_recon_layer(p.y, p.mask, 1.0), 0.5 * p.x0) < 1e-13);
  }
  SECTION("zero auxiliaries leave unsampled frequencies empty") {
    const auto p = problem(16, 0.3, 3);
    const ComplexGrid k = fft2_unitary(generic_recon_layer(p.y, p.mask, 0.7));
    for (std::size_t i = 0; i < k.size(); ++i)
      if (!p.mask.kept(i)) CHECK(std::abs(k[i]) < 1e-14);
  }
}

TEST_CASE("denoising sub-stage closed forms", "[generic]") {
  std::mt19937_64 rng(4);
  const ComplexGrid x = oracle::random_grid(8, 8, rng, true);
  const ComplexGrid beta = oracle::random_grid(8, 8, rng, true);
  GenericNetParams p = generic_random_init(tiny_arch(), 1.0, 0.1, 5);
  auto sub = p.stages[0].sub;
  for (auto& s : sub) {
    for (auto& k : s.w2.kernels) std::fill(k.taps().begin(), k.taps().end(), 0.0);
    s.b2 = 0.0;
  }
  SECTION("no fusion and mu1 + mu2 = 1 returns x + beta") {
    for (auto& s : sub) s.mu1 = 0.3, s.mu2 = 0.7;
    CHECK(max_abs_diff(denoise_substage(x, beta, sub).z, x + beta) < 1e-15);
  }
  SECTION("no fusion scales by (mu1 + mu2) per round") {
    for (auto& s : sub) s.mu1 = 0.5, s.mu2 = 0.25;
    // z1 = 0.75 v, z2 = 0.5 * 0.75 v + 0.25 v
    CHECK(max_abs_diff(denoise_substage(x, beta, sub).z, 0.625 * (x + beta)) < 1e-14);
  }
  SECTION("fusion bias shifts the real channel only") {
    for (auto& s : sub) s.mu1 = 0.0, s.mu2 = 1.0;
    sub[1].b2 = 0.25;
    const ComplexGrid cx = oracle::random_grid(8, 8, rng);
    const ComplexGrid out = denoise_substage(cx, beta, sub, true).z;
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(std::abs(out[i].real() - (cx[i].real() + beta[i].real() - 0.25)) < 1e-14);
      CHECK(out[i].imag() == (cx[i] + beta[i]).imag());
    }
  }
  SECTION("channel mismatch is rejected") {
    sub[0].w2.kernels.pop_back();
    CHECK_THROWS_AS(denoise_substage(x, beta, sub), DimensionMismatch);
    p.stages[0].sub[0].w2.kernels.pop_back();
    CHECK_THROWS_AS(p.validate(), DimensionMismatch);
  }
}

TEST_CASE("eta = 0 keeps the multiplier at zero", "[generic]") {
  const auto p = problem(16, 0.3, 6);
  GenericArch a;
  a.stages = 3;
  GenericNetParams params = generic_model_init(a, 0.5, 0.05, 0.1);
  for (auto& s : params.stages) s.eta = 0.0;
  const auto fw = generic_forward(p.y, p.mask, params, true);
  for (const auto& st : fw.tape.stages) CHECK(norm2(st.beta) == 0.0);
}

TEST_CASE("model-initialized generic net reproduces solver II", "[generic][oracle]") {
  const auto p = problem(16, 0.3, GENERATE(3, 7));
  const int nt = GENERATE(1, 2);
  GenericArch a;
  a.stages = 4;
  a.sub_iterations = nt;
  const GenericNetParams params = generic_model_init(a, 1.0, 0.04, 0.1);
  const auto fw = generic_forward(p.y, p.mask, params, true);
  const auto tr = admm_solver2(p.y, p.mask, Solver2Config::model_based(dct_filter_bank(3, true), 1.0, 0.04, 0.1, nt, 5));
  double e = max_abs_diff(fw.image, tr.x[4]);
  for (std::size_t n = 0; n < 4; ++n) {
    e = std::max(e, max_abs_diff(fw.tape.stages[n].x, tr.x[n]));
    e = std::max(e, max_abs_diff(fw.tape.stages[n].z, tr.z[n]));
    e = std::max(e, max_abs_diff(fw.tape.stages[n].beta, tr.beta[n]));
  }
  CHECK(e < 1e-10);
}

TEST_CASE("real data through complex mode stays exactly real", "[generic][complex]") {
  const auto p = problem(16, 0.3, 8);
  GenericArch a;
  a.stages = 3;
  a.sub_iterations = 2;
  GenericNetParams real_net = generic_model_init(a, 0.5, 0.05, 0.1);
  GenericNetParams cplx_net = real_net;
  cplx_net.complex_mode = true;
  const ComplexGrid xr = generic_forward(p.y, p.mask, real_net).image;
  const ComplexGrid xc = generic_forward(p.y, p.mask, cplx_net).image;
  for (const auto& v : xc.data()) CHECK(v.imag() == 0.0);
  CHECK(max_abs_diff(xr, xc) == 0.0);
}

TEST_CASE("real mode discards the imaginary part of each reconstruction", "[generic][complex]") {
  const auto p = problem(16, 0.3, 9, true);
  GenericNetParams params = generic_model_init(tiny_arch(), 1.0, 0.2, 0.1);
  const auto fw = generic_forward(p.y, p.mask, params, true);
  for (const auto& st : fw.tape.stages)
    for (const auto& v : st.x.data()) CHECK(v.imag() == 0.0);
  params.complex_mode = true;
  const auto fc = generic_forward(p.y, p.mask, params, true);
  CHECK(norm2(fc.image - real_part(fc.image)) > 0.0);
}

TEST_CASE("multiplier adjoint identity", "[generic]") {
  const auto p = problem(8, 0.45, 10);
  const GenericNetParams params = perturb_params(generic_model_init(tiny_arch(), 1.0, 0.2, 0.1), 0.05, 3);
  const auto fw = generic_forward(p.y, p.mask, params, true);
  std::vector<MultiplierAdjoint> log;
  generic_backward(fw.tape, p.y, p.mask, params, fw.image - p.x0, &log);
  REQUIRE(log.size() == params.stages.size());
  for (const auto& m : log)
    for (std::size_t i = 0; i < m.grad_x.size(); ++i) CHECK(m.grad_x[i] == -m.grad_z[i]);
  const auto single = generic_multiplier_backward(fw.image, 0.75);
  CHECK(max_abs_diff(single.grad_x, 0.75 * fw.image) == 0.0);
}

TEST_CASE("generic net gradients match finite differences", "[generic][gradcheck]") {
  const bool complex_mode = GENERATE(false, true);
  const bool perturbed = GENERATE(false, true);
  const SamplingMask m = pseudo_radial_mask(8, 0.45);
  const auto s = samples(m, 2, 30, complex_mode);
  GenericNetParams params = generic_model_init(tiny_arch(complex_mode), 1.0, 0.2, 0.1);
  if (perturbed) params = perturb_params(params, 0.05, 31);
  const auto rep = finite_diff_check(params, m, s);
  for (const auto& c : rep.classes) {
    INFO(c.cls << " rel " << c.rel_error << " checked " << c.checked << " skipped " << c.skipped);
    CHECK(c.checked > 0);
    CHECK(c.rel_error < 1e-5);
  }
  CHECK(rep.pass);
  for (const char* cls : {"rho", "mu1", "mu2", "w1", "b1", "w2", "b2", "q", "eta"}) CHECK(rep.find(cls) != nullptr);
}

TEST_CASE("generic backward edge cases", "[generic]") {
  const auto p = problem(8, 0.45, 11);
  const GenericNetParams params = generic_random_init(tiny_arch(), 1.0, 0.1, 12);
  SECTION("zero output gradient") {
    const auto fw = generic_forward(p.y, p.mask, params, true);
    for (double v : pack_params(generic_backward(fw.tape, p.y, p.mask, params, ComplexGrid(8, 8))).values)
      CHECK(v == 0.0);
  }
  SECTION("missing tape") {
    const auto fw = generic_forward(p.y, p.mask, params);
    CHECK_THROWS_AS(generic_backward(fw.tape, p.y, p.mask, params, fw.image), MissingTape);
  }
  SECTION("stale tape") {
    const auto fw = generic_forward(p.y, p.mask, params, true);
    GenericNetParams other = params;
    other.final_rho_raw += 0.1;
    CHECK_THROWS_AS(generic_backward(fw.tape, p.y, p.mask, other, fw.image), MissingTape);
  }
  SECTION("deterministic") {
    const auto a = generic_forward(p.y, p.mask, params, true);
    const auto b = generic_forward(p.y, p.mask, params, true);
    CHECK(max_abs_diff(a.image, b.image) == 0.0);
    CHECK(pack_params(generic_backward(a.tape, p.y, p.mask, params, a.image)).values ==
          pack_params(generic_backward(b.tape, p.y, p.mask, params, b.image)).values);
  }
}

TEST_CASE("generic initializations", "[generic]") {
  GenericArch a;
  a.filters = 9;
  CHECK_THROWS_AS(generic_model_init(a, 1.0, 0.1, 0.1), std::invalid_argument);
  a.filters = 128;
  a.filter_size = 5;
  a.fusion_size = 5;
  a.stages = 2;
  const auto r = generic_random_init(a, 1.0, 0.1, 1);
  CHECK(r.filter_count() == 128);
  CHECK(fingerprint(r) == fingerprint(generic_random_init(a, 1.0, 0.1, 1)));
  CHECK(fingerprint(r) != fingerprint(generic_random_init(a, 1.0, 0.1, 2)));
  const auto m = generic_model_init(tiny_arch(), 0.5, 0.05, 0.1);
  CHECK(m.stages[0].sub[0].mu1 == Catch::Approx(0.95));
  CHECK(m.stages[0].sub[0].mu2 == Catch::Approx(0.05));
  CHECK(m.stages[0].rho() == Catch::Approx(0.5));
}
