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

Problem problem(int n, double rate, std::uint64_t seed) {
  SamplingMask m = pseudo_radial_mask(n, rate);
  ComplexGrid x = make_phantom(n, seed);
  ComplexGrid y = simulate_kspace(x, m, 0.0, seed);
  return {std::move(x), std::move(y), std::move(m)};
}

std::vector<ComplexGrid> random_grids(std::size_t L, int n, std::mt19937_64& rng) {
  std::vector<ComplexGrid> out;
  for (std::size_t l = 0; l < L; ++l) out.push_back(oracle::random_grid(n, n, rng));
  return out;
}

std::vector<Sample> tiny_samples(const SamplingMask& m, int count, std::uint64_t seed) {
  std::vector<Sample> s;
  for (int i = 0; i < count; ++i) {
    const ComplexGrid x = make_phantom(m.height(), seed + static_cast<std::uint64_t>(i));
    s.push_back({simulate_kspace(x, m, 0.01, seed + 100 + static_cast<std::uint64_t>(i)), x, 0.01});
  }
  return s;
}

}  // namespace

TEST_CASE("reconstruction layer solves the dense normal equations", "[basic][oracle]") {
  std::mt19937_64 rng(GENERATE(1, 2, 3));
  const SamplingMask m = oracle::random_mask(4, 4, 0.5, rng);
  const ComplexGrid y = apply_mask(oracle::random_grid(4, 4, rng), m);
  FilterBank H;
  for (int l = 0; l < 2; ++l) H.kernels.push_back(oracle::random_kernel(3, rng));
  const std::vector<double> rho{0.4, 1.3};
  const auto z = random_grids(2, 4, rng);
  const auto beta = random_grids(2, 4, rng);
  const ComplexGrid x = basic_recon_layer(y, m, H, rho, z, beta);

  const Mat F = oracle::dft_matrix(4, 4);
  const Mat P = oracle::mask_matrix(m);
  Mat A = F.adjoint() * P.transpose() * P * F;
  Vec b = F.adjoint() * P.transpose() * oracle::to_vec(y);
  for (int l = 0; l < 2; ++l) {
    const Mat C = oracle::conv_matrix(H[static_cast<std::size_t>(l)], 4, 4);
    A += rho[static_cast<std::size_t>(l)] * C.adjoint() * C;
    b += rho[static_cast<std::size_t>(l)] * C.adjoint() * oracle::to_vec(z[static_cast<std::size_t>(l)] - beta[static_cast<std::size_t>(l)]);
  }
  CHECK((A * oracle::to_vec(x) - b).norm() < 1e-9);
  CHECK(max_abs_diff(x, oracle::to_grid(A.lu().solve(b), 4, 4)) < 1e-9);
}

TEST_CASE("reconstruction layer special cases", "[basic]") {
  SECTION("full mask and vanishing rho gives the inverse transform") {
    std::mt19937_64 rng(4);
    const ComplexGrid y = oracle::random_grid(8, 8, rng);
    const std::vector<double> rho(8, 1e-10);
    const ComplexGrid x = basic_recon_layer(y, SamplingMask::full(8, 8), dct_filter_bank(3, true), rho);
    CHECK(max_abs_diff(x, ifft2_unitary(y)) < 1e-8);
  }
  SECTION("z equal to beta matches zero auxiliaries") {
    const auto p = problem(8, 0.45, 5);
    std::mt19937_64 rng(5);
    const auto z = random_grids(8, 8, rng);
    const std::vector<double> rho(8, 0.7);
    const FilterBank H = dct_filter_bank(3, true);
    CHECK(max_abs_diff(basic_recon_layer(p.y, p.mask, H, rho, z, z), basic_recon_layer(p.y, p.mask, H, rho)) < 1e-13);
  }
  SECTION("singular systems are reported") {
    const SamplingMask m = pseudo_radial_mask(8, 0.3);
    const FilterBank H(std::vector<Kernel>{Kernel(3)});
    const std::vector<double> rho{1.0};
    CHECK_THROWS_AS(basic_recon_layer(apply_mask(fft2_unitary(make_phantom(8, 1)), m), m, H, rho), SingularReconstruction);
  }
  SECTION("rho count must match the filter count") {
    const auto p = problem(8, 0.45, 6);
    const std::vector<double> rho(3, 1.0);
    CHECK_THROWS_AS(basic_recon_layer(p.y, p.mask, dct_filter_bank(3, true), rho), DimensionMismatch);
  }
}

TEST_CASE("denominators are positive at every frequency for the initialized net", "[basic][property]") {
  const auto p = problem(16, 0.3, 7);
  const BasicNetParams params = basic_model_init(8, 3, 2, 101, 1.0, 0.04);
  const auto fw = basic_forward(p.y, p.mask, params, true);
  for (const auto& st : fw.tape.stages) {
    const double mx = *std::max_element(st.recon.denom.begin(), st.recon.denom.end());
    for (double d : st.recon.denom) CHECK(d > 1e-12 * mx);
  }
}

TEST_CASE("multiplier layer with eta = 0 keeps beta at zero", "[basic]") {
  const auto p = problem(16, 0.3, 8);
  BasicNetParams params = basic_model_init(8, 3, 3, 101, 1.0, 0.04);
  for (auto& s : params.stages) std::fill(s.eta.begin(), s.eta.end(), 0.0);
  const auto fw = basic_forward(p.y, p.mask, params, true);
  for (const auto& st : fw.tape.stages)
    for (const auto& b : st.beta) CHECK(norm2(b) == 0.0);
}

TEST_CASE("multiplier layer spot value", "[basic]") {
  std::mt19937_64 rng(9);
  const auto beta = random_grids(2, 4, rng);
  const auto c = random_grids(2, 4, rng);
  const auto z = random_grids(2, 4, rng);
  const std::vector<double> eta{0.5, -2.0};
  const auto out = basic_multiplier_layer(beta, c, z, eta);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(out[l][i] - (beta[l][i] + eta[l] * (c[l][i] - z[l][i]))) < 1e-15);
}

TEST_CASE("single-stage forward equals the composed layers", "[basic]") {
  const auto p = problem(16, 0.3, 10);
  const BasicNetParams params = basic_random_init(3, 3, 1, 21, 0.8, 11);
  const auto& s = params.stages[0];
  std::vector<double> rho, rho_f;
  for (std::size_t l = 0; l < 3; ++l) rho.push_back(s.rho(l)), rho_f.push_back(params.final_layer.rho(l));
  const ComplexGrid x = basic_recon_layer(p.y, p.mask, s.H, rho);
  const auto c = basic_conv_layer(x, s.D);
  const std::vector<ComplexGrid> zero(3, ComplexGrid(16, 16));
  const auto z = basic_nonlinear_layer(c, zero, s.plf);
  const auto beta = basic_multiplier_layer(zero, c, z, s.eta);
  const ComplexGrid out = basic_recon_layer(p.y, p.mask, params.final_layer.H, rho_f, z, beta);
  CHECK(max_abs_diff(basic_forward(p.y, p.mask, params).image, out) == 0.0);
}

TEST_CASE("model-initialized basic net reproduces solver I", "[basic][oracle]") {
  const auto p = problem(16, 0.3, GENERATE(3, 7));
  const BasicNetParams params = basic_model_init(8, 3, 4, 101, 1.0, 0.04);
  const auto fw = basic_forward(p.y, p.mask, params, true);
  const auto tr = admm_solver1(p.y, p.mask, Solver1Config::model_based(dct_filter_bank(3, true), 1.0, 0.04, 5));
  double e = max_abs_diff(fw.image, tr.x[4]);
  for (std::size_t n = 0; n < 4; ++n) {
    e = std::max(e, max_abs_diff(fw.tape.stages[n].x, tr.x[n]));
    for (std::size_t l = 0; l < 8; ++l) {
      e = std::max(e, max_abs_diff(fw.tape.stages[n].z[l], tr.z[n][l]));
      e = std::max(e, max_abs_diff(fw.tape.stages[n].beta[l], tr.beta[n][l]));
    }
  }
  CHECK(e < 1e-10);
}

TEST_CASE("basic backward edge cases", "[basic]") {
  const auto p = problem(8, 0.45, 12);
  const BasicNetParams params = basic_random_init(2, 3, 2, 11, 1.0, 3);
  SECTION("zero output gradient gives zero gradients") {
    const auto fw = basic_forward(p.y, p.mask, params, true);
    const auto g = basic_backward(fw.tape, p.y, p.mask, params, ComplexGrid(8, 8));
    for (double v : pack_params(g).values) CHECK(v == 0.0);
  }
  SECTION("missing tape") {
    const auto fw = basic_forward(p.y, p.mask, params, false);
    CHECK_THROWS_AS(basic_backward(fw.tape, p.y, p.mask, params, fw.image), MissingTape);
  }
  SECTION("stale tape") {
    const auto fw = basic_forward(p.y, p.mask, params, true);
    BasicNetParams other = params;
    other.stages[1].eta[0] += 0.1;
    CHECK_THROWS_AS(basic_backward(fw.tape, p.y, p.mask, other, fw.image), MissingTape);
  }
}

TEST_CASE("basic forward and backward are deterministic", "[basic]") {
  const auto p = problem(16, 0.3, 13);
  const BasicNetParams params = basic_random_init(3, 3, 2, 21, 1.0, 4);
  const auto a = basic_forward(p.y, p.mask, params, true);
  const auto b = basic_forward(p.y, p.mask, params, true);
  CHECK(max_abs_diff(a.image, b.image) == 0.0);
  const auto ga = pack_params(basic_backward(a.tape, p.y, p.mask, params, a.image)).values;
  const auto gb = pack_params(basic_backward(b.tape, p.y, p.mask, params, b.image)).values;
  CHECK(ga == gb);
}

TEST_CASE("basic net gradients match finite differences", "[basic][gradcheck]") {
  const SamplingMask m = pseudo_radial_mask(8, 0.45);
  const auto samples = tiny_samples(m, 2, 20);
  BasicNetParams params = basic_model_init(2, 3, 2, 11, 1.0, 0.2);
  const bool perturbed = GENERATE(false, true);
  if (perturbed) params = perturb_params(params, 0.05, 21);
  const auto rep = finite_diff_check(params, m, samples);
  for (const auto& c : rep.classes) {
    INFO(c.cls << " rel " << c.rel_error << " checked " << c.checked << " skipped " << c.skipped);
    CHECK(c.checked > 0);
    CHECK(c.rel_error < 1e-5);
  }
  CHECK(rep.pass);
  for (const char* cls : {"H", "rho", "D", "q", "eta"}) CHECK(rep.find(cls) != nullptr);
}

TEST_CASE("eta gradient spot value", "[basic][oracle]") {
  // dE/deta for the last stage is <dE/dbeta, c - z> with dE/dbeta from the final layer
  const auto p = problem(8, 0.45, 22);
  const BasicNetParams params = basic_random_init(2, 3, 1, 11, 1.0, 5);
  const auto fw = basic_forward(p.y, p.mask, params, true);
  const auto g = basic_backward(fw.tape, p.y, p.mask, params, fw.image - p.x0);
  for (std::size_t l = 0; l < 2; ++l) {
    const double h = 1e-6;
    BasicNetParams a = params, b = params;
    a.stages[0].eta[l] += h;
    b.stages[0].eta[l] -= h;
    auto E = [&](const BasicNetParams& q) {
      const ComplexGrid r = basic_forward(p.y, p.mask, q).image - p.x0;
      return 0.5 * real_dot(r, r);
    };
    CHECK(g.stages[0].eta[l] == Catch::Approx((E(a) - E(b)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("basic init rejects unsupported filter counts", "[basic]") {
  CHECK_THROWS_AS(basic_model_init(9, 3, 2, 101, 1.0, 0.1), std::invalid_argument);
  BasicNetParams p = basic_model_init(2, 3, 2, 11, 1.0, 0.1);
  p.stages[0].eta.pop_back();
  CHECK_THROWS_AS(p.validate(), DimensionMismatch);
}
