#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace admmnet;
using oracle::Mat;
using oracle::Vec;

namespace {

struct Instance {
  ComplexGrid x0, y;
  SamplingMask mask;
};

Instance instance(int n, double rate, std::uint64_t seed, bool random_mask = false) {
  std::mt19937_64 rng(seed);
  SamplingMask m = random_mask ? oracle::random_mask(n, n, rate, rng) : pseudo_radial_mask(n, rate);
  ComplexGrid x = random_mask ? oracle::random_grid(n, n, rng) : make_phantom(n, seed);
  ComplexGrid y = apply_mask(fft2_unitary(x), m);
  return {std::move(x), std::move(y), std::move(m)};
}

// Solver I X-step normal equations: (F^H P^T P F + sum rho_l D_l^T D_l) x = F^H P^T y + sum rho_l D_l^T (z_l - beta_l)
std::pair<Mat, Vec> solver1_system(const ComplexGrid& y, const SamplingMask& m, const FilterBank& D,
                                   const std::vector<double>& rho, const std::vector<ComplexGrid>& z,
                                   const std::vector<ComplexGrid>& beta) {
  const int h = y.height(), w = y.width();
  const Mat F = oracle::dft_matrix(h, w);
  const Mat P = oracle::mask_matrix(m);
  Mat A = F.adjoint() * P.transpose() * P * F;
  Vec b = F.adjoint() * P.transpose() * oracle::to_vec(y);
  for (std::size_t l = 0; l < D.kernels.size(); ++l) {
    const Mat C = oracle::conv_matrix(D[l], h, w);
    A += rho[l] * C.adjoint() * C;
    if (!z.empty()) b += rho[l] * C.adjoint() * oracle::to_vec(z[l] - beta[l]);
  }
  return {A, b};
}

}  // namespace

TEST_CASE("solver I first iterate equals the dense closed form", "[admm1][oracle]") {
  const auto inst = instance(4, 0.5, GENERATE(1, 2, 3), true);
  std::mt19937_64 rng(9);
  FilterBank D;
  for (int l = 0; l < 3; ++l) D.kernels.push_back(oracle::random_kernel(3, rng));
  Solver1Config cfg{D, {0.3, 1.0, 2.5}, {1.0, 1.0, 1.0}, {0.1, 0.1, 0.1}, 1};
  const auto tr = admm_solver1(inst.y, inst.mask, cfg);
  const auto [A, b] = solver1_system(inst.y, inst.mask, D, cfg.rho, {}, {});
  const Vec x = A.lu().solve(b);
  CHECK(max_abs_diff(tr.x[0], oracle::to_grid(x, 4, 4)) < 1e-8);
}

TEST_CASE("solver I X-step optimality on later iterations", "[admm1][property]") {
  const auto inst = instance(4, 0.5, 4, true);
  Solver1Config cfg = Solver1Config::model_based(dct_filter_bank(3), 0.7, 0.07, 5);
  const auto tr = admm_solver1(inst.y, inst.mask, cfg);
  for (int n = 1; n < 5; ++n) {
    const auto [A, b] = solver1_system(inst.y, inst.mask, cfg.filters, cfg.rho, tr.z[n - 1], tr.beta[n - 1]);
    CHECK((A * oracle::to_vec(tr.x[n]) - b).norm() < 1e-8);
  }
}

TEST_CASE("solver I with a full mask and tiny rho returns the inverse transform", "[admm1]") {
  const auto inst = instance(8, 1.0, 5);
  Solver1Config cfg = Solver1Config::model_based(dct_filter_bank(3), 1e-8, 1e-9, 1);
  const auto tr = admm_solver1(inst.y, inst.mask, cfg);
  const ComplexGrid ref = ifft2_unitary(inst.y);
  CHECK(norm2(tr.x[0] - ref) / norm2(ref) < 1e-6);
}

TEST_CASE("solver I rejects bad configurations", "[admm1]") {
  const auto inst = instance(8, 0.3, 6);
  Solver1Config cfg = Solver1Config::model_based(dct_filter_bank(3), 1.0, 0.1, 2);
  cfg.rho[2] = 0.0;
  CHECK_THROWS_AS(admm_solver1(inst.y, inst.mask, cfg), std::invalid_argument);
  cfg = Solver1Config::model_based(dct_filter_bank(3), 1.0, 0.1, 2);
  cfg.eta.pop_back();
  CHECK_THROWS_AS(admm_solver1(inst.y, inst.mask, cfg), DimensionMismatch);
  cfg = Solver1Config::model_based(dct_filter_bank(3), 1.0, 0.1, 2);
  CHECK_THROWS_AS(admm_solver1(ComplexGrid(8, 6), inst.mask, cfg), DimensionMismatch);
}

TEST_CASE("solver I augmented Lagrangian does not increase", "[admm1][property]") {
  const auto inst = instance(8, 0.3, GENERATE(7, 8, 9));
  const Solver1Config cfg = Solver1Config::model_based(dct_filter_bank(3), 1.0, 0.05, 30);
  const auto tr = admm_solver1(inst.y, inst.mask, cfg);
  double prev = std::numeric_limits<double>::infinity();
  for (int n = 0; n < 30; ++n) {
    const double L = solver1_augmented_lagrangian(tr.x[n], tr.z[n], tr.beta[n], inst.y, inst.mask, cfg);
    CHECK(L <= prev + 1e-12 * std::abs(prev));
    prev = L;
  }
}

TEST_CASE("solver I combined z/beta increment does not increase", "[admm1][property]") {
  const auto inst = instance(8, 0.3, GENERATE(7, 8, 9));
  const double rho = GENERATE(0.1, 1.0, 3.0);
  const Solver1Config cfg = Solver1Config::model_based(dct_filter_bank(3), rho, 0.05, 40);
  const auto tr = admm_solver1(inst.y, inst.mask, cfg);
  auto step = [&](std::size_t n) {
    double s = 0.0;
    for (std::size_t l = 0; l < tr.z[n].size(); ++l) {
      const ComplexGrid dz = tr.z[n][l] - tr.z[n - 1][l];
      const ComplexGrid db = tr.beta[n][l] - tr.beta[n - 1][l];
      s += cfg.rho[l] * (real_dot(dz, dz) + real_dot(db, db));
    }
    return s;
  };
  for (std::size_t n = 2; n < 40; ++n) CHECK(step(n) <= step(n - 1) * (1 + 1e-9) + 1e-28);
}

TEST_CASE("solver I feasibility gap shrinks after burn-in", "[admm1][property]") {
  const auto inst = instance(8, 0.3, GENERATE(7, 8, 9));
  const Solver1Config cfg = Solver1Config::model_based(dct_filter_bank(3), 1.0, 0.05, 60);
  const auto tr = admm_solver1(inst.y, inst.mask, cfg);
  auto gap = [&](std::size_t n) {
    double s = 0.0;
    for (std::size_t l = 0; l < cfg.filters.kernels.size(); ++l) {
      const ComplexGrid r = conv2_circular(tr.x[n], cfg.filters[l]) - tr.z[n][l];
      s += real_dot(r, r);
    }
    return std::sqrt(s);
  };
  // not monotone step to step; compare windows
  double early = 0.0, late = 0.0;
  for (std::size_t n = 3; n < 13; ++n) early = std::max(early, gap(n));
  for (std::size_t n = 50; n < 60; ++n) late = std::max(late, gap(n));
  CHECK(late < early);
}

TEST_CASE("solver II X-step closed forms", "[admm2]") {
  SECTION("full mask, rho = 1, first iterate is half the image") {
    const auto inst = instance(8, 1.0, 10);
    Solver2Config cfg = Solver2Config::model_based(dct_filter_bank(3), 1.0, 0.05, 0.1, 1, 1);
    const auto tr = admm_solver2(inst.y, inst.mask, cfg);
    CHECK(max_abs_diff(tr.x[0], 0.5 * inst.x0) < 1e-12);
  }
  SECTION("very large rho pins x to z - beta") {
    const auto inst = instance(8, 0.3, 11);
    Solver2Config cfg = Solver2Config::model_based(dct_filter_bank(3), 1e8, 0.05, 0.1, 1, 2);
    cfg.mu1 = 0.3;
    cfg.mu2 = 0.7;
    const auto tr = admm_solver2(inst.y, inst.mask, cfg);
    const ComplexGrid target = tr.z[0] - tr.beta[0];
    // |x - target| <= |y - PF target| / (1 + rho)
    const double bound = (norm2(inst.y) + norm2(target)) / (1.0 + cfg.rho);
    CHECK(norm2(tr.x[1] - target) <= bound);
    CHECK(bound < 1e-6 * norm2(inst.y));
  }
}

TEST_CASE("solver II X-step equals the dense normal equations", "[admm2][oracle]") {
  const auto inst = instance(4, 0.5, GENERATE(12, 13), true);
  Solver2Config cfg = Solver2Config::model_based(dct_filter_bank(3), 0.8, 0.04, 0.1, 2, 4);
  const auto tr = admm_solver2(inst.y, inst.mask, cfg);
  const Mat F = oracle::dft_matrix(4, 4);
  const Mat P = oracle::mask_matrix(inst.mask);
  const Mat A = P.transpose() * P + cfg.rho * Mat::Identity(16, 16);
  for (int n = 0; n < 4; ++n) {
    const ComplexGrid zb = n == 0 ? ComplexGrid(4, 4) : tr.z[n - 1] - tr.beta[n - 1];
    const Vec b = P.transpose() * oracle::to_vec(inst.y) + cfg.rho * F * oracle::to_vec(zb);
    const Vec x = F.adjoint() * A.lu().solve(b);
    CHECK(max_abs_diff(tr.x[n], oracle::to_grid(x, 4, 4)) < 1e-10);
    CHECK((A * F * oracle::to_vec(tr.x[n]) - b).norm() < 1e-8);
  }
}

TEST_CASE("solver II Z-step follows the gradient recursion", "[admm2]") {
  const auto inst = instance(8, 0.3, 14);
  Solver2Config cfg = Solver2Config::model_based(dct_filter_bank(3), 1.0, 0.1, 0.1, 3, 2);
  const auto tr = admm_solver2(inst.y, inst.mask, cfg);
  REQUIRE(tr.z_inner[1].size() == 4);
  CHECK(tr.z_inner[1][0] == tr.x[1] + tr.beta[0]);
  CHECK(tr.z[1] == tr.z_inner[1][3]);
  CHECK(max_abs_diff(tr.beta[1], tr.beta[0] + (tr.x[1] - tr.z[1])) < 1e-14);
}

TEST_CASE("solver II feasibility gap shrinks after burn-in", "[admm2][property]") {
  const auto inst = instance(8, 0.3, GENERATE(7, 8, 9));
  const Solver2Config cfg = Solver2Config::model_based(dct_filter_bank(3), 1.0, 0.05, 0.1, 1, 30);
  const auto tr = admm_solver2(inst.y, inst.mask, cfg);
  for (int n = 4; n < 30; ++n) CHECK(norm2(tr.x[n] - tr.z[n]) <= norm2(tr.x[n - 1] - tr.z[n - 1]) * (1 + 1e-9) + 1e-14);
}

TEST_CASE("solver II rejects bad configurations", "[admm2]") {
  const auto inst = instance(8, 0.3, 15);
  Solver2Config cfg = Solver2Config::model_based(dct_filter_bank(3), 1.0, 0.1, 0.1, 1, 2);
  cfg.rho = -1.0;
  CHECK_THROWS_AS(admm_solver2(inst.y, inst.mask, cfg), std::invalid_argument);
  cfg = Solver2Config::model_based(dct_filter_bank(3), 1.0, 0.1, 0.1, 1, 2);
  cfg.inner_iterations = 0;
  CHECK_THROWS_AS(admm_solver2(inst.y, inst.mask, cfg), std::invalid_argument);
  cfg = Solver2Config::model_based(dct_filter_bank(3), 1.0, 0.1, 0.1, 1, 2);
  CHECK_THROWS_AS(admm_solver2(inst.y, pseudo_radial_mask(16, 0.3), cfg), DimensionMismatch);
}

TEST_CASE("solvers operate on complex data", "[admm1][admm2]") {
  const SamplingMask m = pseudo_radial_mask(16, 0.3);
  const ComplexGrid x = make_phantom(16, 3, {true});
  const ComplexGrid y = apply_mask(fft2_unitary(x), m);
  const auto t1 = admm_solver1(y, m, Solver1Config::model_based(dct_filter_bank(3), 0.5, 0.05, 10));
  const auto t2 = admm_solver2(y, m, Solver2Config::model_based(dct_filter_bank(3), 0.5, 0.05, 0.1, 1, 10));
  const double zf = norm2(zero_filled(y, m) - x);
  CHECK(all_finite(t1.x.back()));
  CHECK(norm2(t2.x.back() - x) < zf);
}
