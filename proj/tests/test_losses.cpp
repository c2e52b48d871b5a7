// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "sist/losses/losses.hpp"
#include "sist/losses/point_sampler.hpp"
#include "support/oracles.hpp"

using namespace sist;
using losses::GanLabelConvention;
using losses::LossWeights;

namespace {

Tensor<double> random_tensor(std::vector<int64_t> shape, Rng& rng, double lo, double hi) {
  Tensor<double> t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("lsgan discriminator loss: hand cases") {
  auto real = Tensor<double>::full({2, 1, 2, 2}, 1.0);
  auto fake = Tensor<double>::full({2, 1, 2, 2}, 0.0);
  CHECK(losses::lsgan_discriminator_loss(real, fake) == doctest::Approx(0.0));

  auto half_r = Tensor<double>::full({1, 1, 2, 2}, 0.5);
  auto half_f = Tensor<double>::full({1, 1, 2, 2}, 0.5);
  CHECK(losses::lsgan_discriminator_loss(half_r, half_f) == doctest::Approx(0.5));

  // flipped labels swap the optimum
  CHECK(losses::lsgan_discriminator_loss(fake, real, /*flip=*/true) == doctest::Approx(0.0));
  // printed-equation convention is the global label swap
  CHECK(losses::lsgan_discriminator_loss(fake, real, false,
                                         GanLabelConvention::kPaperPrinted) ==
        doctest::Approx(0.0));

  auto bad = real;
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(losses::lsgan_discriminator_loss(bad, fake), DivergenceError);
}

TEST_CASE("lsgan losses match an element-wise loop oracle") {
  Rng rng(2);
  const auto real = random_tensor({3, 1, 4, 4}, rng, -2, 2);
  const auto fake = random_tensor({3, 1, 4, 4}, rng, -2, 2);

  double expect_d = 0.0;
  for (int64_t i = 0; i < real.numel(); ++i)
    expect_d += (real[i] - 1.0) * (real[i] - 1.0) / real.numel();
  for (int64_t i = 0; i < fake.numel(); ++i)
    expect_d += fake[i] * fake[i] / fake.numel();
  CHECK(std::abs(losses::lsgan_discriminator_loss(real, fake) - expect_d) < 1e-12);

  double expect_g = 0.0;
  for (int64_t i = 0; i < fake.numel(); ++i)
    expect_g += (fake[i] - 1.0) * (fake[i] - 1.0) / fake.numel();
  CHECK(std::abs(losses::lsgan_generator_loss(fake) - expect_g) < 1e-12);

  CHECK(losses::lsgan_generator_loss(Tensor<double>::full({1, 1, 2, 2}, 1.0)) ==
        doctest::Approx(0.0));
  CHECK(losses::lsgan_generator_loss(Tensor<double>::full({1, 1, 2, 2}, 0.0)) ==
        doctest::Approx(1.0));
}

TEST_CASE("binary cross entropy: closed forms and loop oracle") {
  auto half = Tensor<double>::full({8}, 0.5);
  auto target = Tensor<double>::full({8}, 1.0);
  CHECK(losses::binary_cross_entropy(half, target) == doctest::Approx(std::log(2.0)));

  // probabilities equal to the (clamped) target hit the clamp floor
  auto exact = Tensor<double>::full({8}, 1.0);
  CHECK(losses::binary_cross_entropy(exact, target) <= 1.2e-6);

  Rng rng(3);
  const auto p = random_tensor({2, 8}, rng, 0.05, 0.95);
  Tensor<double> t({2, 8});
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  double expect = 0.0;
  for (int64_t i = 0; i < p.numel(); ++i)
    expect += -(t[i] * std::log(p[i]) + (1 - t[i]) * std::log(1 - p[i])) / p.numel();
  CHECK(std::abs(losses::binary_cross_entropy(p, t) - expect) < 1e-12);

  auto mismatched = Tensor<double>({2, 4});
  CHECK_THROWS_AS(losses::binary_cross_entropy(p, mismatched), ValidationError);
}

TEST_CASE("cyclic loss: hand cases, wraparound, oracle") {
  LossWeights w;
  Rng rng(4);

  const auto za = random_tensor({2, 4}, rng, -1, 1);
  const auto vraw = random_tensor({2, 2}, rng, -0.9, 0.9);

  // exact recovery
  const auto zero = losses::cyclic_loss(za, za, vraw, vraw, w);
  CHECK(zero.total() == doctest::Approx(0.0));

  // za off by +1 everywhere, viewpoint exact, lambda_a = 10 -> 10
  auto za_off = za;
  for (int64_t i = 0; i < za_off.numel(); ++i) za_off[i] += 1.0;
  const auto off = losses::cyclic_loss(za_off, za, vraw, vraw, w);
  CHECK(off.total() == doctest::Approx(10.0));
  CHECK(off.appearance == doctest::Approx(10.0));

  // azimuth wraparound: raw +-(1-eps) are near-identical angles
  Tensor<double> v1({1, 2}), v2({1, 2});
  v1[0] = 1.0 - 1e-9;
  v2[0] = -1.0 + 1e-9;
  v1[1] = v2[1] = 0.3;
  const auto wrap = losses::cyclic_loss(za, za, v1, v2, w);
  CHECK(wrap.viewpoint < 1e-7);

  // random case vs direct evaluation
  const auto za_hat = random_tensor({2, 4}, rng, -1, 1);
  const auto v_hat = random_tensor({2, 2}, rng, -0.9, 0.9);
  const auto got = losses::cyclic_loss(za_hat, za, v_hat, vraw, w);
  double ea = 0.0;
  for (int64_t i = 0; i < za.numel(); ++i) ea += std::abs(za_hat[i] - za[i]) / za.numel();
  double ev = 0.0;
  for (int64_t b = 0; b < 2; ++b) {
    double daz = std::fmod(v_hat[b * 2] - vraw[b * 2], 2.0);
    if (daz > 1) daz -= 2;
    if (daz < -1) daz += 2;
    ev += (std::abs(daz) + std::abs(v_hat[b * 2 + 1] - vraw[b * 2 + 1])) / 4.0;
  }
  CHECK(std::abs(got.appearance - w.lambda_a * ea) < 1e-12);
  CHECK(std::abs(got.viewpoint - w.lambda_v * ev) < 1e-12);
}

TEST_CASE("kl loss: closed forms and Monte Carlo oracle") {
  nets::GaussianPosterior<double> q0;
  q0.mean = Tensor<double>({1, 1});
  q0.logvar = Tensor<double>({1, 1});
  CHECK(losses::kl_loss(q0, 1.0) == doctest::Approx(0.0));

  q0.mean[0] = 1.0;
  CHECK(losses::kl_loss(q0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));

  Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    nets::GaussianPosterior<double> q;
    q.mean = random_tensor({1, 4}, rng, -1.5, 1.5);
    q.logvar = random_tensor({1, 4}, rng, -1.0, 1.0);
    const double closed = losses::kl_loss(q, 1.0);

    // MC estimate of E_q[log q - log p], averaged over dims
    const int64_t n_samples = 200000;
    double acc = 0.0;
    for (int64_t s = 0; s < n_samples; ++s) {
      for (int64_t d = 0; d < 4; ++d) {
        const double sigma = std::exp(0.5 * q.logvar[d]);
        const double z = q.mean[d] + sigma * rng.normal();
        const double log_q =
            -0.5 * q.logvar[d] - (z - q.mean[d]) * (z - q.mean[d]) / (2 * sigma * sigma);
        const double log_p = -0.5 * z * z;
        acc += log_q - log_p;
      }
    }
    const double mc = acc / (4.0 * n_samples);
    CHECK(std::abs(closed - mc) < 2e-2);
  }
}

TEST_CASE("total loss combination") {
  LossWeights w;
  CHECK(losses::total_loss(0, 0, 0, 0, w) == doctest::Approx(0.0));
  CHECK(losses::total_loss(1, 1, 0, 0, w) == doctest::Approx(100.005));
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const double li = rng.uniform(), ls = rng.uniform(), lc = rng.uniform(),
                 lkl = rng.uniform();
    CHECK(losses::total_loss(li, ls, lc, lkl, w) ==
          doctest::Approx(0.005 * li + 100.0 * ls + lc + lkl));
  }
  LossWeights bad;
  bad.lambda_s = -1;
  CHECK_THROWS_AS(losses::total_loss(0, 0, 0, 0, bad), ValidationError);
}

TEST_CASE("loss gradients match central finite differences") {
  Rng rng(7);
  const double h = 1e-6, tol = 1e-4;

  SUBCASE("lsgan discriminator") {
    auto real = random_tensor({2, 1, 3, 3}, rng, -1.5, 1.5);
    auto fake = random_tensor({2, 1, 3, 3}, rng, -1.5, 1.5);
    Tensor<double> greal(real.shape()), gfake(fake.shape());
    losses::lsgan_discriminator_loss(real, fake, false, GanLabelConvention::kStandard,
                                     &greal, &gfake);
    auto value = [&] { return losses::lsgan_discriminator_loss(real, fake); };
    CHECK(testing::input_gradient_max_rel_err(real, value, greal, h) < tol);
    CHECK(testing::input_gradient_max_rel_err(fake, value, gfake, h) < tol);
  }

  SUBCASE("lsgan generator") {
    auto fake = random_tensor({2, 1, 3, 3}, rng, -1.5, 1.5);
    Tensor<double> g(fake.shape());
    losses::lsgan_generator_loss(fake, GanLabelConvention::kStandard, &g);
    auto value = [&] { return losses::lsgan_generator_loss(fake); };
    CHECK(testing::input_gradient_max_rel_err(fake, value, g, h) < tol);
  }

  SUBCASE("binary cross entropy") {
    auto p = random_tensor({4, 8}, rng, 0.15, 0.85);
    Tensor<double> t({4, 8});
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
    Tensor<double> g(p.shape());
    losses::binary_cross_entropy(p, t, &g);
    auto value = [&] { return losses::binary_cross_entropy(p, t); };
    CHECK(testing::input_gradient_max_rel_err(p, value, g, h) < tol);
  }

  SUBCASE("cyclic") {
    LossWeights w;
    auto za = random_tensor({2, 4}, rng, -1, 1);
    auto za_hat = random_tensor({2, 4}, rng, -1, 1);
    auto v = random_tensor({2, 2}, rng, -0.8, 0.8);
    auto v_hat = random_tensor({2, 2}, rng, -0.8, 0.8);
    Tensor<double> gza(za_hat.shape()), gv(v_hat.shape());
    losses::cyclic_loss(za_hat, za, v_hat, v, w, &gza, &gv);
    auto value = [&] { return losses::cyclic_loss(za_hat, za, v_hat, v, w).total(); };
    CHECK(testing::input_gradient_max_rel_err(za_hat, value, gza, h) < tol);
    CHECK(testing::input_gradient_max_rel_err(v_hat, value, gv, h) < tol);
  }

  SUBCASE("kl") {
    nets::GaussianPosterior<double> q;
    q.mean = random_tensor({2, 5}, rng, -1, 1);
    q.logvar = random_tensor({2, 5}, rng, -1, 1);
    Tensor<double> gm(q.mean.shape()), gl(q.logvar.shape());
    losses::kl_loss(q, 0.7, &gm, &gl);
    auto value = [&] { return losses::kl_loss(q, 0.7); };
    CHECK(testing::input_gradient_max_rel_err(q.mean, value, gm, h) < tol);
    CHECK(testing::input_gradient_max_rel_err(q.logvar, value, gl, h) < tol);
  }
}

TEST_CASE("point sampler: composition and surface property") {
  Rng rng(8);
  auto grid = geom3d::VoxelGrid::centered(8);
  for (int iz = 0; iz < 8; ++iz)
    for (int iy = 0; iy < 8; ++iy)
      for (int ix = 0; ix < 8; ++ix) {
        const auto c = grid.cell_center(ix, iy, iz);
        if (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] <= 0.35 * 0.35) grid.set(ix, iy, iz, true);
      }
  REQUIRE(grid.occupied_count() > 0);

  for (int draw = 0; draw < 50; ++draw) {
    const auto batch = losses::sample_training_points(grid, 1000, rng, "sphere8");
    int surface = 0, pos = 0, neg = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto tag = batch.tags[static_cast<size_t>(i)];
      const int ix = static_cast<int>(batch.coords[i * 3 + 0] * 8);
      const int iy = static_cast<int>(batch.coords[i * 3 + 1] * 8);
      const int iz = static_cast<int>(batch.coords[i * 3 + 2] * 8);
      for (int a = 0; a < 3; ++a) {
        CHECK(batch.coords[i * 3 + a] >= 0.0);
        CHECK(batch.coords[i * 3 + a] < 1.0);
      }
      switch (tag) {
        case losses::PointTag::kSurface:
          ++surface;
          CHECK(losses::is_surface_cell(grid, ix, iy, iz));
          CHECK(batch.targets[i] == 1.0);
          break;
        case losses::PointTag::kPositive:
          ++pos;
          CHECK(grid.occupied(ix, iy, iz));
          CHECK(batch.targets[i] == 1.0);
          break;
        case losses::PointTag::kNegative:
          ++neg;
          CHECK(!grid.occupied(ix, iy, iz));
          CHECK(batch.targets[i] == 0.0);
          break;
      }
    }
    CHECK(surface == 500);
    CHECK(pos == 250);
    CHECK(neg == 250);
  }
}

TEST_CASE("point sampler: single voxel and degenerate grids") {
  auto grid = geom3d::VoxelGrid::centered(4);
  grid.set(2, 2, 2, true);
  Rng rng(9);
  const auto batch = losses::sample_training_points(grid, 4, rng);
  CHECK(batch.tags[0] == losses::PointTag::kSurface);
  CHECK(batch.tags[1] == losses::PointTag::kSurface);
  CHECK(batch.tags[2] == losses::PointTag::kPositive);
  CHECK(batch.tags[3] == losses::PointTag::kNegative);
  for (int i = 0; i < 3; ++i) {
    CHECK(static_cast<int>(batch.coords[i * 3 + 0] * 4) == 2);
    CHECK(static_cast<int>(batch.coords[i * 3 + 1] * 4) == 2);
    CHECK(static_cast<int>(batch.coords[i * 3 + 2] * 4) == 2);
  }

  auto empty = geom3d::VoxelGrid::centered(4);
  CHECK_THROWS_WITH_AS(losses::sample_training_points(empty, 4, rng, "empty-grid"),
                       doctest::Contains("empty-grid"), ValidationError);

  auto solid = geom3d::VoxelGrid::centered(4);
  std::fill(solid.occupancy.begin(), solid.occupancy.end(), 1);
  CHECK_THROWS_AS(losses::sample_training_points(solid, 4, rng, "solid"), ValidationError);

  CHECK_THROWS_AS(losses::sample_training_points(grid, 6, rng), ValidationError);
}
