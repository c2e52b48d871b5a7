// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "sist/nets/networks.hpp"
#include "support/oracles.hpp"

using namespace sist;
using nets::LayerRow;
using nets::NetsConfig;

namespace {

NetsConfig tiny_config() {
  NetsConfig c;
  c.image_size = 16;
  c.appearance_dim = 3;
  c.shape_dim = 6;
  c.generator_base = 2;
  c.discriminator_base = 2;
  c.encoder_base = 2;
  c.voxel_decoder_base = 2;
  c.voxel_resolution = 8;
  c.implicit_hidden = {10, 8};
  return c;
}

template <class T>
Tensor<T> random_tensor(std::vector<int64_t> shape, Rng& rng, double lo = -1, double hi = 1) {
  Tensor<T> t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Fixed random probe weights make the scalar loss sensitive to every output.
struct Probe {
  Tensor<double> w;
  explicit Probe(const Tensor<double>& out, Rng& rng) : w(out.shape()) {
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.uniform(-1, 1);
  }
  double loss(const Tensor<double>& out) const {
    double s = 0.0;
    for (int64_t i = 0; i < out.numel(); ++i) s += w[i] * out[i];
    return s;
  }
  Tensor<double> grad() const { return w; }
};

}  // namespace

TEST_CASE("generator architecture matches the published table at defaults") {
  nets::ImageGenerator<double> g{NetsConfig{}};
  const std::vector<LayerRow> expected = {
      {"Input: [depth]", {128, 128, 1}, 0, 0, false, ""},
      {"[z_a] + Conv", {128, 128, 64}, 7, 1, true, "ReLU"},
      {"[z_a] + Conv", {64, 64, 128}, 4, 2, true, "ReLU"},
      {"[z_a] + Conv", {32, 32, 256}, 4, 2, true, "ReLU"},
      {"[z_a] + Conv", {16, 16, 512}, 4, 2, true, "ReLU"},
      {"Ups(x2) + [z_a] + Conv", {32, 32, 256}, 5, 1, true, "ReLU"},
      {"Ups(x2) + [z_a] + Conv", {64, 64, 128}, 5, 1, true, "ReLU"},
      {"Ups(x2) + [z_a] + Conv", {128, 128, 64}, 5, 1, true, "ReLU"},
      {"[z_a] + [depth] + Conv", {128, 128, 3}, 7, 1, false, "Tanh"},
  };
  REQUIRE(g.rows().size() == expected.size());
  for (size_t i = 0; i < expected.size(); ++i) CHECK(g.rows()[i] == expected[i]);
}

TEST_CASE("discriminator architecture matches the published table at defaults") {
  nets::PatchDiscriminator<double> d{NetsConfig{}};
  const std::vector<LayerRow> expected = {
      {"Input: [RGB]", {128, 128, 3}, 0, 0, false, ""},
      {"Conv", {64, 64, 64}, 4, 2, false, "LeakyReLU"},
      {"Conv", {32, 32, 128}, 4, 2, false, "LeakyReLU"},
      {"Conv", {16, 16, 256}, 4, 2, false, "LeakyReLU"},
      {"Conv", {16, 16, 512}, 4, 1, false, "LeakyReLU"},
      {"Conv", {16, 16, 1}, 4, 1, false, ""},
  };
  REQUIRE(d.rows().size() == expected.size());
  for (size_t i = 0; i < expected.size(); ++i) CHECK(d.rows()[i] == expected[i]);
}

TEST_CASE("encoder architectures match the published tables at defaults") {
  nets::ViewpointEncoder<double> ev{NetsConfig{}};
  const std::vector<LayerRow> expected_ev = {
      {"Input: [RGB]", {128, 128, 3}, 0, 0, false, ""},
      {"Conv", {64, 64, 32}, 4, 2, true, "ReLU"},
      {"Conv", {32, 32, 64}, 4, 2, true, "ReLU"},
      {"Conv", {16, 16, 128}, 4, 2, true, "ReLU"},
      {"Conv", {8, 8, 256}, 4, 2, true, "ReLU"},
      {"Conv", {4, 4, 512}, 4, 2, true, "ReLU"},
      {"Conv", {1, 1, 2}, 4, 1, false, "Tanh"},
  };
  REQUIRE(ev.rows().size() == expected_ev.size());
  for (size_t i = 0; i < expected_ev.size(); ++i) CHECK(ev.rows()[i] == expected_ev[i]);

  nets::GaussianEncoder<double> ea("ea", NetsConfig{}, 16);
  const std::vector<LayerRow> tail_ea = {
      {"Conv", {1, 1, 512}, 4, 1, false, "ReLU"},
      {"FCL", {2, 16}, 0, 0, false, ""},
  };
  REQUIRE(ea.rows().size() == 8);
  CHECK(ea.rows()[6] == tail_ea[0]);
  CHECK(ea.rows()[7] == tail_ea[1]);

  nets::GaussianEncoder<double> es("es", NetsConfig{}, 128);
  CHECK(es.rows()[7] == LayerRow{"FCL", {2, 128}, 0, 0, false, ""});
  // identical trunks except the final code width
  for (size_t i = 0; i < 7; ++i) CHECK(ea.rows()[i] == es.rows()[i]);
}

TEST_CASE("voxel decoder architecture matches the published table at defaults") {
  nets::VoxelDecoder<double> ds{NetsConfig{}};
  const std::vector<LayerRow> expected = {
      {"Input: [z_s]", {128, 1, 1, 1}, 0, 0, false, ""},
      {"UpConv3d", {512, 4, 4, 4}, 4, 1, false, "ReLU"},
      {"UpConv3d", {256, 8, 8, 8}, 4, 2, true, "ReLU"},
      {"UpConv3d", {128, 16, 16, 16}, 4, 2, true, "ReLU"},
      {"UpConv3d", {64, 32, 32, 32}, 4, 2, true, "ReLU"},
      {"UpConv3d", {32, 64, 64, 64}, 4, 2, true, "ReLU"},
      {"UpConv3d", {1, 128, 128, 128}, 4, 2, false, "Sigmoid"},
  };
  REQUIRE(ds.rows().size() == expected.size());
  for (size_t i = 0; i < expected.size(); ++i) CHECK(ds.rows()[i] == expected[i]);
}

TEST_CASE("tiny forward contracts: shapes, ranges, determinism") {
  const auto cfg = tiny_config();
  Rng rng(1);

  nets::ImageGenerator<double> g(cfg);
  g.init_params(rng);
  auto depth = random_tensor<double>({2, 1, 16, 16}, rng);
  auto za = random_tensor<double>({2, 3}, rng);
  auto out = g.forward(depth, za, /*training=*/true);
  REQUIRE(out.shape() == std::vector<int64_t>{2, 3, 16, 16});
  for (int64_t i = 0; i < out.numel(); ++i) {
    CHECK(out[i] >= -1.0);
    CHECK(out[i] <= 1.0);
  }

  // conditioning path: different z_a must change the output
  auto za2 = za;
  for (int64_t i = 0; i < za2.numel(); ++i) za2[i] += 0.5;
  auto out2 = g.forward(depth, za2, true);
  double max_diff = 0;
  for (int64_t i = 0; i < out.numel(); ++i)
    max_diff = std::max(max_diff, std::abs(out[i] - out2[i]));
  CHECK(max_diff > 0.0);

  // determinism in eval mode
  auto e1 = g.forward(depth, za, false, false);
  auto e2 = g.forward(depth, za, false, false);
  for (int64_t i = 0; i < e1.numel(); ++i) CHECK(e1[i] == e2[i]);

  nets::PatchDiscriminator<double> d(cfg);
  d.init_params(rng);
  auto rgb = random_tensor<double>({2, 3, 16, 16}, rng);
  auto scores = d.forward(rgb);
  REQUIRE(scores.shape() == std::vector<int64_t>{2, 1, 2, 2});

  // zero parameters give zero scores
  nets::PatchDiscriminator<double> d0(cfg);
  auto s0 = d0.forward(rgb, false);
  for (int64_t i = 0; i < s0.numel(); ++i) CHECK(s0[i] == 0.0);

  nets::ViewpointEncoder<double> ev(cfg);
  ev.init_params(rng);
  auto raw = ev.forward(rgb, true);
  REQUIRE(raw.shape() == std::vector<int64_t>{2, 2});
  for (int64_t i = 0; i < raw.numel(); ++i) {
    CHECK(raw[i] > -1.0);
    CHECK(raw[i] < 1.0);
  }

  nets::GaussianEncoder<double> ea("ea", cfg, cfg.appearance_dim);
  ea.init_params(rng);
  auto q = ea.forward(rgb, true);
  REQUIRE(q.mean.shape() == std::vector<int64_t>{2, 3});
  REQUIRE(q.logvar.shape() == std::vector<int64_t>{2, 3});
  // freshly initialized logvar head sits near zero: unit sample variance
  for (int64_t i = 0; i < q.logvar.numel(); ++i)
    CHECK(std::abs(std::exp(q.logvar[i] / 2) - 1.0) < 0.2);

  nets::VoxelDecoder<double> ds(cfg);
  ds.init_params(rng);
  auto z = random_tensor<double>({2, 6}, rng);
  auto probs = ds.forward(z, true);
  REQUIRE(probs.shape() == std::vector<int64_t>{2, 1, 8, 8, 8});
  for (int64_t i = 0; i < probs.numel(); ++i) {
    CHECK(probs[i] >= 0.0);
    CHECK(probs[i] <= 1.0);
  }

  nets::ImplicitDecoder<double> im(cfg);
  im.init_params(rng);
  auto pts = random_tensor<double>({2, 12, 3}, rng, 0.0, 1.0);
  auto vals = im.forward(z, pts);
  REQUIRE(vals.shape() == std::vector<int64_t>{2, 12});
  for (int64_t i = 0; i < vals.numel(); ++i) {
    CHECK(vals[i] >= 0.0);
    CHECK(vals[i] <= 1.0);
  }
  // same query twice -> identical values
  auto vals2 = im.forward(z, pts, false);
  for (int64_t i = 0; i < vals.numel(); ++i) CHECK(vals[i] == vals2[i]);

  // dense grid evaluation agrees with pointwise queries
  Tensor<double> z1({1, 6});
  for (int64_t i = 0; i < 6; ++i) z1[i] = z[i];
  auto field = im.evaluate_grid(z1, 5);
  Tensor<double> probe({1, 1, 3});
  probe[0] = (2 + 0.5) / 5.0;
  probe[1] = (1 + 0.5) / 5.0;
  probe[2] = (4 + 0.5) / 5.0;
  auto v = im.forward(z1, probe, false);
  CHECK(field[2 + 5 * (1 + 5 * 4)] == doctest::Approx(v[0]).epsilon(1e-12));
}

TEST_CASE("reparameterization: sample structure and backward") {
  Rng rng(2);
  nets::GaussianPosterior<double> q;
  q.mean = random_tensor<double>({2, 4}, rng);
  q.logvar = random_tensor<double>({2, 4}, rng, -0.5, 0.5);
  auto s = nets::reparameterize(q, rng);
  for (int64_t i = 0; i < s.z.numel(); ++i)
    CHECK(s.z[i] ==
          doctest::Approx(q.mean[i] + std::exp(q.logvar[i] / 2) * s.eps[i]).epsilon(1e-12));

  // backward: dz/dmean = 1, dz/dlogvar = (z - mean)/2
  Tensor<double> gz = random_tensor<double>({2, 4}, rng);
  Tensor<double> gmean(q.mean.shape()), glogvar(q.logvar.shape());
  nets::reparameterize_backward(gz, q.logvar, s.eps, gmean, glogvar);
  for (int64_t i = 0; i < gz.numel(); ++i) {
    CHECK(gmean[i] == doctest::Approx(gz[i]));
    CHECK(glogvar[i] == doctest::Approx(gz[i] * 0.5 * (s.z[i] - q.mean[i])).epsilon(1e-9));
  }
}

TEST_CASE("network parameter gradients match finite differences") {
  const auto cfg = tiny_config();
  Rng rng(3);
  const double h = 1e-6, tol = 1e-3;

  SUBCASE("image generator") {
    nets::ImageGenerator<double> g(cfg);
    g.init_params(rng);
    testing::jitter_params(g.params(), rng);
    auto depth = random_tensor<double>({2, 1, 16, 16}, rng);
    auto za = random_tensor<double>({2, 3}, rng);
    auto out = g.forward(depth, za, true);
    Probe probe(out, rng);
    for (auto* p : g.params()) p->zero_grad();
    g.forward(depth, za, true);
    g.backward(probe.grad());
    auto value = [&] { return probe.loss(g.forward(depth, za, true, false)); };
    CHECK(testing::param_gradient_max_rel_err(g.params(), value, h) < tol);
  }

  SUBCASE("discriminator") {
    nets::PatchDiscriminator<double> d(cfg);
    d.init_params(rng);
    testing::jitter_params(d.params(), rng);
    auto rgb = random_tensor<double>({2, 3, 16, 16}, rng);
    auto out = d.forward(rgb);
    Probe probe(out, rng);
    for (auto* p : d.params()) p->zero_grad();
    d.forward(rgb);
    d.backward(probe.grad(), false);
    auto value = [&] { return probe.loss(d.forward(rgb, false)); };
    CHECK(testing::param_gradient_max_rel_err(d.params(), value, h) < tol);
  }

  SUBCASE("viewpoint encoder") {
    nets::ViewpointEncoder<double> ev(cfg);
    ev.init_params(rng);
    testing::jitter_params(ev.params(), rng);
    auto rgb = random_tensor<double>({2, 3, 16, 16}, rng);
    auto out = ev.forward(rgb, true);
    Probe probe(out, rng);
    for (auto* p : ev.params()) p->zero_grad();
    ev.forward(rgb, true);
    ev.backward(probe.grad(), false);
    auto value = [&] { return probe.loss(ev.forward(rgb, true, false)); };
    CHECK(testing::param_gradient_max_rel_err(ev.params(), value, h) < tol);
  }

  SUBCASE("gaussian encoder") {
    nets::GaussianEncoder<double> es("es", cfg, cfg.shape_dim);
    es.init_params(rng);
    testing::jitter_params(es.params(), rng);
    auto rgb = random_tensor<double>({2, 3, 16, 16}, rng);
    auto q = es.forward(rgb, true);
    Probe pm(q.mean, rng);
    Probe pl(q.logvar, rng);
    for (auto* p : es.params()) p->zero_grad();
    es.forward(rgb, true);
    es.backward(pm.grad(), pl.grad(), false);
    auto value = [&] {
      auto qq = es.forward(rgb, true, false);
      return pm.loss(qq.mean) + pl.loss(qq.logvar);
    };
    CHECK(testing::param_gradient_max_rel_err(es.params(), value, h) < tol);
  }

  SUBCASE("voxel decoder") {
    nets::VoxelDecoder<double> ds(cfg);
    ds.init_params(rng);
    testing::jitter_params(ds.params(), rng);
    auto z = random_tensor<double>({2, 6}, rng);
    auto out = ds.forward(z, true);
    Probe probe(out, rng);
    for (auto* p : ds.params()) p->zero_grad();
    ds.forward(z, true);
    ds.backward(probe.grad());
    auto value = [&] { return probe.loss(ds.forward(z, true, false)); };
    CHECK(testing::param_gradient_max_rel_err(ds.params(), value, h) < tol);
  }

  SUBCASE("implicit decoder") {
    nets::ImplicitDecoder<double> im(cfg);
    im.init_params(rng);
    testing::jitter_params(im.params(), rng);
    auto z = random_tensor<double>({2, 6}, rng);
    auto pts = random_tensor<double>({2, 10, 3}, rng, 0.0, 1.0);
    auto out = im.forward(z, pts);
    Probe probe(out, rng);
    for (auto* p : im.params()) p->zero_grad();
    im.forward(z, pts);
    im.backward(probe.grad());
    auto value = [&] { return probe.loss(im.forward(z, pts, false)); };
    CHECK(testing::param_gradient_max_rel_err(im.params(), value, h) < tol);
  }
}

TEST_CASE("network input gradients match finite differences") {
  const auto cfg = tiny_config();
  Rng rng(5);
  const double h = 1e-5, tol = 1e-3;

  // discriminator input gradient feeds the generator update, so it gets its
  // own check
  nets::PatchDiscriminator<double> d(cfg);
  d.init_params(rng);
  auto rgb = random_tensor<double>({2, 3, 16, 16}, rng);
  auto out = d.forward(rgb);
  Probe probe(out, rng);
  for (auto* p : d.params()) p->zero_grad();
  d.forward(rgb);
  auto gin = d.backward(probe.grad(), true);
  auto value = [&] { return probe.loss(d.forward(rgb, false)); };
  CHECK(testing::input_gradient_max_rel_err(rgb, value, gin, h) < tol);

  // shape decoder code gradient feeds the reparameterized encoder
  nets::VoxelDecoder<double> ds(cfg);
  ds.init_params(rng);
  auto z = random_tensor<double>({2, 6}, rng);
  auto probs = ds.forward(z, true);
  Probe dsp(probs, rng);
  for (auto* p : ds.params()) p->zero_grad();
  ds.forward(z, true);
  auto gz = ds.backward(dsp.grad());
  auto dvalue = [&] { return dsp.loss(ds.forward(z, true, false)); };
  CHECK(testing::input_gradient_max_rel_err(z, dvalue, gz, h) < tol);
}
