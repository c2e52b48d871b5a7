// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>

#include "sist/evalkit/marching_cubes.hpp"
#include "sist/evalkit/metrics.hpp"
#include "support/oracles.hpp"

using namespace sist;
using evalkit::PointCloud;
using evalkit::ScalarField;
using geom3d::VoxelGrid;

namespace {

VoxelGrid sphere_grid(int r, double radius) {
  auto grid = VoxelGrid::centered(r);
  for (int iz = 0; iz < r; ++iz)
    for (int iy = 0; iy < r; ++iy)
      for (int ix = 0; ix < r; ++ix) {
        const auto c = grid.cell_center(ix, iy, iz);
        if (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] <= radius * radius)
          grid.set(ix, iy, iz, true);
      }
  return grid;
}

}  // namespace

TEST_CASE("marching cubes: constant fields give empty meshes") {
  auto zeros = VoxelGrid::centered(8);
  CHECK(evalkit::marching_cubes(ScalarField::from_grid(zeros)).empty());
  auto ones = VoxelGrid::centered(8);
  std::fill(ones.occupancy.begin(), ones.occupancy.end(), 1);
  CHECK(evalkit::marching_cubes(ScalarField::from_grid(ones)).empty());
}

TEST_CASE("marching cubes: sphere vertices sit near the analytic radius") {
  const double radius = 0.35;
  const auto grid = sphere_grid(64, radius);
  const auto mesh = evalkit::marching_cubes(ScalarField::from_grid(grid));
  REQUIRE(mesh.vertices.size() > 500);
  mesh.validate();
  const double tol = 1.5 * grid.voxel_size;
  for (const auto& v : mesh.vertices) {
    const double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    CHECK(std::abs(r - radius) <= tol);
  }
}

TEST_CASE("marching cubes: single voxel produces a small closed mesh") {
  auto grid = VoxelGrid::centered(8);
  grid.set(4, 4, 4, true);
  const auto mesh = evalkit::marching_cubes(ScalarField::from_grid(grid));
  REQUIRE(!mesh.empty());
  const double voxel_vol = grid.voxel_size * grid.voxel_size * grid.voxel_size;
  const double vol = std::abs(mesh.signed_volume());
  CHECK(vol >= 0.1 * voxel_vol);
  CHECK(vol <= 1.0 * voxel_vol);
}

TEST_CASE("marching cubes: axis permutation congruence") {
  Rng rng(9);
  auto grid = testing::random_grid(10, 0.3, rng);
  // permuted copy: swap x and z
  auto permuted = VoxelGrid::centered(10);
  for (int iz = 0; iz < 10; ++iz)
    for (int iy = 0; iy < 10; ++iy)
      for (int ix = 0; ix < 10; ++ix)
        permuted.set(iz, iy, ix, grid.occupied(ix, iy, iz));

  auto mesh_a = evalkit::marching_cubes(ScalarField::from_grid(grid));
  auto mesh_b = evalkit::marching_cubes(ScalarField::from_grid(permuted));
  REQUIRE(mesh_a.vertices.size() == mesh_b.vertices.size());

  auto key = [](const std::array<double, 3>& v) { return v; };
  std::vector<std::array<double, 3>> va, vb;
  for (auto v : mesh_a.vertices) va.push_back(key({v[2], v[1], v[0]}));  // permute coords
  for (auto v : mesh_b.vertices) vb.push_back(key(v));
  std::sort(va.begin(), va.end());
  std::sort(vb.begin(), vb.end());
  for (size_t i = 0; i < va.size(); ++i) {
    CHECK(std::abs(va[i][0] - vb[i][0]) < 1e-9);
    CHECK(std::abs(va[i][1] - vb[i][1]) < 1e-9);
    CHECK(std::abs(va[i][2] - vb[i][2]) < 1e-9);
  }
}

TEST_CASE("normalize_cloud forces unit longest extent") {
  PointCloud pc;
  pc.points = {{-1, 0, 0}, {1, 0, 0}, {0, 0.3, 0}};
  const auto n = evalkit::normalize_cloud(pc);
  double lo = 1e9, hi = -1e9;
  for (auto& p : n.points) {
    lo = std::min(lo, p[0]);
    hi = std::max(hi, p[0]);
  }
  CHECK(hi - lo == doctest::Approx(1.0).epsilon(1e-12));

  // idempotence
  const auto again = evalkit::normalize_cloud(n);
  for (size_t i = 0; i < n.points.size(); ++i)
    for (int a = 0; a < 3; ++a)
      CHECK(std::abs(again.points[i][a] - n.points[i][a]) < 1e-12);

  // scale/translation invariance on random clouds
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    auto cloud = testing::random_cloud(20, rng);
    auto moved = cloud;
    const double s = 0.5 + 2.0 * rng.uniform();
    for (auto& p : moved.points)
      for (int a = 0; a < 3; ++a) p[a] = s * p[a] + 3.0 * (a + 1);
    const auto na = evalkit::normalize_cloud(cloud);
    const auto nb = evalkit::normalize_cloud(moved);
    for (size_t i = 0; i < na.points.size(); ++i)
      for (int a = 0; a < 3; ++a) CHECK(std::abs(na.points[i][a] - nb.points[i][a]) < 1e-9);
  }

  PointCloud degenerate;
  degenerate.points = {{1, 1, 1}, {1, 1, 1}};
  CHECK_THROWS_AS(evalkit::normalize_cloud(degenerate), ValidationError);
}

TEST_CASE("sample_points: vertex mode") {
  evalkit::TriangleMesh mesh;
  for (int i = 0; i < 100; ++i)
    mesh.vertices.push_back({static_cast<double>(i), 0.0, 0.0});
  mesh.triangles.push_back({0, 1, 2});

  Rng rng(8);
  // without replacement: a permutation when n == vertex count
  const auto all = evalkit::sample_points(mesh, 100, rng);
  std::vector<double> xs;
  for (auto& p : all.points) xs.push_back(p[0]);
  std::sort(xs.begin(), xs.end());
  for (int i = 0; i < 100; ++i) CHECK(xs[static_cast<size_t>(i)] == doctest::Approx(i));

  // selection frequencies roughly uniform
  std::vector<int> counts(100, 0);
  const int draws = 10000, per_draw = 10;
  for (int d = 0; d < draws; ++d) {
    const auto s = evalkit::sample_points(mesh, per_draw, rng);
    for (auto& p : s.points) counts[static_cast<size_t>(p[0])]++;
  }
  const double expect = draws * per_draw / 100.0;
  for (int c : counts) {
    CHECK(c > expect * 0.8);
    CHECK(c < expect * 1.2);
  }
}

TEST_CASE("chamfer distance: hand cases and brute-force oracle") {
  PointCloud a, b;
  a.points = {{0, 0, 0}};
  b.points = {{1, 0, 0}};
  CHECK(evalkit::chamfer_distance(a, a) == doctest::Approx(0.0));
  CHECK(evalkit::chamfer_distance(a, b) == doctest::Approx(2.0));

  Rng rng(12);
  for (int t = 0; t < 30; ++t) {
    const auto p = testing::random_cloud(1 + static_cast<int>(rng.index(64)), rng);
    const auto q = testing::random_cloud(1 + static_cast<int>(rng.index(64)), rng);
    const double fast = evalkit::chamfer_distance(p, q);
    const double slow = testing::chamfer_bruteforce(p, q);
    CHECK(std::abs(fast - slow) < 1e-9);
    // symmetry
    CHECK(evalkit::chamfer_distance(q, p) == doctest::Approx(fast).epsilon(1e-12));
  }

  PointCloud empty;
  CHECK_THROWS_AS(evalkit::chamfer_distance(empty, a), ValidationError);
}

TEST_CASE("iou: hand cases and properties") {
  auto a = VoxelGrid::centered(4);
  auto b = VoxelGrid::centered(4);
  CHECK(evalkit::iou(a, b) == doctest::Approx(1.0));  // both empty

  a.set(0, 0, 0, true);
  a.set(1, 0, 0, true);
  b.set(0, 0, 0, true);
  CHECK(evalkit::iou(a, b) == doctest::Approx(0.5));
  CHECK(evalkit::iou(a, a) == doctest::Approx(1.0));

  auto c = VoxelGrid::centered(4);
  c.set(3, 3, 3, true);
  CHECK(evalkit::iou(a, c) == doctest::Approx(0.0));

  Rng rng(20);
  for (int t = 0; t < 20; ++t) {
    const auto g1 = testing::random_grid(8, 0.4, rng);
    const auto g2 = testing::random_grid(8, 0.4, rng);
    CHECK(evalkit::iou(g1, g2) == doctest::Approx(testing::iou_bruteforce(g1, g2)));
    CHECK(evalkit::iou(g1, g2) == doctest::Approx(evalkit::iou(g2, g1)));
  }

  auto wrong = VoxelGrid::centered(8);
  CHECK_THROWS_AS(evalkit::iou(a, wrong), ValidationError);
}

TEST_CASE("downscale majority rule") {
  auto full = VoxelGrid::centered(128);
  std::fill(full.occupancy.begin(), full.occupancy.end(), 1);
  const auto down_full = evalkit::downscale(full, 32);
  CHECK(down_full.occupied_count() == 32 * 32 * 32);

  auto empty = VoxelGrid::centered(128);
  CHECK(evalkit::downscale(empty, 32).occupied_count() == 0);

  // single voxel: 1/64 of the block is below the majority
  auto single = VoxelGrid::centered(128);
  single.set(0, 0, 0, true);
  CHECK(evalkit::downscale(single, 32).occupied_count() == 0);

  // exactly half the block counts as occupied
  auto half = VoxelGrid::centered(8);
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 2; ++x) half.set(x, y, z, true);
  const auto down = evalkit::downscale(half, 2);
  CHECK(down.occupied(0, 0, 0));
}

TEST_CASE("obj round trip") {
  auto grid = sphere_grid(12, 0.3);
  const auto mesh = evalkit::marching_cubes(ScalarField::from_grid(grid));
  const auto path = std::filesystem::temp_directory_path() / "sist_mesh_test.obj";
  evalkit::save_obj(path, mesh);
  const auto loaded = evalkit::load_obj(path);
  REQUIRE(loaded.vertices.size() == mesh.vertices.size());
  REQUIRE(loaded.triangles.size() == mesh.triangles.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i)
    for (int a = 0; a < 3; ++a)
      CHECK(std::abs(loaded.vertices[i][a] - mesh.vertices[i][a]) < 1e-6);
  std::filesystem::remove(path);
}
