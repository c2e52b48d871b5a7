// SPDX-License-Identifier: Apache-2.0
#include "sist/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "sist/common/check.hpp"

namespace sist::evalkit {

double TriangleMesh::signed_volume() const {
  double vol = 0.0;
  for (const auto& t : triangles) {
    const auto& a = vertices[static_cast<size_t>(t[0])];
    const auto& b = vertices[static_cast<size_t>(t[1])];
    const auto& c = vertices[static_cast<size_t>(t[2])];
    vol += a[0] * (b[1] * c[2] - b[2] * c[1]) -
           a[1] * (b[0] * c[2] - b[2] * c[0]) +
           a[2] * (b[0] * c[1] - b[1] * c[0]);
  }
  return vol / 6.0;
}

void TriangleMesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& v : vertices)
    SIST_CHECK(std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]),
               "mesh has non-finite vertex");
  for (const auto& t : triangles)
    for (int i : t) SIST_CHECK(i >= 0 && i < n, "triangle index ", i, " out of range");
}

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream os(path);
  SIST_CHECK(os.good(), "cannot write ", path.string());
  os.precision(9);
  for (const auto& v : mesh.vertices) os << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  for (const auto& t : mesh.triangles)
    os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream is(path);
  SIST_CHECK(is.good(), "cannot read ", path.string());
  TriangleMesh mesh;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      std::array<double, 3> v{};
      ls >> v[0] >> v[1] >> v[2];
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      for (int i = 0; i < 3; ++i) {
        std::string tok;
        ls >> tok;
        f[static_cast<size_t>(i)] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
      }
      mesh.triangles.push_back(f);
    }
  }
  mesh.validate();
  return mesh;
}

PointCloud normalize_cloud(const PointCloud& cloud) {
  SIST_CHECK(!cloud.empty(), "cannot normalize an empty point cloud");
  std::array<double, 3> lo{}, hi{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& p : cloud.points) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  const double extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  SIST_CHECK(extent > 0.0, "all points coincident, scale undefined");
  const double scale = 1.0 / extent;
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    out.points.push_back({(p[0] - 0.5 * (lo[0] + hi[0])) * scale,
                          (p[1] - 0.5 * (lo[1] + hi[1])) * scale,
                          (p[2] - 0.5 * (lo[2] + hi[2])) * scale});
  }
  return out;
}

PointCloud sample_points(const TriangleMesh& mesh, int n, Rng& rng, MeshSampling mode) {
  SIST_CHECK(n > 0, "point count must be positive");
  PointCloud out;
  out.points.reserve(static_cast<size_t>(n));

  if (mode == MeshSampling::kVertices) {
    const size_t v = mesh.vertices.size();
    SIST_CHECK(v > 0, "cannot sample from a mesh without vertices");
    if (v >= static_cast<size_t>(n)) {
      // partial Fisher-Yates: n distinct vertices
      std::vector<size_t> idx(v);
      std::iota(idx.begin(), idx.end(), size_t{0});
      for (int i = 0; i < n; ++i) {
        const size_t j = i + static_cast<size_t>(rng.index(v - static_cast<size_t>(i)));
        std::swap(idx[static_cast<size_t>(i)], idx[j]);
        out.points.push_back(mesh.vertices[idx[static_cast<size_t>(i)]]);
      }
    } else {
      for (int i = 0; i < n; ++i)
        out.points.push_back(mesh.vertices[static_cast<size_t>(rng.index(v))]);
    }
    return out;
  }

  // area-weighted triangle sampling
  SIST_CHECK(!mesh.triangles.empty(), "cannot surface-sample a mesh without triangles");
  std::vector<double> cum(mesh.triangles.size());
  double total = 0.0;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& a = mesh.vertices[static_cast<size_t>(tri[0])];
    const auto& b = mesh.vertices[static_cast<size_t>(tri[1])];
    const auto& c = mesh.vertices[static_cast<size_t>(tri[2])];
    const double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
    const double vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
    const double cx = uy * vz - uz * vy;
    const double cy = uz * vx - ux * vz;
    const double cz = ux * vy - uy * vx;
    total += 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
    cum[t] = total;
  }
  SIST_CHECK(total > 0.0, "degenerate mesh: zero surface area");
  for (int i = 0; i < n; ++i) {
    const double r = rng.uniform() * total;
    const size_t t = static_cast<size_t>(
        std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
    const auto& tri = mesh.triangles[std::min(t, mesh.triangles.size() - 1)];
    const auto& a = mesh.vertices[static_cast<size_t>(tri[0])];
    const auto& b = mesh.vertices[static_cast<size_t>(tri[1])];
    const auto& c = mesh.vertices[static_cast<size_t>(tri[2])];
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    out.points.push_back({a[0] + u * (b[0] - a[0]) + v * (c[0] - a[0]),
                          a[1] + u * (b[1] - a[1]) + v * (c[1] - a[1]),
                          a[2] + u * (b[2] - a[2]) + v * (c[2] - a[2])});
  }
  return out;
}

namespace {

// Flat kd-tree over 3d points for nearest-neighbor queries.
class KdTree {
public:
  explicit KdTree(const std::vector<std::array<double, 3>>& points) : points_(points) {
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), size_t{0});
    nodes_.reserve(points.size() * 2);
    root_ = build(0, points.size());
  }

  double nearest_distance(const std::array<double, 3>& q) const {
    double best = std::numeric_limits<double>::infinity();
    search(root_, q, best);
    return std::sqrt(best);
  }

private:
  struct Node {
    int left = -1, right = -1;
    int axis = 0;
    size_t begin = 0, end = 0;  // leaf payload in order_
    double split = 0.0;
  };

  static constexpr size_t kLeafSize = 8;

  int build(size_t begin, size_t end) {
    if (begin >= end) return -1;
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size() - 1);
    }
    std::array<double, 3> lo{}, hi{};
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (size_t i = begin; i < end; ++i) {
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], points_[order_[i]][a]);
        hi[a] = std::max(hi[a], points_[order_[i]][a]);
      }
    }
    int axis = 0;
    for (int a = 1; a < 3; ++a)
      if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
    const size_t mid = (begin + end) / 2;
    std::nth_element(order_.begin() + static_cast<ptrdiff_t>(begin),
                     order_.begin() + static_cast<ptrdiff_t>(mid),
                     order_.begin() + static_cast<ptrdiff_t>(end),
                     [&](size_t i, size_t j) { return points_[i][axis] < points_[j][axis]; });
    node.axis = axis;
    node.split = points_[order_[mid]][axis];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[static_cast<size_t>(self)].left = left;
    nodes_[static_cast<size_t>(self)].right = right;
    return self;
  }

  void search(int id, const std::array<double, 3>& q, double& best) const {
    if (id < 0) return;
    const Node& node = nodes_[static_cast<size_t>(id)];
    if (node.left < 0 && node.right < 0) {
      for (size_t i = node.begin; i < node.end; ++i) {
        const auto& p = points_[order_[i]];
        const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search(near, q, best);
    if (delta * delta < best) search(far, q, best);
  }

  const std::vector<std::array<double, 3>>& points_;
  std::vector<size_t> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  SIST_CHECK(!a.empty() && !b.empty(), "chamfer distance needs non-empty clouds");
  const KdTree tree_a(a.points);
  const KdTree tree_b(b.points);
  double sum_ab = 0.0;
  for (const auto& p : a.points) sum_ab += tree_b.nearest_distance(p);
  double sum_ba = 0.0;
  for (const auto& p : b.points) sum_ba += tree_a.nearest_distance(p);
  return sum_ab / static_cast<double>(a.size()) + sum_ba / static_cast<double>(b.size());
}

geom3d::VoxelGrid downscale(const geom3d::VoxelGrid& grid, int target_resolution) {
  grid.validate();
  SIST_CHECK(target_resolution >= 2, "target resolution must be >= 2");
  SIST_CHECK(grid.resolution % target_resolution == 0,
             "resolution ", grid.resolution, " not divisible by ", target_resolution);
  const int f = grid.resolution / target_resolution;

  geom3d::VoxelGrid out;
  out.resolution = target_resolution;
  out.voxel_size = grid.voxel_size * f;
  out.origin = grid.origin;
  out.occupancy.assign(static_cast<size_t>(out.cell_count()), 0);

  const int majority = (f * f * f + 1) / 2;  // >= half occupied
  for (int oz = 0; oz < target_resolution; ++oz)
    for (int oy = 0; oy < target_resolution; ++oy)
      for (int ox = 0; ox < target_resolution; ++ox) {
        int count = 0;
        for (int dz = 0; dz < f; ++dz)
          for (int dy = 0; dy < f; ++dy)
            for (int dx = 0; dx < f; ++dx)
              count += grid.occupied(ox * f + dx, oy * f + dy, oz * f + dz);
        out.occupancy[out.index(ox, oy, oz)] = count >= majority ? 1 : 0;
      }
  return out;
}

double iou(const geom3d::VoxelGrid& a, const geom3d::VoxelGrid& b) {
  SIST_CHECK(a.resolution == b.resolution, "IoU needs equal resolutions, got ",
             a.resolution, " vs ", b.resolution);
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.occupancy.size(); ++i) {
    const bool oa = a.occupancy[i] != 0;
    const bool ob = b.occupancy[i] != 0;
    inter += oa && ob;
    uni += oa || ob;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace sist::evalkit
