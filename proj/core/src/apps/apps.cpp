// SPDX-License-Identifier: Apache-2.0
#include "sist/apps/apps.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

namespace sist::apps {

namespace {

// Applies f to whichever pipeline the checkpoint carries.
template <class F>
auto dispatch(Model& m, F&& f) {
  if (auto* p = m.f32()) return f(*p);
  return f(*m.f64());
}

template <class T>
Tensor<T> image_to_batch(const ImageU8& image, int expected_size) {
  SIST_CHECK(image.channels == 3, "expected an RGB image");
  SIST_CHECK(image.height == expected_size && image.width == expected_size,
             "image is ", image.width, "x", image.height, ", the checkpoint expects ",
             expected_size, "x", expected_size);
  Tensor<T> out({1, 3, image.height, image.width});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        out.at(0, c, y, x) = static_cast<T>(image.at(y, x, c) / 127.5 - 1.0);
  return out;
}

template <class T>
std::vector<double> to_doubles(const Tensor<T>& t) {
  std::vector<double> out(static_cast<size_t>(t.numel()));
  for (int64_t i = 0; i < t.numel(); ++i) out[static_cast<size_t>(i)] = static_cast<double>(t[i]);
  return out;
}

template <class T>
Tensor<T> code_tensor(const std::vector<double>& code) {
  Tensor<T> t({1, static_cast<int64_t>(code.size())});
  for (size_t i = 0; i < code.size(); ++i) t[static_cast<int64_t>(i)] = static_cast<T>(code[i]);
  return t;
}

template <class T>
geom3d::VoxelGrid grid_from_probs(const T* probs, int resolution) {
  auto grid = geom3d::VoxelGrid::centered(resolution);
  const int64_t n = grid.cell_count();
  for (int64_t i = 0; i < n; ++i)
    grid.occupancy[static_cast<size_t>(i)] = probs[i] >= T(0.5) ? 1 : 0;  // ties occupied
  return grid;
}

template <class T>
geom3d::VoxelGrid decode_grid(trainer::Pipeline<T>& p, const Tensor<T>& z, int resolution) {
  if (p.voxel_decoder) {
    SIST_CHECK(resolution == p.cfg.voxel_resolution,
               "the voxel decoder generates shapes at its fixed resolution ",
               p.cfg.voxel_resolution,
               "; arbitrary resolutions need the implicit decoder (requested ", resolution,
               ")");
    Tensor<T> probs = p.voxel_decoder->forward(z, /*training=*/false, /*keep_cache=*/false);
    return grid_from_probs(probs.data(), resolution);
  }
  Tensor<T> field = p.implicit_decoder->evaluate_grid(z, resolution);
  return grid_from_probs(field.data(), resolution);
}

geom3d::CameraModel camera_for(const geom3d::VoxelGrid& grid, int image_size) {
  return geom3d::CameraModel::fit(grid.extent(), image_size, image_size);
}

template <class T>
ImageU8 run_generator(trainer::Pipeline<T>& p, const geom3d::VoxelGrid& shape,
                      const geom3d::Viewpoint& v, const std::vector<double>& z_a,
                      geom3d::DepthMap* depth_out) {
  const int s = p.cfg.image_size;
  const auto cam = camera_for(shape, s);
  const auto dm = geom3d::render_depth(shape, v, cam);
  if (depth_out) *depth_out = dm;

  Tensor<T> depth({1, 1, s, s});
  for (size_t i = 0; i < dm.values.size(); ++i)
    depth[static_cast<int64_t>(i)] = static_cast<T>(dm.values[i]);
  SIST_CHECK(static_cast<int>(z_a.size()) == p.cfg.appearance_dim, "appearance code length ",
             z_a.size(), " != ", p.cfg.appearance_dim);
  Tensor<T> rgb = p.generator.forward(depth, code_tensor<T>(z_a), /*training=*/false,
                                      /*keep_cache=*/false);
  return datasets::tensor_to_image(rgb, 0);
}

}  // namespace

Model Model::load(const std::filesystem::path& checkpoint_dir) {
  Model m;
  m.info_ = trainer::read_checkpoint_info(checkpoint_dir);
  if (m.info_.dtype == "f32") {
    m.pf_.emplace(trainer::load_pipeline<float>(checkpoint_dir, m.info_.config));
  } else if (m.info_.dtype == "f64") {
    m.pd_.emplace(trainer::load_pipeline<double>(checkpoint_dir, m.info_.config));
  } else {
    throw ValidationError("unknown checkpoint dtype '" + m.info_.dtype + "'");
  }
  return m;
}

std::vector<double> encode_appearance(Model& m, const ImageU8& image) {
  return dispatch(m, [&](auto& p) {
    using T = typename std::remove_reference_t<decltype(p)>::Scalar;
    auto q = p.appearance_encoder.forward(image_to_batch<T>(image, p.cfg.image_size),
                                          /*training=*/false, /*keep_cache=*/false);
    return to_doubles(q.mean);
  });
}

std::vector<double> encode_shape(Model& m, const ImageU8& image) {
  return dispatch(m, [&](auto& p) {
    using T = typename std::remove_reference_t<decltype(p)>::Scalar;
    auto q = p.shape_encoder.forward(image_to_batch<T>(image, p.cfg.image_size),
                                     /*training=*/false, /*keep_cache=*/false);
    return to_doubles(q.mean);
  });
}

geom3d::Viewpoint encode_viewpoint(Model& m, const ImageU8& image) {
  return dispatch(m, [&](auto& p) {
    using T = typename std::remove_reference_t<decltype(p)>::Scalar;
    auto raw = p.viewpoint_encoder.forward(image_to_batch<T>(image, p.cfg.image_size),
                                           /*training=*/false, /*keep_cache=*/false);
    return geom3d::Viewpoint::from_raw(static_cast<double>(raw[0]),
                                       static_cast<double>(raw[1]));
  });
}

geom3d::VoxelGrid decode_shape(Model& m, const std::vector<double>& z, int resolution) {
  return dispatch(m, [&](auto& p) {
    using T = typename std::remove_reference_t<decltype(p)>::Scalar;
    SIST_CHECK(static_cast<int>(z.size()) == p.cfg.shape_dim, "shape code length ", z.size(),
               " != ", p.cfg.shape_dim);
    return decode_grid(p, code_tensor<T>(z), resolution);
  });
}

ReconstructionResult reconstruct_shape(Model& m, const ImageU8& image, int resolution) {
  ReconstructionResult r;
  r.grid = decode_shape(m, encode_shape(m, image), resolution);
  r.mesh = evalkit::marching_cubes(evalkit::ScalarField::from_grid(r.grid));
  return r;
}

ImageU8 generate_image(Model& m, const geom3d::VoxelGrid& shape, const geom3d::Viewpoint& v,
                       const std::optional<std::vector<double>>& z_a, uint64_t seed,
                       geom3d::DepthMap* depth_out) {
  std::vector<double> code;
  if (z_a.has_value()) {
    code = *z_a;
  } else {
    Rng rng(seed);
    code.resize(static_cast<size_t>(m.info().config.nets.appearance_dim));
    for (auto& c : code) c = rng.normal();
  }
  return dispatch(m, [&](auto& p) { return run_generator(p, shape, v, code, depth_out); });
}

ImageU8 reconstruct_image(Model& m, const ImageU8& image) {
  const auto z_a = encode_appearance(m, image);
  const auto v = encode_viewpoint(m, image);
  const auto grid = decode_shape(m, encode_shape(m, image), m.native_resolution());
  return dispatch(m, [&](auto& p) { return run_generator(p, grid, v, z_a, nullptr); });
}

std::vector<ImageU8> novel_views(Model& m, const ImageU8& image,
                                 const std::vector<double>& azimuths_rad,
                                 double elevation_rad) {
  const auto z_a = encode_appearance(m, image);
  const auto grid = decode_shape(m, encode_shape(m, image), m.native_resolution());
  std::vector<ImageU8> out;
  for (double az : azimuths_rad) {
    geom3d::Viewpoint v{az, elevation_rad};
    v.validate();
    out.push_back(dispatch(m, [&](auto& p) { return run_generator(p, grid, v, z_a, nullptr); }));
  }
  return out;
}

ImageU8 modify_shape(Model& m, const ImageU8& image, const geom3d::VoxelGrid& replacement) {
  const auto z_a = encode_appearance(m, image);
  const auto v = encode_viewpoint(m, image);
  return dispatch(m, [&](auto& p) { return run_generator(p, replacement, v, z_a, nullptr); });
}

std::vector<double> interpolate_code(const std::vector<double>& a,
                                     const std::vector<double>& b, double t) {
  SIST_CHECK(a.size() == b.size() && !a.empty(), "codes must have equal nonzero length");
  double na = 0, nb = 0, nu = 0;
  std::vector<double> u(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    u[i] = (1.0 - t) * a[i] + t * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
    nu += u[i] * u[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  nu = std::sqrt(nu);
  SIST_CHECK(nu > 0.0, "degenerate interpolation direction at t=", t,
             " (antipodal codes?)");
  const double target = (1.0 - t) * na + t * nb;
  const double scale = target / nu;
  for (auto& v : u) v *= scale;
  return u;
}

std::vector<ImageU8> interpolate_appearance(Model& m, const geom3d::VoxelGrid& shape,
                                            const geom3d::Viewpoint& v,
                                            const std::vector<double>& code_a,
                                            const std::vector<double>& code_b, int steps) {
  SIST_CHECK(steps >= 2, "interpolation needs at least 2 steps");
  std::vector<ImageU8> out;
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / (steps - 1);
    const auto code = interpolate_code(code_a, code_b, t);
    out.push_back(dispatch(m, [&](auto& p) { return run_generator(p, shape, v, code, nullptr); }));
  }
  return out;
}

std::vector<evalkit::TriangleMesh> interpolate_shape(Model& m,
                                                     const std::vector<double>& code_a,
                                                     const std::vector<double>& code_b,
                                                     int steps, int resolution) {
  SIST_CHECK(steps >= 2, "interpolation needs at least 2 steps");
  std::vector<evalkit::TriangleMesh> out;
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / (steps - 1);
    const auto grid = decode_shape(m, interpolate_code(code_a, code_b, t), resolution);
    out.push_back(evalkit::marching_cubes(evalkit::ScalarField::from_grid(grid)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation protocol

double shape_chamfer(const geom3d::VoxelGrid& pred, const geom3d::VoxelGrid& gt,
                     const EvalOptions& opt) {
  const auto mesh_pred = evalkit::marching_cubes(evalkit::ScalarField::from_grid(pred));
  const auto mesh_gt = evalkit::marching_cubes(evalkit::ScalarField::from_grid(gt));
  if (mesh_pred.vertices.empty() || mesh_gt.vertices.empty())
    return std::numeric_limits<double>::quiet_NaN();
  // per-cloud seeding keeps the metric deterministic and exactly zero on
  // identical meshes
  Rng rng_pred(opt.seed);
  Rng rng_gt(opt.seed);
  const auto pc_pred = evalkit::normalize_cloud(
      evalkit::sample_points(mesh_pred, opt.points, rng_pred, opt.sampling));
  const auto pc_gt = evalkit::normalize_cloud(
      evalkit::sample_points(mesh_gt, opt.points, rng_gt, opt.sampling));
  return evalkit::chamfer_distance(pc_pred, pc_gt);
}

double shape_iou32(const geom3d::VoxelGrid& pred, const geom3d::VoxelGrid& gt) {
  auto to32 = [](const geom3d::VoxelGrid& g) {
    if (g.resolution == 32) return g;
    SIST_CHECK(g.resolution > 32 && g.resolution % 32 == 0,
               "IoU protocol needs resolution 32 or a multiple of it, got ", g.resolution);
    return evalkit::downscale(g, 32);
  };
  return evalkit::iou(to32(pred), to32(gt));
}

namespace {

std::map<std::string, std::filesystem::path> voxel_files(const std::filesystem::path& dir) {
  std::map<std::string, std::filesystem::path> out;
  SIST_CHECK(std::filesystem::is_directory(dir), "not a directory: ", dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension().string();
    if (ext == ".binvox" || ext == ".vox" || ext == ".sistvox")
      out[e.path().stem().string()] = e.path();
  }
  return out;
}

geom3d::VoxelGrid load_any_voxel(const std::filesystem::path& p) {
  return p.extension() == ".binvox" ? datasets::load_binvox(p)
                                    : datasets::load_raw_occupancy(p);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

EvalReport evaluate_dirs(const std::filesystem::path& pred_dir,
                         const std::filesystem::path& gt_dir, const EvalOptions& opt) {
  const auto preds = voxel_files(pred_dir);
  const auto gts = voxel_files(gt_dir);
  SIST_CHECK(!preds.empty(), "no voxel files in ", pred_dir.string());
  SIST_CHECK(!gts.empty(), "no voxel files in ", gt_dir.string());

  EvalReport report;
  double sum_cd = 0, sum_iou = 0;
  int n_cd = 0, n_iou = 0;
  for (const auto& [id, pred_path] : preds) {
    auto it = gts.find(id);
    if (it == gts.end()) {
      std::cerr << "[sist] warning: no ground truth for '" << id << "', skipping\n";
      continue;
    }
    const auto pred = load_any_voxel(pred_path);
    const auto gt = load_any_voxel(it->second);
    EvalRow row;
    row.id = id;
    if (opt.cd) {
      row.cd = shape_chamfer(pred, gt, opt);
      if (!std::isnan(row.cd)) {
        sum_cd += row.cd;
        ++n_cd;
      } else {
        std::cerr << "[sist] warning: empty surface for '" << id << "', CD undefined\n";
      }
    }
    if (opt.iou) {
      row.iou = shape_iou32(pred, gt);
      sum_iou += row.iou;
      ++n_iou;
    }
    report.rows.push_back(row);
  }
  SIST_CHECK(!report.rows.empty(), "no matching prediction/ground-truth ids");
  if (n_cd > 0) report.mean_cd = sum_cd / n_cd;
  if (n_iou > 0) report.mean_iou = sum_iou / n_iou;
  return report;
}

std::string EvalReport::to_csv() const {
  std::string s = "id,cd,iou\n";
  for (const auto& r : rows) s += r.id + "," + fmt(r.cd) + "," + fmt(r.iou) + "\n";
  s += "mean," + fmt(mean_cd) + "," + fmt(mean_iou) + "\n";
  return s;
}

std::string EvalReport::to_json() const {
  std::ostringstream os;
  os << "{\"count\":" << rows.size() << ",\"mean_cd\":" << fmt(mean_cd)
     << ",\"mean_iou\":" << fmt(mean_iou) << "}";
  return os.str();
}

}  // namespace sist::apps
