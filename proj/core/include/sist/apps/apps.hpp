// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sist/evalkit/marching_cubes.hpp"
#include "sist/evalkit/metrics.hpp"
#include "sist/trainer/trainer.hpp"

namespace sist::apps {

// A checkpoint loaded for inference. Holds whichever scalar width the
// checkpoint was trained with; commands dispatch internally.
class Model {
public:
  static Model load(const std::filesystem::path& checkpoint_dir);

  const trainer::CheckpointInfo& info() const { return info_; }
  trainer::DecoderType decoder_type() const { return info_.config.decoder_type; }
  int image_size() const { return info_.config.nets.image_size; }
  int native_resolution() const { return info_.config.nets.voxel_resolution; }

  trainer::Pipeline<float>* f32() { return pf_ ? &*pf_ : nullptr; }
  trainer::Pipeline<double>* f64() { return pd_ ? &*pd_ : nullptr; }

private:
  trainer::CheckpointInfo info_;
  std::optional<trainer::Pipeline<float>> pf_;
  std::optional<trainer::Pipeline<double>> pd_;
};

// --- encoding (posterior means; inference never samples) -------------------

std::vector<double> encode_appearance(Model& m, const ImageU8& image);
std::vector<double> encode_shape(Model& m, const ImageU8& image);
geom3d::Viewpoint encode_viewpoint(Model& m, const ImageU8& image);

// --- decoding ---------------------------------------------------------------

// Shape code -> hard occupancy at `resolution`. The implicit decoder
// evaluates its field at any resolution; the voxel decoder only at its
// native one.
geom3d::VoxelGrid decode_shape(Model& m, const std::vector<double>& z, int resolution);

struct ReconstructionResult {
  geom3d::VoxelGrid grid;
  evalkit::TriangleMesh mesh;
};

ReconstructionResult reconstruct_shape(Model& m, const ImageU8& image, int resolution);

// Depth render + generator. z_a defaults to a seeded standard normal draw.
ImageU8 generate_image(Model& m, const geom3d::VoxelGrid& shape, const geom3d::Viewpoint& v,
                       const std::optional<std::vector<double>>& z_a, uint64_t seed,
                       geom3d::DepthMap* depth_out = nullptr);

ImageU8 reconstruct_image(Model& m, const ImageU8& image);

std::vector<ImageU8> novel_views(Model& m, const ImageU8& image,
                                 const std::vector<double>& azimuths_rad,
                                 double elevation_rad);

ImageU8 modify_shape(Model& m, const ImageU8& image, const geom3d::VoxelGrid& replacement);

// --- latent interpolation ----------------------------------------------------

// Norm-corrected linear interpolation: direction lerp(a,b,t), length
// (1-t)|a| + t|b|. Errors when the interpolated direction degenerates.
std::vector<double> interpolate_code(const std::vector<double>& a,
                                     const std::vector<double>& b, double t);

std::vector<ImageU8> interpolate_appearance(Model& m, const geom3d::VoxelGrid& shape,
                                            const geom3d::Viewpoint& v,
                                            const std::vector<double>& code_a,
                                            const std::vector<double>& code_b, int steps);

std::vector<evalkit::TriangleMesh> interpolate_shape(Model& m,
                                                     const std::vector<double>& code_a,
                                                     const std::vector<double>& code_b,
                                                     int steps, int resolution);

// --- evaluation protocol ------------------------------------------------------

struct EvalOptions {
  bool cd = true;
  bool iou = true;
  uint64_t seed = 0;
  int points = 1024;
  evalkit::MeshSampling sampling = evalkit::MeshSampling::kVertices;
};

struct EvalRow {
  std::string id;
  double cd = std::numeric_limits<double>::quiet_NaN();
  double iou = std::numeric_limits<double>::quiet_NaN();
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_cd = std::numeric_limits<double>::quiet_NaN();
  double mean_iou = std::numeric_limits<double>::quiet_NaN();

  std::string to_csv() const;
  std::string to_json() const;
};

// Chamfer distance between two hard occupancy grids, following the
// evaluation protocol: marching cubes, point sampling, unit-longest-
// dimension normalization of both clouds.
double shape_chamfer(const geom3d::VoxelGrid& pred, const geom3d::VoxelGrid& gt,
                     const EvalOptions& opt);

// IoU at 32^3 (grids above 32 are majority-downscaled first).
double shape_iou32(const geom3d::VoxelGrid& pred, const geom3d::VoxelGrid& gt);

// Matches prediction and ground-truth voxel files by stem over two
// directories (binvox or raw-occupancy, sniffed from the extension).
EvalReport evaluate_dirs(const std::filesystem::path& pred_dir,
                         const std::filesystem::path& gt_dir, const EvalOptions& opt);

}  // namespace sist::apps
