// SPDX-License-Identifier: Apache-2.0
//
// sist: train, evaluate and run the image<->shape translation pipeline.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "sist/apps/apps.hpp"
#include "sist/apps/toy_data.hpp"
#include "sist/datasets/batching.hpp"

namespace fs = std::filesystem;
using namespace sist;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::vector<double> parse_csv_doubles(const std::string& s) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

struct LoadedData {
  datasets::ShapeDataset shapes;
  datasets::ImageDataset train_images;
  datasets::ImageDataset test_images;
  std::vector<std::pair<std::string, std::string>> pair_ids;
};

LoadedData load_from_manifest(const fs::path& dir, const trainer::TrainConfig& cfg) {
  const auto manifest = datasets::load_manifest(dir / "manifest.json");
  LoadedData data;

  data.shapes.source_format = "manifest";
  for (const auto& entry : manifest.shapes) {
    auto grid = datasets::load_voxel_file(entry.path, entry.format);
    if (!data.shapes.grids.empty() && grid.resolution != data.shapes.resolution()) {
      throw ValidationError("mixed voxel resolutions in manifest: shape '" + entry.id + "'");
    }
    data.shapes.ids.push_back(entry.id);
    data.shapes.grids.push_back(std::move(grid));
  }

  // deterministic seeded split over manifest order
  std::vector<size_t> order(manifest.images.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng split_rng(cfg.seed);
  split_rng.shuffle(order);
  const size_t n_train = static_cast<size_t>(
      std::llround(cfg.image_split * static_cast<double>(order.size())));

  data.train_images.split = "train";
  data.test_images.split = "test";
  for (size_t i = 0; i < order.size(); ++i) {
    const auto& entry = manifest.images[order[i]];
    ImageU8 img;
    try {
      img = load_image_rgb(entry.path);
    } catch (const std::exception& e) {
      std::cerr << "[sist] warning: skipping " << entry.path << ": " << e.what() << "\n";
      continue;
    }
    if (img.height != cfg.nets.image_size || img.width != cfg.nets.image_size) {
      std::cerr << "[sist] warning: skipping " << entry.path << ": wrong size\n";
      continue;
    }
    auto& dst = i < n_train ? data.train_images : data.test_images;
    dst.ids.push_back(entry.id);
    dst.images.push_back(std::move(img));
  }

  for (const auto& pr : manifest.pairs) {
    if (data.train_images.index_of(pr.first) >= 0) data.pair_ids.push_back(pr);
  }
  return data;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"self-supervised image-to-shape translation"};
  app.require_subcommand(1);

  // ---- train
  auto* train = app.add_subcommand("train", "train the full pipeline");
  std::string train_config, train_data, train_out = "runs/default";
  bool train_toy = false, train_resume = false;
  int toy_views = 16;
  train->add_option("--config", train_config, "training config JSON")->required();
  train->add_option("--data", train_data, "dataset directory containing manifest.json");
  train->add_flag("--toy", train_toy, "use the built-in procedural toy dataset");
  train->add_option("--toy-views", toy_views, "renderings per toy shape");
  train->add_option("--out", train_out, "output directory (checkpoints, loss log)")->required();
  train->add_flag("--resume", train_resume, "resume from the checkpoint in --out");

  // ---- eval
  auto* eval = app.add_subcommand("eval", "CD/IoU between prediction and ground-truth grids");
  std::string eval_pred, eval_gt, eval_metrics = "cd,iou", eval_csv, eval_json,
              eval_sampling = "vertices";
  uint64_t eval_seed = 0;
  int eval_points = 1024;
  eval->add_option("--pred", eval_pred)->required();
  eval->add_option("--gt", eval_gt)->required();
  eval->add_option("--metrics", eval_metrics, "comma list: cd,iou");
  eval->add_option("--csv", eval_csv, "write per-item CSV here");
  eval->add_option("--json", eval_json, "write JSON summary here");
  eval->add_option("--seed", eval_seed, "point-sampling seed");
  eval->add_option("--points", eval_points, "points per cloud");
  eval->add_option("--sampling", eval_sampling, "vertices|surface");

  // ---- reconstruct
  auto* rec = app.add_subcommand("reconstruct", "single-view shape reconstruction");
  std::string rec_image, rec_ckpt, rec_out = "reconstruction.obj", rec_vox, rec_decoder;
  int rec_resolution = 0;
  rec->add_option("--image", rec_image)->required();
  rec->add_option("--checkpoint", rec_ckpt)->required();
  rec->add_option("--decoder", rec_decoder, "voxel|implicit; must match the checkpoint");
  rec->add_option("--resolution", rec_resolution, "output resolution (implicit: arbitrary)");
  rec->add_option("--out", rec_out, "OBJ mesh path");
  rec->add_option("--voxels", rec_vox, "also dump the occupancy grid (raw-occupancy)");

  // ---- generate
  auto* gen = app.add_subcommand("generate", "shape-conditioned image generation");
  std::string gen_shape, gen_ckpt, gen_out = "generated.png", gen_za, gen_depth_out;
  double gen_azimuth = 30.0, gen_elevation = 20.0;
  uint64_t gen_seed = 0;
  gen->add_option("--shape", gen_shape, "voxel file (.binvox/.vox)")->required();
  gen->add_option("--checkpoint", gen_ckpt)->required();
  gen->add_option("--azimuth", gen_azimuth, "degrees in (-180,180)");
  gen->add_option("--elevation", gen_elevation, "degrees in (0,90)");
  gen->add_option("--z-a", gen_za, "appearance code as comma list (default: sampled)");
  gen->add_option("--seed", gen_seed, "sampling seed for z_a");
  gen->add_option("--out", gen_out);
  gen->add_option("--depth-out", gen_depth_out, "16-bit depth PNG dump");

  // ---- reconstruct-image
  auto* rimg = app.add_subcommand("reconstruct-image", "encode then regenerate an image");
  std::string rimg_image, rimg_ckpt, rimg_out = "reconstructed.png";
  rimg->add_option("--image", rimg_image)->required();
  rimg->add_option("--checkpoint", rimg_ckpt)->required();
  rimg->add_option("--out", rimg_out);

  // ---- nvs
  auto* nvs = app.add_subcommand("nvs", "novel view synthesis");
  std::string nvs_image, nvs_ckpt, nvs_azimuths, nvs_outdir = "views";
  double nvs_elevation = 10.0;
  nvs->add_option("--image", nvs_image)->required();
  nvs->add_option("--checkpoint", nvs_ckpt)->required();
  nvs->add_option("--azimuths", nvs_azimuths, "comma list of degrees")->required();
  nvs->add_option("--elevation", nvs_elevation, "degrees (default 10)");
  nvs->add_option("--out-dir", nvs_outdir);

  // ---- interp
  auto* interp = app.add_subcommand("interp", "latent interpolation");
  std::string in_kind = "appearance", in_ckpt, in_image_a, in_image_b, in_code_a, in_code_b,
              in_shape, in_outdir = "interp";
  int in_steps = 8, in_resolution = 0;
  double in_azimuth = 30.0, in_elevation = 20.0;
  interp->add_option("--kind", in_kind, "appearance|shape")->required();
  interp->add_option("--checkpoint", in_ckpt)->required();
  interp->add_option("--steps", in_steps);
  interp->add_option("--image-a", in_image_a);
  interp->add_option("--image-b", in_image_b);
  interp->add_option("--code-a", in_code_a, "explicit code, comma list");
  interp->add_option("--code-b", in_code_b);
  interp->add_option("--shape", in_shape, "voxel file fixing the rendered shape (appearance)");
  interp->add_option("--azimuth", in_azimuth);
  interp->add_option("--elevation", in_elevation);
  interp->add_option("--resolution", in_resolution, "mesh resolution (shape)");
  interp->add_option("--out-dir", in_outdir);

  // ---- modify
  auto* mod = app.add_subcommand("modify", "transfer appearance/viewpoint onto another shape");
  std::string mod_image, mod_shape, mod_ckpt, mod_out = "modified.png";
  mod->add_option("--image", mod_image)->required();
  mod->add_option("--shape", mod_shape, "replacement voxel file")->required();
  mod->add_option("--checkpoint", mod_ckpt)->required();
  mod->add_option("--out", mod_out);

  // ---- render-depth
  auto* rd = app.add_subcommand("render-depth", "projection unit debug dump");
  std::string rd_shape, rd_out = "depth.png";
  double rd_azimuth = 30.0, rd_elevation = 20.0;
  int rd_size = 128;
  rd->add_option("--shape", rd_shape)->required();
  rd->add_option("--azimuth", rd_azimuth);
  rd->add_option("--elevation", rd_elevation);
  rd->add_option("--size", rd_size);
  rd->add_option("--out", rd_out);

  // ---- make-toy-data
  auto* toy = app.add_subcommand("make-toy-data", "write the procedural toy dataset");
  std::string toy_out = "toy-data";
  int toy_res = 32, toy_imgsize = 64, toy_nviews = 16;
  uint64_t toy_seed = 7;
  toy->add_option("--out", toy_out)->required();
  toy->add_option("--resolution", toy_res);
  toy->add_option("--image-size", toy_imgsize);
  toy->add_option("--views", toy_nviews);
  toy->add_option("--seed", toy_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage problems are config errors
  }

  auto load_grid = [](const std::string& path) {
    const fs::path p(path);
    return p.extension() == ".binvox" ? datasets::load_binvox(p)
                                      : datasets::load_raw_occupancy(p);
  };

  if (*train) {
    const auto cfg = trainer::TrainConfig::from_file(train_config);
    datasets::ShapeDataset shapes;
    datasets::ImageDataset images;
    std::vector<std::pair<std::string, std::string>> pair_ids;
    if (train_toy) {
      auto data = apps::make_toy_dataset(cfg.nets.voxel_resolution, cfg.nets.image_size,
                                         toy_views, cfg.seed);
      shapes = std::move(data.shapes);
      images = std::move(data.images);
      pair_ids = std::move(data.pairs);
    } else {
      SIST_CHECK(!train_data.empty(), "either --data or --toy is required");
      auto data = load_from_manifest(train_data, cfg);
      shapes = std::move(data.shapes);
      images = std::move(data.train_images);
      pair_ids = std::move(data.pair_ids);
    }
    Rng pair_rng(cfg.seed ^ 0x70617273ULL);
    const auto pairs =
        datasets::build_paired_subset(pair_ids, images, shapes, cfg.supervision_rate, pair_rng);
    if (trainer::deterministic_mode()) {
      trainer::run_training<double>(cfg, shapes, images, pairs, train_out, train_resume);
    } else {
      trainer::run_training<float>(cfg, shapes, images, pairs, train_out, train_resume);
    }
    std::cout << "training complete; checkpoint in " << train_out << "/checkpoint\n";
    return 0;
  }

  if (*eval) {
    apps::EvalOptions opt;
    opt.cd = eval_metrics.find("cd") != std::string::npos;
    opt.iou = eval_metrics.find("iou") != std::string::npos;
    opt.seed = eval_seed;
    opt.points = eval_points;
    SIST_CHECK(eval_sampling == "vertices" || eval_sampling == "surface",
               "--sampling must be vertices or surface");
    opt.sampling = eval_sampling == "vertices" ? evalkit::MeshSampling::kVertices
                                               : evalkit::MeshSampling::kSurfaceArea;
    const auto report = apps::evaluate_dirs(eval_pred, eval_gt, opt);
    std::cout << report.to_csv();
    std::cout << report.to_json() << "\n";
    if (!eval_csv.empty()) std::ofstream(eval_csv) << report.to_csv();
    if (!eval_json.empty()) std::ofstream(eval_json) << report.to_json() << "\n";
    return 0;
  }

  if (*rec) {
    auto model = apps::Model::load(rec_ckpt);
    if (!rec_decoder.empty()) {
      SIST_CHECK(trainer::decoder_type_from_string(rec_decoder) == model.decoder_type(),
                 "checkpoint was trained with the ", to_string(model.decoder_type()),
                 " decoder");
    }
    const int res = rec_resolution > 0 ? rec_resolution : model.native_resolution();
    const auto result = apps::reconstruct_shape(model, load_image_rgb(rec_image), res);
    evalkit::save_obj(rec_out, result.mesh);
    if (!rec_vox.empty()) datasets::save_raw_occupancy(rec_vox, result.grid);
    std::cout << "mesh: " << rec_out << " (" << result.mesh.vertices.size() << " vertices, "
              << result.grid.occupied_count() << " occupied cells)\n";
    return 0;
  }

  if (*gen) {
    auto model = apps::Model::load(gen_ckpt);
    geom3d::Viewpoint v{gen_azimuth * kDegToRad, gen_elevation * kDegToRad};
    v.validate();
    std::optional<std::vector<double>> za;
    if (!gen_za.empty()) za = parse_csv_doubles(gen_za);
    geom3d::DepthMap depth;
    const auto img =
        apps::generate_image(model, load_grid(gen_shape), v, za, gen_seed, &depth);
    save_png_rgb(gen_out, img);
    if (!gen_depth_out.empty()) geom3d::save_depth_png(gen_depth_out, depth);
    std::cout << "image: " << gen_out << "\n";
    return 0;
  }

  if (*rimg) {
    auto model = apps::Model::load(rimg_ckpt);
    save_png_rgb(rimg_out, apps::reconstruct_image(model, load_image_rgb(rimg_image)));
    std::cout << "image: " << rimg_out << "\n";
    return 0;
  }

  if (*nvs) {
    auto model = apps::Model::load(nvs_ckpt);
    std::vector<double> az_rad;
    for (double a : parse_csv_doubles(nvs_azimuths)) az_rad.push_back(a * kDegToRad);
    const auto views = apps::novel_views(model, load_image_rgb(nvs_image), az_rad,
                                         nvs_elevation * kDegToRad);
    fs::create_directories(nvs_outdir);
    for (size_t i = 0; i < views.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "view_%03zu.png", i);
      save_png_rgb(fs::path(nvs_outdir) / name, views[i]);
    }
    std::cout << views.size() << " views in " << nvs_outdir << "\n";
    return 0;
  }

  if (*interp) {
    auto model = apps::Model::load(in_ckpt);
    fs::create_directories(in_outdir);
    const bool is_appearance = in_kind == "appearance";
    SIST_CHECK(is_appearance || in_kind == "shape", "--kind must be appearance or shape");

    auto resolve_code = [&](const std::string& code_s, const std::string& image_s) {
      SIST_CHECK(!code_s.empty() || !image_s.empty(),
                 "each endpoint needs --code-X or --image-X");
      if (!code_s.empty()) return parse_csv_doubles(code_s);
      const auto img = load_image_rgb(image_s);
      return is_appearance ? apps::encode_appearance(model, img)
                           : apps::encode_shape(model, img);
    };
    const auto code_a = resolve_code(in_code_a, in_image_a);
    const auto code_b = resolve_code(in_code_b, in_image_b);

    if (is_appearance) {
      geom3d::VoxelGrid shape;
      geom3d::Viewpoint v{in_azimuth * kDegToRad, in_elevation * kDegToRad};
      if (!in_shape.empty()) {
        shape = load_grid(in_shape);
      } else {
        SIST_CHECK(!in_image_a.empty(), "appearance interpolation needs --shape or --image-a");
        const auto img_a = load_image_rgb(in_image_a);
        shape = apps::decode_shape(model, apps::encode_shape(model, img_a),
                                   model.native_resolution());
        v = apps::encode_viewpoint(model, img_a);
      }
      v.validate();
      const auto images = apps::interpolate_appearance(model, shape, v, code_a, code_b, in_steps);
      for (size_t i = 0; i < images.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "step_%03zu.png", i);
        save_png_rgb(fs::path(in_outdir) / name, images[i]);
      }
    } else {
      const int res = in_resolution > 0 ? in_resolution : model.native_resolution();
      const auto meshes = apps::interpolate_shape(model, code_a, code_b, in_steps, res);
      for (size_t i = 0; i < meshes.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "step_%03zu.obj", i);
        evalkit::save_obj(fs::path(in_outdir) / name, meshes[i]);
      }
    }
    std::cout << in_steps << " steps in " << in_outdir << "\n";
    return 0;
  }

  if (*mod) {
    auto model = apps::Model::load(mod_ckpt);
    save_png_rgb(mod_out,
                 apps::modify_shape(model, load_image_rgb(mod_image), load_grid(mod_shape)));
    std::cout << "image: " << mod_out << "\n";
    return 0;
  }

  if (*rd) {
    const auto grid = load_grid(rd_shape);
    geom3d::Viewpoint v{rd_azimuth * kDegToRad, rd_elevation * kDegToRad};
    v.validate();
    const auto cam = geom3d::CameraModel::fit(grid.extent(), rd_size, rd_size);
    geom3d::save_depth_png(rd_out, geom3d::render_depth(grid, v, cam));
    std::cout << "depth: " << rd_out << "\n";
    return 0;
  }

  if (*toy) {
    apps::write_toy_dataset(toy_out,
                            apps::make_toy_dataset(toy_res, toy_imgsize, toy_nviews, toy_seed));
    std::cout << "toy dataset in " << toy_out << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const DivergenceError& e) {
    std::cerr << "error (numeric divergence): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
