// SPDX-License-Identifier: Apache-2.0
#include "sist/trainer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "sist/losses/losses.hpp"
#include "sist/nets/checkpoint.hpp"

namespace sist::trainer {

using nlohmann::json;

bool deterministic_mode() {
  const char* v = std::getenv("SIST_DETERMINISTIC");
  return v != nullptr && std::string(v) == "1";
}

// ---------------------------------------------------------------------------
// Pipeline

template <class T>
Pipeline<T>::Pipeline(const nets::NetsConfig& c, DecoderType type)
    : cfg(c),
      decoder_type(type),
      generator(c),
      discriminator(c),
      viewpoint_encoder(c),
      appearance_encoder("ea", c, c.appearance_dim),
      shape_encoder("es", c, c.shape_dim) {
  if (type == DecoderType::kVoxel) {
    voxel_decoder = std::make_unique<nets::VoxelDecoder<T>>(c);
  } else {
    implicit_decoder = std::make_unique<nets::ImplicitDecoder<T>>(c);
  }
}

template <class T>
void Pipeline<T>::init_params(Rng& rng) {
  generator.init_params(rng);
  discriminator.init_params(rng);
  viewpoint_encoder.init_params(rng);
  appearance_encoder.init_params(rng);
  shape_encoder.init_params(rng);
  if (voxel_decoder) voxel_decoder->init_params(rng);
  if (implicit_decoder) implicit_decoder->init_params(rng);
}

template <class T>
std::vector<typename Pipeline<T>::NamedNet> Pipeline<T>::named_networks() {
  std::vector<NamedNet> nets;
  nets.push_back({"generator", generator.params(), generator.buffers()});
  nets.push_back({"discriminator", discriminator.params(), discriminator.buffers()});
  nets.push_back({"viewpoint_encoder", viewpoint_encoder.params(), viewpoint_encoder.buffers()});
  nets.push_back({"appearance_encoder", appearance_encoder.params(),
                  appearance_encoder.buffers()});
  nets.push_back({"shape_encoder", shape_encoder.params(), shape_encoder.buffers()});
  if (voxel_decoder)
    nets.push_back({"shape_decoder", voxel_decoder->params(), voxel_decoder->buffers()});
  else
    nets.push_back({"shape_decoder", implicit_decoder->params(), implicit_decoder->buffers()});
  return nets;
}

template <class T>
std::vector<nets::Parameter<T>*> Pipeline<T>::decoder_params() {
  return voxel_decoder ? voxel_decoder->params() : implicit_decoder->params();
}

template <class T>
double Pipeline<T>::parameter_norm() {
  double sq = 0.0;
  for (auto& net : named_networks())
    for (auto* p : net.params)
      for (int64_t i = 0; i < p->value.numel(); ++i) {
        const double v = static_cast<double>(p->value[i]);
        sq += v * v;
      }
  return std::sqrt(sq);
}

// ---------------------------------------------------------------------------
// LossRecord

namespace {
std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string LossRecord::to_jsonl() const {
  std::string s = "{\"step\":" + std::to_string(step) + ",\"l_i_d\":" + fmt_g17(l_i_d) +
                  ",\"l_i_g\":" + fmt_g17(l_i_g) + ",\"l_s\":" + fmt_g17(l_s) +
                  ",\"l_c\":" + fmt_g17(l_c) + ",\"l_kl\":" + fmt_g17(l_kl) +
                  ",\"total\":" + fmt_g17(total);
  if (has_weak) s += ",\"l_weak\":" + fmt_g17(l_weak);
  return s + "}";
}

std::string LossRecord::csv_header() { return "step,l_i_d,l_i_g,l_s,l_c,l_kl,total"; }

std::string LossRecord::to_csv() const {
  return std::to_string(step) + "," + fmt_g17(l_i_d) + "," + fmt_g17(l_i_g) + "," +
         fmt_g17(l_s) + "," + fmt_g17(l_c) + "," + fmt_g17(l_kl) + "," + fmt_g17(total);
}

// ---------------------------------------------------------------------------
// Trainer

template <class T>
Trainer<T>::Trainer(TrainConfig cfg, const datasets::ShapeDataset* shapes,
                    const datasets::ImageDataset* images, datasets::PairedSubset pairs)
    : cfg_(std::move(cfg)),
      shapes_(shapes),
      images_(images),
      pairs_(std::move(pairs)),
      pipeline_(cfg_.nets, cfg_.decoder_type),
      rng_(cfg_.seed) {
  cfg_.validate();
  SIST_CHECK(shapes_ && !shapes_->empty(), "shape dataset is empty");
  SIST_CHECK(images_ && !images_->empty(), "image dataset is empty");
  SIST_CHECK(images_->images.front().height == cfg_.nets.image_size &&
                 images_->images.front().width == cfg_.nets.image_size,
             "image dataset size ", images_->images.front().width, " does not match nets (",
             cfg_.nets.image_size, ")");
  if (cfg_.decoder_type == DecoderType::kVoxel) {
    SIST_CHECK(shapes_->resolution() == cfg_.nets.voxel_resolution,
               "voxel decoder resolution ", cfg_.nets.voxel_resolution,
               " does not match shape dataset resolution ", shapes_->resolution());
  }
  if (cfg_.supervision_rate > 0) {
    SIST_CHECK(!pairs_.empty(),
               "supervision_rate > 0 but the paired subset is empty");
    paired_sampler_.emplace(pairs_.pairs.size(), cfg_.batch_size);
  }

  steps_per_epoch_ = cfg_.steps_per_epoch > 0
                         ? cfg_.steps_per_epoch
                         : (static_cast<int64_t>(std::max(shapes_->size(), images_->size())) +
                            cfg_.batch_size - 1) /
                               cfg_.batch_size;

  Rng init_rng(cfg_.seed ^ 0x9e3779b97f4a7c15ULL);
  pipeline_.init_params(init_rng);

  opt_g_ = AdamOptimizer<T>(pipeline_.generator.params());
  opt_d_ = AdamOptimizer<T>(pipeline_.discriminator.params());
  opt_ev_ = AdamOptimizer<T>(pipeline_.viewpoint_encoder.params());
  opt_ea_ = AdamOptimizer<T>(pipeline_.appearance_encoder.params());
  opt_es_ = AdamOptimizer<T>(pipeline_.shape_encoder.params());
  opt_ds_ = AdamOptimizer<T>(pipeline_.decoder_params());

  sampler_ = datasets::UnpairedSampler(shapes_->size(), images_->size(), cfg_.batch_size);
  camera_ = geom3d::CameraModel::fit(shapes_->grids.front().extent(), cfg_.nets.image_size,
                                     cfg_.nets.image_size);
}

template <class T>
Tensor<T> Trainer<T>::render_batch(const std::vector<int>& shape_indices,
                                   std::vector<Tensor<T>>& vraws) {
  const int n = static_cast<int>(shape_indices.size());
  const int s = cfg_.nets.image_size;
  Tensor<T> depth({n, 1, s, s});
  Tensor<T> vraw({n, 2});
  for (int i = 0; i < n; ++i) {
    const auto v = geom3d::sample_viewpoint(rng_);
    const auto& grid = shapes_->grids[static_cast<size_t>(shape_indices[static_cast<size_t>(i)])];
    const auto dm = geom3d::render_depth(grid, v, camera_);
    T* dst = depth.data() + static_cast<int64_t>(i) * s * s;
    for (size_t j = 0; j < dm.values.size(); ++j) dst[j] = static_cast<T>(dm.values[j]);
    const auto raw = v.to_raw();
    vraw[i * 2] = static_cast<T>(raw[0]);
    vraw[i * 2 + 1] = static_cast<T>(raw[1]);
  }
  vraws.push_back(vraw);
  return depth;
}

template <class T>
double Trainer<T>::shape_loss_and_backward(const Tensor<T>& z,
                                           const std::vector<int>& shape_indices,
                                           double lambda_scale, Tensor<T>& gz) {
  const int n = static_cast<int>(shape_indices.size());
  double l_s = 0.0;
  if (cfg_.decoder_type == DecoderType::kVoxel) {
    const int r = cfg_.nets.voxel_resolution;
    Tensor<T> target({n, 1, r, r, r});
    for (int i = 0; i < n; ++i) {
      const auto& g = shapes_->grids[static_cast<size_t>(shape_indices[static_cast<size_t>(i)])];
      T* dst = target.data() + static_cast<int64_t>(i) * r * r * r;
      for (size_t j = 0; j < g.occupancy.size(); ++j) dst[j] = g.occupancy[j] ? T(1) : T(0);
    }
    Tensor<T> probs = pipeline_.voxel_decoder->forward(z, /*training=*/true);
    Tensor<T> gprobs(probs.shape());
    l_s = losses::binary_cross_entropy(probs, target, &gprobs);
    if (lambda_scale != 1.0)
      for (int64_t i = 0; i < gprobs.numel(); ++i)
        gprobs[i] = static_cast<T>(gprobs[i] * lambda_scale);
    gz = pipeline_.voxel_decoder->backward(gprobs);
  } else {
    const int k = cfg_.k_points;
    Tensor<T> pts({n, k, 3});
    Tensor<T> targets({n, k});
    for (int i = 0; i < n; ++i) {
      const size_t si = static_cast<size_t>(shape_indices[static_cast<size_t>(i)]);
      const auto batch = losses::sample_training_points(shapes_->grids[si], k, rng_,
                                                        shapes_->ids[si]);
      for (int j = 0; j < k * 3; ++j)
        pts[static_cast<int64_t>(i) * k * 3 + j] = static_cast<T>(batch.coords[j]);
      for (int j = 0; j < k; ++j)
        targets[static_cast<int64_t>(i) * k + j] = static_cast<T>(batch.targets[j]);
    }
    Tensor<T> vals = pipeline_.implicit_decoder->forward(z, pts);
    Tensor<T> gvals(vals.shape());
    l_s = losses::binary_cross_entropy(vals, targets, &gvals);
    if (lambda_scale != 1.0)
      for (int64_t i = 0; i < gvals.numel(); ++i)
        gvals[i] = static_cast<T>(gvals[i] * lambda_scale);
    gz = pipeline_.implicit_decoder->backward(gvals);
  }
  return l_s;
}

template <class T>
LossRecord Trainer<T>::self_supervised_step() {
  const double lr = learning_rate(cfg_, current_epoch());
  const auto& w = cfg_.weights;
  const auto conv = cfg_.gan_label_convention;

  // (a)+(b): sample the unpaired batch, viewpoints and appearance codes
  const auto batch = sampler_.next(rng_);
  std::vector<Tensor<T>> vraws;
  Tensor<T> depth = render_batch(batch.shape_indices, vraws);
  const Tensor<T>& vraw = vraws.front();

  const int n = cfg_.batch_size;
  Tensor<T> z_a({n, cfg_.nets.appearance_dim});
  for (int64_t i = 0; i < z_a.numel(); ++i) z_a[i] = static_cast<T>(rng_.normal());

  // (c): generate fakes
  Tensor<T> fake = pipeline_.generator.forward(depth, z_a, /*training=*/true);
  Tensor<T> real = datasets::images_to_tensor<T>(*images_, batch.image_indices);

  // (d): discriminator update, label flipping applied here only
  const bool flip = should_flip_labels(rng_, cfg_.label_flip_p);
  opt_d_.zero_grad();
  Tensor<T> s_real = pipeline_.discriminator.forward(real);
  Tensor<T> greal(s_real.shape());
  Tensor<T> s_fake = pipeline_.discriminator.forward(fake);
  // loss evaluated jointly, backward per input since caches are single-slot
  Tensor<T> gfake_scores(s_fake.shape());
  const double l_i_d =
      losses::lsgan_discriminator_loss(s_real, s_fake, flip, conv, &greal, &gfake_scores);
  pipeline_.discriminator.backward(gfake_scores, /*need_input_grad=*/false);
  pipeline_.discriminator.forward(real);
  pipeline_.discriminator.backward(greal, /*need_input_grad=*/false);
  opt_d_.step(lr);

  // (e): joint generator-side update
  opt_g_.zero_grad();
  opt_ev_.zero_grad();
  opt_ea_.zero_grad();
  opt_es_.zero_grad();
  opt_ds_.zero_grad();

  Tensor<T> s_fake2 = pipeline_.discriminator.forward(fake);
  Tensor<T> gscores(s_fake2.shape());
  const double l_i_g = losses::lsgan_generator_loss(s_fake2, conv, &gscores);
  for (int64_t i = 0; i < gscores.numel(); ++i)
    gscores[i] = static_cast<T>(gscores[i] * w.lambda_i);
  Tensor<T> gimg = pipeline_.discriminator.backward(gscores, /*need_input_grad=*/true);

  // encoders on the generated image
  auto q_s = pipeline_.shape_encoder.forward(fake, /*training=*/true);
  auto q_a = pipeline_.appearance_encoder.forward(fake, /*training=*/true);
  Tensor<T> v_hat = pipeline_.viewpoint_encoder.forward(fake, /*training=*/true);

  auto z_s = nets::reparameterize(q_s, rng_);

  Tensor<T> gz;
  const double l_s = shape_loss_and_backward(z_s.z, batch.shape_indices, w.lambda_s, gz);

  Tensor<T> gmean_s(q_s.mean.shape()), glogvar_s(q_s.logvar.shape());
  nets::reparameterize_backward(gz, q_s.logvar, z_s.eps, gmean_s, glogvar_s);

  Tensor<T> gmean_a(q_a.mean.shape()), glogvar_a(q_a.logvar.shape());
  Tensor<T> gvraw(v_hat.shape());
  const auto cyc = losses::cyclic_loss(q_a.mean, z_a, v_hat, vraw, w, &gmean_a, &gvraw);

  const double l_kl = losses::kl_loss(q_s, w.lambda_s_kl, &gmean_s, &glogvar_s) +
                      losses::kl_loss(q_a, w.lambda_a_kl, &gmean_a, &glogvar_a);

  // image gradient = adversarial + shape + appearance + viewpoint paths
  Tensor<T> g_es = pipeline_.shape_encoder.backward(gmean_s, glogvar_s, true);
  Tensor<T> g_ea = pipeline_.appearance_encoder.backward(gmean_a, glogvar_a, true);
  Tensor<T> g_ev = pipeline_.viewpoint_encoder.backward(gvraw, true);
  for (int64_t i = 0; i < gimg.numel(); ++i) gimg[i] += g_es[i] + g_ea[i] + g_ev[i];
  pipeline_.generator.backward(gimg);

  opt_g_.step(lr);
  opt_ev_.step(lr);
  opt_ea_.step(lr);
  opt_es_.step(lr);
  opt_ds_.step(lr);

  LossRecord rec;
  rec.step = step_;
  rec.l_i_d = l_i_d;
  rec.l_i_g = l_i_g;
  rec.l_s = l_s;
  rec.l_c = cyc.total();
  rec.l_kl = l_kl;
  rec.total = losses::total_loss(l_i_g, l_s, cyc.total(), l_kl, w);
  if (!std::isfinite(rec.total) || !std::isfinite(rec.l_i_d)) {
    throw DivergenceError(
        "non-finite loss at step " + std::to_string(step_) + ": l_i_d=" + fmt_g17(rec.l_i_d) +
        " l_i_g=" + fmt_g17(rec.l_i_g) + " l_s=" + fmt_g17(rec.l_s) + " l_c=" +
        fmt_g17(rec.l_c) + " l_kl=" + fmt_g17(rec.l_kl) +
        " parameter_norm=" + fmt_g17(pipeline_.parameter_norm()));
  }
  return rec;
}

template <class T>
double Trainer<T>::weak_supervision_step() {
  SIST_CHECK(cfg_.supervision_rate > 0 && paired_sampler_.has_value(),
             "weak_supervision_step requires supervision_rate > 0");
  opt_es_.zero_grad();
  opt_ds_.zero_grad();

  const auto pick = paired_sampler_->next(rng_);
  std::vector<int> image_idx, shape_idx;
  for (int p : pick) {
    image_idx.push_back(pairs_.pairs[static_cast<size_t>(p)].first);
    shape_idx.push_back(pairs_.pairs[static_cast<size_t>(p)].second);
  }

  Tensor<T> real = datasets::images_to_tensor<T>(*images_, image_idx);
  auto q_s = pipeline_.shape_encoder.forward(real, /*training=*/true);
  auto z_s = nets::reparameterize(q_s, rng_);

  Tensor<T> gz;
  const double loss = shape_loss_and_backward(z_s.z, shape_idx, 1.0, gz);

  Tensor<T> gmean(q_s.mean.shape()), glogvar(q_s.logvar.shape());
  nets::reparameterize_backward(gz, q_s.logvar, z_s.eps, gmean, glogvar);
  pipeline_.shape_encoder.backward(gmean, glogvar, /*need_input_grad=*/false);

  const double lr = learning_rate(cfg_, current_epoch());
  opt_es_.step(lr);
  opt_ds_.step(lr);

  SIST_CHECK_FINITE(std::isfinite(loss), "non-finite weak-supervision loss at step ", step_);
  return loss;
}

template <class T>
LossRecord Trainer<T>::step() {
  LossRecord rec = self_supervised_step();
  if (cfg_.supervision_rate > 0) {
    rec.l_weak = weak_supervision_step();
    rec.has_weak = true;
  }
  ++step_;
  return rec;
}

template <class T>
void Trainer<T>::run(const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto ckpt_dir = out_dir / "checkpoint";
  std::ofstream log(out_dir / "losses.jsonl", std::ios::app);
  SIST_CHECK(log.good(), "cannot open loss log under ", out_dir.string());

  const int64_t total = total_steps();
  while (step_ < total) {
    LossRecord rec = step();
    log << rec.to_jsonl() << '\n';
    log.flush();
    if (cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0 && step_ < total) {
      save_checkpoint(ckpt_dir);
    }
  }
  save_checkpoint(ckpt_dir);
}

// ---------------------------------------------------------------------------
// Checkpointing

namespace {
template <class T>
const char* dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

json rows_to_json(const std::vector<nets::LayerRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back(json{{"layer", r.layer},
                       {"out_size", r.out_size},
                       {"kernel", r.kernel},
                       {"stride", r.stride},
                       {"batchnorm", r.batchnorm},
                       {"activation", r.activation}});
  }
  return arr;
}
}  // namespace

template <class T>
void Trainer<T>::save_checkpoint(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto* self = const_cast<Trainer<T>*>(this);

  json manifest;
  manifest["format"] = "sist-checkpoint-1";
  manifest["dtype"] = dtype_name<T>();
  manifest["step"] = step_;
  manifest["epoch"] = current_epoch();
  manifest["config"] = json::parse(cfg_.to_json());
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(cfg_.config_hash()));
  manifest["config_hash"] = hash_hex;

  json nets_json = json::array();
  for (auto& net : self->pipeline_.named_networks()) {
    int64_t count = 0;
    for (auto* p : net.params) count += p->value.numel();
    nets_json.push_back(json{{"name", net.name},
                             {"file", net.name + ".bin"},
                             {"param_count", count}});
    nets::save_network_blob(dir / (net.name + ".bin"), net.params, net.buffers);
  }
  manifest["networks"] = nets_json;
  manifest["layer_tables"] = json{
      {"generator", rows_to_json(self->pipeline_.generator.rows())},
      {"discriminator", rows_to_json(self->pipeline_.discriminator.rows())},
      {"viewpoint_encoder", rows_to_json(self->pipeline_.viewpoint_encoder.rows())},
      {"appearance_encoder", rows_to_json(self->pipeline_.appearance_encoder.rows())},
      {"shape_encoder", rows_to_json(self->pipeline_.shape_encoder.rows())},
      {"shape_decoder", rows_to_json(self->pipeline_.voxel_decoder
                                         ? self->pipeline_.voxel_decoder->rows()
                                         : self->pipeline_.implicit_decoder->rows())}};

  std::ofstream mf(dir / "manifest.json");
  mf << manifest.dump(2) << '\n';

  opt_g_.save(dir / "generator.opt");
  opt_d_.save(dir / "discriminator.opt");
  opt_ev_.save(dir / "viewpoint_encoder.opt");
  opt_ea_.save(dir / "appearance_encoder.opt");
  opt_es_.save(dir / "shape_encoder.opt");
  opt_ds_.save(dir / "shape_decoder.opt");

  std::ofstream st(dir / "sampler.state");
  rng_.save(st);
  st << '\n';
  sampler_.save(st);
  st << (paired_sampler_.has_value() ? 1 : 0) << '\n';
  if (paired_sampler_) paired_sampler_->save(st);
}

template <class T>
void Trainer<T>::restore_checkpoint(const std::filesystem::path& dir) {
  const auto info = read_checkpoint_info(dir);
  SIST_CHECK(info.dtype == dtype_name<T>(), "checkpoint dtype ", info.dtype,
             " does not match this trainer (", dtype_name<T>(), ")");
  SIST_CHECK(info.config_hash == cfg_.config_hash(),
             "checkpoint config does not match the trainer config");
  for (auto& net : pipeline_.named_networks()) {
    nets::load_network_blob(dir / (net.name + ".bin"), net.params, net.buffers);
  }
  opt_g_.load(dir / "generator.opt");
  opt_d_.load(dir / "discriminator.opt");
  opt_ev_.load(dir / "viewpoint_encoder.opt");
  opt_ea_.load(dir / "appearance_encoder.opt");
  opt_es_.load(dir / "shape_encoder.opt");
  opt_ds_.load(dir / "shape_decoder.opt");

  std::ifstream st(dir / "sampler.state");
  SIST_CHECK(st.good(), "missing sampler.state in ", dir.string());
  rng_.load(st);
  sampler_.load(st);
  int has_paired = 0;
  st >> has_paired;
  if (has_paired) {
    SIST_CHECK(paired_sampler_.has_value(), "checkpoint has paired sampler state but "
                                            "supervision_rate is 0");
    paired_sampler_->load(st);
  }
  step_ = info.step;
}

bool checkpoint_exists(const std::filesystem::path& dir) {
  return std::filesystem::exists(dir / "manifest.json");
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  SIST_CHECK(mf.good(), "no checkpoint manifest in ", dir.string());
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw ValidationError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  CheckpointInfo info;
  info.dtype = manifest.at("dtype").get<std::string>();
  info.step = manifest.at("step").get<int64_t>();
  info.epoch = manifest.value("epoch", int64_t{0});
  info.config = TrainConfig::from_json(manifest.at("config").dump());
  info.config_hash = std::stoull(manifest.at("config_hash").get<std::string>(), nullptr, 16);
  SIST_CHECK(info.config_hash == info.config.config_hash(),
             "checkpoint manifest hash does not match its own config (corrupt checkpoint?)");
  return info;
}

template <class T>
Pipeline<T> load_pipeline(const std::filesystem::path& dir, const TrainConfig& cfg) {
  Pipeline<T> p(cfg.nets, cfg.decoder_type);
  for (auto& net : p.named_networks()) {
    nets::load_network_blob(dir / (net.name + ".bin"), net.params, net.buffers);
  }
  return p;
}

template <class T>
void run_training(const TrainConfig& cfg, const datasets::ShapeDataset& shapes,
                  const datasets::ImageDataset& images, const datasets::PairedSubset& pairs,
                  const std::filesystem::path& out_dir, bool resume) {
  Trainer<T> trainer(cfg, &shapes, &images, pairs);
  const auto ckpt_dir = out_dir / "checkpoint";
  if (resume && checkpoint_exists(ckpt_dir)) {
    trainer.restore_checkpoint(ckpt_dir);
    std::cerr << "[sist] resuming from step " << trainer.current_step() << "\n";
  }
  trainer.run(out_dir);
}

// ---------------------------------------------------------------------------

#define SIST_INSTANTIATE(T)                                                             \
  template struct Pipeline<T>;                                                          \
  template class Trainer<T>;                                                            \
  template Pipeline<T> load_pipeline(const std::filesystem::path&, const TrainConfig&); \
  template void run_training<T>(const TrainConfig&, const datasets::ShapeDataset&,      \
                                const datasets::ImageDataset&,                          \
                                const datasets::PairedSubset&,                          \
                                const std::filesystem::path&, bool);

SIST_INSTANTIATE(float)
SIST_INSTANTIATE(double)
#undef SIST_INSTANTIATE

}  // namespace sist::trainer
