// SPDX-License-Identifier: Apache-2.0
#include "sist/trainer/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sist::trainer {

using nlohmann::json;

DecoderType decoder_type_from_string(const std::string& s) {
  if (s == "voxel") return DecoderType::kVoxel;
  if (s == "implicit") return DecoderType::kImplicit;
  throw ValidationError("decoder_type must be 'voxel' or 'implicit', got '" + s + "'");
}

std::string to_string(DecoderType t) {
  return t == DecoderType::kVoxel ? "voxel" : "implicit";
}

void TrainConfig::validate() const {
  SIST_CHECK(batch_size > 0, "batch_size must be positive");
  SIST_CHECK(learning_rate > 0, "learning_rate must be positive");
  SIST_CHECK(lr_decay > 0 && lr_decay <= 1.0, "lr_decay must be in (0,1]");
  SIST_CHECK(label_flip_p >= 0 && label_flip_p <= 1, "label_flip_p must be in [0,1]");
  SIST_CHECK(k_points > 0 && k_points % 4 == 0, "k_points must be positive and divisible by 4");
  SIST_CHECK(epochs > 0, "epochs must be positive");
  SIST_CHECK(steps_per_epoch >= 0, "steps_per_epoch must be >= 0");
  SIST_CHECK(supervision_rate >= 0 && supervision_rate <= 1,
             "supervision_rate must be in [0,1]");
  SIST_CHECK(checkpoint_every >= 0, "checkpoint_every must be >= 0");
  SIST_CHECK(image_split > 0 && image_split <= 1, "image_split must be in (0,1]");
  weights.validate();
  nets.validate();
}

namespace {

json weights_to_json(const losses::LossWeights& w) {
  return json{{"lambda_i", w.lambda_i},       {"lambda_s", w.lambda_s},
              {"lambda_v", w.lambda_v},       {"lambda_a", w.lambda_a},
              {"lambda_s_kl", w.lambda_s_kl}, {"lambda_a_kl", w.lambda_a_kl}};
}

losses::LossWeights weights_from_json(const json& j) {
  losses::LossWeights w;
  w.lambda_i = j.value("lambda_i", w.lambda_i);
  w.lambda_s = j.value("lambda_s", w.lambda_s);
  w.lambda_v = j.value("lambda_v", w.lambda_v);
  w.lambda_a = j.value("lambda_a", w.lambda_a);
  w.lambda_s_kl = j.value("lambda_s_kl", w.lambda_s_kl);
  w.lambda_a_kl = j.value("lambda_a_kl", w.lambda_a_kl);
  return w;
}

json nets_to_json(const nets::NetsConfig& n) {
  return json{{"image_size", n.image_size},
              {"image_channels", n.image_channels},
              {"appearance_dim", n.appearance_dim},
              {"shape_dim", n.shape_dim},
              {"generator_base", n.generator_base},
              {"discriminator_base", n.discriminator_base},
              {"encoder_base", n.encoder_base},
              {"voxel_decoder_base", n.voxel_decoder_base},
              {"voxel_resolution", n.voxel_resolution},
              {"implicit_hidden", n.implicit_hidden},
              {"leaky_slope", n.leaky_slope}};
}

nets::NetsConfig nets_from_json(const json& j) {
  nets::NetsConfig n;
  n.image_size = j.value("image_size", n.image_size);
  n.image_channels = j.value("image_channels", n.image_channels);
  n.appearance_dim = j.value("appearance_dim", n.appearance_dim);
  n.shape_dim = j.value("shape_dim", n.shape_dim);
  n.generator_base = j.value("generator_base", n.generator_base);
  n.discriminator_base = j.value("discriminator_base", n.discriminator_base);
  n.encoder_base = j.value("encoder_base", n.encoder_base);
  n.voxel_decoder_base = j.value("voxel_decoder_base", n.voxel_decoder_base);
  n.voxel_resolution = j.value("voxel_resolution", n.voxel_resolution);
  n.implicit_hidden = j.value("implicit_hidden", n.implicit_hidden);
  n.leaky_slope = j.value("leaky_slope", n.leaky_slope);
  return n;
}

}  // namespace

std::string TrainConfig::to_json() const {
  json j{{"decoder_type", to_string(decoder_type)},
         {"batch_size", batch_size},
         {"learning_rate", learning_rate},
         {"lr_decay", lr_decay},
         {"label_flip_p", label_flip_p},
         {"k_points", k_points},
         {"epochs", epochs},
         {"steps_per_epoch", steps_per_epoch},
         {"supervision_rate", supervision_rate},
         {"seed", seed},
         {"checkpoint_every", checkpoint_every},
         {"gan_label_convention",
          gan_label_convention == losses::GanLabelConvention::kStandard ? "standard" : "paper"},
         {"weights", weights_to_json(weights)},
         {"nets", nets_to_json(nets)},
         {"image_split", image_split}};
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config JSON: ") + e.what());
  }
  TrainConfig c;
  if (j.contains("decoder_type"))
    c.decoder_type = decoder_type_from_string(j["decoder_type"].get<std::string>());
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.label_flip_p = j.value("label_flip_p", c.label_flip_p);
  c.k_points = j.value("k_points", c.k_points);
  c.epochs = j.value("epochs", c.epochs);
  c.steps_per_epoch = j.value("steps_per_epoch", c.steps_per_epoch);
  c.supervision_rate = j.value("supervision_rate", c.supervision_rate);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  if (j.contains("gan_label_convention")) {
    const auto s = j["gan_label_convention"].get<std::string>();
    if (s == "standard")
      c.gan_label_convention = losses::GanLabelConvention::kStandard;
    else if (s == "paper")
      c.gan_label_convention = losses::GanLabelConvention::kPaperPrinted;
    else
      throw ValidationError("gan_label_convention must be 'standard' or 'paper'");
  }
  if (j.contains("weights")) c.weights = weights_from_json(j["weights"]);
  if (j.contains("nets")) c.nets = nets_from_json(j["nets"]);
  c.image_split = j.value("image_split", c.image_split);
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  SIST_CHECK(is.good(), "cannot open config ", path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_json(buf.str());
}

uint64_t TrainConfig::config_hash() const {
  const std::string canon = to_json();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double learning_rate(const TrainConfig& cfg, int64_t epoch) {
  return cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(epoch));
}

bool should_flip_labels(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return rng.bernoulli(p);
}

}  // namespace sist::trainer
