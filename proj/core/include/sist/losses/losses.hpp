// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sist/common/tensor.hpp"
#include "sist/nets/networks.hpp"

namespace sist::losses {

// Objective weights; the published defaults.
struct LossWeights {
  double lambda_i = 0.005;
  double lambda_s = 100.0;
  double lambda_v = 10.0;
  double lambda_a = 10.0;
  double lambda_s_kl = 0.001;
  double lambda_a_kl = 0.001;

  void validate() const {
    SIST_CHECK(lambda_i >= 0 && lambda_s >= 0 && lambda_v >= 0 && lambda_a >= 0 &&
                   lambda_s_kl >= 0 && lambda_a_kl >= 0,
               "loss weights must be non-negative");
  }
};

// Least-squares GAN label convention. kStandard trains the discriminator
// toward real->1 / fake->0. kPaperPrinted follows the transposed labels of
// the printed equation (real->0 / fake->1); the two are isomorphic.
enum class GanLabelConvention { kStandard, kPaperPrinted };

// Discriminator loss: mean((s_real - t_real)^2) + mean((s_fake - t_fake)^2).
// flip_labels swaps the targets for this step. Gradients are accumulated
// into greal/gfake when non-null. Non-finite scores raise DivergenceError.
template <class T>
double lsgan_discriminator_loss(const Tensor<T>& scores_real, const Tensor<T>& scores_fake,
                                bool flip_labels = false,
                                GanLabelConvention convention = GanLabelConvention::kStandard,
                                Tensor<T>* greal = nullptr, Tensor<T>* gfake = nullptr);

// Generator companion: mean((s_fake - t_real)^2).
template <class T>
double lsgan_generator_loss(const Tensor<T>& scores_fake,
                            GanLabelConvention convention = GanLabelConvention::kStandard,
                            Tensor<T>* gfake = nullptr);

// Mean binary cross-entropy with probabilities clamped to [1e-7, 1-1e-7].
// Backs both the voxel shape loss (all cells) and the implicit shape loss
// (sampled points).
template <class T>
double binary_cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets,
                            Tensor<T>* gprobs = nullptr);

struct CyclicParts {
  double appearance = 0.0;  // lambda_A * mean |za_hat - za|
  double viewpoint = 0.0;   // lambda_V * mean |v_hat - v| (wrapped azimuth)
  double total() const { return appearance + viewpoint; }
};

// Eq.-4 style cyclic loss. Viewpoints are compared in the encoder's raw
// normalized space [-1,1]^2; the azimuth coordinate is differenced with
// wraparound (period 2).
template <class T>
CyclicParts cyclic_loss(const Tensor<T>& za_hat, const Tensor<T>& za,
                        const Tensor<T>& v_hat_raw, const Tensor<T>& v_raw,
                        const LossWeights& weights, Tensor<T>* gza_hat = nullptr,
                        Tensor<T>* gv_hat = nullptr);

// weight * mean over batch and dimensions of (mu^2 + sigma^2 - 1 - log
// sigma^2) / 2 against the standard normal prior.
template <class T>
double kl_loss(const nets::GaussianPosterior<T>& q, double weight,
               Tensor<T>* gmean = nullptr, Tensor<T>* glogvar = nullptr);

// lambda_I * L_I + lambda_S * L_S + L_C + L_KL (the last two carry their
// internal weights already).
double total_loss(double l_i, double l_s, double l_c, double l_kl, const LossWeights& w);

}  // namespace sist::losses
