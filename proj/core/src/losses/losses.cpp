// SPDX-License-Identifier: Apache-2.0
#include "sist/losses/losses.hpp"

#include <cmath>

namespace sist::losses {

namespace {

constexpr double kBceEps = 1e-7;

template <class T>
void check_finite_scores(const Tensor<T>& scores, const char* which) {
  for (int64_t i = 0; i < scores.numel(); ++i) {
    SIST_CHECK_FINITE(std::isfinite(static_cast<double>(scores[i])),
                      "non-finite ", which, " discriminator scores");
  }
}

// Wrap into [-1, 1] on the circle of period 2 (raw azimuth units).
double wrap_raw(double d) {
  d = std::fmod(d, 2.0);
  if (d > 1.0) d -= 2.0;
  if (d < -1.0) d += 2.0;
  return d;
}

}  // namespace

template <class T>
double lsgan_discriminator_loss(const Tensor<T>& scores_real, const Tensor<T>& scores_fake,
                                bool flip_labels, GanLabelConvention convention,
                                Tensor<T>* greal, Tensor<T>* gfake) {
  SIST_CHECK(scores_real.numel() > 0 && scores_fake.numel() > 0, "empty score maps");
  check_finite_scores(scores_real, "real");
  check_finite_scores(scores_fake, "fake");

  double t_real = convention == GanLabelConvention::kStandard ? 1.0 : 0.0;
  double t_fake = 1.0 - t_real;
  if (flip_labels) std::swap(t_real, t_fake);

  double loss = 0.0;
  const double n_real = static_cast<double>(scores_real.numel());
  for (int64_t i = 0; i < scores_real.numel(); ++i) {
    const double d = static_cast<double>(scores_real[i]) - t_real;
    loss += d * d / n_real;
    if (greal) (*greal)[i] += static_cast<T>(2.0 * d / n_real);
  }
  const double n_fake = static_cast<double>(scores_fake.numel());
  for (int64_t i = 0; i < scores_fake.numel(); ++i) {
    const double d = static_cast<double>(scores_fake[i]) - t_fake;
    loss += d * d / n_fake;
    if (gfake) (*gfake)[i] += static_cast<T>(2.0 * d / n_fake);
  }
  return loss;
}

template <class T>
double lsgan_generator_loss(const Tensor<T>& scores_fake, GanLabelConvention convention,
                            Tensor<T>* gfake) {
  SIST_CHECK(scores_fake.numel() > 0, "empty score map");
  check_finite_scores(scores_fake, "fake");
  const double t_real = convention == GanLabelConvention::kStandard ? 1.0 : 0.0;
  double loss = 0.0;
  const double n = static_cast<double>(scores_fake.numel());
  for (int64_t i = 0; i < scores_fake.numel(); ++i) {
    const double d = static_cast<double>(scores_fake[i]) - t_real;
    loss += d * d / n;
    if (gfake) (*gfake)[i] += static_cast<T>(2.0 * d / n);
  }
  return loss;
}

template <class T>
double binary_cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets,
                            Tensor<T>* gprobs) {
  SIST_CHECK(probs.same_shape(targets), "BCE shape mismatch");
  SIST_CHECK(probs.numel() > 0, "BCE over empty tensors");
  const double n = static_cast<double>(probs.numel());
  double loss = 0.0;
  for (int64_t i = 0; i < probs.numel(); ++i) {
    const double p_raw = static_cast<double>(probs[i]);
    const double t = static_cast<double>(targets[i]);
    const double p = std::clamp(p_raw, kBceEps, 1.0 - kBceEps);
    loss += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p)) / n;
    if (gprobs) {
      // clamped regions contribute nothing
      const double g = (p_raw > kBceEps && p_raw < 1.0 - kBceEps)
                           ? (-t / p + (1.0 - t) / (1.0 - p)) / n
                           : 0.0;
      (*gprobs)[i] += static_cast<T>(g);
    }
  }
  return loss;
}

template <class T>
CyclicParts cyclic_loss(const Tensor<T>& za_hat, const Tensor<T>& za,
                        const Tensor<T>& v_hat_raw, const Tensor<T>& v_raw,
                        const LossWeights& weights, Tensor<T>* gza_hat, Tensor<T>* gv_hat) {
  SIST_CHECK(za_hat.same_shape(za), "appearance code shape mismatch");
  SIST_CHECK(v_hat_raw.same_shape(v_raw) && v_hat_raw.rank() == 2 && v_hat_raw.dim(1) == 2,
             "viewpoints must be [N,2] raw coordinates");
  weights.validate();

  CyclicParts parts;
  const double n_a = static_cast<double>(za.numel());
  for (int64_t i = 0; i < za.numel(); ++i) {
    const double d = static_cast<double>(za_hat[i]) - static_cast<double>(za[i]);
    parts.appearance += weights.lambda_a * std::abs(d) / n_a;
    if (gza_hat && d != 0.0)
      (*gza_hat)[i] += static_cast<T>(weights.lambda_a * (d > 0 ? 1.0 : -1.0) / n_a);
  }

  const int64_t n = v_raw.dim(0);
  const double n_v = static_cast<double>(n * 2);
  for (int64_t b = 0; b < n; ++b) {
    const double d_az =
        wrap_raw(static_cast<double>(v_hat_raw[b * 2]) - static_cast<double>(v_raw[b * 2]));
    const double d_el =
        static_cast<double>(v_hat_raw[b * 2 + 1]) - static_cast<double>(v_raw[b * 2 + 1]);
    parts.viewpoint += weights.lambda_v * (std::abs(d_az) + std::abs(d_el)) / n_v;
    if (gv_hat) {
      if (d_az != 0.0)
        (*gv_hat)[b * 2] += static_cast<T>(weights.lambda_v * (d_az > 0 ? 1.0 : -1.0) / n_v);
      if (d_el != 0.0)
        (*gv_hat)[b * 2 + 1] +=
            static_cast<T>(weights.lambda_v * (d_el > 0 ? 1.0 : -1.0) / n_v);
    }
  }
  return parts;
}

template <class T>
double kl_loss(const nets::GaussianPosterior<T>& q, double weight, Tensor<T>* gmean,
               Tensor<T>* glogvar) {
  SIST_CHECK(q.mean.same_shape(q.logvar), "posterior shape mismatch");
  SIST_CHECK(q.mean.numel() > 0, "KL over empty posterior");
  const double n = static_cast<double>(q.mean.numel());
  double loss = 0.0;
  for (int64_t i = 0; i < q.mean.numel(); ++i) {
    const double mu = static_cast<double>(q.mean[i]);
    const double lv = static_cast<double>(q.logvar[i]);
    SIST_CHECK_FINITE(std::isfinite(mu) && std::isfinite(lv), "non-finite posterior");
    const double var = std::exp(lv);
    loss += weight * 0.5 * (mu * mu + var - 1.0 - lv) / n;
    if (gmean) (*gmean)[i] += static_cast<T>(weight * mu / n);
    if (glogvar) (*glogvar)[i] += static_cast<T>(weight * 0.5 * (var - 1.0) / n);
  }
  return loss;
}

double total_loss(double l_i, double l_s, double l_c, double l_kl, const LossWeights& w) {
  w.validate();
  return w.lambda_i * l_i + w.lambda_s * l_s + l_c + l_kl;
}

#define SIST_INSTANTIATE(T)                                                                \
  template double lsgan_discriminator_loss(const Tensor<T>&, const Tensor<T>&, bool,      \
                                           GanLabelConvention, Tensor<T>*, Tensor<T>*);   \
  template double lsgan_generator_loss(const Tensor<T>&, GanLabelConvention, Tensor<T>*); \
  template double binary_cross_entropy(const Tensor<T>&, const Tensor<T>&, Tensor<T>*);   \
  template CyclicParts cyclic_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                   const Tensor<T>&, const LossWeights&, Tensor<T>*,      \
                                   Tensor<T>*);                                           \
  template double kl_loss(const nets::GaussianPosterior<T>&, double, Tensor<T>*,          \
                          Tensor<T>*);

SIST_INSTANTIATE(float)
SIST_INSTANTIATE(double)
#undef SIST_INSTANTIATE

}  // namespace sist::losses
