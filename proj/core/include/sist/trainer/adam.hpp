// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <filesystem>

#include "sist/nets/checkpoint.hpp"
#include "sist/nets/layers.hpp"

namespace sist::trainer {

// Adam with first/second moments per parameter, one instance per network.
template <class T>
class AdamOptimizer {
public:
  AdamOptimizer() = default;
  explicit AdamOptimizer(std::vector<nets::Parameter<T>*> params, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      nets::Parameter<T>& p = *params_[i];
      Tensor<T>& m = m_[i];
      Tensor<T>& v = v_[i];
      for (int64_t j = 0; j < p.value.numel(); ++j) {
        const double g = static_cast<double>(p.grad[j]);
        const double mj = beta1_ * static_cast<double>(m[j]) + (1.0 - beta1_) * g;
        const double vj = beta2_ * static_cast<double>(v[j]) + (1.0 - beta2_) * g * g;
        m[j] = static_cast<T>(mj);
        v[j] = static_cast<T>(vj);
        p.value[j] -= static_cast<T>(lr * (mj / c1) / (std::sqrt(vj / c2) + eps_));
      }
    }
  }

  int64_t steps_taken() const { return t_; }

  void save(const std::filesystem::path& path) const {
    std::vector<Tensor<T>*> tensors;
    auto* self = const_cast<AdamOptimizer*>(this);
    for (auto& m : self->m_) tensors.push_back(&m);
    for (auto& v : self->v_) tensors.push_back(&v);
    Tensor<T> tcount({1});
    tcount[0] = static_cast<T>(t_);
    tensors.push_back(&tcount);
    nets::save_tensor_blob(path, tensors);
  }

  void load(const std::filesystem::path& path) {
    std::vector<Tensor<T>*> tensors;
    for (auto& m : m_) tensors.push_back(&m);
    for (auto& v : v_) tensors.push_back(&v);
    Tensor<T> tcount({1});
    tensors.push_back(&tcount);
    nets::load_tensor_blob(path, tensors);
    t_ = static_cast<int64_t>(tcount[0]);
  }

private:
  std::vector<nets::Parameter<T>*> params_;
  std::vector<Tensor<T>> m_, v_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
};

}  // namespace sist::trainer
