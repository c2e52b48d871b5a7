// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "sist/nets/layers.hpp"

namespace sist::nets {

// One binary blob per network: magic "SISTNET1", u32 scalar byte width,
// u64 tensor count, then per tensor u64 element count + raw values.
// Parameters come first, then batchnorm buffers, in construction order.
template <class T>
void save_network_blob(const std::filesystem::path& path,
                       const std::vector<Parameter<T>*>& params,
                       const std::vector<Tensor<T>*>& buffers);

template <class T>
void load_network_blob(const std::filesystem::path& path,
                       const std::vector<Parameter<T>*>& params,
                       const std::vector<Tensor<T>*>& buffers);

// Raw tensor list blob (optimizer moments and similar).
template <class T>
void save_tensor_blob(const std::filesystem::path& path, const std::vector<Tensor<T>*>& tensors);
template <class T>
void load_tensor_blob(const std::filesystem::path& path, const std::vector<Tensor<T>*>& tensors);

}  // namespace sist::nets
