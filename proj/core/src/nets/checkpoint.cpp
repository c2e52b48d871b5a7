// SPDX-License-Identifier: Apache-2.0
#include "sist/nets/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace sist::nets {

namespace {

constexpr char kMagic[8] = {'S', 'I', 'S', 'T', 'N', 'E', 'T', '1'};

template <class T>
void write_tensors(std::ofstream& os, const std::vector<const Tensor<T>*>& tensors) {
  os.write(kMagic, 8);
  const uint32_t width = sizeof(T);
  os.write(reinterpret_cast<const char*>(&width), 4);
  const uint64_t count = tensors.size();
  os.write(reinterpret_cast<const char*>(&count), 8);
  for (const auto* t : tensors) {
    const uint64_t n = static_cast<uint64_t>(t->numel());
    os.write(reinterpret_cast<const char*>(&n), 8);
    os.write(reinterpret_cast<const char*>(t->data()),
             static_cast<std::streamsize>(n * sizeof(T)));
  }
}

template <class T>
void read_tensors(std::ifstream& is, const std::filesystem::path& path,
                  const std::vector<Tensor<T>*>& tensors) {
  char magic[8];
  SIST_CHECK(is.read(magic, 8) && std::memcmp(magic, kMagic, 8) == 0,
             "bad checkpoint blob magic in ", path.string());
  uint32_t width = 0;
  uint64_t count = 0;
  is.read(reinterpret_cast<char*>(&width), 4);
  is.read(reinterpret_cast<char*>(&count), 8);
  SIST_CHECK(width == sizeof(T), "checkpoint scalar width ", width, " does not match build (",
             sizeof(T), ") for ", path.string());
  SIST_CHECK(count == tensors.size(), "checkpoint tensor count ", count, " != expected ",
             tensors.size(), " in ", path.string());
  for (auto* t : tensors) {
    uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), 8);
    SIST_CHECK(n == static_cast<uint64_t>(t->numel()), "tensor size mismatch in ",
               path.string(), ": ", n, " vs ", t->numel());
    SIST_CHECK(
        static_cast<bool>(is.read(reinterpret_cast<char*>(t->data()),
                                  static_cast<std::streamsize>(n * sizeof(T)))),
        "truncated checkpoint blob ", path.string());
  }
}

}  // namespace

template <class T>
void save_network_blob(const std::filesystem::path& path,
                       const std::vector<Parameter<T>*>& params,
                       const std::vector<Tensor<T>*>& buffers) {
  std::ofstream os(path, std::ios::binary);
  SIST_CHECK(os.good(), "cannot write ", path.string());
  std::vector<const Tensor<T>*> tensors;
  for (const auto* p : params) tensors.push_back(&p->value);
  for (const auto* b : buffers) tensors.push_back(b);
  write_tensors(os, tensors);
}

template <class T>
void load_network_blob(const std::filesystem::path& path,
                       const std::vector<Parameter<T>*>& params,
                       const std::vector<Tensor<T>*>& buffers) {
  std::ifstream is(path, std::ios::binary);
  SIST_CHECK(is.good(), "cannot open ", path.string());
  std::vector<Tensor<T>*> tensors;
  for (auto* p : params) tensors.push_back(&p->value);
  for (auto* b : buffers) tensors.push_back(b);
  read_tensors(is, path, tensors);
}

template <class T>
void save_tensor_blob(const std::filesystem::path& path,
                      const std::vector<Tensor<T>*>& tensors) {
  std::ofstream os(path, std::ios::binary);
  SIST_CHECK(os.good(), "cannot write ", path.string());
  std::vector<const Tensor<T>*> view(tensors.begin(), tensors.end());
  write_tensors(os, view);
}

template <class T>
void load_tensor_blob(const std::filesystem::path& path,
                      const std::vector<Tensor<T>*>& tensors) {
  std::ifstream is(path, std::ios::binary);
  SIST_CHECK(is.good(), "cannot open ", path.string());
  read_tensors(is, path, tensors);
}

#define SIST_INSTANTIATE(T)                                                         \
  template void save_network_blob(const std::filesystem::path&,                    \
                                  const std::vector<Parameter<T>*>&,               \
                                  const std::vector<Tensor<T>*>&);                 \
  template void load_network_blob(const std::filesystem::path&,                    \
                                  const std::vector<Parameter<T>*>&,               \
                                  const std::vector<Tensor<T>*>&);                 \
  template void save_tensor_blob(const std::filesystem::path&,                     \
                                 const std::vector<Tensor<T>*>&);                  \
  template void load_tensor_blob(const std::filesystem::path&,                     \
                                 const std::vector<Tensor<T>*>&);

SIST_INSTANTIATE(float)
SIST_INSTANTIATE(double)
#undef SIST_INSTANTIATE

}  // namespace sist::nets
