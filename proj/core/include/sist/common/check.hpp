// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace sist {

// Bad inputs, malformed files, incompatible configs. CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite losses or parameters during training. CLI exit code 3.
class DivergenceError : public std::runtime_error {
public:
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
template <class Err, class... Parts>
[[noreturn]] inline void fail(const char* cond, Parts&&... parts) {
  std::ostringstream os;
  os << "check failed (" << cond << "): ";
  (os << ... << parts);
  throw Err(os.str());
}
}  // namespace detail

#define SIST_CHECK(cond, ...)                                              \
  do {                                                                     \
    if (!(cond))                                                           \
      ::sist::detail::fail<::sist::ValidationError>(#cond, __VA_ARGS__);   \
  } while (0)

#define SIST_CHECK_FINITE(cond, ...)                                       \
  do {                                                                     \
    if (!(cond))                                                           \
      ::sist::detail::fail<::sist::DivergenceError>(#cond, __VA_ARGS__);   \
  } while (0)

}  // namespace sist
