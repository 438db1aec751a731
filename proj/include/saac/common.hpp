// Copyright 2026 The SAAC Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAAC_COMMON_HPP_
#define SAAC_COMMON_HPP_

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace saac {

// Invalid configuration: bad dimensions, unknown keys, out-of-range values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A loss or optimizer update produced non-finite values. Carries the name of
// the offending loss so aborted runs can report what diverged.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string loss_name, const std::string& detail)
      : std::runtime_error(loss_name + ": " + detail),
        loss_name_(std::move(loss_name)) {}
  const std::string& loss_name() const { return loss_name_; }

 private:
  std::string loss_name_;
};

// API misuse: stepping a finished episode, comparing before training, etc.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace internal {
[[noreturn]] inline void fail_config(const std::string& msg) {
  throw ConfigError(msg);
}
[[noreturn]] inline void fail_usage(const std::string& msg) {
  throw UsageError(msg);
}
}  // namespace internal

#define SAAC_CHECK(cond, msg)                \
  do {                                       \
    if (!(cond)) ::saac::internal::fail_config(msg); \
  } while (0)

#define SAAC_CHECK_USAGE(cond, msg)         \
  do {                                      \
    if (!(cond)) ::saac::internal::fail_usage(msg); \
  } while (0)

// Lossless double formatting shared by every CSV/file writer, so repeated
// runs emit byte-identical output.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace saac

#endif  // SAAC_COMMON_HPP_
