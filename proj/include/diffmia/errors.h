/*
 * Copyright 2026 The diffmia Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DIFFMIA_ERRORS_H_
#define DIFFMIA_ERRORS_H_

#include <stdexcept>
#include <string>

namespace diffmia {

// Base class of every error raised by the library. `kind()` is a stable,
// machine-parseable class name; the CLI maps it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define DIFFMIA_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

DIFFMIA_DEFINE_ERROR(ShapeError);
DIFFMIA_DEFINE_ERROR(ContractError);
DIFFMIA_DEFINE_ERROR(RangeError);
DIFFMIA_DEFINE_ERROR(KindError);
DIFFMIA_DEFINE_ERROR(SingularityError);
DIFFMIA_DEFINE_ERROR(DivergenceError);
DIFFMIA_DEFINE_ERROR(ConvergenceError);
DIFFMIA_DEFINE_ERROR(ConfigError);
DIFFMIA_DEFINE_ERROR(IoError);
DIFFMIA_DEFINE_ERROR(SchemaError);
DIFFMIA_DEFINE_ERROR(VersionError);

#undef DIFFMIA_DEFINE_ERROR

}  // namespace diffmia

#endif  // DIFFMIA_ERRORS_H_
