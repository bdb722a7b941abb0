// Copyright 2026 The mgpatt Authors.
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

#ifndef MGPATT_ERRORS_HPP_
#define MGPATT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mgpatt {

// Root of all library errors. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments to a pure function (non-finite time, bad shapes).
class InputError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration (unknown ablation, empty class, bad ranges).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Problems with dataset files or records.
class DataError : public Error {
 public:
  using Error::Error;
};

// Factorization failure after maximum jitter, non-finite loss.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// AUROC/AUPR requested on inputs where the metric is undefined.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Unknown patient id and similar key misses.
class LookupError : public Error {
 public:
  using Error::Error;
};

}  // namespace mgpatt

#endif  // MGPATT_ERRORS_HPP_
