// Copyright 2026 The carfn Authors
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace carfn {

// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed token sequence or DSL text. `line`/`column` are 1-based; for
// token sequences `column` is the token position.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(format(message, line, column)),
        detail_(message),
        line_(line),
        column_(column) {}

  const std::string& detail() const { return detail_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& m, std::size_t l,
                            std::size_t c) {
    return std::to_string(l) + ":" + std::to_string(c) + ": " + m;
  }
  std::string detail_;
  std::size_t line_;
  std::size_t column_;
};

// No car matches a sampling constraint.
class UnsatisfiableError : public Error {
 public:
  using Error::Error;
};

// A function pool admits no pair/triplet with the requested relation, or
// fewer witnesses exist than were requested.
class ExhaustedPoolError : public Error {
 public:
  ExhaustedPoolError(const std::string& message, std::size_t available = 0)
      : Error(message), available_(available) {}
  std::size_t available() const { return available_; }

 private:
  std::size_t available_;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// A trial log or generations file that does not fit its schema. `index` is
// the 0-based record (row / line) that failed.
class MalformedInputError : public Error {
 public:
  MalformedInputError(const std::string& message, std::size_t index)
      : Error("record " + std::to_string(index) + ": " + message),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace carfn
