// Copyright 2026 The gprl Authors
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

namespace gprl {

// Failure categories map onto CLI exit codes: ConfigError -> 1,
// NumericalError -> 2, IoError/ParseError -> 3.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public IoError {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : IoError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ShapeError : public Error {
public:
    ShapeError(const std::string& op, const std::string& lhs, const std::string& rhs)
        : Error(op + ": incompatible shapes " + lhs + " and " + rhs), op_(op) {}
    explicit ShapeError(const std::string& message) : Error(message) {}

    const std::string& op() const { return op_; }

private:
    std::string op_;
};

/// Cholesky factorization hit a non-positive pivot.
class NotPositiveDefinite : public NumericalError {
public:
    NotPositiveDefinite(std::size_t pivot, double value)
        : NumericalError("cholesky: matrix not positive definite at pivot " + std::to_string(pivot) +
                         " (value " + std::to_string(value) + ")"),
          pivot_(pivot) {}

    std::size_t pivot() const { return pivot_; }

private:
    std::size_t pivot_;
};

}  // namespace gprl
