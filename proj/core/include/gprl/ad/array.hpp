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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gprl::ad {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/// Dense row-major array of doubles. Rank 0 is a scalar holding one value.
class Array {
public:
    Array() : shape_{}, values_(1, 0.0) {}
    explicit Array(Shape shape, double fill = 0.0);
    Array(Shape shape, std::vector<double> values);

    static Array scalar(double v) { return Array(Shape{}, std::vector<double>{v}); }
    static Array vector(std::vector<double> values);
    static Array matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Array matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Array from_matrix(const Eigen::Ref<const RowMatrix>& m);
    static Array from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return values_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t rows() const;
    std::size_t cols() const;
    std::size_t bytes() const { return values_.size() * sizeof(double); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
    double item() const;

    /// Views rank-2 data as a matrix; rank-1 as a column, rank-0 as 1x1.
    MatrixMap mat();
    ConstMatrixMap mat() const;
    VectorMap vec() { return VectorMap(values_.data(), static_cast<Eigen::Index>(values_.size())); }
    ConstVectorMap vec() const {
        return ConstVectorMap(values_.data(), static_cast<Eigen::Index>(values_.size()));
    }

    Array reshaped(Shape shape) const;
    bool all_finite() const;
    double max_abs() const;

    friend bool operator==(const Array&, const Array&) = default;

private:
    // Aligned so Eigen reductions split the data the same way on every run.
    using Storage = std::vector<double, Eigen::aligned_allocator<double>>;
    Shape shape_;
    Storage values_;
};

}  // namespace gprl::ad
