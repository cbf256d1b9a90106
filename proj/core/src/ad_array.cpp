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

#include "gprl/ad/array.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gprl/errors.hpp"

namespace gprl::ad {

std::string to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Array::Array(Shape shape, double fill) : shape_(std::move(shape)), values_(element_count(shape_), fill) {
    for (auto d : shape_) {
        if (d == 0) throw ShapeError("array: zero-sized dimension in shape " + to_string(shape_));
    }
}

Array::Array(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(values.begin(), values.end()) {
    for (auto d : shape_) {
        if (d == 0) throw ShapeError("array: zero-sized dimension in shape " + to_string(shape_));
    }
    if (element_count(shape_) != values_.size()) {
        throw ShapeError("array: shape " + to_string(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
    }
}

Array Array::vector(std::vector<double> values) {
    const auto n = values.size();
    return Array(Shape{n}, std::move(values));
}

Array Array::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Array(Shape{rows, cols}, std::move(values));
}

Array Array::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<double> values;
    std::size_t cols = rows.size() ? rows.begin()->size() : 0;
    for (const auto& row : rows) {
        if (row.size() != cols) throw ShapeError("array: ragged matrix literal");
        values.insert(values.end(), row.begin(), row.end());
    }
    return Array(Shape{rows.size(), cols}, std::move(values));
}

Array Array::from_matrix(const Eigen::Ref<const RowMatrix>& m) {
    Array out(Shape{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    out.mat() = m;
    return out;
}

Array Array::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
    Array out(Shape{static_cast<std::size_t>(v.size())});
    out.vec() = v;
    return out;
}

std::size_t Array::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw ShapeError("array: axis " + std::to_string(axis) + " out of range for shape " + to_string(shape_));
    }
    return shape_[axis];
}

std::size_t Array::rows() const {
    if (shape_.size() == 2) return shape_[0];
    if (shape_.size() == 1) return shape_[0];
    return 1;
}

std::size_t Array::cols() const { return shape_.size() == 2 ? shape_[1] : 1; }

double Array::item() const {
    if (values_.size() != 1) throw ShapeError("item: expected a single value, got shape " + to_string(shape_));
    return values_[0];
}

MatrixMap Array::mat() {
    return MatrixMap(values_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
}

ConstMatrixMap Array::mat() const {
    return ConstMatrixMap(values_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
}

Array Array::reshaped(Shape shape) const {
    if (element_count(shape) != values_.size()) {
        throw ShapeError("reshape", to_string(shape_), to_string(shape));
    }
    Array out = *this;
    out.shape_ = std::move(shape);
    return out;
}

bool Array::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Array::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace gprl::ad
