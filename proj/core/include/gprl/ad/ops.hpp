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
#include <vector>

#include "gprl/ad/tape.hpp"

// Differentiable operations. Every op records one node on the tape owning its
// operands. Binary elementwise ops broadcast numpy-style from the trailing
// dimension: dimensions are right-aligned and a size-1 (or missing leading)
// dimension expands. Any other mismatch raises ShapeError.

namespace gprl::ad {

/// Output shape of a broadcast between two shapes, or ShapeError naming `op`.
Shape broadcast_shape(const char* op, const Shape& a, const Shape& b);

/// Sums `grad` (shaped like a broadcast output) back down to `target`.
Array reduce_to_shape(const Array& grad, const Shape& target);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var add(const Var& a, double s);
Var mul(const Var& a, double s);

Var neg(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var tanh(const Var& a);
Var square(const Var& a);

/// [m,k] x [k,n] -> [m,n]
Var matmul(const Var& a, const Var& b);
/// [m,n] x [n] -> [m]
Var matvec(const Var& a, const Var& x);
Var transpose(const Var& a);

Var sum(const Var& a);
/// Reduces `axis` away.
Var sum(const Var& a, std::size_t axis);
Var mean(const Var& a);
Var mean(const Var& a, std::size_t axis);

/// Lower Cholesky factor of a symmetric positive-definite matrix. The input
/// is read as symmetric; its adjoint is symmetrized.
Var cholesky(const Var& a);
/// X = L^{-1} B for lower-triangular L; B is [n] or [n,k].
Var solve_lower(const Var& l, const Var& b);
/// X = L^{-T} B for lower-triangular L.
Var solve_lower_transposed(const Var& l, const Var& b);

Var concat(const std::vector<Var>& parts, std::size_t axis);
/// Half-open range [begin, end) along `axis`.
Var slice(const Var& a, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(const Var& a, Shape shape);
/// Diagonal of a square matrix as a vector.
Var diag(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator+(const Var& a, double s) { return add(a, s); }
inline Var operator+(double s, const Var& a) { return add(a, s); }
inline Var operator-(const Var& a, double s) { return add(a, -s); }
inline Var operator-(double s, const Var& a) { return add(neg(a), s); }
inline Var operator*(const Var& a, double s) { return mul(a, s); }
inline Var operator*(double s, const Var& a) { return mul(a, s); }
inline Var operator/(const Var& a, double s) { return mul(a, 1.0 / s); }

/// Plain (non-recording) Cholesky used by ops and callers that do not need
/// gradients. Throws NotPositiveDefinite with the failing pivot.
RowMatrix cholesky_factor(const Eigen::Ref<const RowMatrix>& a);

}  // namespace gprl::ad
