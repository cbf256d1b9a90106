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

#include "gprl/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gprl::ad {
namespace {

Tape& owner(const Var& a, const char* op) {
    if (!a.valid()) throw TapeError(std::string(op) + ": unbound variable");
    return *a.tape();
}

Tape& owner(const Var& a, const Var& b, const char* op) {
    Tape& t = owner(a, op);
    if (b.tape() != &t) throw TapeError(std::string(op) + ": operands live on different tapes");
    return t;
}

// Per-output-dimension strides into an operand; zero where it broadcasts.
std::vector<std::size_t> broadcast_strides(const Shape& out, const Shape& in) {
    const std::size_t r = out.size();
    const std::size_t ri = in.size();
    std::vector<std::size_t> strides(r, 0);
    std::size_t stride = 1;
    for (std::size_t k = 0; k < ri; ++k) {
        const std::size_t j = r - 1 - k;
        const std::size_t d = in[ri - 1 - k];
        strides[j] = (d == 1 && out[j] != 1) ? 0 : stride;
        stride *= d;
    }
    return strides;
}

template <class F>
void for_each_broadcast(const Shape& out, const std::vector<std::size_t>& sa, const std::vector<std::size_t>& sb,
                        F&& f) {
    const std::size_t r = out.size();
    const std::size_t n = element_count(out);
    std::vector<std::size_t> idx(r, 0);
    std::size_t ia = 0;
    std::size_t ib = 0;
    for (std::size_t i = 0; i < n; ++i) {
        f(i, ia, ib);
        for (std::size_t j = r; j-- > 0;) {
            ++idx[j];
            ia += sa[j];
            ib += sb[j];
            if (idx[j] < out[j]) break;
            ia -= sa[j] * out[j];
            ib -= sb[j] * out[j];
            idx[j] = 0;
        }
    }
}

enum class BinOp { Add, Sub, Mul, Div };

const char* name_of(BinOp op) {
    switch (op) {
        case BinOp::Add: return "add";
        case BinOp::Sub: return "sub";
        case BinOp::Mul: return "mul";
        case BinOp::Div: return "div";
    }
    return "?";
}

double apply(BinOp op, double x, double y) {
    switch (op) {
        case BinOp::Add: return x + y;
        case BinOp::Sub: return x - y;
        case BinOp::Mul: return x * y;
        case BinOp::Div: return x / y;
    }
    return 0.0;
}

Var binary(BinOp op, const Var& a, const Var& b) {
    const char* name = name_of(op);
    Tape& tape = owner(a, b, name);
    const Array& av = a.value();
    const Array& bv = b.value();
    Shape out_shape = broadcast_shape(name, av.shape(), bv.shape());
    Array out(out_shape);
    const bool same = av.shape() == bv.shape();
    if (same) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply(op, av[i], bv[i]);
    } else {
        const auto sa = broadcast_strides(out_shape, av.shape());
        const auto sb = broadcast_strides(out_shape, bv.shape());
        for_each_broadcast(out_shape, sa, sb,
                           [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = apply(op, av[ia], bv[ib]); });
    }
    return tape.record(name, {a, b}, std::move(out), [op, same](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pa = n.parents[0];
        const NodeId pb = n.parents[1];
        const Array& g = n.adjoint;
        const Array& x = t.value(pa);
        const Array& y = t.value(pb);
        const bool ga = t.requires_grad(pa);
        const bool gb = t.requires_grad(pb);
        Array* adj_a = ga ? &t.adjoint(pa) : nullptr;
        Array* adj_b = gb ? &t.adjoint(pb) : nullptr;
        auto body = [&](std::size_t i, std::size_t ia, std::size_t ib) {
            switch (op) {
                case BinOp::Add:
                    if (ga) (*adj_a)[ia] += g[i];
                    if (gb) (*adj_b)[ib] += g[i];
                    break;
                case BinOp::Sub:
                    if (ga) (*adj_a)[ia] += g[i];
                    if (gb) (*adj_b)[ib] -= g[i];
                    break;
                case BinOp::Mul:
                    if (ga) (*adj_a)[ia] += g[i] * y[ib];
                    if (gb) (*adj_b)[ib] += g[i] * x[ia];
                    break;
                case BinOp::Div:
                    if (ga) (*adj_a)[ia] += g[i] / y[ib];
                    if (gb) (*adj_b)[ib] -= g[i] * x[ia] / (y[ib] * y[ib]);
                    break;
            }
        };
        if (same) {
            for (std::size_t i = 0; i < g.size(); ++i) body(i, i, i);
        } else {
            const Shape& out_shape = n.value.shape();
            for_each_broadcast(out_shape, broadcast_strides(out_shape, x.shape()),
                               broadcast_strides(out_shape, y.shape()), body);
        }
    });
}

// Elementwise unary op; `deriv(x, y)` is dy/dx.
template <class Fwd, class Deriv>
Var unary(const char* name, const Var& a, Fwd fwd, Deriv deriv) {
    Tape& tape = owner(a, name);
    const Array& av = a.value();
    Array out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
    return tape.record(name, {a}, std::move(out), [deriv](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pa = n.parents[0];
        if (!t.requires_grad(pa)) return;
        const Array& x = t.value(pa);
        Array& adj = t.adjoint(pa);
        for (std::size_t i = 0; i < x.size(); ++i) adj[i] += n.adjoint[i] * deriv(x[i], n.value[i]);
    });
}

void require_rank(const char* op, const Array& a, std::size_t rank) {
    if (a.rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         to_string(a.shape()));
    }
}

struct AxisSplit {
    std::size_t outer = 1;
    std::size_t mid = 1;
    std::size_t inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
    AxisSplit r;
    for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
    r.mid = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
    return r;
}

// Lower Cholesky via an unblocked right-looking loop; used to locate the
// failing pivot once the fast path has rejected a matrix.
std::pair<std::size_t, double> first_bad_pivot(const Eigen::Ref<const RowMatrix>& a) {
    const Eigen::Index n = a.rows();
    RowMatrix l = RowMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j) - l.row(j).head(j).squaredNorm();
        if (!(d > 0.0) || !std::isfinite(d)) return {static_cast<std::size_t>(j), d};
        l(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
        }
    }
    return {static_cast<std::size_t>(n), 0.0};
}

}  // namespace

Shape broadcast_shape(const char* op, const Shape& a, const Shape& b) {
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r, 1);
    for (std::size_t k = 0; k < r; ++k) {
        const std::size_t da = k < a.size() ? a[a.size() - 1 - k] : 1;
        const std::size_t db = k < b.size() ? b[b.size() - 1 - k] : 1;
        std::size_t d;
        if (da == db || db == 1) {
            d = da;
        } else if (da == 1) {
            d = db;
        } else {
            throw ShapeError(op, to_string(a), to_string(b));
        }
        out[r - 1 - k] = d;
    }
    return out;
}

Array reduce_to_shape(const Array& grad, const Shape& target) {
    if (grad.shape() == target) return grad;
    broadcast_shape("reduce_to_shape", grad.shape(), target);
    Array out(target, 0.0);
    const auto st = broadcast_strides(grad.shape(), target);
    const std::vector<std::size_t> unit(grad.rank(), 0);
    for_each_broadcast(grad.shape(), st, unit, [&](std::size_t i, std::size_t it, std::size_t) { out[it] += grad[i]; });
    return out;
}

Var add(const Var& a, const Var& b) { return binary(BinOp::Add, a, b); }
Var sub(const Var& a, const Var& b) { return binary(BinOp::Sub, a, b); }
Var mul(const Var& a, const Var& b) { return binary(BinOp::Mul, a, b); }
Var div(const Var& a, const Var& b) { return binary(BinOp::Div, a, b); }

Var add(const Var& a, double s) {
    return unary("add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var mul(const Var& a, double s) {
    return unary("mul_scalar", a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Var neg(const Var& a) {
    return unary("neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var exp(const Var& a) {
    return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
    return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sqrt(const Var& a) {
    return unary("sqrt", a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var tanh(const Var& a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var square(const Var& a) {
    return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var matmul(const Var& a, const Var& b) {
    Tape& tape = owner(a, b, "matmul");
    const Array& av = a.value();
    const Array& bv = b.value();
    require_rank("matmul", av, 2);
    require_rank("matmul", bv, 2);
    if (av.cols() != bv.rows()) throw ShapeError("matmul", to_string(av.shape()), to_string(bv.shape()));
    Array out(Shape{av.rows(), bv.cols()});
    out.mat().noalias() = av.mat() * bv.mat();
    return tape.record("matmul", {a, b}, std::move(out), [](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pa = n.parents[0];
        const NodeId pb = n.parents[1];
        if (t.requires_grad(pa)) t.adjoint(pa).mat().noalias() += n.adjoint.mat() * t.value(pb).mat().transpose();
        if (t.requires_grad(pb)) t.adjoint(pb).mat().noalias() += t.value(pa).mat().transpose() * n.adjoint.mat();
    });
}

Var matvec(const Var& a, const Var& x) {
    Tape& tape = owner(a, x, "matvec");
    const Array& av = a.value();
    const Array& xv = x.value();
    require_rank("matvec", av, 2);
    require_rank("matvec", xv, 1);
    if (av.cols() != xv.size()) throw ShapeError("matvec", to_string(av.shape()), to_string(xv.shape()));
    Array out(Shape{av.rows()});
    out.vec().noalias() = av.mat() * xv.vec();
    return tape.record("matvec", {a, x}, std::move(out), [](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pa = n.parents[0];
        const NodeId px = n.parents[1];
        if (t.requires_grad(pa)) t.adjoint(pa).mat().noalias() += n.adjoint.vec() * t.value(px).vec().transpose();
        if (t.requires_grad(px)) t.adjoint(px).vec().noalias() += t.value(pa).mat().transpose() * n.adjoint.vec();
    });
}

Var transpose(const Var& a) {
    Tape& tape = owner(a, "transpose");
    const Array& av = a.value();
    require_rank("transpose", av, 2);
    Array out(Shape{av.cols(), av.rows()});
    out.mat() = av.mat().transpose();
    return tape.record("transpose", {a}, std::move(out), [](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pa = n.parents[0];
        if (t.requires_grad(pa)) t.adjoint(pa).mat() += n.adjoint.mat().transpose();
    });
}

Var sum(const Var& a) {
    Tape& tape = owner(a, "sum");
    return tape.record("sum", {a}, Array::scalar(a.value().vec().sum()), [](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pa = n.parents[0];
        if (t.requires_grad(pa)) t.adjoint(pa).vec().array() += n.adjoint[0];
    });
}

Var sum(const Var& a, std::size_t axis) {
    Tape& tape = owner(a, "sum_axis");
    const Array& av = a.value();
    if (axis >= av.rank()) {
        throw ShapeError("sum_axis: axis " + std::to_string(axis) + " out of range for " + to_string(av.shape()));
    }
    const AxisSplit s = split_at(av.shape(), axis);
    Shape out_shape = av.shape();
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    Array out(out_shape, 0.0);
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t m = 0; m < s.mid; ++m)
            for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += av[(o * s.mid + m) * s.inner + i];
    return tape.record("sum_axis", {a}, std::move(out), [s](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pa = n.parents[0];
        if (!t.requires_grad(pa)) return;
        Array& adj = t.adjoint(pa);
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t m = 0; m < s.mid; ++m)
                for (std::size_t i = 0; i < s.inner; ++i) adj[(o * s.mid + m) * s.inner + i] += n.adjoint[o * s.inner + i];
    });
}

Var mean(const Var& a) { return mul(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var mean(const Var& a, std::size_t axis) {
    const double count = static_cast<double>(a.value().dim(axis));
    return mul(sum(a, axis), 1.0 / count);
}

RowMatrix cholesky_factor(const Eigen::Ref<const RowMatrix>& a) {
    if (a.rows() != a.cols()) {
        throw ShapeError("cholesky: expected a square matrix, got [" + std::to_string(a.rows()) + "," +
                         std::to_string(a.cols()) + "]");
    }
    Eigen::LLT<RowMatrix> llt(a);
    if (llt.info() != Eigen::Success) {
        auto [pivot, value] = first_bad_pivot(a);
        throw NotPositiveDefinite(pivot, value);
    }
    RowMatrix l = llt.matrixL();
    if (!l.allFinite()) {
        auto [pivot, value] = first_bad_pivot(a);
        throw NotPositiveDefinite(pivot, value);
    }
    return l;
}

Var cholesky(const Var& a) {
    Tape& tape = owner(a, "cholesky");
    const Array& av = a.value();
    require_rank("cholesky", av, 2);
    Array out = Array::from_matrix(cholesky_factor(av.mat()));
    return tape.record("cholesky", {a}, std::move(out), [](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pa = n.parents[0];
        if (!t.requires_grad(pa)) return;
        const auto l = n.value.mat();
        const auto lower = l.triangularView<Eigen::Lower>();
        RowMatrix lbar = n.adjoint.mat().triangularView<Eigen::Lower>();
        // P = Phi(L^T Lbar): lower triangle with the diagonal halved.
        RowMatrix p = (l.transpose() * lbar).triangularView<Eigen::Lower>();
        p.diagonal() *= 0.5;
        // S = L^{-T} P L^{-1}
        RowMatrix tmp = lower.transpose().solve(p);
        RowMatrix s = lower.transpose().solve(tmp.transpose()).transpose();
        t.adjoint(pa).mat() += 0.5 * (s + s.transpose());
    });
}

namespace {

RowMatrix as_columns(const Array& b) { return b.rank() == 1 ? RowMatrix(b.vec()) : RowMatrix(b.mat()); }

Var triangular_solve(const char* name, const Var& l, const Var& b, bool transposed) {
    Tape& tape = owner(l, b, name);
    const Array& lv = l.value();
    const Array& bv = b.value();
    require_rank(name, lv, 2);
    if (lv.rows() != lv.cols() || bv.rank() < 1 || bv.rank() > 2 || bv.dim(0) != lv.rows()) {
        throw ShapeError(name, to_string(lv.shape()), to_string(bv.shape()));
    }
    const auto lower = lv.mat().triangularView<Eigen::Lower>();
    RowMatrix x = transposed ? RowMatrix(lower.transpose().solve(as_columns(bv))) : RowMatrix(lower.solve(as_columns(bv)));
    Array out(bv.shape());
    std::copy(x.data(), x.data() + x.size(), out.data());
    return tape.record(name, {l, b}, std::move(out), [transposed](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pl = n.parents[0];
        const NodeId pb = n.parents[1];
        const auto lmat = t.value(pl).mat();
        const auto lower = lmat.triangularView<Eigen::Lower>();
        const RowMatrix xbar = as_columns(n.adjoint);
        const RowMatrix x = as_columns(n.value);
        // Forward X = L^{-1}B:   Bbar = L^{-T} Xbar, Lbar = -tril(Bbar X^T).
        // Forward X = L^{-T}B:   Bbar = L^{-1} Xbar, Lbar = -tril(X Bbar^T).
        RowMatrix bbar = transposed ? RowMatrix(lower.solve(xbar)) : RowMatrix(lower.transpose().solve(xbar));
        if (t.requires_grad(pb)) {
            Array& adj = t.adjoint(pb);
            Eigen::Map<RowMatrix>(adj.data(), bbar.rows(), bbar.cols()) += bbar;
        }
        if (t.requires_grad(pl)) {
            RowMatrix lbar = transposed ? RowMatrix(x * bbar.transpose()) : RowMatrix(bbar * x.transpose());
            t.adjoint(pl).mat() -= RowMatrix(lbar.triangularView<Eigen::Lower>());
        }
    });
}

}  // namespace

Var solve_lower(const Var& l, const Var& b) { return triangular_solve("solve_lower", l, b, false); }

Var solve_lower_transposed(const Var& l, const Var& b) { return triangular_solve("solve_lower_transposed", l, b, true); }

Var concat(const std::vector<Var>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no operands");
    Tape& tape = owner(parts.front(), "concat");
    const Shape& first = parts.front().value().shape();
    if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + to_string(first));
    Shape out_shape = first;
    out_shape[axis] = 0;
    std::vector<std::size_t> widths;
    for (const auto& p : parts) {
        owner(parts.front(), p, "concat");
        const Shape& s = p.value().shape();
        bool ok = s.size() == first.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
        if (!ok) throw ShapeError("concat", to_string(first), to_string(s));
        out_shape[axis] += s[axis];
        widths.push_back(s[axis]);
    }
    const AxisSplit total = split_at(out_shape, axis);
    Array out(out_shape);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Array& v = parts[k].value();
        const std::size_t chunk = widths[k] * total.inner;
        for (std::size_t o = 0; o < total.outer; ++o) {
            std::copy_n(v.data() + o * chunk, chunk, out.data() + o * total.mid * total.inner + offset);
        }
        offset += chunk;
    }
    return tape.record("concat", parts, std::move(out), [widths, total](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
            const std::size_t chunk = widths[k] * total.inner;
            if (t.requires_grad(n.parents[k])) {
                Array& adj = t.adjoint(n.parents[k]);
                for (std::size_t o = 0; o < total.outer; ++o) {
                    const double* src = n.adjoint.data() + o * total.mid * total.inner + off;
                    double* dst = adj.data() + o * chunk;
                    for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
                }
            }
            off += chunk;
        }
    });
}

Var slice(const Var& a, std::size_t axis, std::size_t begin, std::size_t end) {
    Tape& tape = owner(a, "slice");
    const Array& av = a.value();
    if (axis >= av.rank() || begin >= end || end > av.dim(axis)) {
        throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) + ") on axis " +
                         std::to_string(axis) + " invalid for " + to_string(av.shape()));
    }
    const AxisSplit s = split_at(av.shape(), axis);
    Shape out_shape = av.shape();
    out_shape[axis] = end - begin;
    Array out(out_shape);
    const std::size_t chunk = (end - begin) * s.inner;
    for (std::size_t o = 0; o < s.outer; ++o) {
        std::copy_n(av.data() + (o * s.mid + begin) * s.inner, chunk, out.data() + o * chunk);
    }
    return tape.record("slice", {a}, std::move(out), [s, begin, chunk](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pa = n.parents[0];
        if (!t.requires_grad(pa)) return;
        Array& adj = t.adjoint(pa);
        for (std::size_t o = 0; o < s.outer; ++o) {
            double* dst = adj.data() + (o * s.mid + begin) * s.inner;
            const double* src = n.adjoint.data() + o * chunk;
            for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
    });
}

Var reshape(const Var& a, Shape shape) {
    Tape& tape = owner(a, "reshape");
    return tape.record("reshape", {a}, a.value().reshaped(std::move(shape)), [](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pa = n.parents[0];
        if (t.requires_grad(pa)) t.adjoint(pa).vec() += n.adjoint.vec();
    });
}

Var diag(const Var& a) {
    Tape& tape = owner(a, "diag");
    const Array& av = a.value();
    require_rank("diag", av, 2);
    if (av.rows() != av.cols()) throw ShapeError("diag: expected a square matrix, got " + to_string(av.shape()));
    Array out = Array::from_vector(Eigen::VectorXd(av.mat().diagonal()));
    return tape.record("diag", {a}, std::move(out), [](Tape& t, NodeId self) {
        const Node& n = t.node(self);
        const NodeId pa = n.parents[0];
        if (t.requires_grad(pa)) t.adjoint(pa).mat().diagonal() += n.adjoint.vec();
    });
}

}  // namespace gprl::ad
