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

#include "gprl/ad/tape.hpp"

#include <algorithm>

namespace gprl::ad {

const Array& Var::value() const {
    if (!tape_) throw TapeError("var: use of an unbound variable");
    return tape_->value(id_);
}

const Array& Gradients::operator[](const Var& param) const { return at(param.id()); }

const Array& Gradients::at(NodeId id) const {
    auto it = grads_.find(id);
    if (it == grads_.end()) throw TapeError("gradients: node " + std::to_string(id) + " is not a parameter");
    return it->second;
}

Var Tape::constant(Array value) { return record("constant", {}, std::move(value), nullptr); }

Var Tape::parameter(Array value) {
    Var v = record("parameter", {}, std::move(value), nullptr);
    nodes_.back().requires_grad = true;
    params_.push_back(v.id());
    return v;
}

void Tape::check_owned(const Var& v, const char* op) const {
    if (v.tape() != this || v.id() >= nodes_.size()) {
        throw TapeError(std::string(op) + ": variable does not belong to this tape");
    }
}

Var Tape::record(const char* op, const std::vector<Var>& parents, Array value, BackwardFn backward) {
    if (consumed_) throw TapeError(std::string(op) + ": tape already consumed by backward");
    Node node;
    node.op = op;
    node.parents.reserve(parents.size());
    for (const auto& p : parents) {
        check_owned(p, op);
        node.parents.push_back(p.id());
        node.requires_grad = node.requires_grad || nodes_[p.id()].requires_grad;
    }
    add_bytes(value.bytes());
    node.value = std::move(value);
    node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Array& Tape::adjoint(NodeId id) {
    Node& n = nodes_.at(id);
    if (!n.has_adjoint) {
        n.adjoint = Array(n.value.shape(), 0.0);
        n.has_adjoint = true;
        add_bytes(n.adjoint.bytes());
    }
    return n.adjoint;
}

void Tape::accumulate(NodeId id, const Array& grad) {
    Array& adj = adjoint(id);
    if (adj.shape() != grad.shape()) {
        throw ShapeError(std::string(nodes_.at(id).op) + " (adjoint)", to_string(adj.shape()), to_string(grad.shape()));
    }
    adj.vec() += grad.vec();
}

void Tape::add_bytes(std::size_t bytes) {
    live_bytes_ += bytes;
    peak_bytes_ = std::max(peak_bytes_, live_bytes_);
}

void Tape::note_extra_bytes(std::size_t bytes) {
    // Scratch is transient: it raises the peak without staying live.
    peak_bytes_ = std::max(peak_bytes_, live_bytes_ + bytes);
}

Gradients Tape::backward(const Var& loss) {
    check_owned(loss, "backward");
    if (consumed_) throw TapeError("backward: tape already consumed; rebuild the forward pass");
    if (value(loss.id()).size() != 1) {
        throw TapeError("backward: loss must be a scalar, got shape " + to_string(value(loss.id()).shape()));
    }
    consumed_ = true;
    adjoint(loss.id())[0] = 1.0;
    for (NodeId id = loss.id() + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.has_adjoint || !n.requires_grad || !n.backward) continue;
        n.backward(*this, id);
    }
    Gradients grads;
    for (NodeId p : params_) {
        if (nodes_[p].has_adjoint) {
            grads.set(p, nodes_[p].adjoint);
        } else {
            grads.set(p, Array(nodes_[p].value.shape(), 0.0));
        }
    }
    return grads;
}

Gradients backward(Tape& tape, const Var& loss) { return tape.backward(loss); }

}  // namespace gprl::ad
