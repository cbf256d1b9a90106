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
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gprl/ad/array.hpp"
#include "gprl/errors.hpp"

namespace gprl::ad {

using NodeId = std::size_t;

class Tape;

class TapeError : public Error {
public:
    using Error::Error;
};

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

    Tape* tape() const { return tape_; }
    NodeId id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

    const Array& value() const;
    const Shape& shape() const { return value().shape(); }

private:
    Tape* tape_ = nullptr;
    NodeId id_ = 0;
};

/// Propagates the adjoint of node `self` into the adjoints of its parents.
using BackwardFn = std::function<void(Tape& tape, NodeId self)>;

struct Node {
    const char* op = "";
    std::vector<NodeId> parents;
    Array value;
    Array adjoint;
    bool has_adjoint = false;
    bool requires_grad = false;
    BackwardFn backward;
};

/// Gradients of a scalar loss keyed by parameter node.
class Gradients {
public:
    const Array& operator[](const Var& param) const;
    const Array& at(NodeId id) const;
    bool contains(NodeId id) const { return grads_.count(id) != 0; }
    std::size_t size() const { return grads_.size(); }

    void set(NodeId id, Array grad) { grads_.insert_or_assign(id, std::move(grad)); }

private:
    std::unordered_map<NodeId, Array> grads_;
};

/// Define-by-run reverse-mode tape. Single owner; not thread-safe.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    Var constant(Array value);
    Var parameter(Array value);

    /// Appends a node. Parents must already be on this tape.
    Var record(const char* op, const std::vector<Var>& parents, Array value, BackwardFn backward);

    const Array& value(NodeId id) const { return nodes_.at(id).value; }
    const Node& node(NodeId id) const { return nodes_.at(id); }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<NodeId>& parameters() const { return params_; }
    bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }

    /// Adjoint of `id`; allocated as zeros on first access.
    Array& adjoint(NodeId id);
    bool has_adjoint(NodeId id) const { return nodes_.at(id).has_adjoint; }
    void accumulate(NodeId id, const Array& grad);

    /// Runs the reverse sweep from a single-element loss. Consumes the tape.
    Gradients backward(const Var& loss);
    bool consumed() const { return consumed_; }

    /// Bytes held by forward values and adjoints; `extra` is op-reported scratch.
    std::size_t live_bytes() const { return live_bytes_; }
    std::size_t peak_bytes() const { return peak_bytes_; }
    void note_extra_bytes(std::size_t bytes);

    void check_owned(const Var& v, const char* op) const;

private:
    void add_bytes(std::size_t bytes);

    std::vector<Node> nodes_;
    std::vector<NodeId> params_;
    bool consumed_ = false;
    std::size_t live_bytes_ = 0;
    std::size_t peak_bytes_ = 0;
};

/// Free-function form of Tape::backward.
Gradients backward(Tape& tape, const Var& loss);

}  // namespace gprl::ad
