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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gprl/ad/ops.hpp"
#include "gprl/data.hpp"

namespace gprl::policy {

using ad::Array;
using ad::RowMatrix;
using ad::Var;

enum class InitScheme { He, StandardNormal };

/// Feedforward tanh network mapping (normalized state, normalized goal) to
/// actions in [-1, 1]. Weights are [fan_in, fan_out], biases [fan_out].
struct MlpPolicy {
    std::size_t state_dim = 0;
    std::size_t goal_dim = 0;
    std::size_t action_dim = 0;
    bool goal_conditioned = false;
    std::vector<std::size_t> hidden;
    std::vector<Array> weights;
    std::vector<Array> biases;

    std::size_t input_dim() const { return state_dim + (goal_conditioned ? goal_dim : 0); }
    /// input, hidden..., output
    std::vector<std::size_t> layer_sizes() const;
    std::size_t parameter_count() const;

    /// Interleaved [W0, b0, W1, b1, ...].
    std::vector<Array> parameters() const;
    void set_parameters(const std::vector<Array>& params);
    Eigen::VectorXd flat() const;
    void validate() const;
};

MlpPolicy init_params(std::size_t state_dim, std::size_t goal_dim, std::size_t action_dim,
                      const std::vector<std::size_t>& hidden, bool goal_conditioned, std::uint64_t seed,
                      InitScheme scheme = InitScheme::He);

/// Same architecture with every weight and bias set to zero.
MlpPolicy zeros_like(const MlpPolicy& policy);

/// Records the policy parameters on `tape` (as parameters when `trainable`).
std::vector<Var> bind(ad::Tape& tape, const MlpPolicy& policy, bool trainable = true);

/// Actions [b, q] for states [b, p] and goals [b, p_goal]; goals are ignored
/// unless the policy is goal conditioned.
Var act(const MlpPolicy& policy, std::span<const Var> params, const Var& states, const Var& goals);

/// Off-tape evaluation through the same ops.
RowMatrix act(const MlpPolicy& policy, const RowMatrix& states, const RowMatrix& goals);

/// Equivalent non-conditioned policy for a fixed goal: the goal columns of the
/// first layer are folded into its bias.
MlpPolicy fold_goal(const MlpPolicy& policy, const Eigen::VectorXd& goal);

/// A policy together with the normalizer its inputs were trained against.
struct PolicyBundle {
    MlpPolicy policy;
    data::Normalizer normalizer;  // over (state, action) columns
};

void save_policy(const std::filesystem::path& path, const PolicyBundle& bundle);
PolicyBundle load_policy(const std::filesystem::path& path);

}  // namespace gprl::policy
