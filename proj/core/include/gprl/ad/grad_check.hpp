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

#include <functional>
#include <span>
#include <vector>

#include "gprl/ad/tape.hpp"

namespace gprl::ad {

/// Builds a scalar loss on `tape` from parameter variables bound in the same
/// order as the arrays handed to grad_check.
using LossBuilder = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_index = 0;
    double autodiff = 0.0;
    double finite_difference = 0.0;
};

/// Compares reverse-mode gradients with central differences. The error of one
/// entry is |ad - fd| / max(1, |fd|); the maximum over all entries is reported.
GradCheckResult grad_check(const LossBuilder& loss, const std::vector<Array>& params, double step = 1e-6);

/// Evaluates the loss at `params` without keeping the tape.
double evaluate(const LossBuilder& loss, const std::vector<Array>& params);

}  // namespace gprl::ad
