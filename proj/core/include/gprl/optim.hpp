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

#include "gprl/ad/array.hpp"

namespace gprl {

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<ad::Array> first_moment;
    std::vector<ad::Array> second_moment;
    std::size_t step = 0;
    std::size_t skipped = 0;
    std::size_t consecutive_skips = 0;

    static AdamState for_params(const std::vector<ad::Array>& params);
};

inline constexpr std::size_t kMaxConsecutiveSkips = 10;

/// Bias-corrected Adam update in place. A non-finite gradient skips the
/// update and returns false; the tenth consecutive skip throws NumericalError.
bool adam_step(AdamState& state, std::vector<ad::Array>& params, const std::vector<ad::Array>& grads,
               double learning_rate);

}  // namespace gprl
