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

#include "gprl/optim.hpp"

#include <cmath>

#include "gprl/errors.hpp"

namespace gprl {

AdamState AdamState::for_params(const std::vector<ad::Array>& params) {
    AdamState s;
    for (const auto& p : params) {
        s.first_moment.emplace_back(p.shape(), 0.0);
        s.second_moment.emplace_back(p.shape(), 0.0);
    }
    return s;
}

bool adam_step(AdamState& state, std::vector<ad::Array>& params, const std::vector<ad::Array>& grads,
               double learning_rate) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw ShapeError("adam_step: parameter, gradient and moment counts differ");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].shape() != grads[k].shape() || params[k].shape() != state.first_moment[k].shape()) {
            throw ShapeError("adam_step", ad::to_string(params[k].shape()), ad::to_string(grads[k].shape()));
        }
    }
    for (const auto& g : grads) {
        if (!g.all_finite()) {
            ++state.skipped;
            if (++state.consecutive_skips >= kMaxConsecutiveSkips) {
                throw NumericalError("adam_step: " + std::to_string(state.consecutive_skips) +
                                     " consecutive non-finite gradients");
            }
            return false;
        }
    }
    state.consecutive_skips = 0;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto m = state.first_moment[k].vec();
        auto v = state.second_moment[k].vec();
        const auto g = grads[k].vec();
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseAbs2();
        params[k].vec().array() -=
            learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
    }
    return true;
}

}  // namespace gprl
