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

#include "gprl/ad/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace gprl::ad {
namespace {

std::vector<Var> bind(Tape& tape, const std::vector<Array>& params) {
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const auto& p : params) vars.push_back(tape.parameter(p));
    return vars;
}

double checked_value(const Var& v) {
    const double x = v.value().item();
    if (!std::isfinite(x)) throw NumericalError("grad_check: loss is not finite");
    return x;
}

}  // namespace

double evaluate(const LossBuilder& loss, const std::vector<Array>& params) {
    Tape tape;
    auto vars = bind(tape, params);
    return checked_value(loss(tape, vars));
}

GradCheckResult grad_check(const LossBuilder& loss, const std::vector<Array>& params, double step) {
    if (!(step > 0.0)) throw Error("grad_check: step must be positive");
    Tape tape;
    auto vars = bind(tape, params);
    Var out = loss(tape, vars);
    checked_value(out);
    Gradients grads = tape.backward(out);

    GradCheckResult result;
    std::vector<Array> probe = params;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Array& g = grads[vars[k]];
        for (std::size_t i = 0; i < params[k].size(); ++i) {
            const double x0 = params[k][i];
            probe[k][i] = x0 + step;
            const double up = evaluate(loss, probe);
            probe[k][i] = x0 - step;
            const double down = evaluate(loss, probe);
            probe[k][i] = x0;
            const double fd = (up - down) / (2.0 * step);
            const double err = std::abs(g[i] - fd) / std::max(1.0, std::abs(fd));
            if (err >= result.max_rel_error) {
                result = {err, k, i, g[i], fd};
            }
        }
    }
    return result;
}

}  // namespace gprl::ad
