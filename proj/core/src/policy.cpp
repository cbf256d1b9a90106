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

#include "gprl/policy.hpp"

#include <cmath>

#include "gprl/errors.hpp"
#include "gprl/io.hpp"
#include "gprl/rng.hpp"

namespace gprl::policy {

std::vector<std::size_t> MlpPolicy::layer_sizes() const {
    std::vector<std::size_t> sizes{input_dim()};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(action_dim);
    return sizes;
}

std::size_t MlpPolicy::parameter_count() const {
    const auto sizes = layer_sizes();
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) count += (sizes[l] + 1) * sizes[l + 1];
    return count;
}

std::vector<Array> MlpPolicy::parameters() const {
    std::vector<Array> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(weights[l]);
        out.push_back(biases[l]);
    }
    return out;
}

void MlpPolicy::set_parameters(const std::vector<Array>& params) {
    if (params.size() != 2 * weights.size()) throw ShapeError("policy: expected " + std::to_string(2 * weights.size()) +
                                                             " parameter arrays, got " + std::to_string(params.size()));
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (params[2 * l].shape() != weights[l].shape() || params[2 * l + 1].shape() != biases[l].shape()) {
            throw ShapeError("policy.set_parameters", ad::to_string(weights[l].shape()),
                             ad::to_string(params[2 * l].shape()));
        }
        weights[l] = params[2 * l];
        biases[l] = params[2 * l + 1];
    }
}

Eigen::VectorXd MlpPolicy::flat() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index k = 0;
    for (const auto& p : parameters()) {
        for (double x : p.values()) v(k++) = x;
    }
    return v;
}

void MlpPolicy::validate() const {
    if (state_dim == 0 || action_dim == 0) throw ConfigError("policy: state and action dimensions must be positive");
    if (goal_conditioned && goal_dim == 0) throw ConfigError("policy: goal-conditioned policy needs a goal dimension");
    const auto sizes = layer_sizes();
    if (weights.size() != sizes.size() - 1 || biases.size() != weights.size()) {
        throw ConfigError("policy: layer count does not match parameter arrays");
    }
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        if (weights[l].shape() != ad::Shape{sizes[l], sizes[l + 1]} || biases[l].shape() != ad::Shape{sizes[l + 1]}) {
            throw ShapeError("policy: layer " + std::to_string(l) + " has weight " + ad::to_string(weights[l].shape()) +
                             ", expected " + ad::to_string({sizes[l], sizes[l + 1]}));
        }
    }
}

MlpPolicy init_params(std::size_t state_dim, std::size_t goal_dim, std::size_t action_dim,
                      const std::vector<std::size_t>& hidden, bool goal_conditioned, std::uint64_t seed,
                      InitScheme scheme) {
    if (state_dim == 0 || action_dim == 0) throw ConfigError("policy: empty layer list");
    for (auto h : hidden) {
        if (h == 0) throw ConfigError("policy: hidden layer sizes must be positive");
    }
    MlpPolicy p;
    p.state_dim = state_dim;
    p.goal_dim = goal_dim;
    p.action_dim = action_dim;
    p.goal_conditioned = goal_conditioned;
    p.hidden = hidden;
    const auto sizes = p.layer_sizes();
    if (sizes.front() == 0) throw ConfigError("policy: empty input layer");
    const CounterRng rng = CounterRng(seed).substream("policy.init");
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const std::size_t fan_in = sizes[l], fan_out = sizes[l + 1];
        Array w({fan_in, fan_out});
        Array b({fan_out}, 0.0);
        const double scale = scheme == InitScheme::He ? std::sqrt(2.0 / static_cast<double>(fan_in)) : 1.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] = scale * rng.normal(static_cast<std::uint32_t>(l), 0, static_cast<std::uint32_t>(i), 0);
        }
        if (scheme == InitScheme::StandardNormal) {
            for (std::size_t i = 0; i < b.size(); ++i) {
                b[i] = rng.normal(static_cast<std::uint32_t>(l), 1, static_cast<std::uint32_t>(i), 0);
            }
        }
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    return p;
}

MlpPolicy zeros_like(const MlpPolicy& policy) {
    MlpPolicy z = policy;
    for (auto& w : z.weights) w = Array(w.shape(), 0.0);
    for (auto& b : z.biases) b = Array(b.shape(), 0.0);
    return z;
}

std::vector<Var> bind(ad::Tape& tape, const MlpPolicy& policy, bool trainable) {
    std::vector<Var> vars;
    for (auto& p : policy.parameters()) vars.push_back(trainable ? tape.parameter(std::move(p)) : tape.constant(std::move(p)));
    return vars;
}

Var act(const MlpPolicy& policy, std::span<const Var> params, const Var& states, const Var& goals) {
    if (params.size() != 2 * policy.weights.size()) throw ShapeError("policy.act: parameter count mismatch");
    const auto& s = states.value().shape();
    if (s.size() != 2 || s[1] != policy.state_dim) {
        throw ShapeError("policy.act", ad::to_string(s), ad::to_string({s.empty() ? 0 : s[0], policy.state_dim}));
    }
    Var h = states;
    if (policy.goal_conditioned) {
        const auto& g = goals.value().shape();
        if (g.size() != 2 || g[0] != s[0] || g[1] != policy.goal_dim) {
            throw ShapeError("policy.act (goals)", ad::to_string(s), ad::to_string(g));
        }
        h = ad::concat({states, goals}, 1);
    }
    for (std::size_t l = 0; l < policy.weights.size(); ++l) {
        h = ad::tanh(ad::matmul(h, params[2 * l]) + params[2 * l + 1]);
    }
    return h;
}

RowMatrix act(const MlpPolicy& policy, const RowMatrix& states, const RowMatrix& goals) {
    ad::Tape tape;
    const auto params = bind(tape, policy, false);
    const Var g = goals.size() > 0 ? tape.constant(Array::from_matrix(goals)) : Var{};
    return act(policy, params, tape.constant(Array::from_matrix(states)), g).value().mat();
}

MlpPolicy fold_goal(const MlpPolicy& policy, const Eigen::VectorXd& goal) {
    policy.validate();
    if (!policy.goal_conditioned) return policy;
    if (static_cast<std::size_t>(goal.size()) != policy.goal_dim) throw ShapeError("fold_goal: goal length mismatch");
    MlpPolicy out = policy;
    out.goal_conditioned = false;
    const RowMatrix w0 = policy.weights[0].mat();
    const auto p = static_cast<Eigen::Index>(policy.state_dim);
    out.weights[0] = Array::from_matrix(w0.topRows(p));
    Eigen::VectorXd bias = policy.biases[0].vec();
    bias += w0.bottomRows(w0.rows() - p).transpose() * goal;
    out.biases[0] = Array::from_vector(bias);
    return out;
}

namespace {

constexpr const char* kPolicyKind = "mlp_policy";

}  // namespace

void save_policy(const std::filesystem::path& path, const PolicyBundle& bundle) {
    const auto& p = bundle.policy;
    p.validate();
    io::Container c(kPolicyKind);
    c.put("state_dim", static_cast<std::int64_t>(p.state_dim));
    c.put("goal_dim", static_cast<std::int64_t>(p.goal_dim));
    c.put("action_dim", static_cast<std::int64_t>(p.action_dim));
    c.put("goal_conditioned", static_cast<std::int64_t>(p.goal_conditioned));
    Array hidden({std::max<std::size_t>(p.hidden.size(), 1)}, 0.0);
    for (std::size_t i = 0; i < p.hidden.size(); ++i) hidden[i] = static_cast<double>(p.hidden[i]);
    c.put("hidden", std::move(hidden));
    c.put("hidden_layers", static_cast<std::int64_t>(p.hidden.size()));
    c.put("parameters", Array::from_vector(p.flat()));
    const auto& nz = bundle.normalizer;
    if (nz.dim() > 0) {
        c.put("normalizer.mean", Array::from_vector(nz.mean));
        c.put("normalizer.std", Array::from_vector(nz.std));
    }
    c.save(path);
}

PolicyBundle load_policy(const std::filesystem::path& path) {
    const io::Container c = io::Container::load(path, kPolicyKind);
    PolicyBundle b;
    const auto layers = static_cast<std::size_t>(c.integer("hidden_layers"));
    std::vector<std::size_t> hidden(layers);
    for (std::size_t i = 0; i < layers; ++i) hidden[i] = static_cast<std::size_t>(c.array("hidden")[i]);
    b.policy = init_params(static_cast<std::size_t>(c.integer("state_dim")), static_cast<std::size_t>(c.integer("goal_dim")),
                           static_cast<std::size_t>(c.integer("action_dim")), hidden, c.integer("goal_conditioned") != 0,
                           0);
    const Array& flat = c.array("parameters");
    if (flat.size() != b.policy.parameter_count()) throw IoError(path.string() + ": parameter count does not match layers");
    std::vector<Array> params = b.policy.parameters();
    std::size_t k = 0;
    for (auto& p : params)
        for (auto& v : p.values()) v = flat[k++];
    b.policy.set_parameters(params);
    if (c.has("normalizer.mean")) {
        b.normalizer.mean = c.array("normalizer.mean").vec();
        b.normalizer.std = c.array("normalizer.std").vec();
        b.normalizer.clamped.assign(b.normalizer.dim(), false);
    }
    return b;
}

}  // namespace gprl::policy
