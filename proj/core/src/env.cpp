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

#include "gprl/env.hpp"

#include <algorithm>
#include <cmath>

#include "gprl/errors.hpp"

namespace gprl::env {

using ad::RowMatrix;

void BoomParams::validate() const {
    if (!(dt > 0.0)) throw ConfigError("boom: dt must be positive");
    if (!(deadband >= 0.0 && deadband < 0.5)) throw ConfigError("boom: deadband must lie in [0, 0.5)");
    if (!(angle_min < angle_max)) throw ConfigError("boom: angle limits must be ordered");
    if (!(rate_limit > 0.0)) throw ConfigError("boom: rate limit must be positive");
    if (noise_angle < 0.0 || noise_rate < 0.0 || damping < 0.0) throw ConfigError("boom: negative noise or damping");
}

double deadband(double u, double width) {
    const double a = std::abs(u);
    if (a <= width) return 0.0;
    return std::copysign((a - width) / (1.0 - width), u);
}

StepResult step(const PlantState& state, double u, const BoomParams& params, const CounterRng& rng,
                std::uint64_t tick) {
    u = std::clamp(u, -1.0, 1.0);
    const double max_change = params.rate_limit * params.dt;
    const double applied = std::clamp(u, state.applied - max_change, state.applied + max_change);
    const double accel = params.gain * deadband(applied, params.deadband) - params.damping * state.phidot -
                         params.gravity * std::cos(state.phi);
    StepResult r;
    r.next.applied = applied;
    r.next.phidot = state.phidot + params.dt * accel;
    r.next.phi = state.phi + params.dt * r.next.phidot;
    if (r.next.phi <= params.angle_min || r.next.phi >= params.angle_max) {
        r.next.phi = std::clamp(r.next.phi, params.angle_min, params.angle_max);
        r.next.phidot = 0.0;
    }
    const auto lo = static_cast<std::uint32_t>(tick), hi = static_cast<std::uint32_t>(tick >> 32);
    r.observation << r.next.phi + params.noise_angle * rng.normal(lo, hi, 0, 0),
        r.next.phidot + params.noise_rate * rng.normal(lo, hi, 1, 0);
    return r;
}

Excitation parse_excitation(const std::string& name) {
    if (name == "manual_profile") return Excitation::ManualProfile;
    if (name == "random_walk") return Excitation::RandomWalk;
    throw ConfigError("unknown excitation '" + name + "' (expected manual_profile or random_walk)");
}

namespace {

// Triangle wave between lo and hi at `speed` rad/s, starting at lo.
double triangle(double t, double lo, double hi, double speed) {
    const double span = hi - lo;
    const double period = 2.0 * span / speed;
    const double phase = std::fmod(t, period) * speed;
    return phase <= span ? lo + phase : hi - (phase - span);
}

}  // namespace

Collection collect_excitation_data(const BoomParams& params, double duration, Excitation excitation,
                                   std::uint64_t seed) {
    params.validate();
    if (!(duration >= 10.0 * params.dt)) throw ConfigError("collect: duration must cover at least 10 steps");
    const auto steps = static_cast<std::size_t>(std::llround(duration / params.dt));
    const CounterRng root(seed);
    const CounterRng noise = root.substream("env.noise");
    const CounterRng drive = root.substream("env.excitation");

    Collection out;
    // Reference kept clear of the hard stops.
    const double margin = 0.15;
    out.commanded_min = params.angle_min + margin;
    out.commanded_max = params.angle_max - margin;
    PlantState state;
    state.phi = out.commanded_min;
    Eigen::Vector2d obs(state.phi, 0.0);

    const std::size_t hold = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.5 / params.dt)));
    double dither = 0.0;
    double walk = 0.0;
    out.log.t.resize(steps + 1);
    out.log.states.resize(static_cast<Eigen::Index>(steps + 1), 2);
    out.log.actions.resize(static_cast<Eigen::Index>(steps + 1), 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * params.dt;
        double u;
        if (excitation == Excitation::ManualProfile) {
            // An operator tracking a slow and then a faster raise/lower cycle.
            const double speed = t < duration / 2.0 ? 0.12 : 0.35;
            const double t_local = t < duration / 2.0 ? t : t - duration / 2.0;
            const double ref = triangle(t_local, out.commanded_min, out.commanded_max, speed);
            if (k % hold == 0) dither = 0.6 * (2.0 * drive.uniform(static_cast<std::uint32_t>(k), 0, 0, 0) - 1.0);
            u = 2.5 * (ref - obs(0)) - 0.3 * obs(1) + 0.5 * std::cos(obs(0)) + dither;
        } else {
            walk = 0.9 * walk + 0.35 * drive.normal(static_cast<std::uint32_t>(k), 1, 0, 0);
            // Pull back from the stops so the walk keeps exploring the interior.
            const double centre = 0.5 * (out.commanded_min + out.commanded_max);
            u = walk - 1.5 * (obs(0) - centre) * (std::abs(obs(0) - centre) > 0.6 ? 1.0 : 0.0);
        }
        u = std::clamp(u, -1.0, 1.0);
        out.log.t[k] = t;
        out.log.states.row(static_cast<Eigen::Index>(k)) = obs.transpose();
        out.log.actions(static_cast<Eigen::Index>(k), 0) = u;
        const StepResult r = step(state, u, params, noise, k);
        state = r.next;
        obs = r.observation;
    }
    out.dataset = data::pair_transitions(out.log, "collect");
    const double lo = out.log.states.col(0).minCoeff(), hi = out.log.states.col(0).maxCoeff();
    const double visited = std::min(hi, out.commanded_max) - std::max(lo, out.commanded_min);
    out.coverage = std::max(0.0, visited) / (out.commanded_max - out.commanded_min);
    return out;
}

Evaluation evaluate_policy(const BoomParams& params, const policy::PolicyBundle& bundle,
                           const std::vector<double>& goal_phis, const EvalConfig& config) {
    params.validate();
    const auto& pol = bundle.policy;
    pol.validate();
    if (pol.state_dim != 2 || pol.action_dim != 1) {
        throw ShapeError("evaluate_policy: policy maps " + std::to_string(pol.state_dim) + " states to " +
                         std::to_string(pol.action_dim) + " actions, plant has 2 states and 1 action");
    }
    if (bundle.normalizer.dim() != pol.state_dim + pol.action_dim) {
        throw ShapeError("evaluate_policy: normalizer has " + std::to_string(bundle.normalizer.dim()) +
                         " columns, policy expects " + std::to_string(pol.state_dim + pol.action_dim));
    }
    if (goal_phis.empty()) throw ConfigError("evaluate_policy: no goals");
    const data::Normalizer state_norm = bundle.normalizer.block(0, pol.state_dim);
    const CounterRng noise = CounterRng(config.seed).substream("eval.noise");

    Evaluation ev;
    PlantState state = config.initial;
    Eigen::Vector2d obs(state.phi, state.phidot);
    std::uint64_t tick = 0;
    for (double goal : goal_phis) {
        Eigen::Vector2d g(goal, 0.0);
        const RowMatrix g_norm = state_norm.normalize(Eigen::VectorXd(g)).transpose();
        // A fixed goal lets the conditioned network collapse to a state-only one.
        const policy::MlpPolicy folded = policy::fold_goal(pol, g_norm.row(0).transpose());
        const double start_phi = state.phi;
        std::vector<double> phis;
        phis.reserve(config.steps_per_goal);
        for (std::size_t k = 0; k < config.steps_per_goal; ++k, ++tick) {
            const RowMatrix s_norm = state_norm.normalize(Eigen::VectorXd(obs)).transpose();
            const double u = policy::act(folded, s_norm, RowMatrix())(0, 0);
            ev.trajectory.push_back({static_cast<double>(tick) * params.dt, obs(0), obs(1), u, goal});
            const StepResult r = step(state, u, params, noise, tick);
            state = r.next;
            obs = r.observation;
            phis.push_back(state.phi);
        }
        GoalMetrics m;
        m.goal_phi = goal;
        std::size_t last_out = phis.size();
        for (std::size_t k = phis.size(); k-- > 0;) {
            if (std::abs(phis[k] - goal) > config.settle_tolerance) {
                last_out = k;
                break;
            }
        }
        m.settled = last_out != phis.size() - 1;
        m.settling_time = last_out == phis.size() ? 0.0 : static_cast<double>(last_out + 1) * params.dt;
        const std::size_t tail = std::max<std::size_t>(1, phis.size() / 5);
        double err = 0.0;
        for (std::size_t k = phis.size() - tail; k < phis.size(); ++k) err += std::abs(phis[k] - goal);
        m.steady_state_error = err / static_cast<double>(tail);
        m.final_error = std::abs(phis.back() - goal);
        const double dir = goal >= start_phi ? 1.0 : -1.0;
        for (double phi : phis) m.overshoot = std::max(m.overshoot, dir * (phi - goal));
        ev.goals.push_back(m);
    }
    return ev;
}

}  // namespace gprl::env
