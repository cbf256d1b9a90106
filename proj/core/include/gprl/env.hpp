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
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gprl/data.hpp"
#include "gprl/policy.hpp"
#include "gprl/rng.hpp"

namespace gprl::env {

/// Single-joint boom driven through a valve with deadband.
struct BoomParams {
    double gain = 2.0;        // (rad/s^2) per unit action
    double damping = 1.5;     // 1/s
    double deadband = 0.1;    // fraction of the action range
    double rate_limit = std::numeric_limits<double>::infinity();  // action units/s
    double gravity = 0.5;     // rad/s^2 at horizontal
    double angle_min = -1.2;  // rad
    double angle_max = 0.9;   // rad
    double noise_angle = 0.002;  // rad
    double noise_rate = 0.01;    // rad/s
    double dt = 0.05;            // s

    void validate() const;
};

struct PlantState {
    double phi = 0.0;
    double phidot = 0.0;
    double applied = 0.0;  // last action after rate limiting
};

/// sign(u) (|u| - db) / (1 - db) outside the deadband, zero inside.
double deadband(double u, double width);

struct StepResult {
    PlantState next;
    Eigen::Vector2d observation;  // noisy (phi, phidot)
};

/// One semi-implicit Euler step. Observation noise is drawn from `rng` at
/// counter `tick`.
StepResult step(const PlantState& state, double u, const BoomParams& params, const CounterRng& rng,
                std::uint64_t tick);

enum class Excitation { ManualProfile, RandomWalk };
Excitation parse_excitation(const std::string& name);

struct Collection {
    data::StateLog log;
    data::TransitionDataset dataset;
    double commanded_min = 0.0;
    double commanded_max = 0.0;
    /// Fraction of [commanded_min, commanded_max] visited by the logged angle.
    double coverage = 0.0;
};

/// Logs duration / dt + 1 rows, hence duration / dt transitions.
Collection collect_excitation_data(const BoomParams& params, double duration, Excitation excitation,
                                   std::uint64_t seed);

struct GoalMetrics {
    double goal_phi = 0.0;
    double settling_time = 0.0;  // s; the segment length if never settled
    double steady_state_error = 0.0;  // mean |phi - goal| over the last 20% of the segment
    double final_error = 0.0;
    double overshoot = 0.0;  // rad past the goal in the direction of travel
    bool settled = false;
};

struct TrajectoryRow {
    double t, phi, phidot, u, goal_phi;
};

struct Evaluation {
    std::vector<GoalMetrics> goals;
    std::vector<TrajectoryRow> trajectory;
};

struct EvalConfig {
    std::size_t steps_per_goal = 300;
    double settle_tolerance = 0.05;  // rad
    PlantState initial;
    std::uint64_t seed = 0;
};

/// Closed loop on the simulated plant. Observations are normalized with the
/// state block of `bundle.normalizer`; goals are (phi_goal, 0). Goals are
/// visited in order, carrying the plant state across segments.
Evaluation evaluate_policy(const BoomParams& params, const policy::PolicyBundle& bundle,
                           const std::vector<double>& goal_phis, const EvalConfig& config);

}  // namespace gprl::env
