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
#include <functional>
#include <span>
#include <vector>

#include "gprl/data.hpp"
#include "gprl/gp.hpp"
#include "gprl/optim.hpp"
#include "gprl/policy.hpp"
#include "gprl/rng.hpp"

namespace gprl::trainer {

using ad::Array;
using ad::RowMatrix;
using ad::Var;

/// r = exp(-1/(2 sigma_r^2) sum_c Q_cc (s_c - g_c)^2)
struct RewardParams {
    Eigen::VectorXd q_diag;
    double sigma_r = 1.0;

    /// Q = diag{10, 0.1} for the two-state boom, identity otherwise.
    static RewardParams defaults(std::size_t state_dim);
    void validate(std::size_t state_dim) const;
};

/// Per-row reward [b] for states and goals [b, p].
Var reward(const Var& states, const Var& goals, const RewardParams& params);
Eigen::VectorXd reward(const RowMatrix& states, const RowMatrix& goals, const RewardParams& params);

/// Recorded values of a rollout in normalized state coordinates.
struct RolloutBatch {
    std::vector<RowMatrix> states;   // H+1 entries of [b, p]
    std::vector<RowMatrix> actions;  // H entries of [b, q]
    RowMatrix rewards;               // [H+1, b]
    Eigen::VectorXd returns;         // [b]
    double mean_return = 0.0;
};

struct RolloutOptions {
    /// First counter word of every draw; the trainer passes its step index.
    std::uint32_t iteration = 0;
    /// Global index of the first row, so a row subset replays its draws.
    std::size_t row_offset = 0;
    /// Divisor of the summed returns in the loss; 0 uses the row count.
    std::size_t loss_rows = 0;
    bool zero_noise = false;
    bool record = false;
};

struct Rollout {
    Var loss;     // -(1/loss_rows) sum_i G_i
    Var returns;  // [b]
    RolloutBatch batch;  // filled when RolloutOptions::record is set
};

/// Batched rollout through the GP ensemble. `s0` and `goals` are normalized
/// states [b, p]; policy actions are physical and normalized before entering
/// the GP. Draw (step k, row i, output m) uses counter (iteration, k, i, m).
Rollout rollout_batch(ad::Tape& tape, const gp::GpEnsemble& ensemble, const policy::MlpPolicy& policy,
                      std::span<const Var> params, const RowMatrix& s0, const RowMatrix& goals, std::size_t horizon,
                      const CounterRng& rng, const RewardParams& reward_params, const RolloutOptions& options = {});

/// Return of one trajectory evaluated off-tape with scalar GP predictions.
double trajectory_return(const gp::GpEnsemble& ensemble, const policy::MlpPolicy& policy,
                         const Eigen::VectorXd& s0, const Eigen::VectorXd& goal, std::size_t horizon,
                         const CounterRng& rng, const RewardParams& reward_params, std::uint32_t iteration,
                         std::size_t row);

enum class SampleMode { Fixed, Uniform };

struct TrainConfig {
    std::size_t batch_size = 100;
    std::size_t horizon = 300;
    double learning_rate = 1e-2;
    std::size_t max_steps = 100;
    std::uint64_t seed = 0;
    SampleMode init_mode = SampleMode::Fixed;
    SampleMode goal_mode = SampleMode::Fixed;
    Eigen::VectorXd init_state;  // raw units, fixed mode
    Eigen::VectorXd goal;        // raw units, fixed mode
    data::Bounds init_bounds;    // raw units, uniform mode
    data::Bounds goal_bounds;    // raw units, uniform mode
    /// Rows per rollout chunk; 0 runs the whole batch on one tape.
    std::size_t chunk_size = 0;
    std::size_t threads = 1;
    std::size_t early_stop_window = 10;
    double early_stop_tolerance = 1e-5;
    RewardParams reward;

    void validate(std::size_t state_dim) const;
};

struct TrainLogEntry {
    std::size_t step = 0;
    double wall_ms = 0.0;
    double mean_return = 0.0;  // batch mean of G / (H + 1)
    double grad_norm = 0.0;
    double loss = 0.0;
};

/// Normalized initial states and goals for one iteration.
struct StartBatch {
    RowMatrix states;
    RowMatrix goals;
};
StartBatch sample_starts(const gp::GpEnsemble& ensemble, const TrainConfig& config, std::uint32_t iteration);

struct GradientResult {
    std::vector<Array> grads;
    double loss = 0.0;
    double mean_return = 0.0;  // per step
    std::size_t peak_bytes = 0;
};

/// Loss and policy gradient summed over row chunks in a fixed order.
GradientResult policy_gradient(const gp::GpEnsemble& ensemble, const policy::MlpPolicy& policy,
                               const StartBatch& starts, const TrainConfig& config, std::uint32_t iteration);

/// One Adam iteration at a time; owns the policy while training.
class PolicyTrainer {
public:
    PolicyTrainer(const gp::GpEnsemble& ensemble, policy::MlpPolicy initial, TrainConfig config);

    TrainLogEntry step();
    /// Moving-average rule over two consecutive windows of mean returns.
    bool converged() const;

    const policy::MlpPolicy& policy() const { return policy_; }
    std::size_t steps() const { return steps_; }
    std::size_t skipped_updates() const { return adam_.skipped; }
    std::size_t last_peak_bytes() const { return last_peak_bytes_; }

private:
    const gp::GpEnsemble& ensemble_;
    policy::MlpPolicy policy_;
    TrainConfig config_;
    AdamState adam_;
    std::vector<double> returns_;
    std::size_t steps_ = 0;
    std::size_t last_peak_bytes_ = 0;
};

struct TrainResult {
    policy::MlpPolicy policy;
    std::vector<TrainLogEntry> log;
    bool early_stopped = false;
    std::size_t skipped_updates = 0;
};

/// Runs up to max_steps iterations; `on_step` sees every log entry as it is
/// produced (also before an exception propagates).
TrainResult train_policy(const gp::GpEnsemble& ensemble, const policy::MlpPolicy& initial, const TrainConfig& config,
                         const std::function<void(const TrainLogEntry&)>& on_step = {});

}  // namespace gprl::trainer
