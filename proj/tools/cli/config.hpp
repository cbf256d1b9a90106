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
#include <string>
#include <vector>

#include "gprl/bench.hpp"
#include "gprl/env.hpp"
#include "gprl/gp.hpp"
#include "gprl/trainer.hpp"

namespace gprl::cli {

/// Every setting of a pipeline run. Keys in the config file are
/// `section.name`; see config.example for the full list and defaults.
struct RunConfig {
    std::uint64_t seed = 1;

    std::string data_file = "dataset.csv";
    std::string model_file = "model.gprl";
    std::string policy_file = "policy.gprl";

    double collect_duration = 110.0;
    env::Excitation excitation = env::Excitation::ManualProfile;
    env::BoomParams plant;

    gp::FitConfig fit;
    std::size_t root_rank = 64;
    gp::VariancePath variance_path = gp::VariancePath::LowRank;
    double holdout_fraction = 0.2;
    double gate_factor = 3.0;

    std::size_t batch_size = 100;
    std::size_t horizon = 300;
    double learning_rate = 1e-2;
    std::size_t max_steps = 100;
    std::vector<std::size_t> hidden{8, 8};
    bool goal_conditioned = false;
    policy::InitScheme init_scheme = policy::InitScheme::He;
    double init_phi = -1.0;
    double init_phidot = 0.0;
    double goal_phi = 0.0;
    double goal_phidot = 0.0;
    std::size_t chunk_size = 0;
    std::size_t threads = 1;
    std::size_t early_stop_window = 10;
    double early_stop_tolerance = 1e-5;
    std::vector<double> reward_q{10.0, 0.1};
    double reward_sigma = 1.0;

    std::vector<double> eval_goals{-0.6, 0.3, -0.2, 0.6};
    std::size_t eval_steps_per_goal = 300;
    std::size_t eval_episodes = 20;
    double settle_tolerance = 0.05;
    double eval_initial_phi = -1.0;

    std::vector<std::string> bench_runs{"sweep", "learning"};
    bench::SweepAxis bench_axis = bench::SweepAxis::Horizon;
    std::vector<std::size_t> bench_values{100, 300, 1000};
    std::size_t bench_repetitions = 3;
    std::size_t bench_warmup = 1;
    std::size_t bench_iterations = 3;
    double bench_memory_budget_mb = 0.0;
    double bench_budget_s = 60.0;
    std::size_t bench_trials = 8;
    std::size_t bench_checkpoints = 10;
    std::size_t bench_eval_batch = 100;

    /// Applies one `key = value` setting; unknown keys are a ConfigError.
    void set(const std::string& key, const std::string& value);
    /// Reads a config file on top of the current values.
    void load(const std::filesystem::path& path);
    /// All known keys, in file order.
    static std::vector<std::string> keys();

    void validate() const;

    /// Seed of a named pipeline stage, derived from the master seed.
    std::uint64_t stage_seed(const char* stage) const;
};

}  // namespace gprl::cli
