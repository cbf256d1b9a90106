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
#include <functional>
#include <string>
#include <vector>

#include "gprl/gp.hpp"
#include "gprl/policy.hpp"
#include "gprl/trainer.hpp"

namespace gprl::bench {

enum class SweepAxis { BatchSize, Horizon, PolicyLayers };

const char* to_string(SweepAxis axis);
SweepAxis parse_axis(const std::string& name);

struct BenchConfig {
    SweepAxis axis = SweepAxis::Horizon;
    /// Swept values; for PolicyLayers a value w means hidden layers [w, w].
    std::vector<std::size_t> values{100, 300, 1000};
    std::size_t repetitions = 3;
    std::size_t warmup = 1;
    /// Timed optimizer iterations per repetition.
    std::size_t iterations = 3;
    /// Fixed counterparts of the swept quantity and everything else.
    trainer::TrainConfig train;
    std::vector<std::size_t> hidden{8, 8};
    bool goal_conditioned = false;
    /// Tape working-set limit in MB; a point whose warmup exceeds it is
    /// recorded as out of memory. 0 disables the check.
    double memory_budget_mb = 0.0;

    void validate() const;
};

struct BenchRecord {
    SweepAxis axis = SweepAxis::Horizon;
    std::size_t value = 0;
    std::size_t rep = 0;
    double iter_ms_mean = 0.0;
    double iter_ms_min = 0.0;
    double iter_ms_max = 0.0;
    double peak_mb = 0.0;
    std::size_t threads = 1;
    bool out_of_memory = false;
};

/// Times full optimizer iterations (sample, rollout, backward, Adam) per
/// axis value. Cache construction is already done when this is called.
std::vector<BenchRecord> run_scaling_sweep(const gp::GpEnsemble& ensemble, const BenchConfig& config,
                                           const std::function<void(const BenchRecord&)>& on_record = {});

/// axis,value,rep,iter_ms_mean,iter_ms_min,iter_ms_max,peak_mb
/// Out-of-memory points carry "oom" in the timing and memory columns.
void write_sweep_csv(const std::filesystem::path& path, const std::vector<BenchRecord>& records);

/// Coefficient of variation of the per-repetition means at one axis value.
double timing_cv(const std::vector<BenchRecord>& records, std::size_t value);

struct LearningMode {
    std::string name;
    std::size_t batch_size = 1;
};

struct ComparisonConfig {
    std::vector<LearningMode> modes{{"batch_100", 100}, {"sequential_1", 1}};
    std::size_t trials = 8;
    /// Training wall time per trial, evaluation excluded.
    double budget_s = 60.0;
    /// Checkpoints spread evenly over the budget.
    std::size_t checkpoints = 10;
    /// Rows of the fixed evaluation batch shared by every mode and trial.
    std::size_t eval_batch = 100;
    trainer::TrainConfig train;
    std::vector<std::size_t> hidden{8, 8};
    bool goal_conditioned = false;
    std::size_t bootstrap_samples = 1000;

    void validate() const;
};

struct CurvePoint {
    double wall_s = 0.0;
    double mean_return = 0.0;  // evaluated policy at this checkpoint
    double best_return = 0.0;  // running maximum of mean_return
    std::size_t updates = 0;
};

struct TrialCurve {
    std::string mode;
    std::size_t trial = 0;
    std::vector<CurvePoint> points;
    double final_return = 0.0;  // evaluated return of the last policy
    double updates_per_s = 0.0;
};

struct BandPoint {
    double wall_s = 0.0;
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct ModeSummary {
    std::string name;
    double final_return_mean = 0.0;
    double updates_per_s_mean = 0.0;
    std::vector<BandPoint> band;  // best-so-far mean and 95% bootstrap band
};

struct LearningComparison {
    std::vector<TrialCurve> curves;
    std::vector<ModeSummary> summaries;
};

/// Mean per-step return of `policy` on a fixed batch and fixed draws.
double evaluate_return(const gp::GpEnsemble& ensemble, const policy::MlpPolicy& policy,
                       const trainer::StartBatch& starts, std::size_t horizon, const CounterRng& rng,
                       const trainer::RewardParams& reward);

/// Trial t of every mode starts from the same policy initialization.
LearningComparison run_learning_comparison(const gp::GpEnsemble& ensemble, const ComparisonConfig& config,
                                           const std::function<void(const TrialCurve&)>& on_trial = {});

/// mode,trial,wall_s,mean_return with best-so-far returns.
void write_learning_csv(const std::filesystem::path& path, const LearningComparison& comparison);
/// mode,wall_s,mean,ci_low,ci_high
void write_band_csv(const std::filesystem::path& path, const LearningComparison& comparison);

/// Percentile bootstrap interval of the mean.
std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& values, std::size_t samples, double level,
                                            const CounterRng& rng);

}  // namespace gprl::bench
