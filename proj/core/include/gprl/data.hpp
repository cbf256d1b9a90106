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
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "gprl/ad/array.hpp"

namespace gprl::data {

using ad::RowMatrix;

/// Time-stamped rows as logged: one state and the action applied from that
/// instant until the next row.
struct StateLog {
    std::vector<double> t;
    RowMatrix states;   // rows x p
    RowMatrix actions;  // rows x q

    std::size_t rows() const { return t.size(); }
};

/// Transitions (x_k, u_k) -> x_{k+1} sharing one sampling interval.
struct TransitionDataset {
    RowMatrix states;
    RowMatrix actions;
    RowMatrix next_states;
    double dt = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(states.rows()); }
    std::size_t state_dim() const { return static_cast<std::size_t>(states.cols()); }
    std::size_t action_dim() const { return static_cast<std::size_t>(actions.cols()); }

    /// Throws ConfigError if the row counts disagree, n < 2 or dt <= 0.
    void validate() const;
    TransitionDataset subset(const std::vector<std::size_t>& rows) const;
    /// Concatenated (state, action) rows.
    RowMatrix inputs() const;
};

StateLog read_log(const std::filesystem::path& path);
/// Writes `t,x1..xp,u1..uq` with round-trip (17 significant digit) precision.
void write_log(const std::filesystem::path& path, const StateLog& log);

/// Pairs consecutive rows into transitions, skipping pairs across gaps wider
/// than 1.5 dt. `source` names the origin in error messages.
TransitionDataset pair_transitions(const StateLog& log, const std::string& source = "<log>");
TransitionDataset load_csv(const std::filesystem::path& path);

/// Number of gaps (> 1.5 dt) between consecutive rows of a log.
std::size_t count_gaps(const StateLog& log);

/// Per-column statistics of the (state, action) inputs.
struct Normalizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
    std::vector<bool> clamped;

    std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
    bool any_clamped() const;

    RowMatrix normalize(const RowMatrix& rows) const;
    RowMatrix denormalize(const RowMatrix& rows) const;
    Eigen::VectorXd normalize(const Eigen::VectorXd& row) const;
    Eigen::VectorXd denormalize(const Eigen::VectorXd& row) const;

    /// Restriction to a contiguous column block, e.g. the state part.
    Normalizer block(std::size_t begin, std::size_t count) const;
};

inline constexpr double kMinStd = 1e-8;

Normalizer fit_normalizer(const TransitionDataset& dataset);

/// Normalized inputs and per-output scaled difference targets.
struct TrainingPairs {
    RowMatrix inputs;               // n x d
    RowMatrix targets;              // n x p, (x_{k+1} - x_k) / target_scale
    Eigen::VectorXd target_scale;   // p

    std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
};

TrainingPairs build_training_pairs(const TransitionDataset& dataset, const Normalizer& normalizer);

/// Deterministic interleaved split: every k-th transition (k = round(1/fraction))
/// is held out.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> holdout;
};
Split holdout_split(std::size_t n, double fraction);

/// Column-wise extent of the logged states.
struct Bounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};
Bounds state_bounds(const TransitionDataset& dataset);

}  // namespace gprl::data
