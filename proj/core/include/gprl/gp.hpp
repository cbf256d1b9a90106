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

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "gprl/ad/ops.hpp"
#include "gprl/data.hpp"

namespace gprl::gp {

using ad::RowMatrix;

inline const double kLogNoiseFloor = std::log(1e-4);

/// SE-ARD hyperparameters, stored as logs so every exponentiated value is
/// positive.
struct Hyperparams {
    Eigen::VectorXd log_lengthscales;
    double log_signal = 0.0;
    double log_noise = std::log(0.1);

    /// Unit lengthscales and signal, noise 0.1.
    static Hyperparams defaults(std::size_t input_dim);

    std::size_t input_dim() const { return static_cast<std::size_t>(log_lengthscales.size()); }
    double signal_variance() const { return std::exp(2.0 * log_signal); }
    double noise_variance() const { return std::exp(2.0 * log_noise); }
    /// 1 / l_c^2 per input column.
    Eigen::VectorXd inverse_squared_lengthscales() const { return (-2.0 * log_lengthscales).array().exp(); }

    void clamp_noise();

    /// [log l_1..log l_d, log alpha, log sigma_n]
    Eigen::VectorXd flat() const;
    static Hyperparams from_flat(const Eigen::VectorXd& v);
};

/// k(a, b) = alpha^2 exp(-1/2 sum_c (a_c - b_c)^2 / l_c^2), evaluated entry by entry.
RowMatrix kernel_matrix(const RowMatrix& a, const RowMatrix& b, const Hyperparams& hp);

/// Jitter multipliers (times mean diagonal) tried after a plain factorization fails.
inline constexpr double kJitterLadder[] = {1e-8, 1e-6, 1e-4};

/// Cholesky of K + sigma_n^2 I with jitter escalation.
struct Factorization {
    RowMatrix lower;
    double jitter = 0.0;  // absolute value added to the diagonal
};
Factorization factorize(const RowMatrix& x, const Hyperparams& hp);

double log_marginal_likelihood(const RowMatrix& x, const Eigen::VectorXd& y, const Hyperparams& hp);

/// Hyperparameters bound as parameters on a tape.
struct HyperVars {
    ad::Var log_lengthscales;  // [d]
    ad::Var log_signal;        // []
    ad::Var log_noise;         // []
};
HyperVars bind(ad::Tape& tape, const Hyperparams& hp);

/// Differentiable log marginal likelihood built from diff-engine ops.
ad::Var log_marginal_likelihood(ad::Tape& tape, const RowMatrix& x, const Eigen::VectorXd& y, const HyperVars& hv);

/// Gradient over the flat log-parameter vector (see Hyperparams::flat).
Eigen::VectorXd autodiff_likelihood_gradient(const RowMatrix& x, const Eigen::VectorXd& y, const Hyperparams& hp);
/// Closed-form trace gradient 1/2 tr((a a^T - K^-1) dK), a = K^-1 y.
Eigen::VectorXd analytic_likelihood_gradient(const RowMatrix& x, const Eigen::VectorXd& y, const Hyperparams& hp);

struct FitConfig {
    std::size_t max_steps = 500;
    double learning_rate = 0.05;
    double grad_tolerance = 1e-4;
    double relative_tolerance = 1e-9;
    std::size_t tolerance_window = 10;
    std::size_t max_halvings = 5;
    /// Rows used for the likelihood; 0 uses all. Larger sets are thinned by an
    /// even stride.
    std::size_t max_points = 300;
};

struct FitReport {
    double initial_log_likelihood = 0.0;
    double final_log_likelihood = 0.0;
    std::size_t steps = 0;
    std::size_t halvings = 0;
    std::size_t points = 0;
    bool converged = false;
};

/// Adam on the log-parameters maximizing the marginal likelihood. Returns the
/// best iterate seen.
Hyperparams fit_hyperparams(const RowMatrix& x, const Eigen::VectorXd& y, const Hyperparams& init,
                            const FitConfig& config, FitReport* report = nullptr);

/// Evenly strided row subset of size min(n, max_points).
std::vector<std::size_t> thin_rows(std::size_t n, std::size_t max_points);

struct GpModel {
    std::shared_ptr<const RowMatrix> inputs;
    Eigen::VectorXd targets;
    Hyperparams hyperparams;
    bool fitted = false;

    std::size_t size() const { return static_cast<std::size_t>(targets.size()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(inputs->cols()); }
    void validate() const;
};

enum class VariancePath { Exact, LowRank };

struct CacheConfig {
    /// Rank of the variance root; 0 skips it, values >= n give full rank.
    std::size_t root_rank = 0;
};

struct PredictiveCache {
    Eigen::VectorXd alpha;  // (K + sigma_n^2 I)^-1 y
    RowMatrix lower;        // Cholesky factor; may be empty after loading
    RowMatrix root;         // n x r, root root^T ~ (K + sigma_n^2 I)^-1
    double jitter = 0.0;

    bool has_root() const { return root.size() > 0; }
    bool has_lower() const { return lower.size() > 0; }
};

PredictiveCache build_cache(const GpModel& model, const CacheConfig& config = {});

/// Lanczos-based rank-r root of the inverse kernel matrix (LOVE-style).
RowMatrix lanczos_inverse_root(const RowMatrix& k_hat, std::size_t rank);

struct Prediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

inline constexpr double kMinVariance = 1e-12;

/// Posterior moments at the rows of `xstar`. Rows are evaluated one at a
/// time, so batched and sequential calls agree bit for bit.
Prediction predict(const PredictiveCache& cache, const GpModel& model, const RowMatrix& xstar,
                   VariancePath path = VariancePath::Exact);

/// Posterior moments by refactorizing from scratch; test oracle for caches.
Prediction predict_direct(const GpModel& model, const RowMatrix& xstar);

/// On-tape posterior moments: returns [b, 2] holding (mean, variance) for
/// the rows of `xstar`, differentiable with respect to `xstar`. `cache` and
/// `model` must outlive the tape.
ad::Var predict_on_tape(const PredictiveCache& cache, const GpModel& model, const ad::Var& xstar, VariancePath path);

/// p independent GPs over shared normalized (state, action) inputs.
struct GpEnsemble {
    std::shared_ptr<const RowMatrix> inputs;
    std::vector<GpModel> members;
    std::vector<PredictiveCache> caches;
    Eigen::VectorXd target_scale;
    data::Normalizer normalizer;
    std::size_t state_dim = 0;
    std::size_t action_dim = 0;
    VariancePath variance_path = VariancePath::Exact;

    std::size_t outputs() const { return members.size(); }
    void validate() const;

    /// One-step raw state differences (posterior mean) for raw states/actions.
    RowMatrix predict_delta_mean(const RowMatrix& states, const RowMatrix& actions) const;
};

struct EnsembleConfig {
    FitConfig fit;
    CacheConfig cache{64};
    VariancePath variance_path = VariancePath::LowRank;
};

struct EnsembleReport {
    std::vector<FitReport> fits;
    std::vector<double> fit_seconds;
    std::vector<double> cache_seconds;
};

GpEnsemble fit_ensemble(const data::TrainingPairs& pairs, const data::Normalizer& normalizer, std::size_t state_dim,
                        std::size_t action_dim, const EnsembleConfig& config, EnsembleReport* report = nullptr);

/// Rebuilds every member cache (e.g. after loading a model without factors).
void rebuild_caches(GpEnsemble& ensemble, const CacheConfig& config);

/// Same hyperparameters and normalization, conditioned on a subset of the
/// training rows.
GpEnsemble restrict_ensemble(const GpEnsemble& ensemble, const std::vector<std::size_t>& rows,
                             const CacheConfig& config);

/// Per-state RMSE of the one-step mean prediction on the held-out rows of
/// `dataset` (the data the ensemble was built from), conditioning only on the
/// remaining rows. Raw units.
Eigen::VectorXd holdout_rmse(const GpEnsemble& ensemble, const data::TransitionDataset& dataset, double fraction);

/// Reparameterized one-step sample: for output m and row i,
/// delta = (mean + sqrt(var) * eps) * target_scale_m. `states` and `actions`
/// are normalized GP inputs ([b,p], [b,q]); `eps` is [b,p]. The result is in
/// raw state units.
ad::Var sample_next_delta(const GpEnsemble& ensemble, const ad::Var& states, const ad::Var& actions,
                          const ad::Array& eps);

void save_ensemble(const std::filesystem::path& path, const GpEnsemble& ensemble, bool store_factors = false);
GpEnsemble load_ensemble(const std::filesystem::path& path);

}  // namespace gprl::gp
