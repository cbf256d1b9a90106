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

#include "gprl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "gprl/errors.hpp"

namespace gprl::trainer {

RewardParams RewardParams::defaults(std::size_t state_dim) {
    RewardParams r;
    if (state_dim == 2) {
        r.q_diag = Eigen::Vector2d(10.0, 0.1);
    } else {
        r.q_diag = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(state_dim));
    }
    return r;
}

void RewardParams::validate(std::size_t state_dim) const {
    if (static_cast<std::size_t>(q_diag.size()) != state_dim) {
        throw ConfigError("reward: Q has " + std::to_string(q_diag.size()) + " entries, state has " +
                          std::to_string(state_dim));
    }
    if ((q_diag.array() < 0.0).any() || !(q_diag.array() > 0.0).any()) {
        throw ConfigError("reward: Q entries must be >= 0 with at least one positive");
    }
    if (!(sigma_r > 0.0)) throw ConfigError("reward: sigma_r must be positive");
}

Var reward(const Var& states, const Var& goals, const RewardParams& params) {
    const auto& s = states.value().shape();
    if (s != goals.value().shape() || s.size() != 2 || s[1] != static_cast<std::size_t>(params.q_diag.size())) {
        throw ShapeError("reward", ad::to_string(s), ad::to_string(goals.value().shape()));
    }
    ad::Tape& tape = *states.tape();
    const Var weighted = ad::square(states - goals) * tape.constant(Array::from_vector(params.q_diag));
    return ad::exp(ad::sum(weighted, 1) * (-0.5 / (params.sigma_r * params.sigma_r)));
}

Eigen::VectorXd reward(const RowMatrix& states, const RowMatrix& goals, const RewardParams& params) {
    ad::Tape tape;
    return reward(tape.constant(Array::from_matrix(states)), tape.constant(Array::from_matrix(goals)), params)
        .value()
        .vec();
}

namespace {

struct RolloutConstants {
    Array action_mean;      // [q]
    Array action_inv_std;   // [q]
    Array state_inv_std;    // [p]
};

RolloutConstants rollout_constants(const gp::GpEnsemble& ens) {
    const auto p = static_cast<Eigen::Index>(ens.state_dim), q = static_cast<Eigen::Index>(ens.action_dim);
    const Eigen::VectorXd mean = ens.normalizer.mean, sd = ens.normalizer.std;
    return {Array::from_vector(mean.tail(q)), Array::from_vector(sd.tail(q).cwiseInverse()),
            Array::from_vector(sd.head(p).cwiseInverse())};
}

void check_inputs(const gp::GpEnsemble& ens, const policy::MlpPolicy& pol, const RowMatrix& s0,
                  const RowMatrix& goals) {
    if (pol.state_dim != ens.state_dim || pol.action_dim != ens.action_dim) {
        throw ShapeError("rollout: policy maps " + std::to_string(pol.state_dim) + " states to " +
                         std::to_string(pol.action_dim) + " actions but the model has " +
                         std::to_string(ens.state_dim) + " states and " + std::to_string(ens.action_dim) +
                         " actions");
    }
    if (static_cast<std::size_t>(s0.cols()) != ens.state_dim || goals.rows() != s0.rows() || goals.cols() != s0.cols()) {
        throw ShapeError("rollout: initial states [" + std::to_string(s0.rows()) + "," + std::to_string(s0.cols()) +
                         "] and goals [" + std::to_string(goals.rows()) + "," + std::to_string(goals.cols()) +
                         "] must both be [b," + std::to_string(ens.state_dim) + "]");
    }
    if (s0.rows() == 0) throw ShapeError("rollout: empty batch");
}

std::uint32_t row_counter(std::size_t row) { return static_cast<std::uint32_t>(row); }

}  // namespace

Rollout rollout_batch(ad::Tape& tape, const gp::GpEnsemble& ensemble, const policy::MlpPolicy& policy,
                      std::span<const Var> params, const RowMatrix& s0, const RowMatrix& goals, std::size_t horizon,
                      const CounterRng& rng, const RewardParams& reward_params, const RolloutOptions& options) {
    check_inputs(ensemble, policy, s0, goals);
    reward_params.validate(ensemble.state_dim);
    const std::size_t b = static_cast<std::size_t>(s0.rows());
    const std::size_t p = ensemble.state_dim;
    const RolloutConstants k = rollout_constants(ensemble);
    const Var action_mean = tape.constant(k.action_mean);
    const Var action_inv_std = tape.constant(k.action_inv_std);
    const Var state_inv_std = tape.constant(k.state_inv_std);
    const Var g = tape.constant(Array::from_matrix(goals));

    Var s = tape.constant(Array::from_matrix(s0));
    Var r = reward(s, g, reward_params);
    Var total = r;
    Rollout out;
    if (options.record) {
        out.batch.states.push_back(s0);
        out.batch.rewards.resize(static_cast<Eigen::Index>(horizon + 1), static_cast<Eigen::Index>(b));
        out.batch.rewards.row(0) = r.value().vec().transpose();
    }
    Array eps({b, p}, 0.0);
    for (std::size_t step = 0; step < horizon; ++step) {
        const Var u = policy::act(policy, params, s, g);
        const Var u_norm = (u - action_mean) * action_inv_std;
        if (!options.zero_noise) {
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t m = 0; m < p; ++m) {
                    eps.at(i, m) = rng.normal(options.iteration, static_cast<std::uint32_t>(step),
                                              row_counter(options.row_offset + i), static_cast<std::uint32_t>(m));
                }
        }
        const Var delta = gp::sample_next_delta(ensemble, s, u_norm, eps);
        s = s + delta * state_inv_std;
        const Array& sv = s.value();
        if (!sv.all_finite()) {
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t m = 0; m < p; ++m) {
                    if (!std::isfinite(sv.at(i, m))) {
                        throw NumericalError("rollout: non-finite state at step " + std::to_string(step + 1) +
                                             ", row " + std::to_string(options.row_offset + i));
                    }
                }
        }
        if (options.record) {
            out.batch.actions.push_back(u.value().mat());
            out.batch.states.push_back(sv.mat());
        }
        r = reward(s, g, reward_params);
        total = total + r;
        if (options.record) {
            out.batch.rewards.row(static_cast<Eigen::Index>(step + 1)) = r.value().vec().transpose();
        }
    }
    const std::size_t rows = options.loss_rows == 0 ? b : options.loss_rows;
    out.returns = total;
    out.loss = ad::sum(total) * (-1.0 / static_cast<double>(rows));
    if (options.record) {
        out.batch.returns = total.value().vec();
        out.batch.mean_return = out.batch.returns.mean();
    }
    return out;
}

double trajectory_return(const gp::GpEnsemble& ensemble, const policy::MlpPolicy& policy,
                         const Eigen::VectorXd& s0, const Eigen::VectorXd& goal, std::size_t horizon,
                         const CounterRng& rng, const RewardParams& reward_params, std::uint32_t iteration,
                         std::size_t row) {
    const RowMatrix g = goal.transpose();
    RowMatrix s = s0.transpose();
    check_inputs(ensemble, policy, s, g);
    const RolloutConstants k = rollout_constants(ensemble);
    const std::size_t p = ensemble.state_dim, q = ensemble.action_dim;
    double total = reward(s, g, reward_params)(0);
    for (std::size_t step = 0; step < horizon; ++step) {
        const RowMatrix u = policy::act(policy, s, g);
        RowMatrix x(1, static_cast<Eigen::Index>(p + q));
        for (std::size_t c = 0; c < p; ++c) x(0, static_cast<Eigen::Index>(c)) = s(0, static_cast<Eigen::Index>(c));
        for (std::size_t c = 0; c < q; ++c) {
            x(0, static_cast<Eigen::Index>(p + c)) = (u(0, static_cast<Eigen::Index>(c)) - k.action_mean[c]) *
                                                     k.action_inv_std[c];
        }
        for (std::size_t m = 0; m < p; ++m) {
            const gp::Prediction pr = gp::predict(ensemble.caches[m], ensemble.members[m], x, ensemble.variance_path);
            const double eps = rng.normal(iteration, static_cast<std::uint32_t>(step), row_counter(row),
                                          static_cast<std::uint32_t>(m));
            const double delta =
                (pr.mean(0) + std::sqrt(pr.variance(0)) * eps) * ensemble.target_scale(static_cast<Eigen::Index>(m));
            s(0, static_cast<Eigen::Index>(m)) += delta * k.state_inv_std[m];
        }
        total += reward(s, g, reward_params)(0);
    }
    return total;
}

void TrainConfig::validate(std::size_t state_dim) const {
    if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
    if (horizon == 0) throw ConfigError("train: horizon must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
    if (threads == 0) throw ConfigError("train: threads must be >= 1");
    auto check_fixed = [state_dim](const Eigen::VectorXd& v, const char* what) {
        if (static_cast<std::size_t>(v.size()) != state_dim) {
            throw ConfigError(std::string("train: fixed ") + what + " needs " + std::to_string(state_dim) + " entries");
        }
    };
    auto check_bounds = [state_dim](const data::Bounds& b, const char* what) {
        if (static_cast<std::size_t>(b.lower.size()) != state_dim || static_cast<std::size_t>(b.upper.size()) != state_dim ||
            (b.lower.array() > b.upper.array()).any()) {
            throw ConfigError(std::string("train: invalid uniform bounds for ") + what);
        }
    };
    if (init_mode == SampleMode::Fixed) check_fixed(init_state, "initial state");
    else check_bounds(init_bounds, "initial states");
    if (goal_mode == SampleMode::Fixed) check_fixed(goal, "goal");
    else check_bounds(goal_bounds, "goals");
    reward.validate(state_dim);
}

StartBatch sample_starts(const gp::GpEnsemble& ensemble, const TrainConfig& config, std::uint32_t iteration) {
    const std::size_t p = ensemble.state_dim, b = config.batch_size;
    const data::Normalizer norm = ensemble.normalizer.block(0, p);
    const CounterRng rng = CounterRng(config.seed).substream("train.starts");
    auto draw = [&](SampleMode mode, const Eigen::VectorXd& fixed, const data::Bounds& bounds, std::uint32_t stream) {
        RowMatrix raw(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(p));
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t c = 0; c < p; ++c) {
                const auto ci = static_cast<Eigen::Index>(c);
                raw(static_cast<Eigen::Index>(i), ci) =
                    mode == SampleMode::Fixed
                        ? fixed(ci)
                        : bounds.lower(ci) + (bounds.upper(ci) - bounds.lower(ci)) *
                                                 rng.uniform(iteration, static_cast<std::uint32_t>(i),
                                                             static_cast<std::uint32_t>(c), stream);
            }
        return norm.normalize(raw);
    };
    return {draw(config.init_mode, config.init_state, config.init_bounds, 0),
            draw(config.goal_mode, config.goal, config.goal_bounds, 1)};
}

GradientResult policy_gradient(const gp::GpEnsemble& ensemble, const policy::MlpPolicy& policy,
                               const StartBatch& starts, const TrainConfig& config, std::uint32_t iteration) {
    const auto b = static_cast<std::size_t>(starts.states.rows());
    const std::size_t chunk = config.chunk_size == 0 ? b : std::min(config.chunk_size, b);
    const std::size_t chunks = (b + chunk - 1) / chunk;
    const CounterRng rng = CounterRng(config.seed).substream("train.eps");

    struct ChunkResult {
        std::vector<Array> grads;
        double loss = 0.0;
        double return_sum = 0.0;
        std::size_t peak = 0;
        std::exception_ptr error;
    };
    std::vector<ChunkResult> results(chunks);
    auto run = [&](std::size_t c) {
        try {
            const std::size_t begin = c * chunk, rows = std::min(chunk, b - begin);
            ad::Tape tape;
            const std::vector<Var> params = policy::bind(tape, policy);
            RolloutOptions opt;
            opt.iteration = iteration;
            opt.row_offset = begin;
            opt.loss_rows = b;
            const Rollout ro = rollout_batch(tape, ensemble, policy, params,
                                             starts.states.middleRows(static_cast<Eigen::Index>(begin),
                                                                      static_cast<Eigen::Index>(rows)),
                                             starts.goals.middleRows(static_cast<Eigen::Index>(begin),
                                                                     static_cast<Eigen::Index>(rows)),
                                             config.horizon, rng, config.reward, opt);
            ChunkResult& res = results[c];
            res.loss = ro.loss.value().item();
            res.return_sum = ro.returns.value().vec().sum();
            auto grads = tape.backward(ro.loss);
            for (const auto& v : params) res.grads.push_back(grads[v]);
            res.peak = tape.peak_bytes();
        } catch (...) {
            results[c].error = std::current_exception();
        }
    };
    const std::size_t workers = std::min(config.threads, chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run(c);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t c = w; c < chunks; c += workers) run(c);
            });
        }
        for (auto& t : pool) t.join();
    }

    GradientResult out;
    double return_sum = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        ChunkResult& res = results[c];
        if (res.error) std::rethrow_exception(res.error);
        if (c == 0) {
            out.grads = std::move(res.grads);
        } else {
            for (std::size_t k = 0; k < out.grads.size(); ++k) out.grads[k].vec() += res.grads[k].vec();
        }
        out.loss += res.loss;
        return_sum += res.return_sum;
        // Chunks run one after another per worker, so the peaks add across workers only.
        out.peak_bytes = std::max(out.peak_bytes, res.peak * workers);
    }
    out.mean_return = return_sum / static_cast<double>(b) / static_cast<double>(config.horizon + 1);
    return out;
}

PolicyTrainer::PolicyTrainer(const gp::GpEnsemble& ensemble, policy::MlpPolicy initial, TrainConfig config)
    : ensemble_(ensemble), policy_(std::move(initial)), config_(std::move(config)) {
    ensemble_.validate();
    policy_.validate();
    config_.validate(ensemble_.state_dim);
    if (policy_.state_dim != ensemble_.state_dim || policy_.action_dim != ensemble_.action_dim) {
        throw ShapeError("train: policy (" + std::to_string(policy_.state_dim) + " states, " +
                         std::to_string(policy_.action_dim) + " actions) does not match model (" +
                         std::to_string(ensemble_.state_dim) + " states, " + std::to_string(ensemble_.action_dim) +
                         " actions)");
    }
    adam_ = AdamState::for_params(policy_.parameters());
}

TrainLogEntry PolicyTrainer::step() {
    const auto iteration = static_cast<std::uint32_t>(steps_);
    const StartBatch starts = sample_starts(ensemble_, config_, iteration);
    const GradientResult g = policy_gradient(ensemble_, policy_, starts, config_, iteration);
    std::vector<Array> params = policy_.parameters();
    adam_step(adam_, params, g.grads, config_.learning_rate);
    policy_.set_parameters(params);
    ++steps_;
    last_peak_bytes_ = g.peak_bytes;
    returns_.push_back(g.mean_return);
    double sq = 0.0;
    for (const auto& a : g.grads) sq += a.vec().squaredNorm();
    TrainLogEntry e;
    e.step = steps_;
    e.mean_return = g.mean_return;
    e.grad_norm = std::sqrt(sq);
    e.loss = g.loss;
    return e;
}

bool PolicyTrainer::converged() const {
    const std::size_t w = config_.early_stop_window;
    if (w == 0 || returns_.size() < 2 * w) return false;
    const auto end = returns_.end();
    double recent = 0.0, previous = 0.0;
    for (auto it = end - static_cast<std::ptrdiff_t>(w); it != end; ++it) recent += *it;
    for (auto it = end - static_cast<std::ptrdiff_t>(2 * w); it != end - static_cast<std::ptrdiff_t>(w); ++it) previous += *it;
    recent /= static_cast<double>(w);
    previous /= static_cast<double>(w);
    return (recent - previous) / std::max(std::abs(previous), 1e-300) < config_.early_stop_tolerance;
}

TrainResult train_policy(const gp::GpEnsemble& ensemble, const policy::MlpPolicy& initial, const TrainConfig& config,
                         const std::function<void(const TrainLogEntry&)>& on_step) {
    PolicyTrainer trainer(ensemble, initial, config);
    TrainResult out;
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    for (std::size_t k = 0; k < config.max_steps; ++k) {
        TrainLogEntry e = trainer.step();
        e.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        out.log.push_back(e);
        if (on_step) on_step(e);
        if (trainer.converged()) {
            out.early_stopped = true;
            break;
        }
    }
    out.policy = trainer.policy();
    out.skipped_updates = trainer.skipped_updates();
    return out;
}

}  // namespace gprl::trainer
