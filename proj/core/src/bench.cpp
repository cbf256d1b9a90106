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

#include "gprl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <new>
#include <numeric>
#include <tuple>

#include "gprl/errors.hpp"

namespace gprl::bench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::ofstream open_csv(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.precision(10);
    return out;
}

policy::MlpPolicy initial_policy(const gp::GpEnsemble& ens, const std::vector<std::size_t>& hidden, bool conditioned,
                                 std::uint64_t seed) {
    return policy::init_params(ens.state_dim, ens.state_dim, ens.action_dim, hidden, conditioned, seed);
}

}  // namespace

const char* to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::BatchSize: return "batch_size";
        case SweepAxis::Horizon: return "horizon";
        case SweepAxis::PolicyLayers: return "policy_layers";
    }
    return "?";
}

SweepAxis parse_axis(const std::string& name) {
    if (name == "batch_size") return SweepAxis::BatchSize;
    if (name == "horizon") return SweepAxis::Horizon;
    if (name == "policy_layers") return SweepAxis::PolicyLayers;
    throw ConfigError("bench: unknown sweep axis '" + name + "' (batch_size, horizon, policy_layers)");
}

void BenchConfig::validate() const {
    if (values.empty()) throw ConfigError("bench: no axis values");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == 0) throw ConfigError("bench: axis values must be positive");
        if (i > 0 && values[i] <= values[i - 1]) throw ConfigError("bench: axis values must be strictly increasing");
    }
    if (repetitions < 3) throw ConfigError("bench: repetitions must be >= 3");
    if (iterations == 0) throw ConfigError("bench: iterations must be >= 1");
    if (memory_budget_mb < 0.0) throw ConfigError("bench: memory budget must be >= 0");
}

std::vector<BenchRecord> run_scaling_sweep(const gp::GpEnsemble& ensemble, const BenchConfig& config,
                                           const std::function<void(const BenchRecord&)>& on_record) {
    config.validate();
    std::vector<BenchRecord> records;
    for (const std::size_t value : config.values) {
        trainer::TrainConfig train = config.train;
        train.max_steps = config.warmup + config.repetitions * config.iterations;
        train.early_stop_window = 0;
        std::vector<std::size_t> hidden = config.hidden;
        switch (config.axis) {
            case SweepAxis::BatchSize: train.batch_size = value; break;
            case SweepAxis::Horizon: train.horizon = value; break;
            case SweepAxis::PolicyLayers: hidden = {value, value}; break;
        }
        BenchRecord base;
        base.axis = config.axis;
        base.value = value;
        base.threads = train.threads;
        auto emit = [&](BenchRecord r) {
            if (on_record) on_record(r);
            records.push_back(std::move(r));
        };
        auto emit_oom = [&] {
            for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
                BenchRecord r = base;
                r.rep = rep;
                r.out_of_memory = true;
                emit(r);
            }
        };
        try {
            trainer::PolicyTrainer trainer(ensemble, initial_policy(ensemble, hidden, config.goal_conditioned, train.seed),
                                           train);
            for (std::size_t w = 0; w < config.warmup; ++w) trainer.step();
            const double warm_mb = static_cast<double>(trainer.last_peak_bytes()) / 1e6;
            if (config.memory_budget_mb > 0.0 && warm_mb > config.memory_budget_mb) {
                emit_oom();
                continue;
            }
            for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
                BenchRecord r = base;
                r.rep = rep;
                r.iter_ms_min = std::numeric_limits<double>::infinity();
                double total = 0.0;
                std::size_t peak = 0;
                for (std::size_t it = 0; it < config.iterations; ++it) {
                    const auto t0 = Clock::now();
                    trainer.step();
                    const double ms = 1e3 * seconds_since(t0);
                    total += ms;
                    r.iter_ms_min = std::min(r.iter_ms_min, ms);
                    r.iter_ms_max = std::max(r.iter_ms_max, ms);
                    peak = std::max(peak, trainer.last_peak_bytes());
                }
                r.iter_ms_mean = total / static_cast<double>(config.iterations);
                r.peak_mb = static_cast<double>(peak) / 1e6;
                emit(r);
            }
        } catch (const std::bad_alloc&) {
            emit_oom();
        }
    }
    return records;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<BenchRecord>& records) {
    std::ofstream out = open_csv(path);
    out << "axis,value,rep,iter_ms_mean,iter_ms_min,iter_ms_max,peak_mb\n";
    for (const auto& r : records) {
        out << to_string(r.axis) << ',' << r.value << ',' << r.rep << ',';
        if (r.out_of_memory) {
            out << "oom,oom,oom,oom\n";
        } else {
            out << r.iter_ms_mean << ',' << r.iter_ms_min << ',' << r.iter_ms_max << ',' << r.peak_mb << '\n';
        }
    }
    if (!out) throw IoError("failed writing " + path.string());
}

double timing_cv(const std::vector<BenchRecord>& records, std::size_t value) {
    std::vector<double> means;
    for (const auto& r : records) {
        if (r.value == value && !r.out_of_memory) means.push_back(r.iter_ms_mean);
    }
    if (means.size() < 2) return 0.0;
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double ss = 0.0;
    for (double m : means) ss += (m - mean) * (m - mean);
    return std::sqrt(ss / static_cast<double>(means.size() - 1)) / mean;
}

void ComparisonConfig::validate() const {
    if (modes.empty()) throw ConfigError("bench: no learning modes");
    for (const auto& m : modes) {
        if (m.batch_size == 0) throw ConfigError("bench: mode " + m.name + " has batch size 0");
    }
    if (trials == 0) throw ConfigError("bench: trials must be >= 1");
    if (!(budget_s > 0.0)) throw ConfigError("bench: budget must be positive");
    if (checkpoints == 0) throw ConfigError("bench: checkpoints must be >= 1");
    if (eval_batch == 0) throw ConfigError("bench: eval batch must be >= 1");
}

double evaluate_return(const gp::GpEnsemble& ensemble, const policy::MlpPolicy& policy,
                       const trainer::StartBatch& starts, std::size_t horizon, const CounterRng& rng,
                       const trainer::RewardParams& reward) {
    ad::Tape tape;
    const std::vector<ad::Var> params = policy::bind(tape, policy, false);
    const trainer::Rollout ro =
        trainer::rollout_batch(tape, ensemble, policy, params, starts.states, starts.goals, horizon, rng, reward);
    return -ro.loss.value().item() / static_cast<double>(horizon + 1);
}

LearningComparison run_learning_comparison(const gp::GpEnsemble& ensemble, const ComparisonConfig& config,
                                           const std::function<void(const TrialCurve&)>& on_trial) {
    config.validate();
    const CounterRng master(config.train.seed);
    trainer::TrainConfig eval_cfg = config.train;
    eval_cfg.batch_size = config.eval_batch;
    eval_cfg.seed = master.substream("bench.eval").key();
    const trainer::StartBatch eval_starts = trainer::sample_starts(ensemble, eval_cfg, 0);
    const CounterRng eval_rng = master.substream("bench.eval.eps");
    auto evaluate = [&](const policy::MlpPolicy& p) {
        return evaluate_return(ensemble, p, eval_starts, config.train.horizon, eval_rng, config.train.reward);
    };

    LearningComparison out;
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
        const CounterRng trial_rng = master.substream("bench.trial").substream(trial);
        const policy::MlpPolicy init =
            initial_policy(ensemble, config.hidden, config.goal_conditioned, trial_rng.substream("policy").key());
        const double init_return = evaluate(init);
        for (const auto& mode : config.modes) {
            trainer::TrainConfig train = config.train;
            train.batch_size = mode.batch_size;
            train.seed = trial_rng.substream("train").key();
            train.early_stop_window = 0;
            train.max_steps = std::numeric_limits<std::size_t>::max();
            trainer::PolicyTrainer trainer(ensemble, init, train);

            TrialCurve curve;
            curve.mode = mode.name;
            curve.trial = trial;
            curve.points.push_back({0.0, init_return, init_return, 0});
            double elapsed = 0.0;
            std::size_t next = 1;
            while (elapsed < config.budget_s) {
                const auto t0 = Clock::now();
                trainer.step();
                elapsed += seconds_since(t0);
                const double mark = config.budget_s * static_cast<double>(next) / static_cast<double>(config.checkpoints);
                if (elapsed >= mark || elapsed >= config.budget_s) {
                    const double r = evaluate(trainer.policy());
                    curve.points.push_back({elapsed, r, std::max(r, curve.points.back().best_return), trainer.steps()});
                    while (next <= config.checkpoints &&
                           elapsed >= config.budget_s * static_cast<double>(next) / static_cast<double>(config.checkpoints)) {
                        ++next;
                    }
                }
            }
            curve.final_return = curve.points.back().mean_return;
            curve.updates_per_s = static_cast<double>(trainer.steps()) / elapsed;
            if (on_trial) on_trial(curve);
            out.curves.push_back(std::move(curve));
        }
    }

    const CounterRng boot = master.substream("bench.bootstrap");
    for (std::size_t m = 0; m < config.modes.size(); ++m) {
        ModeSummary s;
        s.name = config.modes[m].name;
        std::vector<const TrialCurve*> mine;
        for (const auto& c : out.curves) {
            if (c.mode == s.name) mine.push_back(&c);
        }
        for (const auto* c : mine) {
            s.final_return_mean += c->final_return;
            s.updates_per_s_mean += c->updates_per_s;
        }
        s.final_return_mean /= static_cast<double>(mine.size());
        s.updates_per_s_mean /= static_cast<double>(mine.size());
        for (std::size_t k = 0; k <= config.checkpoints; ++k) {
            const double t = config.budget_s * static_cast<double>(k) / static_cast<double>(config.checkpoints);
            std::vector<double> best;
            for (const auto* c : mine) {
                // Best-so-far among checkpoints taken by time t (the first is at 0).
                double b = c->points.front().best_return;
                for (const auto& p : c->points) {
                    if (p.wall_s <= t + 1e-12) b = p.best_return;
                }
                best.push_back(b);
            }
            BandPoint bp;
            bp.wall_s = t;
            bp.mean = std::accumulate(best.begin(), best.end(), 0.0) / static_cast<double>(best.size());
            std::tie(bp.lower, bp.upper) =
                bootstrap_mean_ci(best, config.bootstrap_samples, 0.95, boot.substream(m * 1000003 + k));
            s.band.push_back(bp);
        }
        out.summaries.push_back(std::move(s));
    }
    return out;
}

void write_learning_csv(const std::filesystem::path& path, const LearningComparison& comparison) {
    std::ofstream out = open_csv(path);
    out << "mode,trial,wall_s,mean_return\n";
    for (const auto& c : comparison.curves) {
        for (const auto& p : c.points) out << c.mode << ',' << c.trial << ',' << p.wall_s << ',' << p.best_return << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void write_band_csv(const std::filesystem::path& path, const LearningComparison& comparison) {
    std::ofstream out = open_csv(path);
    out << "mode,wall_s,mean,ci_low,ci_high\n";
    for (const auto& s : comparison.summaries) {
        for (const auto& b : s.band) {
            out << s.name << ',' << b.wall_s << ',' << b.mean << ',' << b.lower << ',' << b.upper << '\n';
        }
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& values, std::size_t samples, double level,
                                            const CounterRng& rng) {
    if (values.empty()) throw ShapeError("bootstrap: no values");
    if (values.size() == 1 || samples == 0) return {values[0], values[0]};
    RngStream stream(rng);
    const auto n = values.size();
    std::vector<double> means(samples);
    for (auto& m : means) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto pick = std::min(n - 1, static_cast<std::size_t>(stream.uniform() * static_cast<double>(n)));
            sum += values[pick];
        }
        m = sum / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    const double tail = 0.5 * (1.0 - level);
    auto at = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(samples - 1)));
        return means[std::min(idx, samples - 1)];
    };
    return {at(tail), at(1.0 - tail)};
}

}  // namespace gprl::bench
