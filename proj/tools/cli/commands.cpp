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

#include "cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <new>

#include <CLI11.hpp>

#include "gprl/data.hpp"
#include "gprl/errors.hpp"

namespace gprl::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    return out;
}

void check_written(const std::ofstream& out, const std::filesystem::path& path) {
    if (!out) throw IoError("failed writing " + path.string());
}

trainer::RewardParams reward_params(const RunConfig& c) {
    trainer::RewardParams r;
    r.q_diag = Eigen::Map<const Eigen::VectorXd>(c.reward_q.data(), static_cast<Eigen::Index>(c.reward_q.size()));
    r.sigma_r = c.reward_sigma;
    return r;
}

/// Training setup shared by `train` and `bench`.
trainer::TrainConfig train_config(const Context& ctx, const gp::GpEnsemble& ens) {
    const RunConfig& c = ctx.config;
    trainer::TrainConfig t;
    t.batch_size = c.batch_size;
    t.horizon = c.horizon;
    t.learning_rate = c.learning_rate;
    t.max_steps = c.max_steps;
    t.seed = c.stage_seed("train");
    t.chunk_size = c.chunk_size;
    t.threads = c.threads;
    t.early_stop_window = c.early_stop_window;
    t.early_stop_tolerance = c.early_stop_tolerance;
    t.reward = reward_params(c);
    if (c.goal_conditioned) {
        const data::Bounds b = data::state_bounds(data::load_csv(ctx.resolve(c.data_file)));
        t.init_mode = t.goal_mode = trainer::SampleMode::Uniform;
        t.init_bounds = t.goal_bounds = b;
    } else {
        t.init_state = Eigen::Vector2d(c.init_phi, c.init_phidot);
        t.goal = Eigen::Vector2d(c.goal_phi, c.goal_phidot);
    }
    if (ens.state_dim != 2) throw ShapeError("train: model has " + std::to_string(ens.state_dim) + " states, expected 2");
    return t;
}

}  // namespace

std::filesystem::path Context::resolve(const std::string& file) const {
    const std::filesystem::path p(file);
    return p.is_absolute() ? p : out_dir / p;
}

void cmd_collect(const Context& ctx) {
    const RunConfig& c = ctx.config;
    std::ostream& log = *ctx.log;
    const env::Collection col = env::collect_excitation_data(c.plant, c.collect_duration, c.excitation,
                                                             c.stage_seed("collect"));
    const auto path = ctx.resolve(c.data_file);
    data::write_log(path, col.log);
    log << "collected " << col.dataset.size() << " transitions over " << c.collect_duration << " s -> "
        << path.string() << "\n";
    log << "angle coverage " << std::fixed << std::setprecision(3) << col.coverage << " of [" << col.commanded_min
        << ", " << col.commanded_max << "] rad\n"
        << std::defaultfloat;
}

void cmd_fit_gp(const Context& ctx) {
    const RunConfig& c = ctx.config;
    std::ostream& log = *ctx.log;
    const data::TransitionDataset ds = data::load_csv(ctx.resolve(c.data_file));
    if (ds.state_dim() != 2 || ds.action_dim() != 1) {
        throw ShapeError("fit-gp: dataset has " + std::to_string(ds.state_dim()) + " states and " +
                         std::to_string(ds.action_dim()) + " actions, the boom has 2 and 1");
    }
    const data::Normalizer norm = data::fit_normalizer(ds);
    const data::TrainingPairs pairs = data::build_training_pairs(ds, norm);
    gp::EnsembleConfig ec;
    ec.fit = c.fit;
    ec.cache.root_rank = c.variance_path == gp::VariancePath::LowRank ? c.root_rank : 0;
    ec.variance_path = c.variance_path;
    gp::EnsembleReport report;
    const gp::GpEnsemble ens = gp::fit_ensemble(pairs, norm, ds.state_dim(), ds.action_dim(), ec, &report);

    const auto t0 = Clock::now();
    const Eigen::VectorXd rmse = gp::holdout_rmse(ens, ds, c.holdout_fraction);
    const double gate_s = seconds_since(t0);
    const Eigen::Vector2d noise(c.plant.noise_angle, c.plant.noise_rate);

    const auto model_path = ctx.resolve(c.model_file);
    gp::save_ensemble(model_path, ens);
    const auto report_path = ctx.resolve("fit_report.csv");
    std::ofstream rep = open_out(report_path);
    rep << "output,points,steps,converged,initial_log_likelihood,final_log_likelihood,holdout_rmse,noise_std,ratio\n";
    bool pass = true;
    static const char* names[] = {"phi", "phidot"};
    for (std::size_t m = 0; m < ens.outputs(); ++m) {
        const auto& f = report.fits[m];
        const double ratio = rmse(static_cast<Eigen::Index>(m)) / noise(static_cast<Eigen::Index>(m));
        pass = pass && ratio < c.gate_factor;
        rep << names[m] << ',' << f.points << ',' << f.steps << ',' << (f.converged ? 1 : 0) << ','
            << f.initial_log_likelihood << ',' << f.final_log_likelihood << ',' << rmse(static_cast<Eigen::Index>(m))
            << ',' << noise(static_cast<Eigen::Index>(m)) << ',' << ratio << '\n';
        log << "output " << names[m] << ": log likelihood " << f.final_log_likelihood << " (" << f.steps
            << " steps), held-out rmse " << rmse(static_cast<Eigen::Index>(m)) << " = " << ratio
            << " x noise std, fit " << report.fit_seconds[m] << " s, cache " << report.cache_seconds[m] << " s\n";
    }
    check_written(rep, report_path);
    log << "model -> " << model_path.string() << " (adequacy check " << gate_s << " s)\n";
    if (!pass) {
        throw NumericalError("fit-gp: held-out rmse exceeds " + std::to_string(c.gate_factor) +
                             " x observation noise; collect more data before training");
    }
}

void cmd_train(const Context& ctx) {
    const RunConfig& c = ctx.config;
    std::ostream& log = *ctx.log;
    const gp::GpEnsemble ens = gp::load_ensemble(ctx.resolve(c.model_file));
    const trainer::TrainConfig tc = train_config(ctx, ens);
    const policy::MlpPolicy init = policy::init_params(ens.state_dim, ens.state_dim, ens.action_dim, c.hidden,
                                                       c.goal_conditioned, c.stage_seed("policy"), c.init_scheme);

    const auto log_path = ctx.resolve("train_log.csv");
    std::ofstream csv = open_out(log_path);
    csv << "step,wall_ms,mean_return,grad_norm,loss\n" << std::flush;
    auto on_step = [&](const trainer::TrainLogEntry& e) {
        csv << e.step << ',' << e.wall_ms << ',' << e.mean_return << ',' << e.grad_norm << ',' << e.loss << '\n'
            << std::flush;
        if (ctx.verbose) {
            log << "step " << e.step << "  return " << e.mean_return << "  |grad| " << e.grad_norm << "  "
                << e.wall_ms / 1e3 << " s" << std::endl;
        }
    };
    const trainer::TrainResult result = trainer::train_policy(ens, init, tc, on_step);
    check_written(csv, log_path);

    const auto policy_path = ctx.resolve(c.policy_file);
    policy::save_policy(policy_path, policy::PolicyBundle{result.policy, ens.normalizer});
    if (result.log.empty()) {
        log << "no training steps; initial policy -> " << policy_path.string() << "\n";
        return;
    }
    const double first = result.log.front().mean_return, last = result.log.back().mean_return;
    log << result.log.size() << " steps" << (result.early_stopped ? " (early stop)" : "") << ", mean return "
        << first << " -> " << last << " (x" << last / first << ") in " << result.log.back().wall_ms / 1e3 << " s\n";
    if (result.skipped_updates > 0) log << result.skipped_updates << " updates skipped on non-finite gradients\n";
    log << "policy -> " << policy_path.string() << "\n";
}

void cmd_eval(const Context& ctx) {
    const RunConfig& c = ctx.config;
    std::ostream& log = *ctx.log;
    const policy::PolicyBundle bundle = policy::load_policy(ctx.resolve(c.policy_file));
    const bool conditioned = bundle.policy.goal_conditioned;
    // A single-goal policy only knows its training goal.
    const std::vector<double> goals = conditioned ? c.eval_goals : std::vector<double>{c.goal_phi};
    env::EvalConfig ec;
    ec.steps_per_goal = c.eval_steps_per_goal;
    ec.settle_tolerance = c.settle_tolerance;
    ec.initial.phi = conditioned ? c.eval_initial_phi : c.init_phi;
    ec.initial.phidot = conditioned ? 0.0 : c.init_phidot;
    const CounterRng seeds(c.stage_seed("eval"));

    const auto metrics_path = ctx.resolve("eval_metrics.csv");
    const auto traj_path = ctx.resolve("eval_trajectory.csv");
    std::ofstream metrics = open_out(metrics_path);
    metrics << "episode,goal_index,goal_phi,settling_time,steady_state_error,final_error,overshoot,settled\n";
    std::vector<std::size_t> within(goals.size(), 0);
    std::vector<double> sse_sum(goals.size(), 0.0);
    for (std::size_t ep = 0; ep < c.eval_episodes; ++ep) {
        ec.seed = seeds.substream(ep).key();
        const env::Evaluation ev = env::evaluate_policy(c.plant, bundle, goals, ec);
        for (std::size_t g = 0; g < ev.goals.size(); ++g) {
            const auto& m = ev.goals[g];
            metrics << ep << ',' << g << ',' << m.goal_phi << ',' << m.settling_time << ',' << m.steady_state_error
                    << ',' << m.final_error << ',' << m.overshoot << ',' << (m.settled ? 1 : 0) << '\n';
            within[g] += m.steady_state_error < c.settle_tolerance;
            sse_sum[g] += m.steady_state_error;
        }
        if (ep == 0) {
            std::ofstream traj = open_out(traj_path);
            traj << "t,phi,phidot,u,goal_phi\n";
            for (const auto& r : ev.trajectory) {
                traj << r.t << ',' << r.phi << ',' << r.phidot << ',' << r.u << ',' << r.goal_phi << '\n';
            }
            check_written(traj, traj_path);
        }
    }
    check_written(metrics, metrics_path);
    for (std::size_t g = 0; g < goals.size(); ++g) {
        log << "goal " << goals[g] << " rad: steady-state error " << sse_sum[g] / static_cast<double>(c.eval_episodes)
            << " rad (mean), within " << c.settle_tolerance << " in " << within[g] << "/" << c.eval_episodes
            << " episodes\n";
    }
    log << "metrics -> " << metrics_path.string() << ", trajectory -> " << traj_path.string() << "\n";
}

void cmd_bench(const Context& ctx) {
    const RunConfig& c = ctx.config;
    std::ostream& log = *ctx.log;
    const gp::GpEnsemble ens = gp::load_ensemble(ctx.resolve(c.model_file));
    trainer::TrainConfig tc = train_config(ctx, ens);
    tc.seed = c.stage_seed("bench");
    for (const auto& run : c.bench_runs) {
        if (run == "sweep") {
            bench::BenchConfig bc;
            bc.axis = c.bench_axis;
            bc.values = c.bench_values;
            bc.repetitions = c.bench_repetitions;
            bc.warmup = c.bench_warmup;
            bc.iterations = c.bench_iterations;
            bc.train = tc;
            bc.hidden = c.hidden;
            bc.goal_conditioned = c.goal_conditioned;
            bc.memory_budget_mb = c.bench_memory_budget_mb;
            const auto records = bench::run_scaling_sweep(ens, bc, [&](const bench::BenchRecord& r) {
                if (r.out_of_memory) {
                    log << bench::to_string(r.axis) << "=" << r.value << " rep " << r.rep << ": out of memory\n";
                } else if (ctx.verbose) {
                    log << bench::to_string(r.axis) << "=" << r.value << " rep " << r.rep << ": " << r.iter_ms_mean
                        << " ms/iter, " << r.peak_mb << " MB\n";
                }
            });
            const auto path = ctx.resolve("bench_sweep.csv");
            bench::write_sweep_csv(path, records);
            for (std::size_t v : c.bench_values) {
                double sum = 0.0;
                std::size_t n = 0;
                for (const auto& r : records) {
                    if (r.value == v && !r.out_of_memory) {
                        sum += r.iter_ms_mean;
                        ++n;
                    }
                }
                if (n > 0) {
                    log << bench::to_string(c.bench_axis) << "=" << v << ": " << sum / static_cast<double>(n)
                        << " ms/iter (cv " << bench::timing_cv(records, v) << ")\n";
                }
            }
            log << "sweep -> " << path.string() << "\n";
        } else {
            bench::ComparisonConfig cc;
            cc.modes = {{"batch_" + std::to_string(c.batch_size), c.batch_size}, {"sequential_1", 1}};
            cc.trials = c.bench_trials;
            cc.budget_s = c.bench_budget_s;
            cc.checkpoints = c.bench_checkpoints;
            cc.eval_batch = c.bench_eval_batch;
            cc.train = tc;
            cc.hidden = c.hidden;
            cc.goal_conditioned = c.goal_conditioned;
            const auto result = bench::run_learning_comparison(ens, cc, [&](const bench::TrialCurve& t) {
                if (ctx.verbose) {
                    log << t.mode << " trial " << t.trial << ": final return " << t.final_return << ", "
                        << t.updates_per_s << " updates/s\n";
                }
            });
            const auto curves = ctx.resolve("bench_learning.csv");
            const auto band = ctx.resolve("bench_learning_band.csv");
            bench::write_learning_csv(curves, result);
            bench::write_band_csv(band, result);
            for (const auto& s : result.summaries) {
                log << s.name << ": final mean return " << s.final_return_mean << ", " << s.updates_per_s_mean
                    << " updates/s\n";
            }
            log << "learning curves -> " << curves.string() << ", " << band.string() << "\n";
        }
    }
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return 3;
    if (dynamic_cast<const NumericalError*>(&e)) return 2;
    if (dynamic_cast<const std::bad_alloc*>(&e)) return 2;
    return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gaussian-process model-based policy training for a hydraulic boom", "gprl"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool verbose = false, goal_conditioned = false;
    double duration = 0.0;
    std::size_t max_steps = 0;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Config file (key = value)")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Master seed");
    app.add_option("--out", out_dir, "Output directory")->required();
    app.add_flag("--verbose", verbose, "Per-step progress");
    auto* duration_opt = app.add_option("--duration", duration, "collect: seconds of excitation");
    auto* steps_opt = app.add_option("--max-steps", max_steps, "train: optimizer steps");
    auto* gc_opt = app.add_flag("--goal-conditioned", goal_conditioned, "train/bench: sample starts and goals");
    app.add_option("--set", overrides, "Extra key=value settings");

    using Command = void (*)(const Context&);
    const std::vector<std::pair<std::string, Command>> commands = {
        {"collect", cmd_collect}, {"fit-gp", cmd_fit_gp}, {"train", cmd_train}, {"eval", cmd_eval}, {"bench", cmd_bench}};
    const std::vector<std::string> help = {"Log excitation data from the simulated boom", "Fit the GP dynamics model",
                                           "Train a policy through the GP model", "Run the policy on the plant",
                                           "Scaling sweep and batch vs sequential learning"};
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < commands.size(); ++i) subs.push_back(app.add_subcommand(commands[i].first, help[i])->fallthrough());

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        Context ctx;
        if (!config_path.empty()) ctx.config.load(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
            ctx.config.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (*seed_opt) ctx.config.seed = seed;
        if (*duration_opt) ctx.config.collect_duration = duration;
        if (*steps_opt) ctx.config.max_steps = max_steps;
        if (*gc_opt) ctx.config.goal_conditioned = goal_conditioned;
        ctx.config.validate();
        ctx.out_dir = out_dir;
        ctx.verbose = verbose;
        ctx.log = &out;
        std::filesystem::create_directories(ctx.out_dir);
        for (std::size_t i = 0; i < commands.size(); ++i) {
            if (subs[i]->parsed()) commands[i].second(ctx);
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace gprl::cli
