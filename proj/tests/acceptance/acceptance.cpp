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

// Acceptance suite: one pass/fail line per criterion.
//
//   acceptance --work DIR --prepare       collect data and fit the boom model
//   acceptance --work DIR --criterion N   check criterion N (1-11)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "gprl/ad/grad_check.hpp"
#include "gprl/bench.hpp"
#include "gprl/data.hpp"
#include "gprl/env.hpp"
#include "gprl/errors.hpp"
#include "gprl/gp.hpp"
#include "gprl/trainer.hpp"

namespace {

using namespace gprl;
using ad::RowMatrix;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path g_work;

// Runs a CLI command in-process, echoing its output.
void gprl_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    std::cout << out.str() << err.str();
    if (code != 0) {
        std::string joined;
        for (const auto& a : args) joined += a + " ";
        throw std::runtime_error("gprl " + joined + "exited with " + std::to_string(code));
    }
}

fs::path boom_dir() { return g_work / "boom"; }

gp::GpEnsemble boom_model() {
    const fs::path model = boom_dir() / "model.gprl";
    if (!fs::exists(model)) throw std::runtime_error("missing " + model.string() + "; run --prepare first");
    return gp::load_ensemble(model);
}

data::Bounds boom_bounds() { return data::state_bounds(data::load_csv(boom_dir() / "dataset.csv")); }

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

RowMatrix uniform_states(const gp::GpEnsemble& ens, const data::Bounds& b, std::size_t rows, std::uint64_t seed) {
    RngStream s(seed);
    RowMatrix raw(static_cast<Eigen::Index>(rows), 2);
    for (Eigen::Index i = 0; i < raw.rows(); ++i)
        for (Eigen::Index c = 0; c < 2; ++c) raw(i, c) = s.uniform(b.lower(c), b.upper(c));
    return ens.normalizer.block(0, 2).normalize(raw);
}

Outcome prepare() {
    gprl_cli({"collect", "--out", boom_dir().string()});
    gprl_cli({"fit-gp", "--out", boom_dir().string()});
    return {true, "boom dataset and model in " + boom_dir().string()};
}

// Full-rollout loss gradient against central differences.
Outcome criterion_1() {
    const auto t0 = Clock::now();
    const auto col = env::collect_excitation_data(env::BoomParams{}, 110.0, env::Excitation::ManualProfile, 11);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < 50; ++i) rows.push_back(i * col.dataset.size() / 50);
    const data::TransitionDataset ds = col.dataset.subset(rows);
    const auto norm = data::fit_normalizer(ds);
    gp::EnsembleConfig ec;
    ec.fit.max_steps = 200;
    const gp::GpEnsemble ens = gp::fit_ensemble(data::build_training_pairs(ds, norm), norm, 2, 1, ec);

    const auto policy = policy::init_params(2, 2, 1, {4}, true, 12);
    const data::Bounds b = data::state_bounds(ds);
    const RowMatrix s0 = uniform_states(ens, b, 4, 13), g = uniform_states(ens, b, 4, 14);
    const auto reward = trainer::RewardParams::defaults(2);
    auto loss = [&](ad::Tape& tape, std::span<const ad::Var> params) {
        trainer::RolloutOptions opt;
        opt.iteration = 7;  // the same draws at every evaluation
        return trainer::rollout_batch(tape, ens, policy, params, s0, g, 10, CounterRng(15), reward, opt).loss;
    };
    const auto r = ad::grad_check(loss, policy.parameters());
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return {r.max_rel_error < 1e-4 && secs < 30.0,
            fmt("max relative error %.3e over %zu parameters (limit 1e-4), %.1f s (limit 30 s)", r.max_rel_error,
                policy.parameter_count(), secs)};
}

struct RandomProblem {
    RowMatrix x;
    Eigen::VectorXd y;
    RowMatrix xs;
    gp::Hyperparams hp;
};

RandomProblem random_problem(std::uint64_t seed, std::size_t n) {
    RngStream s(seed);
    RandomProblem p;
    p.x.resize(static_cast<Eigen::Index>(n), 3);
    p.y.resize(static_cast<Eigen::Index>(n));
    p.xs.resize(20, 3);
    for (Eigen::Index i = 0; i < p.x.size(); ++i) p.x.data()[i] = s.uniform(-2.0, 2.0);
    for (Eigen::Index i = 0; i < p.xs.size(); ++i) p.xs.data()[i] = s.uniform(-2.5, 2.5);
    for (Eigen::Index i = 0; i < p.y.size(); ++i) p.y(i) = std::sin(p.x(i, 0)) + 0.3 * p.x(i, 1) * p.x(i, 2) + 0.05 * s.normal();
    p.hp = gp::Hyperparams::defaults(3);
    for (Eigen::Index c = 0; c < 3; ++c) p.hp.log_lengthscales(c) = s.uniform(-0.7, 0.7);
    p.hp.log_signal = s.uniform(-0.5, 0.5);
    p.hp.log_noise = s.uniform(std::log(0.05), std::log(0.3));
    return p;
}

double max_rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return ((a - b).array().abs() / b.array().abs().max(1.0)).maxCoeff();
}

// Cholesky likelihood and moments against dense-inverse oracles.
Outcome criterion_2() {
    double lml_err = 0.0, moment_err = 0.0, cache_err = 0.0, batch_err = 0.0, tape_err = 0.0;
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
        const RandomProblem p = random_problem(100 + trial, 20 + 7 * trial);
        const auto n = p.x.rows();
        Eigen::MatrixXd k = gp::kernel_matrix(p.x, p.x, p.hp);
        k.diagonal().array() += p.hp.noise_variance();
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
        const Eigen::MatrixXd kinv = lu.inverse();
        const double logdet = std::log(std::abs(lu.determinant()));
        const double oracle = -0.5 * p.y.dot(kinv * p.y) - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
        lml_err = std::max(lml_err, std::abs(gp::log_marginal_likelihood(p.x, p.y, p.hp) - oracle) / std::max(1.0, std::abs(oracle)));

        gp::GpModel model;
        model.inputs = std::make_shared<const RowMatrix>(p.x);
        model.targets = p.y;
        model.hyperparams = p.hp;
        model.fitted = true;
        const gp::PredictiveCache cache = gp::build_cache(model, gp::CacheConfig{0});
        const RowMatrix ks = gp::kernel_matrix(p.xs, p.x, p.hp);
        const Eigen::VectorXd mean = ks * (kinv * p.y);
        const Eigen::VectorXd var =
            (p.hp.signal_variance() - (ks * kinv).cwiseProduct(ks).rowwise().sum().array()).matrix();
        const gp::Prediction cached = gp::predict(cache, model, p.xs);
        moment_err = std::max({moment_err, max_rel(cached.mean, mean), max_rel(cached.variance, var)});
        const gp::Prediction direct = gp::predict_direct(model, p.xs);
        cache_err = std::max({cache_err, max_rel(cached.mean, direct.mean), max_rel(cached.variance, direct.variance)});

        ad::Tape tape;
        const ad::Var batch = gp::predict_on_tape(cache, model, tape.constant(ad::Array::from_matrix(p.xs)),
                                                  gp::VariancePath::Exact);
        for (Eigen::Index i = 0; i < p.xs.rows(); ++i) {
            const gp::Prediction one = gp::predict(cache, model, p.xs.row(i));
            batch_err = std::max({batch_err, std::abs(one.mean(0) - cached.mean(i)),
                                  std::abs(one.variance(0) - cached.variance(i))});
            tape_err = std::max({tape_err, std::abs(batch.value().at(static_cast<std::size_t>(i), 0) - one.mean(0)),
                                 std::abs(batch.value().at(static_cast<std::size_t>(i), 1) - one.variance(0))});
        }
    }
    const bool pass = lml_err < 1e-9 && moment_err < 1e-9 && cache_err < 1e-10 && batch_err < 1e-12 && tape_err < 1e-12;
    return {pass, fmt("likelihood vs dense %.2e, moments vs dense %.2e (1e-9); cached vs direct %.2e (1e-10); "
                      "batched vs row-wise %.2e, on-tape %.2e (1e-12)",
                      lml_err, moment_err, cache_err, batch_err, tape_err)};
}

// Analytic likelihood gradient against reverse-mode.
Outcome criterion_3() {
    double worst = 0.0;
    const RandomProblem base = random_problem(300, 50);
    RngStream s(301);
    for (int i = 0; i < 20; ++i) {
        gp::Hyperparams hp = base.hp;
        for (Eigen::Index c = 0; c < 3; ++c) hp.log_lengthscales(c) = s.uniform(-1.0, 1.0);
        hp.log_signal = s.uniform(-1.0, 1.0);
        hp.log_noise = s.uniform(std::log(0.01), std::log(0.5));
        const Eigen::VectorXd a = gp::analytic_likelihood_gradient(base.x, base.y, hp);
        const Eigen::VectorXd d = gp::autodiff_likelihood_gradient(base.x, base.y, hp);
        worst = std::max(worst, (a - d).cwiseAbs().maxCoeff() / d.cwiseAbs().maxCoeff());
    }
    return {worst < 1e-8, fmt("max relative error %.3e over 20 hyperparameter points (limit 1e-8)", worst)};
}

Outcome criterion_4() {
    const env::BoomParams p;
    const auto col = env::collect_excitation_data(p, 110.0, env::Excitation::ManualProfile, 1);
    return {col.dataset.size() == 2200 && p.dt == 0.05,
            fmt("110 s at dt = %.2f s -> %zu transitions (expected 2200)", p.dt, col.dataset.size())};
}

// Batch objective against single trajectories with matched draws.
Outcome criterion_5() {
    const gp::GpEnsemble ens = boom_model();
    const data::Bounds b = boom_bounds();
    const auto policy = policy::init_params(2, 2, 1, {8, 8}, true, 21);
    const auto reward = trainer::RewardParams::defaults(2);
    const CounterRng rng(22);
    const std::size_t horizon = 100;
    const RowMatrix s0 = uniform_states(ens, b, 100, 23), g = uniform_states(ens, b, 100, 24);

    auto run = [&](const RowMatrix& s, const RowMatrix& goals, std::size_t offset) {
        ad::Tape tape;
        const auto params = policy::bind(tape, policy);
        trainer::RolloutOptions opt;
        opt.row_offset = offset;
        const auto ro = trainer::rollout_batch(tape, ens, policy, params, s, goals, horizon, rng, reward, opt);
        return ro.returns.value().vec().eval();
    };
    // Batched objective at b = 1 against the scalar single-trajectory return.
    double single_err = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        const double eq11 = run(s0.row(static_cast<Eigen::Index>(i)), g.row(static_cast<Eigen::Index>(i)), i)(0);
        const double eq10 = trainer::trajectory_return(ens, policy, s0.row(static_cast<Eigen::Index>(i)).transpose(),
                                                       g.row(static_cast<Eigen::Index>(i)).transpose(), horizon, rng,
                                                       reward, 0, i);
        single_err = std::max(single_err, std::abs(eq11 - eq10) / std::abs(eq10));
    }
    const Eigen::VectorXd batch = run(s0, g, 0);
    double row_err = 0.0;
    for (Eigen::Index i = 0; i < 100; ++i) {
        row_err = std::max(row_err, std::abs(run(s0.row(i), g.row(i), static_cast<std::size_t>(i))(0) - batch(i)));
    }
    return {single_err <= 1e-12 && row_err <= 1e-10,
            fmt("b = 1 vs single-trajectory return: relative %.2e (1e-12); b = 100 vs 100 x b = 1: %.2e (1e-10)",
                single_err, row_err)};
}

// End-to-end single-goal training and plant evaluation.
Outcome criterion_6() {
    const fs::path dir = g_work / "single_goal";
    fs::create_directories(dir);
    fs::copy_file(boom_dir() / "dataset.csv", dir / "dataset.csv", fs::copy_options::overwrite_existing);
    fs::copy_file(boom_dir() / "model.gprl", dir / "model.gprl", fs::copy_options::overwrite_existing);
    const auto t0 = Clock::now();
    gprl_cli({"train", "--out", dir.string()});
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    gprl_cli({"eval", "--out", dir.string()});

    const auto log = read_csv(dir / "train_log.csv");
    std::size_t reached = 0;
    double final_return = 0.0, first_return = 0.0;
    for (std::size_t i = 1; i < log.size(); ++i) {
        const double r = std::stod(log[i][2]);
        if (i == 1) first_return = r;
        final_return = r;
        if (reached == 0 && r > 0.85) reached = std::stoul(log[i][0]);
    }
    const auto metrics = read_csv(dir / "eval_metrics.csv");
    std::size_t ok = 0;
    for (std::size_t i = 1; i < metrics.size(); ++i) ok += std::stod(metrics[i][4]) < 0.05;
    const std::size_t episodes = metrics.size() - 1;
    const bool pass = reached > 0 && reached <= 100 && 10 * ok >= 9 * episodes && secs < 600.0;
    return {pass, fmt("mean return > 0.85 first at step %zu, final %.4f (initial %.3g); %zu/%zu plant episodes within "
                      "0.05 rad (need 90%%); training %.0f s (limit 600 s)",
                      reached, final_return, first_return, ok, episodes, secs)};
}

// Goal-conditioned training tracks unseen step references.
Outcome criterion_7() {
    const fs::path dir = g_work / "goal_conditioned";
    fs::create_directories(dir);
    fs::copy_file(boom_dir() / "dataset.csv", dir / "dataset.csv", fs::copy_options::overwrite_existing);
    fs::copy_file(boom_dir() / "model.gprl", dir / "model.gprl", fs::copy_options::overwrite_existing);
    const auto t0 = Clock::now();
    gprl_cli({"train", "--out", dir.string(), "--goal-conditioned", "--config", GPRL_GOAL_CONFIG});
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    gprl_cli({"eval", "--out", dir.string(), "--config", GPRL_GOAL_CONFIG});

    const auto metrics = read_csv(dir / "eval_metrics.csv");
    std::map<double, std::pair<double, std::size_t>> worst;  // goal -> (max error, episodes)
    for (std::size_t i = 1; i < metrics.size(); ++i) {
        auto& w = worst[std::stod(metrics[i][2])];
        w.first = std::max(w.first, std::stod(metrics[i][4]));
        ++w.second;
    }
    bool pass = worst.size() == 4;
    std::string detail;
    for (const auto& [goal, w] : worst) {
        pass = pass && w.first < 0.05;
        detail += fmt("goal %+.2f rad: worst error %.4f over %zu episodes; ", goal, w.first, w.second);
    }
    return {pass, detail + fmt("limit 0.05 rad in every episode, training %.0f s", secs)};
}

// Batch vs sequential learning at equal wall time.
Outcome criterion_8() {
    const gp::GpEnsemble ens = boom_model();
    bench::ComparisonConfig cc;
    cc.trials = 8;
    cc.budget_s = 60.0;
    cc.checkpoints = 6;
    cc.eval_batch = 50;
    cc.train.seed = 81;
    cc.train.init_state = Eigen::Vector2d(-1.0, 0.0);
    cc.train.goal = Eigen::Vector2d(0.0, 0.0);
    cc.train.reward = trainer::RewardParams::defaults(2);
    const auto result = bench::run_learning_comparison(ens, cc, [](const bench::TrialCurve& c) {
        std::cout << c.mode << " trial " << c.trial << ": final return " << c.final_return << ", "
                  << c.updates_per_s << " updates/s" << std::endl;
    });
    bench::write_learning_csv(g_work / "learning_curves.csv", result);
    bench::write_band_csv(g_work / "learning_band.csv", result);
    const auto& batch = result.summaries[0];
    const auto& seq = result.summaries[1];
    const bool pass = batch.final_return_mean >= seq.final_return_mean && seq.updates_per_s_mean > batch.updates_per_s_mean;
    return {pass, fmt("final mean return batch_100 %.4f vs sequential_1 %.4f (need batch >= sequential); "
                      "updates/s %.2f vs %.2f (need sequential higher)",
                      batch.final_return_mean, seq.final_return_mean, batch.updates_per_s_mean, seq.updates_per_s_mean)};
}

// Per-iteration time against horizon.
Outcome criterion_9() {
    const gp::GpEnsemble ens = boom_model();
    bench::BenchConfig bc;
    bc.axis = bench::SweepAxis::Horizon;
    bc.values = {100, 300, 1000};
    bc.repetitions = 3;
    bc.iterations = 1;
    bc.warmup = 1;
    bc.train.seed = 91;
    bc.train.init_mode = bc.train.goal_mode = trainer::SampleMode::Uniform;
    bc.train.init_bounds = bc.train.goal_bounds = boom_bounds();
    bc.train.reward = trainer::RewardParams::defaults(2);
    bc.goal_conditioned = true;
    const auto records = bench::run_scaling_sweep(ens, bc);
    bench::write_sweep_csv(g_work / "horizon_sweep.csv", records);
    std::vector<double> h, t;
    for (std::size_t v : bc.values) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : records) {
            if (r.value == v && !r.out_of_memory) {
                sum += r.iter_ms_mean;
                ++n;
            }
        }
        if (n == 0) return {false, fmt("H = %zu ran out of memory", v)};
        h.push_back(static_cast<double>(v));
        t.push_back(sum / static_cast<double>(n));
    }
    // Least-squares line through the origin, then each point against it.
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        num += h[i] * t[i];
        den += h[i] * h[i];
    }
    const double slope = num / den;
    bool pass = true;
    std::string detail;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double ratio = t[i] / (slope * h[i]);
        pass = pass && ratio >= 0.7 && ratio <= 1.5;
        detail += fmt("H=%g: %.0f ms (%.2fx linear, cv %.2f); ", h[i], t[i], ratio,
                      bench::timing_cv(records, static_cast<std::size_t>(h[i])));
    }
    return {pass, detail + "band [0.7, 1.5]"};
}

// Chunked and threaded gradients against one tape.
Outcome criterion_10() {
    const gp::GpEnsemble ens = boom_model();
    const auto policy = policy::init_params(2, 2, 1, {8, 8}, true, 101);
    trainer::TrainConfig tc;
    tc.batch_size = 100;
    tc.horizon = 100;
    tc.seed = 102;
    tc.init_mode = tc.goal_mode = trainer::SampleMode::Uniform;
    tc.init_bounds = tc.goal_bounds = boom_bounds();
    tc.reward = trainer::RewardParams::defaults(2);
    const auto starts = trainer::sample_starts(ens, tc, 0);
    const auto whole = trainer::policy_gradient(ens, policy, starts, tc, 0);
    double worst = 0.0;
    for (std::size_t chunk : {1, 7, 32, 50}) {
        for (std::size_t threads : {1, 2}) {
            trainer::TrainConfig c = tc;
            c.chunk_size = chunk;
            c.threads = threads;
            const auto part = trainer::policy_gradient(ens, policy, starts, c, 0);
            worst = std::max(worst, std::abs(part.loss - whole.loss));
            for (std::size_t k = 0; k < whole.grads.size(); ++k) {
                worst = std::max(worst, (part.grads[k].vec() - whole.grads[k].vec()).cwiseAbs().maxCoeff());
            }
        }
    }
    return {worst <= 1e-10, fmt("max |difference| in loss and gradients %.2e over chunk sizes 1, 7, 32, 50 and "
                                "1-2 threads (limit 1e-10)",
                                worst)};
}

// Every command re-run with the same seed.
Outcome criterion_11() {
    const std::vector<std::string> quick = {
        "--seed", "7", "--duration", "30", "--max-steps", "3", "--set", "fit.max_steps=60", "--set", "train.horizon=30",
        "--set", "train.batch_size=10", "--set", "eval.episodes=2", "--set", "bench.values=10,20", "--set",
        "bench.iterations=1", "--set", "bench.budget_s=0.5", "--set", "bench.trials=2", "--set", "bench.eval_batch=5",
        "--set", "bench.checkpoints=2", "--goal-conditioned"};
    for (const char* run : {"a", "b"}) {
        const std::string out = (g_work / "determinism" / run).string();
        for (const char* cmd : {"collect", "fit-gp", "train", "eval", "bench"}) {
            std::vector<std::string> args = {cmd, "--out", out};
            args.insert(args.end(), quick.begin(), quick.end());
            gprl_cli(args);
        }
    }
    // Columns holding wall-clock measurements are skipped.
    const std::vector<std::pair<std::string, std::vector<std::size_t>>> files = {
        {"dataset.csv", {}},       {"model.gprl", {}},          {"fit_report.csv", {}},
        {"policy.gprl", {}},       {"train_log.csv", {1}},      {"eval_metrics.csv", {}},
        {"eval_trajectory.csv", {}}, {"bench_sweep.csv", {3, 4, 5}}, {"bench_learning.csv", {2, 3}},
    };
    std::string detail;
    bool pass = true;
    for (const auto& [name, skip] : files) {
        const fs::path a = g_work / "determinism/a" / name, b = g_work / "determinism/b" / name;
        bool same = false;
        if (skip.empty()) {
            std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
            const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
            same = !sa.empty() && sa == sb;
        } else {
            auto ra = read_csv(a), rb = read_csv(b);
            for (auto* rows : {&ra, &rb})
                for (auto& row : *rows)
                    for (std::size_t c : skip)
                        if (c < row.size()) row[c].clear();
            same = ra.size() > 1 && ra == rb;
        }
        pass = pass && same;
        detail += name + (same ? " same; " : " DIFFERS; ");
    }
    return {pass, detail + "timing columns excluded"};
}

}  // namespace

int main(int argc, char** argv) {
    int criterion = 0;
    bool do_prepare = false;
    g_work = fs::current_path() / "acceptance_work";
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) criterion = std::atoi(argv[++i]);
        else if (std::strcmp(argv[i], "--work") == 0 && i + 1 < argc) g_work = argv[++i];
        else if (std::strcmp(argv[i], "--prepare") == 0) do_prepare = true;
        else {
            std::cerr << "usage: acceptance [--work DIR] (--prepare | --criterion N)\n";
            return 2;
        }
    }
    const std::vector<std::function<Outcome()>> criteria = {criterion_1, criterion_2, criterion_3, criterion_4,
                                                            criterion_5, criterion_6, criterion_7, criterion_8,
                                                            criterion_9, criterion_10, criterion_11};
    if (!do_prepare && (criterion < 1 || criterion > static_cast<int>(criteria.size()))) {
        std::cerr << "usage: acceptance [--work DIR] (--prepare | --criterion N), N in 1.." << criteria.size() << "\n";
        return 2;
    }
    fs::create_directories(g_work);
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = do_prepare ? prepare() : criteria[static_cast<std::size_t>(criterion - 1)]();
    } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const std::string label = do_prepare ? "prepare" : "criterion " + std::to_string(criterion);
    std::cout << label << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << " [" << fmt("%.1f", secs)
              << " s]" << std::endl;
    return o.pass ? 0 : 1;
}
