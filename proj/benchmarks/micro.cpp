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

// Microbenchmarks for the hot paths of a training iteration.

#include <benchmark/benchmark.h>

#include "gprl/env.hpp"
#include "gprl/gp.hpp"
#include "gprl/trainer.hpp"

namespace {

using namespace gprl;
using ad::RowMatrix;

RowMatrix random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
    RngStream s(seed);
    RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = s.uniform(-2.0, 2.0);
    return m;
}

// Shared across benchmarks; fitting is not what is measured.
const gp::GpEnsemble& boom_model() {
    static const gp::GpEnsemble ens = [] {
        const auto col = env::collect_excitation_data(env::BoomParams{}, 15.0, env::Excitation::ManualProfile, 1);
        const auto norm = data::fit_normalizer(col.dataset);
        gp::EnsembleConfig ec;
        ec.fit.max_steps = 50;
        return gp::fit_ensemble(data::build_training_pairs(col.dataset, norm), norm, 2, 1, ec);
    }();
    return ens;
}

void BM_KernelMatrix(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const RowMatrix x = random_rows(n, 3, 1);
    const auto hp = gp::Hyperparams::defaults(3);
    for (auto _ : state) benchmark::DoNotOptimize(gp::kernel_matrix(x, x, hp));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KernelMatrix)->RangeMultiplier(2)->Range(64, 512)->Complexity(benchmark::oNSquared);

void BM_PredictOnTape(benchmark::State& state) {
    const auto& ens = boom_model();
    const auto path = state.range(1) ? gp::VariancePath::LowRank : gp::VariancePath::Exact;
    gp::PredictiveCache cache = gp::build_cache(ens.members[0], gp::CacheConfig{64});
    const RowMatrix xs = random_rows(static_cast<std::size_t>(state.range(0)), 3, 2);
    for (auto _ : state) {
        ad::Tape tape;
        const ad::Var x = tape.constant(ad::Array::from_matrix(xs));
        benchmark::DoNotOptimize(gp::predict_on_tape(cache, ens.members[0], x, path).value().at(0, 0));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PredictOnTape)->ArgsProduct({{1, 100}, {0, 1}})->ArgNames({"rows", "lowrank"});

void BM_GradientStep(benchmark::State& state) {
    const auto& ens = boom_model();
    const auto policy = policy::init_params(2, 2, 1, {8, 8}, false, 3);
    trainer::TrainConfig tc;
    tc.batch_size = static_cast<std::size_t>(state.range(0));
    tc.horizon = static_cast<std::size_t>(state.range(1));
    tc.init_state = Eigen::Vector2d(-1.0, 0.0);
    tc.goal = Eigen::Vector2d(0.0, 0.0);
    tc.reward = trainer::RewardParams::defaults(2);
    const auto starts = trainer::sample_starts(ens, tc, 0);
    for (auto _ : state) benchmark::DoNotOptimize(trainer::policy_gradient(ens, policy, starts, tc, 0).loss);
}
BENCHMARK(BM_GradientStep)->ArgsProduct({{1, 100}, {10, 50}})->ArgNames({"batch", "horizon"})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
