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

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "gprl/ad/grad_check.hpp"
#include "gprl/errors.hpp"
#include "gprl/policy.hpp"
#include "gprl/rng.hpp"

using namespace gprl;
using namespace gprl::policy;

namespace {

RowMatrix uniform_rows(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 2.0) {
    RngStream s(seed);
    RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = s.uniform(-scale, scale);
    return m;
}

TEST(Policy, ParameterCountForDefaultNetwork) {
    const MlpPolicy p = init_params(2, 2, 1, {8, 8}, true, 1);
    // (fan_in + 1) * fan_out per layer.
    EXPECT_EQ(p.parameter_count(), 5u * 8 + 9 * 8 + 9 * 1);
    EXPECT_EQ(p.parameter_count(), 121u);
    EXPECT_EQ(static_cast<std::size_t>(p.flat().size()), 121u);
    EXPECT_EQ(init_params(2, 2, 1, {8, 8}, false, 1).parameter_count(), 3u * 8 + 9 * 8 + 9);
}

TEST(Policy, SameSeedSameParameters) {
    EXPECT_EQ(init_params(2, 2, 1, {8, 8}, true, 42).flat(), init_params(2, 2, 1, {8, 8}, true, 42).flat());
    EXPECT_NE(init_params(2, 2, 1, {8, 8}, true, 42).flat(), init_params(2, 2, 1, {8, 8}, true, 43).flat());
}

TEST(Policy, HeVariance) {
    // fan_in = 8: 8 x 1250 = 10^4 weights.
    const MlpPolicy p = init_params(8, 0, 1250, {}, false, 5, InitScheme::He);
    const Eigen::VectorXd w = p.weights[0].vec();
    const double var = (w.array() - w.mean()).square().mean();
    EXPECT_NEAR(var / 0.25, 1.0, 0.1);
    EXPECT_EQ(p.biases[0].vec().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Policy, StandardNormalInitDrawsBiases) {
    const MlpPolicy p = init_params(4, 0, 2000, {}, false, 6, InitScheme::StandardNormal);
    const Eigen::VectorXd b = p.biases[0].vec();
    EXPECT_NEAR((b.array() - b.mean()).square().mean(), 1.0, 0.1);
}

TEST(Policy, EmptyLayersRejected) {
    EXPECT_THROW(init_params(0, 0, 1, {8}, false, 1), ConfigError);
    EXPECT_THROW(init_params(2, 0, 0, {8}, false, 1), ConfigError);
    EXPECT_THROW(init_params(2, 0, 1, {8, 0}, false, 1), ConfigError);
}

TEST(Policy, ZeroParametersGiveZeroAction) {
    const MlpPolicy p = zeros_like(init_params(2, 2, 1, {8, 8}, true, 1));
    const RowMatrix u = act(p, uniform_rows(50, 2, 1, 100.0), uniform_rows(50, 2, 2, 100.0));
    EXPECT_EQ(u.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Policy, ActionsBounded) {
    RngStream s(9);
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        const MlpPolicy p = init_params(2, 2, 1, {8, 8}, true, k, InitScheme::StandardNormal);
        const RowMatrix u = act(p, uniform_rows(1000, 2, 100 + k, 50.0), uniform_rows(1000, 2, 300 + k, 50.0));
        worst = std::max(worst, u.cwiseAbs().maxCoeff());
    }
    EXPECT_LE(worst, 1.0);
}

TEST(Policy, BatchEqualsSingleRows) {
    const MlpPolicy p = init_params(2, 2, 1, {8, 8}, true, 3);
    const RowMatrix s = uniform_rows(100, 2, 4), g = uniform_rows(100, 2, 5);
    const RowMatrix batch = act(p, s, g);
    for (Eigen::Index i = 0; i < 100; ++i) {
        EXPECT_NEAR(act(p, s.row(i), g.row(i))(0, 0), batch(i, 0), 1e-12);
    }
}

TEST(Policy, GradientMatchesFiniteDifferences) {
    const MlpPolicy p = init_params(3, 2, 2, {5, 4}, true, 8);
    const RowMatrix s = uniform_rows(6, 3, 10), g = uniform_rows(6, 2, 11);
    auto loss = [&](ad::Tape& t, std::span<const ad::Var> params) {
        return ad::mean(act(p, params, t.constant(ad::Array::from_matrix(s)), t.constant(ad::Array::from_matrix(g))));
    };
    EXPECT_LT(ad::grad_check(loss, p.parameters()).max_rel_error, 1e-5);
}

TEST(Policy, FoldedGoalMatchesConditioned) {
    const MlpPolicy p = init_params(2, 2, 1, {8, 8}, true, 12);
    Eigen::VectorXd goal(2);
    goal << 0.4, -0.3;
    const MlpPolicy folded = fold_goal(p, goal);
    EXPECT_FALSE(folded.goal_conditioned);
    const RowMatrix s = uniform_rows(40, 2, 13);
    const RowMatrix g = goal.transpose().replicate(40, 1);
    EXPECT_LT((act(p, s, g) - act(folded, s, RowMatrix())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Policy, ShapeMismatch) {
    const MlpPolicy p = init_params(2, 2, 1, {8}, true, 1);
    EXPECT_THROW(act(p, uniform_rows(3, 3, 1), uniform_rows(3, 2, 1)), ShapeError);
    EXPECT_THROW(act(p, uniform_rows(3, 2, 1), uniform_rows(4, 2, 1)), ShapeError);
}

TEST(Policy, SaveLoadRoundTrip) {
    PolicyBundle b{init_params(2, 2, 1, {8, 8}, true, 14), {}};
    b.normalizer.mean = Eigen::Vector3d(0.1, 0.2, 0.3);
    b.normalizer.std = Eigen::Vector3d(1.0, 2.0, 3.0);
    b.normalizer.clamped.assign(3, false);
    const auto path = std::filesystem::temp_directory_path() / "gprl_policy.bin";
    save_policy(path, b);
    const PolicyBundle back = load_policy(path);
    EXPECT_EQ(back.policy.flat(), b.policy.flat());
    EXPECT_EQ(back.policy.layer_sizes(), b.policy.layer_sizes());
    EXPECT_TRUE(back.policy.goal_conditioned);
    EXPECT_EQ(back.normalizer.std, b.normalizer.std);
    std::filesystem::remove(path);
}

}  // namespace
