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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gprl/ad/grad_check.hpp"
#include "gprl/errors.hpp"
#include "gprl/gp.hpp"
#include "gprl/rng.hpp"

using namespace gprl;
using namespace gprl::gp;
using ad::Array;
using ad::Var;

namespace {

RowMatrix random_inputs(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    RowMatrix x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    return x;
}

Eigen::VectorXd smooth_targets(const RowMatrix& x, std::uint64_t seed, double noise = 0.05) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = std::sin(x(i, 0)) + 0.3 * x.row(i).sum() + noise * z(rng);
    return y;
}

Hyperparams make_hp(std::initializer_list<double> lengthscales, double signal, double noise) {
    Hyperparams hp;
    hp.log_lengthscales.resize(static_cast<Eigen::Index>(lengthscales.size()));
    Eigen::Index i = 0;
    for (double l : lengthscales) hp.log_lengthscales(i++) = std::log(l);
    hp.log_signal = std::log(signal);
    hp.log_noise = std::log(noise);
    return hp;
}

GpModel make_model(RowMatrix x, Eigen::VectorXd y, Hyperparams hp) {
    GpModel m;
    m.inputs = std::make_shared<const RowMatrix>(std::move(x));
    m.targets = std::move(y);
    m.hyperparams = std::move(hp);
    m.fitted = true;
    return m;
}

// Dense-inverse evaluation of the marginal likelihood.
double dense_lml(const RowMatrix& x, const Eigen::VectorXd& y, const Hyperparams& hp) {
    Eigen::MatrixXd k(x.rows(), x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.rows(); ++j) {
            double d = 0.0;
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                d += std::pow((x(i, c) - x(j, c)) / std::exp(hp.log_lengthscales(c)), 2);
            }
            k(i, j) = hp.signal_variance() * std::exp(-0.5 * d) + (i == j ? hp.noise_variance() : 0.0);
        }
    const Eigen::MatrixXd inv = k.inverse();
    return -0.5 * y.dot(inv * y) - 0.5 * std::log(k.determinant()) -
           0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

TEST(Kernel, DiagonalIsSignalVariance) {
    const auto hp = make_hp({0.7, 2.0, 1.3}, 1.7, 0.1);
    const RowMatrix x = random_inputs(4, 3, 1);
    const RowMatrix k = kernel_matrix(x, x, hp);
    for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(k(i, i), 1.7 * 1.7, 1e-15);
}

TEST(Kernel, UnitDistanceTwo) {
    const auto hp = make_hp({1.0, 1.0}, 1.0, 0.1);
    RowMatrix a(1, 2), b(1, 2);
    a << 0.0, 0.0;
    b << 1.0, 1.0;
    EXPECT_NEAR(kernel_matrix(a, b, hp)(0, 0), 0.36787944117144233, 1e-15);
}

TEST(Kernel, MatchesScalarLoop) {
    const auto hp = make_hp({0.5, 1.5, 0.9}, 0.8, 0.1);
    const RowMatrix a = random_inputs(5, 3, 2);
    const RowMatrix b = random_inputs(4, 3, 3);
    const RowMatrix k = kernel_matrix(a, b, hp);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j) {
            double d = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double l = std::exp(hp.log_lengthscales(c));
                d += (a(i, c) - b(j, c)) * (a(i, c) - b(j, c)) / (l * l);
            }
            EXPECT_NEAR(k(i, j), 0.64 * std::exp(-0.5 * d), 1e-14);
        }
    RowMatrix sym = kernel_matrix(a, a, hp);
    EXPECT_EQ(sym, sym.transpose());
}

TEST(Kernel, DimensionMismatch) {
    const auto hp = make_hp({1.0, 1.0}, 1.0, 0.1);
    EXPECT_THROW(kernel_matrix(random_inputs(2, 2, 1), random_inputs(2, 3, 1), hp), ShapeError);
    EXPECT_THROW(kernel_matrix(random_inputs(2, 3, 1), random_inputs(2, 3, 1), hp), ShapeError);
}

TEST(Likelihood, SinglePoint) {
    const auto hp = make_hp({0.3}, 1.4, 0.2);
    RowMatrix x(1, 1);
    x << 0.5;
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(1);
    const double expected = -0.5 * std::log(1.96 + 0.04) - 0.5 * std::log(2.0 * std::numbers::pi);
    EXPECT_NEAR(log_marginal_likelihood(x, y, hp), expected, 1e-14);
}

TEST(Likelihood, MatchesDenseInverse) {
    const auto hp = make_hp({0.8, 1.2}, 1.1, 0.3);
    RowMatrix x(2, 2);
    x << 0.1, -0.4, 0.7, 0.2;
    Eigen::VectorXd y(2);
    y << 0.5, -1.25;
    EXPECT_NEAR(log_marginal_likelihood(x, y, hp), dense_lml(x, y, hp), 1e-10);
    const RowMatrix x8 = random_inputs(8, 2, 9);
    const Eigen::VectorXd y8 = smooth_targets(x8, 10);
    EXPECT_NEAR(log_marginal_likelihood(x8, y8, hp), dense_lml(x8, y8, hp), 1e-10);
}

TEST(Likelihood, PermutationInvariant) {
    const auto hp = make_hp({0.8, 1.2, 0.5}, 1.1, 0.2);
    const RowMatrix x = random_inputs(30, 3, 4);
    const Eigen::VectorXd y = smooth_targets(x, 5);
    std::vector<Eigen::Index> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(6));
    RowMatrix xp(30, 3);
    Eigen::VectorXd yp(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
        xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
        yp(i) = y(perm[static_cast<std::size_t>(i)]);
    }
    EXPECT_NEAR(log_marginal_likelihood(x, y, hp), log_marginal_likelihood(xp, yp, hp), 1e-10);
}

TEST(Likelihood, TapeValueMatchesPlain) {
    const auto hp = make_hp({0.6, 1.1}, 0.9, 0.15);
    const RowMatrix x = random_inputs(15, 2, 7);
    const Eigen::VectorXd y = smooth_targets(x, 8);
    ad::Tape tape;
    const Var lml = log_marginal_likelihood(tape, x, y, bind(tape, hp));
    EXPECT_NEAR(lml.value().item(), log_marginal_likelihood(x, y, hp), 1e-10);
}

TEST(Likelihood, SingularKernelUsesJitterThenFails) {
    auto hp = make_hp({1.0}, 1.0, 1e-4);
    RowMatrix x(3, 1);
    x << 0.0, 0.0, 0.0;
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
    EXPECT_TRUE(std::isfinite(log_marginal_likelihood(x, y, hp)));
    hp.log_noise = std::log(1e-30);
    const Factorization f = factorize(x, hp);
    EXPECT_GT(f.jitter, 0.0);
    hp.log_signal = std::numeric_limits<double>::quiet_NaN();
    try {
        factorize(x, hp);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("condition estimate"), std::string::npos);
    }
}

TEST(LikelihoodGradient, AnalyticMatchesAutodiff) {
    const auto hp = make_hp({0.7, 1.3, 0.9}, 1.2, 0.2);
    const RowMatrix x = random_inputs(20, 3, 11);
    const Eigen::VectorXd y = smooth_targets(x, 12);
    const Eigen::VectorXd a = analytic_likelihood_gradient(x, y, hp);
    const Eigen::VectorXd b = autodiff_likelihood_gradient(x, y, hp);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        EXPECT_LT(std::abs(a(i) - b(i)) / std::max(1.0, std::abs(a(i))), 1e-8) << "entry " << i;
    }
}

TEST(LikelihoodGradient, FiniteDifferenceLengthscales) {
    const auto hp = make_hp({0.7, 1.3}, 1.2, 0.2);
    const RowMatrix x = random_inputs(20, 2, 13);
    const Eigen::VectorXd y = smooth_targets(x, 14);
    auto loss = [&](ad::Tape& t, std::span<const Var> p) {
        HyperVars hv{p[0], t.constant(Array::scalar(hp.log_signal)), t.constant(Array::scalar(hp.log_noise))};
        return log_marginal_likelihood(t, x, y, hv);
    };
    const auto r = ad::grad_check(loss, {Array::from_vector(hp.log_lengthscales)});
    EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(LikelihoodGradient, ZeroTargetsShrinkSignal) {
    const auto hp = make_hp({1.0, 1.0}, 1.0, 0.1);
    const RowMatrix x = random_inputs(10, 2, 15);
    const Eigen::VectorXd g = analytic_likelihood_gradient(x, Eigen::VectorXd::Zero(10), hp);
    EXPECT_LT(g(2), 0.0);
}

// Draws y ~ N(0, K + sigma^2 I) for the given hyperparameters.
Eigen::VectorXd sample_prior(const RowMatrix& x, const Hyperparams& hp, std::uint64_t seed) {
    const Factorization f = factorize(x, hp);
    RngStream s(seed);
    Eigen::VectorXd z(x.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = s.normal();
    return f.lower.triangularView<Eigen::Lower>() * z;
}

TEST(Fit, RecoversPriorLengthscales) {
    const auto truth = make_hp({0.8, 1.6}, 1.0, 0.1);
    const RowMatrix x = random_inputs(200, 2, 21, -3.0, 3.0);
    const Eigen::VectorXd y = sample_prior(x, truth, 22);
    FitConfig cfg;
    cfg.max_points = 0;
    FitReport rep;
    const Hyperparams fitted = fit_hyperparams(x, y, Hyperparams::defaults(2), cfg, &rep);
    EXPECT_NEAR(fitted.log_lengthscales(0), truth.log_lengthscales(0), 0.3);
    EXPECT_NEAR(fitted.log_lengthscales(1), truth.log_lengthscales(1), 0.3);
    EXPECT_GE(rep.final_log_likelihood, rep.initial_log_likelihood);
    EXPECT_EQ(rep.points, 200u);
}

TEST(Fit, PureNoiseVariance) {
    const RowMatrix x = random_inputs(150, 2, 31);
    RngStream s(32);
    Eigen::VectorXd y(150);
    for (Eigen::Index i = 0; i < 150; ++i) y(i) = 0.5 * s.normal();
    const double target_var = (y.array() - y.mean()).square().mean();
    FitConfig cfg;
    const Hyperparams fitted = fit_hyperparams(x, y, Hyperparams::defaults(2), cfg);
    const double total = fitted.noise_variance() + fitted.signal_variance();
    EXPECT_NEAR(total / target_var, 1.0, 0.2);
}

TEST(Fit, StationaryPointHasSmallGradient) {
    const RowMatrix x = random_inputs(60, 2, 41);
    const Eigen::VectorXd y = smooth_targets(x, 42, 0.1);
    FitConfig cfg;
    cfg.max_steps = 3000;
    cfg.max_points = 0;
    cfg.relative_tolerance = 0.0;
    const Hyperparams fitted = fit_hyperparams(x, y, Hyperparams::defaults(2), cfg);
    EXPECT_LT(analytic_likelihood_gradient(x, y, fitted).norm(), 1e-3);
}

TEST(Fit, ThinRowsIsEvenAndBounded) {
    const auto rows = thin_rows(2200, 300);
    EXPECT_EQ(rows.size(), 300u);
    EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
    EXPECT_EQ(rows.front(), 0u);
    EXPECT_EQ(thin_rows(10, 300).size(), 10u);
    EXPECT_THROW(fit_hyperparams(RowMatrix::Zero(1, 1), Eigen::VectorXd::Zero(1), Hyperparams::defaults(1), {}),
                 ConfigError);
}

class CacheTest : public ::testing::Test {
protected:
    void SetUp() override {
        model = make_model(random_inputs(80, 3, 51), Eigen::VectorXd(), make_hp({0.9, 1.4, 0.7}, 1.3, 0.1));
        model.targets = smooth_targets(*model.inputs, 52);
        cache = build_cache(model, {.root_rank = 80});
        xstar = random_inputs(100, 3, 53);
    }
    GpModel model;
    PredictiveCache cache;
    RowMatrix xstar;
};

TEST_F(CacheTest, AlphaSolvesSystem) {
    RowMatrix k_hat = kernel_matrix(*model.inputs, *model.inputs, model.hyperparams);
    k_hat.diagonal().array() += model.hyperparams.noise_variance();
    EXPECT_LT((k_hat * cache.alpha - model.targets).norm() / model.targets.norm(), 1e-8);
}

TEST_F(CacheTest, MatchesDirectSolve) {
    const Prediction a = predict(cache, model, xstar, VariancePath::Exact);
    const Prediction b = predict_direct(model, xstar);
    EXPECT_LT((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a.variance - b.variance).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_F(CacheTest, BatchEqualsSequential) {
    const Prediction batch = predict(cache, model, xstar, VariancePath::Exact);
    for (Eigen::Index i = 0; i < xstar.rows(); ++i) {
        const Prediction one = predict(cache, model, xstar.row(i), VariancePath::Exact);
        ASSERT_EQ(one.mean(0), batch.mean(i));
        ASSERT_EQ(one.variance(0), batch.variance(i));
    }
}

TEST_F(CacheTest, FullRankRootMatchesExact) {
    const Prediction a = predict(cache, model, xstar, VariancePath::Exact);
    const Prediction b = predict(cache, model, xstar, VariancePath::LowRank);
    EXPECT_LT((a.variance - b.variance).cwiseAbs().maxCoeff(), 1e-6);
}

TEST_F(CacheTest, VarianceBounds) {
    const Prediction p = predict(cache, model, random_inputs(500, 3, 54, -6.0, 6.0), VariancePath::Exact);
    EXPECT_GE(p.variance.minCoeff(), kMinVariance);
    EXPECT_LE(p.variance.maxCoeff(), model.hyperparams.signal_variance() + 1e-9);
}

TEST_F(CacheTest, MeanLinearInTargets) {
    GpModel doubled = model;
    doubled.targets = 2.0 * model.targets;
    const PredictiveCache c2 = build_cache(doubled);
    const Prediction a = predict(cache, model, xstar);
    const Prediction b = predict(c2, doubled, xstar);
    EXPECT_EQ(b.mean, 2.0 * a.mean);
    EXPECT_EQ(b.variance, a.variance);
}

TEST_F(CacheTest, TapePredictionMatchesPlain) {
    for (auto path : {VariancePath::Exact, VariancePath::LowRank}) {
        ad::Tape tape;
        const Var moments = predict_on_tape(cache, model, tape.constant(Array::from_matrix(xstar)), path);
        const Prediction p = predict(cache, model, xstar, path);
        for (Eigen::Index i = 0; i < xstar.rows(); ++i) {
            EXPECT_NEAR(moments.value().at(static_cast<std::size_t>(i), 0), p.mean(i), 1e-12);
            EXPECT_NEAR(moments.value().at(static_cast<std::size_t>(i), 1), p.variance(i), 1e-12);
        }
    }
}

TEST_F(CacheTest, TapePredictionGradient) {
    for (auto path : {VariancePath::Exact, VariancePath::LowRank}) {
        auto loss = [&](ad::Tape&, std::span<const Var> p) {
            const Var m = predict_on_tape(cache, model, p[0], path);
            return ad::sum(ad::slice(m, 1, 0, 1)) + ad::sum(ad::slice(m, 1, 1, 2)) * 3.0;
        };
        const auto r = ad::grad_check(loss, {Array::from_matrix(xstar.topRows(5))});
        EXPECT_LT(r.max_rel_error, 1e-6);
    }
}

TEST(Predict, InterpolationLimit) {
    const RowMatrix x = random_inputs(10, 2, 61);
    const Eigen::VectorXd y = smooth_targets(x, 62);
    const GpModel m = make_model(x, y, make_hp({0.5, 0.5}, 1.0, 1e-8));
    const PredictiveCache c = build_cache(m);
    const Prediction p = predict(c, m, x.row(3));
    EXPECT_NEAR(p.mean(0), y(3), 1e-3);
    EXPECT_LT(p.variance(0), 1e-4);
}

TEST(Predict, PriorReversion) {
    const RowMatrix x = random_inputs(10, 2, 63);
    const GpModel m = make_model(x, smooth_targets(x, 64), make_hp({0.5, 0.5}, 1.5, 0.1));
    const PredictiveCache c = build_cache(m);
    RowMatrix far(1, 2);
    far << 100.0, -100.0;
    const Prediction p = predict(c, m, far);
    EXPECT_NEAR(p.mean(0), 0.0, 1e-12);
    EXPECT_NEAR(p.variance(0), 2.25, 1e-12);
}

TEST(Predict, Errors) {
    GpModel m = make_model(random_inputs(5, 2, 65), Eigen::VectorXd::Ones(5), make_hp({1.0, 1.0}, 1.0, 0.1));
    const PredictiveCache c = build_cache(m);
    EXPECT_THROW(predict(c, m, random_inputs(2, 3, 1)), ShapeError);
    EXPECT_THROW(predict(c, m, random_inputs(2, 2, 1), VariancePath::LowRank), ConfigError);
    m.fitted = false;
    EXPECT_THROW(predict(c, m, random_inputs(2, 2, 1)), ConfigError);
    EXPECT_THROW(build_cache(m), ConfigError);
}

TEST(Lanczos, LowRankApproximatesInverse) {
    const RowMatrix x = random_inputs(400, 3, 71);
    const auto hp = make_hp({1.0, 1.0, 1.0}, 1.0, 0.1);
    RowMatrix k_hat = kernel_matrix(x, x, hp);
    k_hat.diagonal().array() += hp.noise_variance();
    const RowMatrix full = lanczos_inverse_root(k_hat, 400);
    const RowMatrix inv = k_hat.inverse();
    EXPECT_LT((full * full.transpose() - inv).cwiseAbs().maxCoeff() / inv.cwiseAbs().maxCoeff(), 1e-6);
    const RowMatrix part = lanczos_inverse_root(k_hat, 100);
    EXPECT_EQ(part.cols(), 100);
}

data::TrainingPairs synthetic_pairs(Eigen::Index n, std::uint64_t seed) {
    data::TrainingPairs pairs;
    pairs.inputs = random_inputs(n, 3, seed);
    pairs.targets = RowMatrix(n, 2);
    pairs.targets.col(0) = smooth_targets(pairs.inputs, seed + 1);
    pairs.targets.col(1) = pairs.inputs.col(1).array().cos().matrix();
    pairs.target_scale = Eigen::Vector2d(0.5, 2.0);
    return pairs;
}

data::Normalizer identity_normalizer(std::size_t d) {
    data::Normalizer nz;
    nz.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    nz.std = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d));
    nz.clamped.assign(d, false);
    return nz;
}

class EnsembleTest : public ::testing::Test {
protected:
    void SetUp() override {
        EnsembleConfig cfg;
        cfg.fit.max_steps = 60;
        cfg.cache.root_rank = 120;
        ens = fit_ensemble(synthetic_pairs(120, 81), identity_normalizer(3), 2, 1, cfg);
    }
    GpEnsemble ens;
};

TEST_F(EnsembleTest, ZeroNoiseGivesMean) {
    ad::Tape tape;
    const RowMatrix x = random_inputs(7, 3, 82);
    const Var s = tape.constant(Array::from_matrix(x.leftCols(2)));
    const Var u = tape.constant(Array::from_matrix(x.rightCols(1)));
    const Var delta = sample_next_delta(ens, s, u, Array({7, 2}, 0.0));
    const RowMatrix mean = ens.predict_delta_mean(x.leftCols(2), x.rightCols(1));
    EXPECT_LT((delta.value().mat() - mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(EnsembleTest, MonteCarloVariance) {
    const RowMatrix x = random_inputs(1, 3, 83, -3.0, 3.0);
    const Prediction p = predict(ens.caches[0], ens.members[0], x, ens.variance_path);
    const std::size_t draws = 10000;
    RowMatrix states(draws, 2), actions(draws, 1);
    states.rowwise() = x.leftCols(2).row(0);
    actions.rowwise() = x.rightCols(1).row(0);
    Array eps({draws, 2});
    CounterRng rng(84);
    for (std::size_t i = 0; i < draws; ++i)
        for (std::size_t m = 0; m < 2; ++m)
            eps.at(i, m) = rng.normal(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(m), 0, 0);
    ad::Tape tape;
    const Var delta = sample_next_delta(ens, tape.constant(Array::from_matrix(states)),
                                        tape.constant(Array::from_matrix(actions)), eps);
    const Eigen::VectorXd col = delta.value().mat().col(0);
    const double var = (col.array() - col.mean()).square().sum() / static_cast<double>(draws - 1);
    const double expected = p.variance(0) * 0.25;
    EXPECT_NEAR(var / expected, 1.0, 0.05);
}

TEST_F(EnsembleTest, GradientThroughSamples) {
    Array eps({4, 2});
    CounterRng rng(85);
    for (std::size_t i = 0; i < 8; ++i) eps[i] = rng.normal(static_cast<std::uint32_t>(i), 0, 0, 0);
    const RowMatrix x = random_inputs(4, 3, 86);
    auto loss = [&](ad::Tape& t, std::span<const Var> p) {
        // A linear "policy" weight w maps state to action.
        const Var s = t.constant(Array::from_matrix(x.leftCols(2)));
        const Var u = ad::tanh(ad::matmul(s, p[0]));
        return ad::sum(sample_next_delta(ens, s, u, eps));
    };
    const auto r = ad::grad_check(loss, {Array::matrix(2, 1, {0.3, -0.7})});
    EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST_F(EnsembleTest, SaveLoadRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "gprl_gp_model.bin";
    save_ensemble(path, ens);
    const GpEnsemble back = load_ensemble(path);
    EXPECT_EQ(*back.inputs, *ens.inputs);
    for (std::size_t m = 0; m < 2; ++m) {
        EXPECT_EQ(back.members[m].hyperparams.flat(), ens.members[m].hyperparams.flat());
        EXPECT_EQ(back.caches[m].alpha, ens.caches[m].alpha);
        EXPECT_EQ(back.caches[m].root, ens.caches[m].root);
        EXPECT_EQ(back.caches[m].lower, ens.caches[m].lower);
    }
    const RowMatrix x = random_inputs(5, 3, 87);
    EXPECT_EQ(back.predict_delta_mean(x.leftCols(2), x.rightCols(1)),
              ens.predict_delta_mean(x.leftCols(2), x.rightCols(1)));
    std::filesystem::remove(path);
}

TEST_F(EnsembleTest, SharedInputs) {
    EXPECT_EQ(ens.members[0].inputs.get(), ens.members[1].inputs.get());
    EXPECT_NO_THROW(ens.validate());
}

}  // namespace
