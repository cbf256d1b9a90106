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

#include "gprl/gp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include "gprl/errors.hpp"
#include "gprl/io.hpp"
#include "gprl/optim.hpp"
#include "gprl/rng.hpp"

namespace gprl::gp {

using ad::Array;
using ad::Var;

Hyperparams Hyperparams::defaults(std::size_t input_dim) {
    Hyperparams hp;
    hp.log_lengthscales = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(input_dim));
    return hp;
}

void Hyperparams::clamp_noise() { log_noise = std::max(log_noise, kLogNoiseFloor); }

Eigen::VectorXd Hyperparams::flat() const {
    Eigen::VectorXd v(log_lengthscales.size() + 2);
    v << log_lengthscales, log_signal, log_noise;
    return v;
}

Hyperparams Hyperparams::from_flat(const Eigen::VectorXd& v) {
    if (v.size() < 3) throw ShapeError("hyperparams: flat vector needs at least 3 entries");
    Hyperparams hp;
    hp.log_lengthscales = v.head(v.size() - 2);
    hp.log_signal = v(v.size() - 2);
    hp.log_noise = v(v.size() - 1);
    return hp;
}

RowMatrix kernel_matrix(const RowMatrix& a, const RowMatrix& b, const Hyperparams& hp) {
    if (a.cols() != b.cols() || static_cast<std::size_t>(a.cols()) != hp.input_dim()) {
        throw ShapeError("kernel_matrix: input widths " + std::to_string(a.cols()) + " and " + std::to_string(b.cols()) +
                         " vs " + std::to_string(hp.input_dim()) + " lengthscales");
    }
    const Eigen::VectorXd w = hp.inverse_squared_lengthscales();
    const double s2 = hp.signal_variance();
    // Columns of b as contiguous rows so each distance row vectorizes over j.
    const RowMatrix bt = b.transpose();
    RowMatrix dist = RowMatrix::Zero(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        auto row = dist.row(i).array();
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            row += (bt.row(c).array() - a(i, c)).square() * w(c);
        }
    }
    RowMatrix k = s2 * (-0.5 * dist.array()).exp();
    return k;
}

namespace {

double condition_estimate(const RowMatrix& m) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt{Eigen::MatrixXd(m)};
    const double rc = ldlt.rcond();
    return rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
}

}  // namespace

Factorization factorize(const RowMatrix& x, const Hyperparams& hp) {
    RowMatrix k = kernel_matrix(x, x, hp);
    k.diagonal().array() += hp.noise_variance();
    const double mean_diag = k.diagonal().mean();
    try {
        return {ad::cholesky_factor(k), 0.0};
    } catch (const NotPositiveDefinite&) {
    }
    for (double level : kJitterLadder) {
        const double jitter = level * mean_diag;
        RowMatrix kj = k;
        kj.diagonal().array() += jitter;
        try {
            return {ad::cholesky_factor(kj), jitter};
        } catch (const NotPositiveDefinite&) {
        }
    }
    std::ostringstream msg;
    msg << "gp: kernel matrix not positive definite after jitter escalation (condition estimate "
        << condition_estimate(k) << ")";
    throw NumericalError(msg.str());
}

double log_marginal_likelihood(const RowMatrix& x, const Eigen::VectorXd& y, const Hyperparams& hp) {
    if (x.rows() != y.size()) throw ShapeError("log_marginal_likelihood: X rows and y length differ");
    const Factorization f = factorize(x, hp);
    const auto lower = f.lower.triangularView<Eigen::Lower>();
    const Eigen::VectorXd v = lower.solve(y);
    const double n = static_cast<double>(y.size());
    return -0.5 * v.squaredNorm() - f.lower.diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

HyperVars bind(ad::Tape& tape, const Hyperparams& hp) {
    return {tape.parameter(Array::from_vector(hp.log_lengthscales)), tape.parameter(Array::scalar(hp.log_signal)),
            tape.parameter(Array::scalar(hp.log_noise))};
}

namespace {

// Squared coordinate differences, one column per input dimension: row i*n+j
// holds (x_ic - x_jc)^2.
Array pairwise_square_differences(const RowMatrix& x) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    Array out({n * n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) -
                                    x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
                out.at(i * n + j, c) = diff * diff;
            }
    return out;
}

Array identity(std::size_t n, double scale = 1.0) {
    Array eye({n, n}, 0.0);
    for (std::size_t i = 0; i < n; ++i) eye.at(i, i) = scale;
    return eye;
}

}  // namespace

Var log_marginal_likelihood(ad::Tape& tape, const RowMatrix& x, const Eigen::VectorXd& y, const HyperVars& hv) {
    if (x.rows() != y.size()) throw ShapeError("log_marginal_likelihood: X rows and y length differ");
    const auto n = static_cast<std::size_t>(x.rows());
    Var sq = tape.constant(pairwise_square_differences(x));
    Var weights = ad::exp(hv.log_lengthscales * -2.0);
    Var dist = ad::reshape(ad::matvec(sq, weights), {n, n});
    Var k = ad::exp(hv.log_signal * 2.0) * ad::exp(dist * -0.5);
    Var k_hat = k + tape.constant(identity(n)) * ad::exp(hv.log_noise * 2.0);

    Var lower;
    try {
        lower = ad::cholesky(k_hat);
    } catch (const NotPositiveDefinite&) {
        const double mean_diag = k_hat.value().mat().diagonal().mean();
        for (double level : kJitterLadder) {
            try {
                lower = ad::cholesky(k_hat + tape.constant(identity(n, level * mean_diag)));
                break;
            } catch (const NotPositiveDefinite&) {
            }
        }
        if (!lower.valid()) {
            std::ostringstream msg;
            msg << "gp: kernel matrix not positive definite after jitter escalation (condition estimate "
                << condition_estimate(k_hat.value().mat()) << ")";
            throw NumericalError(msg.str());
        }
    }
    Var v = ad::solve_lower(lower, tape.constant(Array::from_vector(y)));
    const double constant = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    return ad::sum(ad::square(v)) * -0.5 - ad::sum(ad::log(ad::diag(lower))) + constant;
}

Eigen::VectorXd autodiff_likelihood_gradient(const RowMatrix& x, const Eigen::VectorXd& y, const Hyperparams& hp) {
    ad::Tape tape;
    HyperVars hv = bind(tape, hp);
    Var lml = log_marginal_likelihood(tape, x, y, hv);
    auto g = tape.backward(lml);
    Eigen::VectorXd out(hp.log_lengthscales.size() + 2);
    out << g[hv.log_lengthscales].vec(), g[hv.log_signal].item(), g[hv.log_noise].item();
    return out;
}

Eigen::VectorXd analytic_likelihood_gradient(const RowMatrix& x, const Eigen::VectorXd& y, const Hyperparams& hp) {
    if (x.rows() != y.size()) throw ShapeError("analytic_likelihood_gradient: X rows and y length differ");
    const Factorization f = factorize(x, hp);
    const auto n = x.rows();
    const auto lower = f.lower.triangularView<Eigen::Lower>();
    const Eigen::VectorXd alpha = lower.transpose().solve(lower.solve(y));
    RowMatrix k_inv = RowMatrix::Identity(n, n);
    lower.solveInPlace(k_inv);
    lower.transpose().solveInPlace(k_inv);
    const RowMatrix w = alpha * alpha.transpose() - k_inv;
    const RowMatrix k = kernel_matrix(x, x, hp);
    const Eigen::VectorXd inv_sq = hp.inverse_squared_lengthscales();

    Eigen::VectorXd grad(x.cols() + 2);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        // dK/dlog l_c = K .* (x_ic - x_jc)^2 / l_c^2
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                const double diff = x(i, c) - x(j, c);
                acc += w(i, j) * k(i, j) * diff * diff;
            }
        grad(c) = 0.5 * acc * inv_sq(c);
    }
    grad(x.cols()) = (w.array() * k.array()).sum();                  // dK/dlog alpha = 2K
    grad(x.cols() + 1) = hp.noise_variance() * w.diagonal().sum();     // dK/dlog sigma_n = 2 sigma_n^2 I
    return grad;
}

std::vector<std::size_t> thin_rows(std::size_t n, std::size_t max_points) {
    std::vector<std::size_t> rows;
    if (max_points == 0 || n <= max_points) {
        rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = i;
        return rows;
    }
    rows.reserve(max_points);
    for (std::size_t i = 0; i < max_points; ++i) rows.push_back(i * n / max_points);
    return rows;
}

Hyperparams fit_hyperparams(const RowMatrix& x_all, const Eigen::VectorXd& y_all, const Hyperparams& init,
                            const FitConfig& config, FitReport* report) {
    if (x_all.rows() < 2) throw ConfigError("fit_hyperparams: need at least 2 points");
    if (x_all.rows() != y_all.size()) throw ShapeError("fit_hyperparams: X rows and y length differ");
    const auto rows = thin_rows(static_cast<std::size_t>(x_all.rows()), config.max_points);
    RowMatrix x(static_cast<Eigen::Index>(rows.size()), x_all.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = x_all.row(static_cast<Eigen::Index>(rows[i]));
        y(static_cast<Eigen::Index>(i)) = y_all(static_cast<Eigen::Index>(rows[i]));
    }

    Hyperparams current = init;
    current.clamp_noise();
    std::vector<Array> params = {Array::from_vector(current.flat())};
    AdamState adam = AdamState::for_params(params);
    double lr = config.learning_rate;

    auto evaluate = [&](const Hyperparams& hp, Eigen::VectorXd& grad) {
        ad::Tape tape;
        HyperVars hv = bind(tape, hp);
        Var lml = log_marginal_likelihood(tape, x, y, hv);
        const double value = lml.value().item();
        auto g = tape.backward(lml);
        grad.resize(hp.log_lengthscales.size() + 2);
        grad << g[hv.log_lengthscales].vec(), g[hv.log_signal].item(), g[hv.log_noise].item();
        return value;
    };

    FitReport rep;
    rep.points = rows.size();
    Eigen::VectorXd grad;
    double value = evaluate(current, grad);
    if (!std::isfinite(value)) throw NumericalError("fit_hyperparams: initial likelihood is not finite");
    rep.initial_log_likelihood = value;
    Hyperparams best = current;
    double best_value = value;
    std::deque<double> history{value};

    for (std::size_t step = 0; step < config.max_steps; ++step) {
        if (grad.lpNorm<Eigen::Infinity>() < config.grad_tolerance) {
            rep.converged = true;
            break;
        }
        const std::vector<Array> saved = params;
        const AdamState saved_adam = adam;
        // Ascend the likelihood: Adam minimizes, so feed the negated gradient.
        std::vector<Array> grads = {Array::from_vector(-grad)};
        adam_step(adam, params, grads, lr);
        Hyperparams next = Hyperparams::from_flat(params[0].vec());
        next.clamp_noise();
        params[0] = Array::from_vector(next.flat());

        Eigen::VectorXd next_grad;
        double next_value = std::numeric_limits<double>::quiet_NaN();
        try {
            next_value = evaluate(next, next_grad);
        } catch (const NumericalError&) {
        }
        if (!std::isfinite(next_value) || !next_grad.allFinite()) {
            if (++rep.halvings > config.max_halvings) {
                throw NumericalError("fit_hyperparams: likelihood not finite after " +
                                     std::to_string(config.max_halvings) + " step halvings");
            }
            params = saved;
            adam = saved_adam;
            lr *= 0.5;
            continue;
        }
        current = next;
        value = next_value;
        grad = next_grad;
        rep.steps = step + 1;
        if (value > best_value) {
            best_value = value;
            best = current;
        }
        history.push_back(value);
        if (history.size() > config.tolerance_window + 1) history.pop_front();
        if (history.size() == config.tolerance_window + 1 &&
            std::abs(history.back() - history.front()) <= config.relative_tolerance * std::abs(history.back())) {
            rep.converged = true;
            break;
        }
    }
    rep.final_log_likelihood = best_value;
    if (report) *report = rep;
    return best;
}

void GpModel::validate() const {
    if (!inputs) throw ConfigError("gp model: no training inputs");
    if (inputs->rows() != targets.size()) throw ShapeError("gp model: X rows and y length differ");
    if (static_cast<std::size_t>(inputs->cols()) != hyperparams.input_dim()) {
        throw ShapeError("gp model: input width does not match lengthscale count");
    }
}

RowMatrix lanczos_inverse_root(const RowMatrix& k_hat, std::size_t rank) {
    const auto n = k_hat.rows();
    const auto r = static_cast<Eigen::Index>(std::min<std::size_t>(rank, static_cast<std::size_t>(n)));
    if (r == 0) return RowMatrix();
    RowMatrix q(n, r);  // orthonormal Krylov basis, column per iteration
    Eigen::VectorXd diag_t(r);
    Eigen::VectorXd off_t = Eigen::VectorXd::Zero(r);
    const CounterRng restarts(0x1a2c05ull);

    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    for (Eigen::Index j = 0; j < r; ++j) {
        q.col(j) = v;
        Eigen::VectorXd w = k_hat * v;
        diag_t(j) = v.dot(w);
        // Full reorthogonalization, applied twice.
        for (int pass = 0; pass < 2; ++pass) {
            w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
        }
        if (j + 1 == r) break;
        double beta = w.norm();
        if (beta <= 1e-10 * std::abs(diag_t(j))) {
            // Invariant subspace found: continue from a fresh direction.
            beta = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                w(i) = restarts.normal(static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(i), 0, 0);
            }
            for (int pass = 0; pass < 2; ++pass) {
                w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
            }
            v = w / w.norm();
        } else {
            v = w / beta;
        }
        off_t(j) = beta;
    }
    // T = Q^T K Q is tridiagonal; root = Q L_T^{-T} so root root^T = Q T^{-1} Q^T.
    RowMatrix t = RowMatrix::Zero(r, r);
    t.diagonal() = diag_t;
    for (Eigen::Index j = 0; j + 1 < r; ++j) {
        t(j + 1, j) = off_t(j);
        t(j, j + 1) = off_t(j);
    }
    const RowMatrix lt = ad::cholesky_factor(t);
    RowMatrix root = lt.triangularView<Eigen::Lower>().solve(q.transpose()).transpose();
    return root;
}

PredictiveCache build_cache(const GpModel& model, const CacheConfig& config) {
    model.validate();
    if (!model.fitted) throw ConfigError("build_cache: model is not fitted");
    const RowMatrix& x = *model.inputs;
    Factorization f = factorize(x, model.hyperparams);
    PredictiveCache cache;
    cache.jitter = f.jitter;
    const auto lower = std::as_const(f.lower).triangularView<Eigen::Lower>();
    cache.alpha = lower.transpose().solve(lower.solve(model.targets));
    if (config.root_rank > 0) {
        RowMatrix k_hat = kernel_matrix(x, x, model.hyperparams);
        k_hat.diagonal().array() += model.hyperparams.noise_variance() + f.jitter;
        cache.root = lanczos_inverse_root(k_hat, config.root_rank);
    }
    cache.lower = std::move(f.lower);
    return cache;
}

namespace {

void require_predictable(const PredictiveCache& cache, const GpModel& model, Eigen::Index cols, VariancePath path) {
    model.validate();
    if (!model.fitted) throw ConfigError("predict: model is not fitted");
    if (cache.alpha.size() != model.targets.size()) throw ConfigError("predict: cache does not match model");
    if (cols != model.inputs->cols()) {
        throw ShapeError("predict: test inputs have " + std::to_string(cols) + " columns, model expects " +
                         std::to_string(model.inputs->cols()));
    }
    if (path == VariancePath::Exact && !cache.has_lower()) throw ConfigError("predict: cache has no Cholesky factor");
    if (path == VariancePath::LowRank && !cache.has_root()) throw ConfigError("predict: cache has no low-rank root");
}

}  // namespace

Prediction predict(const PredictiveCache& cache, const GpModel& model, const RowMatrix& xstar, VariancePath path) {
    require_predictable(cache, model, xstar.cols(), path);
    const RowMatrix& x = *model.inputs;
    const double s2 = model.hyperparams.signal_variance();
    Prediction out;
    out.mean.resize(xstar.rows());
    out.variance.resize(xstar.rows());
    for (Eigen::Index i = 0; i < xstar.rows(); ++i) {
        const Eigen::VectorXd k = kernel_matrix(xstar.row(i), x, model.hyperparams).row(0).transpose();
        out.mean(i) = k.dot(cache.alpha);
        double reduction;
        if (path == VariancePath::Exact) {
            reduction = cache.lower.triangularView<Eigen::Lower>().solve(k).squaredNorm();
        } else {
            reduction = (cache.root.transpose() * k).squaredNorm();
        }
        out.variance(i) = std::max(s2 - reduction, kMinVariance);
    }
    return out;
}

Prediction predict_direct(const GpModel& model, const RowMatrix& xstar) {
    model.validate();
    const RowMatrix& x = *model.inputs;
    RowMatrix k_hat = kernel_matrix(x, x, model.hyperparams);
    k_hat.diagonal().array() += model.hyperparams.noise_variance();
    Eigen::LDLT<Eigen::MatrixXd> ldlt{Eigen::MatrixXd(k_hat)};
    const RowMatrix ks = kernel_matrix(xstar, x, model.hyperparams);
    const Eigen::MatrixXd solved = ldlt.solve(Eigen::MatrixXd(ks.transpose()));
    Prediction out;
    out.mean = ks * ldlt.solve(model.targets);
    out.variance = (model.hyperparams.signal_variance() - (ks.array() * solved.transpose().array()).rowwise().sum())
                       .max(kMinVariance)
                       .matrix();
    return out;
}

Var predict_on_tape(const PredictiveCache& cache, const GpModel& model, const Var& xstar, VariancePath path) {
    const Array& xs_arr = xstar.value();
    if (xs_arr.rank() != 2) throw ShapeError("predict_on_tape: expected [b,d] inputs, got " + ad::to_string(xs_arr.shape()));
    require_predictable(cache, model, static_cast<Eigen::Index>(xs_arr.cols()), path);
    const RowMatrix& x = *model.inputs;
    const Eigen::VectorXd w = model.hyperparams.inverse_squared_lengthscales();
    const double s2 = model.hyperparams.signal_variance();
    auto cross_kernel = [&model](const RowMatrix& xs) { return kernel_matrix(xs, *model.inputs, model.hyperparams); };

    const RowMatrix xs = xs_arr.mat();
    const auto b = xs.rows();
    const RowMatrix ks = cross_kernel(xs);
    Array out({static_cast<std::size_t>(b), 2});
    RowMatrix saved;  // K* root (low rank) or L^{-1} K*^T (exact)
    Eigen::VectorXd reduction;
    if (path == VariancePath::LowRank) {
        saved = ks * cache.root;
        reduction = saved.rowwise().squaredNorm();
    } else {
        saved = cache.lower.triangularView<Eigen::Lower>().solve(ks.transpose());
        reduction = saved.colwise().squaredNorm().transpose();
    }
    const Eigen::VectorXd mean = ks * cache.alpha;
    std::vector<char> clamped(static_cast<std::size_t>(b), 0);
    for (Eigen::Index i = 0; i < b; ++i) {
        double var = s2 - reduction(i);
        if (var < kMinVariance) {
            var = kMinVariance;
            clamped[static_cast<std::size_t>(i)] = 1;
        }
        out.at(static_cast<std::size_t>(i), 0) = mean(i);
        out.at(static_cast<std::size_t>(i), 1) = var;
    }
    xstar.tape()->note_extra_bytes(static_cast<std::size_t>(ks.size()) * sizeof(double));

    const PredictiveCache* cache_ptr = &cache;
    const RowMatrix* x_ptr = &x;
    return xstar.tape()->record(
        "gp_predict", {xstar}, std::move(out),
        [cache_ptr, x_ptr, w, path, cross_kernel, saved = std::move(saved), clamped = std::move(clamped)](
            ad::Tape& t, ad::NodeId self) {
            const ad::Node& n = t.node(self);
            const ad::NodeId px = n.parents[0];
            if (!t.requires_grad(px)) return;
            const RowMatrix xs = t.value(px).mat();
            const auto b = xs.rows();
            Eigen::VectorXd mbar(b);
            Eigen::VectorXd vbar(b);
            for (Eigen::Index i = 0; i < b; ++i) {
                mbar(i) = n.adjoint.at(static_cast<std::size_t>(i), 0);
                vbar(i) = clamped[static_cast<std::size_t>(i)] ? 0.0 : n.adjoint.at(static_cast<std::size_t>(i), 1);
            }
            const RowMatrix ks = cross_kernel(xs);
            // K^-1 k for every row of K*.
            RowMatrix kinv_k;
            if (path == VariancePath::LowRank) {
                kinv_k = saved * cache_ptr->root.transpose();
            } else {
                kinv_k = cache_ptr->lower.triangularView<Eigen::Lower>().transpose().solve(saved).transpose();
            }
            // d mean/dK* = alpha^T, d var/dK* = -2 (K^-1 k)^T.
            kinv_k = ((mbar * cache_ptr->alpha.transpose()) - 2.0 * (vbar.asDiagonal() * kinv_k)).cwiseProduct(ks);
            const RowMatrix& g = kinv_k;
            const Eigen::VectorXd row_sums = g.rowwise().sum();
            RowMatrix gx = g * (*x_ptr);
            RowMatrix grad = (gx - row_sums.asDiagonal() * xs).array().rowwise() * w.transpose().array();
            t.adjoint(px).mat() += grad;
        });
}

void GpEnsemble::validate() const {
    if (members.empty()) throw ConfigError("gp ensemble: no members");
    if (caches.size() != members.size()) throw ConfigError("gp ensemble: cache count does not match member count");
    if (static_cast<std::size_t>(target_scale.size()) != members.size()) {
        throw ConfigError("gp ensemble: target scale count does not match member count");
    }
    if (members.size() != state_dim) throw ConfigError("gp ensemble: expected one member per state dimension");
    if (normalizer.dim() != state_dim + action_dim) throw ConfigError("gp ensemble: normalizer width mismatch");
    for (const auto& m : members) {
        m.validate();
        if (m.inputs.get() != inputs.get() && *m.inputs != *inputs) {
            throw ConfigError("gp ensemble: members must share training inputs");
        }
    }
}

RowMatrix GpEnsemble::predict_delta_mean(const RowMatrix& states, const RowMatrix& actions) const {
    if (static_cast<std::size_t>(states.cols()) != state_dim || static_cast<std::size_t>(actions.cols()) != action_dim ||
        states.rows() != actions.rows()) {
        throw ShapeError("predict_delta_mean: state/action shapes do not match the ensemble");
    }
    RowMatrix raw(states.rows(), states.cols() + actions.cols());
    raw << states, actions;
    const RowMatrix xs = normalizer.normalize(raw);
    RowMatrix out(states.rows(), static_cast<Eigen::Index>(outputs()));
    for (std::size_t m = 0; m < outputs(); ++m) {
        const auto& cache = caches[m];
        const RowMatrix ks = kernel_matrix(xs, *inputs, members[m].hyperparams);
        out.col(static_cast<Eigen::Index>(m)) = (ks * cache.alpha) * target_scale(static_cast<Eigen::Index>(m));
    }
    return out;
}

GpEnsemble fit_ensemble(const data::TrainingPairs& pairs, const data::Normalizer& normalizer, std::size_t state_dim,
                        std::size_t action_dim, const EnsembleConfig& config, EnsembleReport* report) {
    if (static_cast<std::size_t>(pairs.targets.cols()) != state_dim ||
        static_cast<std::size_t>(pairs.inputs.cols()) != state_dim + action_dim) {
        throw ShapeError("fit_ensemble: training pair widths do not match state/action dimensions");
    }
    GpEnsemble ens;
    ens.inputs = std::make_shared<const RowMatrix>(pairs.inputs);
    ens.target_scale = pairs.target_scale;
    ens.normalizer = normalizer;
    ens.state_dim = state_dim;
    ens.action_dim = action_dim;
    ens.variance_path = config.variance_path;
    EnsembleReport rep;
    using Clock = std::chrono::steady_clock;
    for (std::size_t m = 0; m < state_dim; ++m) {
        GpModel model;
        model.inputs = ens.inputs;
        model.targets = pairs.targets.col(static_cast<Eigen::Index>(m));
        FitReport fr;
        const auto t0 = Clock::now();
        model.hyperparams = fit_hyperparams(*ens.inputs, model.targets,
                                            Hyperparams::defaults(state_dim + action_dim), config.fit, &fr);
        model.fitted = true;
        const auto t1 = Clock::now();
        ens.caches.push_back(build_cache(model, config.cache));
        const auto t2 = Clock::now();
        rep.fits.push_back(fr);
        rep.fit_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        rep.cache_seconds.push_back(std::chrono::duration<double>(t2 - t1).count());
        ens.members.push_back(std::move(model));
    }
    if (report) *report = rep;
    return ens;
}

void rebuild_caches(GpEnsemble& ensemble, const CacheConfig& config) {
    ensemble.caches.clear();
    for (const auto& m : ensemble.members) ensemble.caches.push_back(build_cache(m, config));
}

GpEnsemble restrict_ensemble(const GpEnsemble& ensemble, const std::vector<std::size_t>& rows,
                             const CacheConfig& config) {
    ensemble.validate();
    RowMatrix inputs(static_cast<Eigen::Index>(rows.size()), ensemble.inputs->cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= static_cast<std::size_t>(ensemble.inputs->rows())) {
            throw ShapeError("restrict_ensemble: row " + std::to_string(rows[i]) + " out of range");
        }
        inputs.row(static_cast<Eigen::Index>(i)) = ensemble.inputs->row(static_cast<Eigen::Index>(rows[i]));
    }
    GpEnsemble out = ensemble;
    out.inputs = std::make_shared<const RowMatrix>(std::move(inputs));
    for (auto& m : out.members) {
        Eigen::VectorXd t(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) t(static_cast<Eigen::Index>(i)) = m.targets(static_cast<Eigen::Index>(rows[i]));
        m.inputs = out.inputs;
        m.targets = std::move(t);
    }
    rebuild_caches(out, config);
    return out;
}

Eigen::VectorXd holdout_rmse(const GpEnsemble& ensemble, const data::TransitionDataset& dataset, double fraction) {
    if (dataset.size() != static_cast<std::size_t>(ensemble.inputs->rows())) {
        throw ShapeError("holdout_rmse: dataset has " + std::to_string(dataset.size()) + " rows, model " +
                         std::to_string(ensemble.inputs->rows()));
    }
    const data::Split split = data::holdout_split(dataset.size(), fraction);
    const GpEnsemble part = restrict_ensemble(ensemble, split.train, CacheConfig{0});
    const data::TransitionDataset held = dataset.subset(split.holdout);
    const RowMatrix err = part.predict_delta_mean(held.states, held.actions) - (held.next_states - held.states);
    return err.array().square().colwise().mean().sqrt().transpose();
}

Var sample_next_delta(const GpEnsemble& ensemble, const Var& states, const Var& actions, const Array& eps) {
    const auto& ss = states.value().shape();
    const auto& us = actions.value().shape();
    if (ss.size() != 2 || us.size() != 2 || ss[0] != us[0] || ss[1] != ensemble.state_dim ||
        us[1] != ensemble.action_dim) {
        throw ShapeError("sample_next_delta", ad::to_string(ss), ad::to_string(us));
    }
    if (eps.shape() != ss) throw ShapeError("sample_next_delta (eps)", ad::to_string(ss), ad::to_string(eps.shape()));
    ad::Tape& tape = *states.tape();
    const std::size_t b = ss[0];
    Var xs = ad::concat({states, actions}, 1);
    std::vector<Var> deltas;
    deltas.reserve(ensemble.outputs());
    for (std::size_t m = 0; m < ensemble.outputs(); ++m) {
        Var moments = predict_on_tape(ensemble.caches[m], ensemble.members[m], xs, ensemble.variance_path);
        Var mean = ad::slice(moments, 1, 0, 1);
        Var sd = ad::sqrt(ad::slice(moments, 1, 1, 2));
        Array noise({b, 1});
        for (std::size_t i = 0; i < b; ++i) noise[i] = eps.at(i, m);
        Var draw = mean + sd * tape.constant(std::move(noise));
        deltas.push_back(draw * ensemble.target_scale(static_cast<Eigen::Index>(m)));
    }
    return ad::concat(deltas, 1);
}

namespace {

constexpr const char* kModelKind = "gp_ensemble";

}  // namespace

void save_ensemble(const std::filesystem::path& path, const GpEnsemble& ensemble, bool store_factors) {
    ensemble.validate();
    io::Container c(kModelKind);
    c.put("inputs", Array::from_matrix(*ensemble.inputs));
    c.put("target_scale", Array::from_vector(ensemble.target_scale));
    c.put("normalizer.mean", Array::from_vector(ensemble.normalizer.mean));
    c.put("normalizer.std", Array::from_vector(ensemble.normalizer.std));
    Array flags({ensemble.normalizer.dim()});
    for (std::size_t i = 0; i < ensemble.normalizer.dim(); ++i) flags[i] = ensemble.normalizer.clamped[i] ? 1.0 : 0.0;
    c.put("normalizer.clamped", std::move(flags));
    c.put("state_dim", static_cast<std::int64_t>(ensemble.state_dim));
    c.put("action_dim", static_cast<std::int64_t>(ensemble.action_dim));
    c.put("variance_path", ensemble.variance_path == VariancePath::Exact ? "exact" : "low_rank");
    c.put("outputs", static_cast<std::int64_t>(ensemble.outputs()));
    for (std::size_t m = 0; m < ensemble.outputs(); ++m) {
        const std::string pre = "gp" + std::to_string(m) + ".";
        const auto& model = ensemble.members[m];
        const auto& cache = ensemble.caches[m];
        c.put(pre + "targets", Array::from_vector(model.targets));
        c.put(pre + "log_lengthscales", Array::from_vector(model.hyperparams.log_lengthscales));
        c.put_number(pre + "log_signal", model.hyperparams.log_signal);
        c.put_number(pre + "log_noise", model.hyperparams.log_noise);
        c.put(pre + "alpha", Array::from_vector(cache.alpha));
        c.put_number(pre + "jitter", cache.jitter);
        c.put(pre + "root_rank", static_cast<std::int64_t>(cache.root.cols()));
        if (cache.has_root()) c.put(pre + "root", Array::from_matrix(cache.root));
        if (store_factors && cache.has_lower()) c.put(pre + "cholesky", Array::from_matrix(cache.lower));
    }
    c.save(path);
}

GpEnsemble load_ensemble(const std::filesystem::path& path) {
    const io::Container c = io::Container::load(path, kModelKind);
    GpEnsemble ens;
    ens.inputs = std::make_shared<const RowMatrix>(c.array("inputs").mat());
    ens.target_scale = c.array("target_scale").vec();
    ens.normalizer.mean = c.array("normalizer.mean").vec();
    ens.normalizer.std = c.array("normalizer.std").vec();
    for (double f : c.array("normalizer.clamped").values()) ens.normalizer.clamped.push_back(f != 0.0);
    ens.state_dim = static_cast<std::size_t>(c.integer("state_dim"));
    ens.action_dim = static_cast<std::size_t>(c.integer("action_dim"));
    ens.variance_path = c.text("variance_path") == "exact" ? VariancePath::Exact : VariancePath::LowRank;
    const auto outputs = static_cast<std::size_t>(c.integer("outputs"));
    for (std::size_t m = 0; m < outputs; ++m) {
        const std::string pre = "gp" + std::to_string(m) + ".";
        GpModel model;
        model.inputs = ens.inputs;
        model.targets = c.array(pre + "targets").vec();
        model.hyperparams.log_lengthscales = c.array(pre + "log_lengthscales").vec();
        model.hyperparams.log_signal = c.number(pre + "log_signal");
        model.hyperparams.log_noise = c.number(pre + "log_noise");
        model.fitted = true;
        PredictiveCache cache;
        cache.alpha = c.array(pre + "alpha").vec();
        cache.jitter = c.number(pre + "jitter");
        if (c.has(pre + "root")) cache.root = c.array(pre + "root").mat();
        if (c.has(pre + "cholesky")) {
            cache.lower = c.array(pre + "cholesky").mat();
        } else {
            cache.lower = factorize(*model.inputs, model.hyperparams).lower;
        }
        ens.members.push_back(std::move(model));
        ens.caches.push_back(std::move(cache));
    }
    ens.validate();
    return ens;
}

}  // namespace gprl::gp
