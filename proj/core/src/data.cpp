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

#include "gprl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "gprl/errors.hpp"

namespace gprl::data {
namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view cell, double& out) {
    cell = trim(cell);
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

// Expects "<prefix><k>" for k = 1, 2, ... in order.
std::size_t count_prefixed(const std::vector<std::string_view>& header, std::size_t from, char prefix) {
    std::size_t count = 0;
    while (from + count < header.size()) {
        const auto name = trim(header[from + count]);
        if (name != std::string(1, prefix) + std::to_string(count + 1)) break;
        ++count;
    }
    return count;
}

double median_step(const std::vector<double>& t) {
    std::vector<double> diffs;
    diffs.reserve(t.size());
    for (std::size_t i = 1; i < t.size(); ++i) diffs.push_back(t[i] - t[i - 1]);
    auto mid = diffs.begin() + static_cast<std::ptrdiff_t>(diffs.size() / 2);
    std::nth_element(diffs.begin(), mid, diffs.end());
    return *mid;
}

constexpr double kGapFactor = 1.5;
constexpr double kJitter = 0.01;

}  // namespace

void TransitionDataset::validate() const {
    if (states.rows() != actions.rows() || states.rows() != next_states.rows()) {
        throw ConfigError("dataset: states, actions and next states must have the same row count");
    }
    if (states.cols() != next_states.cols()) throw ConfigError("dataset: state and next-state widths differ");
    if (states.rows() < 2) throw ConfigError("dataset: need at least 2 transitions");
    if (!(dt > 0.0)) throw ConfigError("dataset: dt must be positive");
}

TransitionDataset TransitionDataset::subset(const std::vector<std::size_t>& rows) const {
    TransitionDataset out;
    out.dt = dt;
    const auto n = static_cast<Eigen::Index>(rows.size());
    out.states.resize(n, states.cols());
    out.actions.resize(n, actions.cols());
    out.next_states.resize(n, next_states.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
        out.states.row(i) = states.row(r);
        out.actions.row(i) = actions.row(r);
        out.next_states.row(i) = next_states.row(r);
    }
    return out;
}

RowMatrix TransitionDataset::inputs() const {
    RowMatrix x(states.rows(), states.cols() + actions.cols());
    x << states, actions;
    return x;
}

StateLog read_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string src = path.string();
    std::string line;
    if (!std::getline(in, line)) throw ParseError(src, 1, "empty file, expected header t,x1..xp,u1..uq");
    const auto header = split_commas(line);
    if (header.empty() || trim(header[0]) != "t") throw ParseError(src, 1, "header must start with column 't'");
    const std::size_t p = count_prefixed(header, 1, 'x');
    const std::size_t q = count_prefixed(header, 1 + p, 'u');
    if (p == 0) throw ParseError(src, 1, "missing state columns x1..xp");
    if (q == 0) throw ParseError(src, 1, "missing action columns u1..uq");
    if (1 + p + q != header.size()) {
        throw ParseError(src, 1, "unexpected column '" + std::string(trim(header[1 + p + q])) + "'");
    }

    std::vector<double> t;
    std::vector<double> xs;
    std::vector<double> us;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != 1 + p + q) {
            throw ParseError(src, lineno,
                             "expected " + std::to_string(1 + p + q) + " columns, found " + std::to_string(cells.size()));
        }
        double v = 0.0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!parse_double(cells[c], v)) {
                throw ParseError(src, lineno, "non-numeric cell '" + std::string(trim(cells[c])) + "' in column " +
                                                  std::string(trim(header[c])));
            }
            if (c == 0) {
                if (!t.empty() && v <= t.back()) throw ParseError(src, lineno, "rows are not sorted by t");
                t.push_back(v);
            } else if (c <= p) {
                xs.push_back(v);
            } else {
                us.push_back(v);
            }
        }
    }
    if (t.size() < 3) throw ParseError(src, lineno, "need at least 3 data rows, found " + std::to_string(t.size()));

    StateLog log;
    log.t = std::move(t);
    const auto rows = static_cast<Eigen::Index>(log.t.size());
    log.states = Eigen::Map<RowMatrix>(xs.data(), rows, static_cast<Eigen::Index>(p));
    log.actions = Eigen::Map<RowMatrix>(us.data(), rows, static_cast<Eigen::Index>(q));
    return log;
}

void write_log(const std::filesystem::path& path, const StateLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "t";
    for (Eigen::Index c = 0; c < log.states.cols(); ++c) out << ",x" << c + 1;
    for (Eigen::Index c = 0; c < log.actions.cols(); ++c) out << ",u" << c + 1;
    out << '\n';
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    for (std::size_t r = 0; r < log.rows(); ++r) {
        put(log.t[r]);
        const auto i = static_cast<Eigen::Index>(r);
        for (Eigen::Index c = 0; c < log.states.cols(); ++c) {
            out << ',';
            put(log.states(i, c));
        }
        for (Eigen::Index c = 0; c < log.actions.cols(); ++c) {
            out << ',';
            put(log.actions(i, c));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::size_t count_gaps(const StateLog& log) {
    if (log.rows() < 2) return 0;
    const double dt = median_step(log.t);
    std::size_t gaps = 0;
    for (std::size_t i = 1; i < log.rows(); ++i) {
        if (log.t[i] - log.t[i - 1] > kGapFactor * dt) ++gaps;
    }
    return gaps;
}

TransitionDataset pair_transitions(const StateLog& log, const std::string& source) {
    if (log.rows() < 3) throw ParseError(source, 1, "need at least 3 rows");
    const double dt = median_step(log.t);
    std::vector<std::size_t> starts;
    for (std::size_t i = 1; i < log.rows(); ++i) {
        const double step = log.t[i] - log.t[i - 1];
        if (step > kGapFactor * dt) continue;
        if (std::abs(step - dt) > kJitter * dt) {
            // +2: one for the header, one for 1-based lines.
            throw ParseError(source, i + 2,
                             "inconsistent sampling interval " + std::to_string(step) + " (expected " +
                                 std::to_string(dt) + ")");
        }
        starts.push_back(i - 1);
    }
    TransitionDataset ds;
    ds.dt = dt;
    const auto n = static_cast<Eigen::Index>(starts.size());
    ds.states.resize(n, log.states.cols());
    ds.actions.resize(n, log.actions.cols());
    ds.next_states.resize(n, log.states.cols());
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto r = static_cast<Eigen::Index>(starts[static_cast<std::size_t>(k)]);
        ds.states.row(k) = log.states.row(r);
        ds.actions.row(k) = log.actions.row(r);
        ds.next_states.row(k) = log.states.row(r + 1);
    }
    ds.validate();
    return ds;
}

TransitionDataset load_csv(const std::filesystem::path& path) { return pair_transitions(read_log(path), path.string()); }

bool Normalizer::any_clamped() const { return std::find(clamped.begin(), clamped.end(), true) != clamped.end(); }

RowMatrix Normalizer::normalize(const RowMatrix& rows) const {
    if (static_cast<std::size_t>(rows.cols()) != dim()) throw ShapeError("normalize: column count mismatch");
    return (rows.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

RowMatrix Normalizer::denormalize(const RowMatrix& rows) const {
    if (static_cast<std::size_t>(rows.cols()) != dim()) throw ShapeError("denormalize: column count mismatch");
    return (rows.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose();
}

Eigen::VectorXd Normalizer::normalize(const Eigen::VectorXd& row) const {
    if (static_cast<std::size_t>(row.size()) != dim()) throw ShapeError("normalize: length mismatch");
    return (row - mean).cwiseQuotient(std);
}

Eigen::VectorXd Normalizer::denormalize(const Eigen::VectorXd& row) const {
    if (static_cast<std::size_t>(row.size()) != dim()) throw ShapeError("denormalize: length mismatch");
    return row.cwiseProduct(std) + mean;
}

Normalizer Normalizer::block(std::size_t begin, std::size_t count) const {
    if (begin + count > dim()) throw ShapeError("normalizer block out of range");
    Normalizer out;
    out.mean = mean.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
    out.std = std.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
    out.clamped.assign(clamped.begin() + static_cast<std::ptrdiff_t>(begin),
                       clamped.begin() + static_cast<std::ptrdiff_t>(begin + count));
    return out;
}

namespace {

// Population statistics with the small-std clamp.
void column_stats(const RowMatrix& m, Eigen::VectorXd& mean, Eigen::VectorXd& std, std::vector<bool>& clamped) {
    const double n = static_cast<double>(m.rows());
    mean = m.colwise().sum().transpose() / n;
    std = ((m.rowwise() - mean.transpose()).array().square().colwise().sum().transpose() / n).sqrt();
    clamped.assign(static_cast<std::size_t>(m.cols()), false);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (std(c) < kMinStd) {
            std(c) = 1.0;
            clamped[static_cast<std::size_t>(c)] = true;
        }
    }
}

}  // namespace

Normalizer fit_normalizer(const TransitionDataset& dataset) {
    dataset.validate();
    Normalizer nz;
    column_stats(dataset.inputs(), nz.mean, nz.std, nz.clamped);
    return nz;
}

TrainingPairs build_training_pairs(const TransitionDataset& dataset, const Normalizer& normalizer) {
    dataset.validate();
    TrainingPairs pairs;
    pairs.inputs = normalizer.normalize(dataset.inputs());
    const RowMatrix deltas = dataset.next_states - dataset.states;
    const double n = static_cast<double>(deltas.rows());
    pairs.target_scale = (deltas.array().square().colwise().sum().transpose() / n -
                          (deltas.colwise().sum().transpose() / n).array().square())
                             .max(0.0)
                             .sqrt();
    for (Eigen::Index c = 0; c < pairs.target_scale.size(); ++c) {
        if (pairs.target_scale(c) < kMinStd) pairs.target_scale(c) = 1.0;
    }
    pairs.targets = deltas.array().rowwise() / pairs.target_scale.transpose().array();
    return pairs;
}

Split holdout_split(std::size_t n, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("holdout fraction must be in (0, 1)");
    const auto every = static_cast<std::size_t>(std::max(2.0, std::round(1.0 / fraction)));
    Split s;
    for (std::size_t i = 0; i < n; ++i) {
        (i % every == every - 1 ? s.holdout : s.train).push_back(i);
    }
    return s;
}

Bounds state_bounds(const TransitionDataset& dataset) {
    Bounds b;
    b.lower = dataset.states.colwise().minCoeff().transpose();
    b.upper = dataset.states.colwise().maxCoeff().transpose();
    return b;
}

}  // namespace gprl::data
