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

#include "cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "gprl/errors.hpp"
#include "gprl/rng.hpp"

namespace gprl::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw ConfigError("config: " + key + " = '" + value + "' is not " + expected);
}

double to_double(const std::string& key, const std::string& v) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        bad_value(key, v, "a number");
    }
    if (used != v.size()) bad_value(key, v, "a number");
    return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_uint(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& v, F convert) {
    std::vector<T> out;
    for (const auto& item : split_list(v)) out.push_back(convert(key, item));
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

// Ordered as in config.example.
const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = to_uint(k, v); }},
        {"paths.data", [](RunConfig& c, auto&, auto& v) { c.data_file = v; }},
        {"paths.model", [](RunConfig& c, auto&, auto& v) { c.model_file = v; }},
        {"paths.policy", [](RunConfig& c, auto&, auto& v) { c.policy_file = v; }},
        {"collect.duration", [](RunConfig& c, auto& k, auto& v) { c.collect_duration = to_double(k, v); }},
        {"collect.excitation", [](RunConfig& c, auto&, auto& v) { c.excitation = env::parse_excitation(v); }},
        {"plant.gain", [](RunConfig& c, auto& k, auto& v) { c.plant.gain = to_double(k, v); }},
        {"plant.damping", [](RunConfig& c, auto& k, auto& v) { c.plant.damping = to_double(k, v); }},
        {"plant.deadband", [](RunConfig& c, auto& k, auto& v) { c.plant.deadband = to_double(k, v); }},
        {"plant.rate_limit", [](RunConfig& c, auto& k, auto& v) { c.plant.rate_limit = to_double(k, v); }},
        {"plant.gravity", [](RunConfig& c, auto& k, auto& v) { c.plant.gravity = to_double(k, v); }},
        {"plant.angle_min", [](RunConfig& c, auto& k, auto& v) { c.plant.angle_min = to_double(k, v); }},
        {"plant.angle_max", [](RunConfig& c, auto& k, auto& v) { c.plant.angle_max = to_double(k, v); }},
        {"plant.noise_angle", [](RunConfig& c, auto& k, auto& v) { c.plant.noise_angle = to_double(k, v); }},
        {"plant.noise_rate", [](RunConfig& c, auto& k, auto& v) { c.plant.noise_rate = to_double(k, v); }},
        {"plant.dt", [](RunConfig& c, auto& k, auto& v) { c.plant.dt = to_double(k, v); }},
        {"fit.max_steps", [](RunConfig& c, auto& k, auto& v) { c.fit.max_steps = to_size(k, v); }},
        {"fit.learning_rate", [](RunConfig& c, auto& k, auto& v) { c.fit.learning_rate = to_double(k, v); }},
        {"fit.max_points", [](RunConfig& c, auto& k, auto& v) { c.fit.max_points = to_size(k, v); }},
        {"fit.root_rank", [](RunConfig& c, auto& k, auto& v) { c.root_rank = to_size(k, v); }},
        {"fit.variance_path",
         [](RunConfig& c, auto& k, auto& v) {
             if (v == "exact") c.variance_path = gp::VariancePath::Exact;
             else if (v == "low_rank") c.variance_path = gp::VariancePath::LowRank;
             else bad_value(k, v, "exact or low_rank");
         }},
        {"fit.holdout_fraction", [](RunConfig& c, auto& k, auto& v) { c.holdout_fraction = to_double(k, v); }},
        {"fit.gate_factor", [](RunConfig& c, auto& k, auto& v) { c.gate_factor = to_double(k, v); }},
        {"train.batch_size", [](RunConfig& c, auto& k, auto& v) { c.batch_size = to_size(k, v); }},
        {"train.horizon", [](RunConfig& c, auto& k, auto& v) { c.horizon = to_size(k, v); }},
        {"train.learning_rate", [](RunConfig& c, auto& k, auto& v) { c.learning_rate = to_double(k, v); }},
        {"train.max_steps", [](RunConfig& c, auto& k, auto& v) { c.max_steps = to_size(k, v); }},
        {"train.hidden", [](RunConfig& c, auto& k, auto& v) { c.hidden = to_list<std::size_t>(k, v, to_size); }},
        {"train.goal_conditioned", [](RunConfig& c, auto& k, auto& v) { c.goal_conditioned = to_bool(k, v); }},
        {"train.init_scheme",
         [](RunConfig& c, auto& k, auto& v) {
             if (v == "he") c.init_scheme = policy::InitScheme::He;
             else if (v == "standard_normal") c.init_scheme = policy::InitScheme::StandardNormal;
             else bad_value(k, v, "he or standard_normal");
         }},
        {"train.init_phi", [](RunConfig& c, auto& k, auto& v) { c.init_phi = to_double(k, v); }},
        {"train.init_phidot", [](RunConfig& c, auto& k, auto& v) { c.init_phidot = to_double(k, v); }},
        {"train.goal_phi", [](RunConfig& c, auto& k, auto& v) { c.goal_phi = to_double(k, v); }},
        {"train.goal_phidot", [](RunConfig& c, auto& k, auto& v) { c.goal_phidot = to_double(k, v); }},
        {"train.chunk_size", [](RunConfig& c, auto& k, auto& v) { c.chunk_size = to_size(k, v); }},
        {"train.threads", [](RunConfig& c, auto& k, auto& v) { c.threads = to_size(k, v); }},
        {"train.early_stop_window", [](RunConfig& c, auto& k, auto& v) { c.early_stop_window = to_size(k, v); }},
        {"train.early_stop_tolerance",
         [](RunConfig& c, auto& k, auto& v) { c.early_stop_tolerance = to_double(k, v); }},
        {"reward.q", [](RunConfig& c, auto& k, auto& v) { c.reward_q = to_list<double>(k, v, to_double); }},
        {"reward.sigma_r", [](RunConfig& c, auto& k, auto& v) { c.reward_sigma = to_double(k, v); }},
        {"eval.goals", [](RunConfig& c, auto& k, auto& v) { c.eval_goals = to_list<double>(k, v, to_double); }},
        {"eval.steps_per_goal", [](RunConfig& c, auto& k, auto& v) { c.eval_steps_per_goal = to_size(k, v); }},
        {"eval.episodes", [](RunConfig& c, auto& k, auto& v) { c.eval_episodes = to_size(k, v); }},
        {"eval.settle_tolerance", [](RunConfig& c, auto& k, auto& v) { c.settle_tolerance = to_double(k, v); }},
        {"eval.initial_phi", [](RunConfig& c, auto& k, auto& v) { c.eval_initial_phi = to_double(k, v); }},
        {"bench.runs", [](RunConfig& c, auto&, auto& v) { c.bench_runs = split_list(v); }},
        {"bench.axis", [](RunConfig& c, auto&, auto& v) { c.bench_axis = bench::parse_axis(v); }},
        {"bench.values", [](RunConfig& c, auto& k, auto& v) { c.bench_values = to_list<std::size_t>(k, v, to_size); }},
        {"bench.repetitions", [](RunConfig& c, auto& k, auto& v) { c.bench_repetitions = to_size(k, v); }},
        {"bench.warmup", [](RunConfig& c, auto& k, auto& v) { c.bench_warmup = to_size(k, v); }},
        {"bench.iterations", [](RunConfig& c, auto& k, auto& v) { c.bench_iterations = to_size(k, v); }},
        {"bench.memory_budget_mb", [](RunConfig& c, auto& k, auto& v) { c.bench_memory_budget_mb = to_double(k, v); }},
        {"bench.budget_s", [](RunConfig& c, auto& k, auto& v) { c.bench_budget_s = to_double(k, v); }},
        {"bench.trials", [](RunConfig& c, auto& k, auto& v) { c.bench_trials = to_size(k, v); }},
        {"bench.checkpoints", [](RunConfig& c, auto& k, auto& v) { c.bench_checkpoints = to_size(k, v); }},
        {"bench.eval_batch", [](RunConfig& c, auto& k, auto& v) { c.bench_eval_batch = to_size(k, v); }},
    };
    return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    for (const auto& [name, setter] : setters()) {
        if (name == key) {
            setter(*this, key, value);
            return;
        }
    }
    throw ConfigError("config: unknown key '" + key + "'");
}

void RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        try {
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& entry : setters()) out.push_back(entry.first);
    return out;
}

void RunConfig::validate() const {
    plant.validate();
    if (collect_duration < 10.0 * plant.dt) throw ConfigError("config: collect.duration must be >= 10 * plant.dt");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 0.5)) {
        throw ConfigError("config: fit.holdout_fraction must be in (0, 0.5)");
    }
    if (!(gate_factor > 0.0)) throw ConfigError("config: fit.gate_factor must be positive");
    if (variance_path == gp::VariancePath::LowRank && root_rank == 0) {
        throw ConfigError("config: fit.root_rank must be >= 1 for the low_rank variance path");
    }
    if (batch_size == 0 || horizon == 0) throw ConfigError("config: train.batch_size and train.horizon must be >= 1");
    if (hidden.empty()) throw ConfigError("config: train.hidden needs at least one layer");
    if (reward_q.size() != 2) throw ConfigError("config: reward.q needs one weight per state (2)");
    if (eval_goals.empty()) throw ConfigError("config: eval.goals is empty");
    if (eval_episodes == 0 || eval_steps_per_goal == 0) {
        throw ConfigError("config: eval.episodes and eval.steps_per_goal must be >= 1");
    }
    for (const auto& r : bench_runs) {
        if (r != "sweep" && r != "learning") throw ConfigError("config: bench.runs entries are sweep or learning");
    }
}

std::uint64_t RunConfig::stage_seed(const char* stage) const { return CounterRng(seed).substream(stage).key(); }

}  // namespace gprl::cli
