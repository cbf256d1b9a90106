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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace gprl::cli {

struct Context {
    RunConfig config;
    std::filesystem::path out_dir;
    bool verbose = false;
    std::ostream* log = nullptr;

    /// Relative paths resolve inside out_dir.
    std::filesystem::path resolve(const std::string& file) const;
};

void cmd_collect(const Context& ctx);
void cmd_fit_gp(const Context& ctx);
void cmd_train(const Context& ctx);
void cmd_eval(const Context& ctx);
void cmd_bench(const Context& ctx);

/// Exit status of an exception thrown by a command: 1 config or usage,
/// 2 numerical, 3 I/O.
int exit_code_for(const std::exception& e);

/// Full command-line entry point; returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gprl::cli
