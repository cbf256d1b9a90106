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

#include <array>
#include <cstdint>
#include <string_view>

namespace gprl {

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Counter-based generator: every draw is a pure function of (key, counter),
/// so any (iteration, step, row, output) coordinate can be replayed
/// independently of evaluation order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed = 0) : key_(seed) {}

    /// Independent generator for a named purpose ("collect", "train", ...).
    CounterRng substream(std::string_view label) const;
    /// Independent generator for an integer index (trial number, episode, ...).
    CounterRng substream(std::uint64_t index) const;

    std::uint64_t key() const { return key_; }

    std::array<std::uint32_t, 4> block(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3) const;

    /// Uniform in (0, 1) with 53 random bits.
    double uniform(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3) const;
    /// Standard normal via Box-Muller on one block.
    double normal(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3) const;

private:
    std::uint64_t key_;
};

/// Sequential view over a CounterRng for code that draws one value at a time.
class RngStream {
public:
    explicit RngStream(CounterRng rng) : rng_(rng) {}
    explicit RngStream(std::uint64_t seed) : rng_(seed) {}

    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    std::uint64_t position() const { return counter_; }

private:
    CounterRng rng_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace gprl
