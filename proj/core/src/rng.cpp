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

#include "gprl/rng.hpp"

#include <cmath>
#include <numbers>

namespace gprl {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

CounterRng CounterRng::substream(std::string_view label) const {
    return CounterRng(splitmix64(key_ ^ splitmix64(fnv1a(label))));
}

CounterRng CounterRng::substream(std::uint64_t index) const {
    return CounterRng(splitmix64(key_ + splitmix64(index ^ 0x5bd1e995ull)));
}

std::array<std::uint32_t, 4> CounterRng::block(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                                               std::uint32_t c3) const {
    return philox4x32({c0, c1, c2, c3},
                      {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
}

namespace {

// 53-bit uniform on the open interval (0, 1).
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

double CounterRng::uniform(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3) const {
    const auto b = block(c0, c1, c2, c3);
    return to_unit(b[0], b[1]);
}

double CounterRng::normal(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3) const {
    const auto b = block(c0, c1, c2, c3);
    const double u1 = to_unit(b[0], b[1]);
    const double u2 = to_unit(b[2], b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::uniform() {
    const std::uint64_t c = counter_++;
    return rng_.uniform(static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32), 0u, 0x5eed0001u);
}

double RngStream::normal() {
    const std::uint64_t c = counter_++;
    return rng_.normal(static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32), 0u, 0x5eed0002u);
}

}  // namespace gprl
