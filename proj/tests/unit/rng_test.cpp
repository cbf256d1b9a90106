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

#include <gtest/gtest.h>

#include "gprl/rng.hpp"

using namespace gprl;

namespace {

using Block = std::array<std::uint32_t, 4>;

// Known-answer vectors from the Random123 distribution.
TEST(Philox, KnownAnswerZeros) {
    EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(Philox, KnownAnswerOnes) {
    EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, KnownAnswerPi) {
    EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRng, SameCounterSameDraw) {
    CounterRng a(42), b(42);
    EXPECT_EQ(a.normal(1, 2, 3, 4), b.normal(1, 2, 3, 4));
    EXPECT_NE(a.normal(1, 2, 3, 4), a.normal(1, 2, 3, 5));
}

TEST(CounterRng, SubstreamsDiffer) {
    CounterRng root(7);
    EXPECT_NE(root.substream("policy").key(), root.substream("rollout").key());
    EXPECT_EQ(root.substream("policy").key(), CounterRng(7).substream("policy").key());
    EXPECT_NE(root.substream(std::uint64_t{1}).key(), root.substream(std::uint64_t{2}).key());
}

TEST(CounterRng, UniformInOpenInterval) {
    CounterRng rng(3);
    for (std::uint32_t i = 0; i < 10000; ++i) {
        const double u = rng.uniform(i, 0, 0, 0);
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(RngStream, NormalMoments) {
    RngStream s(11);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    EXPECT_NEAR(mean, 0.0, 0.01);
    EXPECT_NEAR(sq / n - mean * mean, 1.0, 0.02);
}

TEST(RngStream, UniformRange) {
    RngStream s(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = s.uniform(-2.0, 3.0);
        ASSERT_GE(u, -2.0);
        ASSERT_LE(u, 3.0);
    }
}

}  // namespace
