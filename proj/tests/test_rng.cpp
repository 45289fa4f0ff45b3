// SPDX-License-Identifier: Apache-2.0
//
// cfisac — cell-free integrated sensing and communication simulator
// Copyright (C) 2026 cfisac contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <catch2/catch_amalgamated.hpp>

#include "cfisac/rng.hpp"

using namespace cfisac;

TEST_CASE("splitmix64 reproduces the published reference sequence", "[rng]") {
    // First three outputs of SplitMix64 seeded with 0, from the reference
    // implementation by Sebastiano Vigna.
    Rng rng(0);
    REQUIRE(rng.next_u64() == 0xE220A8397B1DCDAFull);
    REQUIRE(rng.next_u64() == 0x6E789E6AA1B965F4ull);
    REQUIRE(rng.next_u64() == 0x06C45D188009454Full);
}

TEST_CASE("identical seeds give bit-identical streams", "[rng]") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
    Rng c(42), d(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(c.uniform() == d.uniform());
        REQUIRE(c.normal() == d.normal());
    }
}

TEST_CASE("derived streams are reproducible and mutually distinct", "[rng]") {
    Rng a = Rng::derive(7, 3, "fading");
    Rng b = Rng::derive(7, 3, "fading");
    REQUIRE(a.next_u64() == b.next_u64());

    // Different seed, index or tag must each change the stream.
    const std::uint64_t base = Rng::derive(7, 3, "fading").next_u64();
    REQUIRE(Rng::derive(8, 3, "fading").next_u64() != base);
    REQUIRE(Rng::derive(7, 4, "fading").next_u64() != base);
    REQUIRE(Rng::derive(7, 3, "geometry").next_u64() != base);
}

TEST_CASE("uniform draws live in [0,1) with the right first moments", "[rng]") {
    Rng rng(123);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    // Standard error of the mean is ~6.5e-4; allow five of those.
    REQUIRE(std::abs(mean - 0.5) < 3.5e-3);
    REQUIRE(std::abs(var - 1.0 / 12.0) < 3.5e-3);
}

TEST_CASE("uniform(a,b) maps into the requested interval", "[rng]") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform(-2.0, 3.0);
        REQUIRE(u >= -2.0);
        REQUIRE(u < 3.0);
    }
}

TEST_CASE("normal draws match standard-normal moments and tail mass", "[rng]") {
    Rng rng(99);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    int within196 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
        if (std::abs(z) < 1.96) ++within196;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.012);
    REQUIRE(std::abs(var - 1.0) < 0.02);
    REQUIRE(std::abs(static_cast<double>(within196) / n - 0.95) < 0.005);
}

TEST_CASE("complex normal draws have the requested variance split", "[rng]") {
    Rng rng(2024);
    const int n = 100000;
    const double var = 0.37;
    double power = 0.0, re2 = 0.0;
    cplx mean_acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const cplx z = rng.cnormal(var);
        power += std::norm(z);
        re2 += z.real() * z.real();
        mean_acc += z;
    }
    REQUIRE(std::abs(power / n - var) < 0.01 * var * 3);       // E|z|^2 = var
    REQUIRE(std::abs(re2 / n - 0.5 * var) < 0.01 * var * 3);   // equal split
    REQUIRE(std::abs(mean_acc / static_cast<double>(n)) < 0.01);
}

TEST_CASE("vector and matrix fills equal elementwise scalar draws", "[rng]") {
    Rng a(77), b(77);
    const CVec v = a.cnormal_vector(10, 2.0);
    for (int i = 0; i < 10; ++i) REQUIRE(v(i) == b.cnormal(2.0));

    Rng c(78), d(78);
    const CMat m = c.cnormal_matrix(3, 4);
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 3; ++i) REQUIRE(m(i, j) == d.cnormal());
}
