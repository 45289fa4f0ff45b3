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

#pragma once

/**
 * @file rng.hpp
 * @brief Deterministic random number generation.
 *
 * All stochastic pieces of the simulator draw from this generator so that a
 * (seed, stream tag) pair reproduces bit-identical results on any platform.
 * std::mt19937 + std::normal_distribution are avoided on purpose: the
 * standard distributions are not bit-portable across library vendors.
 *
 * The core generator is SplitMix64 (public-domain algorithm by Sebastiano
 * Vigna); Gaussians come from a hand-rolled Box–Muller transform and
 * uniforms use the usual 53-bit mantissa construction.
 */

#include <cstdint>
#include <string_view>

#include "cfisac/common.hpp"

namespace cfisac {

/// SplitMix64 finalizer (also usable as a 64-bit hash mix).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic, bit-portable random stream.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Derives an independent child stream from (seed, index, tag).
    /// Used to give every realization / purpose its own stream so that
    /// adding draws in one place never perturbs another.
    static Rng derive(std::uint64_t seed, std::uint64_t index, std::string_view tag) {
        std::uint64_t h = 0x9e3779b97f4a7c15ull ^ seed;
        h = mix64(h + 0xbf58476d1ce4e5b9ull * (index + 1));
        for (unsigned char c : tag) h = mix64(h + 0x100ull + c);
        return Rng(h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(state_);
    }

    /// Uniform in [0, 1) with full 53-bit mantissa resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box–Muller; the second variate is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] avoids log(0).
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * pi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * pi * u2);
    }

    /// Circularly-symmetric complex normal CN(0, var).
    cplx cnormal(double var = 1.0) {
        const double s = std::sqrt(0.5 * var);
        return {s * normal(), s * normal()};
    }

    /// Vector of i.i.d. CN(0, var) entries.
    CVec cnormal_vector(Eigen::Index n, double var = 1.0) {
        CVec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = cnormal(var);
        return v;
    }

    /// Matrix of i.i.d. CN(0, var) entries (column-major fill order).
    CMat cnormal_matrix(Eigen::Index rows, Eigen::Index cols, double var = 1.0) {
        CMat m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cnormal(var);
        return m;
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace cfisac
