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

/**
 * @file acceptance_main.cpp
 * @brief End-to-end acceptance suite: one pass/fail line per criterion.
 *
 * Each criterion is a self-contained check of a user-visible guarantee
 * (estimator calibration, optimizer optimality, rank behavior, trend
 * reproduction, solver correctness). The binary exits nonzero if any
 * criterion fails; details print beneath the verdict line.
 */

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "acceptance_criteria.hpp"

int main() {
    using cfisac::acceptance::Criterion;
    using cfisac::acceptance::all_criteria;

    const std::vector<Criterion> criteria = all_criteria();
    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        cfisac::acceptance::Report rep;
        try {
            rep = criteria[i].run();
        } catch (const std::exception& e) {
            rep.pass = false;
            rep.detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%2zu/%zu] %-28s %s  (%.1fs)%s%s\n", i + 1, criteria.size(),
                    criteria[i].name.c_str(), rep.pass ? "PASS" : "FAIL", secs,
                    rep.detail.empty() ? "" : "\n        ", rep.detail.c_str());
        std::fflush(stdout);
        if (!rep.pass) ++failures;
    }
    if (failures > 0) {
        std::printf("acceptance: %d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    return 0;
}
