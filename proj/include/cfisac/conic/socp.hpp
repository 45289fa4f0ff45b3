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
 * @file socp.hpp
 * @brief Second-order cone feasibility over complex decision variables.
 *
 * A feasibility instance is a set of cones
 *
 *     || A_j x + b_j || <= Re(c_j^H x) + d_j           (x in C^n)
 *
 * some of which are marked "soft". Feasibility is decided through the
 * max-margin phase-I program
 *
 *     maximize t   s.t.   || A_j x + b_j || <= Re(c_j^H x) + d_j - t
 *
 * over the soft cones (hard cones keep t out). The instance is feasible
 * iff the optimal margin t* >= 0; the optimizing x is returned either way,
 * and -t* measures the infeasibility gap. Complex variables are split into
 * real and imaginary parts; the program is handed to the conic engine in
 * its dual role, so x and t appear as free variables.
 */

#include <vector>

#include "cfisac/common.hpp"
#include "cfisac/conic/solver.hpp"

namespace cfisac::conic {

struct SocpCone {
    CMat A;           ///< k x n (k = 0 allowed: pure affine-head cone)
    CVec b;           ///< size k
    CVec c;           ///< size n (zero allowed)
    double d = 0.0;
    bool soft = false; ///< margin-carrying cone
};

struct SocpFeasibilityProblem {
    int dim = 0; ///< number of complex decision variables
    std::vector<SocpCone> cones;
};

struct SocpFeasibilityResult {
    SolveStatus status = SolveStatus::numerical_failure;
    bool feasible = false;
    double margin = 0.0; ///< optimal t* (0 when no soft cone is present)
    CVec x;
    int iterations = 0;
};

/// Worst cone violation of a point: max_j (||A_j x + b_j|| - head_j).
/// Negative means strictly inside every cone.
inline double socp_violation(const SocpFeasibilityProblem& prob, const CVec& x) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& cone : prob.cones) {
        const double head = (cone.c.size() ? std::real(cone.c.dot(x)) : 0.0) + cone.d;
        const double tail = cone.A.size() ? (cone.A * x + cone.b).norm() : cone.b.norm();
        worst = std::max(worst, tail - head);
    }
    return worst;
}

inline SocpFeasibilityResult solve_socp_feasibility(const SocpFeasibilityProblem& prob,
                                                    double feas_tol = 1e-7,
                                                    SolverOptions solver_opts = {}) {
    const int n = prob.dim;
    if (n <= 0 || prob.cones.empty())
        throw contract_error("solve_socp_feasibility: empty problem");
    bool any_soft = false;
    for (const auto& cone : prob.cones) any_soft |= cone.soft;
    const int m = 2 * n + (any_soft ? 1 : 0); // engine rows: Re x, Im x, t

    Problem eng;
    for (const auto& cone : prob.cones) {
        const int k = static_cast<int>(cone.A.rows());
        eng.layout.blocks.push_back({BlockType::soc, 1 + 2 * k});
    }
    // Engine-dual form: slack s_j = c_j - A_e^T y must reproduce the cone
    // entries as affine functions of y = [Re x; Im x; t].
    eng.c = ConeVec::zero(eng.layout);
    std::vector<ConeVec> rows(m, ConeVec::zero(eng.layout));
    for (size_t j = 0; j < prob.cones.size(); ++j) {
        const auto& cone = prob.cones[j];
        const int k = static_cast<int>(cone.A.rows());
        // Head entry: Re(c^H x) + d - t*soft.
        eng.c.v[j](0) = cone.d;
        for (int v = 0; v < n; ++v) {
            if (cone.c.size()) {
                rows[v].v[j](0) -= std::real(cone.c(v));      // d/d Re(x_v)
                rows[n + v].v[j](0) -= std::imag(cone.c(v));  // d/d Im(x_v)
            }
        }
        if (cone.soft && any_soft) rows[2 * n].v[j](0) = 1.0;
        // Tail entries: Re and Im of (A x + b).
        for (int i = 0; i < k; ++i) {
            eng.c.v[j](1 + 2 * i) = std::real(cone.b(i));
            eng.c.v[j](2 + 2 * i) = std::imag(cone.b(i));
            for (int v = 0; v < n; ++v) {
                const cplx a = cone.A(i, v);
                rows[v].v[j](1 + 2 * i) -= std::real(a);
                rows[v].v[j](2 + 2 * i) -= std::imag(a);
                rows[n + v].v[j](1 + 2 * i) += std::imag(a);
                rows[n + v].v[j](2 + 2 * i) -= std::real(a);
            }
        }
    }
    eng.rows = std::move(rows);
    eng.b = RVec::Zero(m);
    if (any_soft) eng.b(2 * n) = 1.0; // maximize t

    Solver solver(eng, solver_opts);
    const SolverResult r = solver.solve();

    SocpFeasibilityResult out;
    out.status = r.status;
    out.iterations = r.iterations;
    if (r.status != SolveStatus::optimal) return out;
    out.x.resize(n);
    for (int v = 0; v < n; ++v) out.x(v) = cplx(r.y(v), r.y(n + v));
    out.margin = any_soft ? r.y(2 * n) : 0.0;
    out.feasible = out.margin >= -feas_tol;
    return out;
}

} // namespace cfisac::conic
