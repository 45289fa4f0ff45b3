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
 * @file acceptance_criteria.hpp
 * @brief The acceptance criteria run by the acceptance binary.
 */

#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "cfisac/conic/eig.hpp"
#include "cfisac/conic/sdp.hpp"
#include "cfisac/rng.hpp"

namespace cfisac::acceptance {

struct Report {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::function<Report()> run;
};

namespace detail {

inline std::string format(const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return buf;
}

/// Solver unit checks: exact top-eigenvalue programs, certified
/// infeasibility from contradictory trace bounds, and a 100-instance
/// random batch with tight duality gaps.
inline Report solver_suite() {
    using namespace cfisac::conic;
    Report rep;

    // Top-eigenvalue programs: max Tr(CX), Tr(X) = 1.
    double worst_lmax_err = 0.0;
    for (int t = 0; t < 10; ++t) {
        Rng rng = Rng::derive(4200, t, "lmax");
        const int n = 2 + t % 4;
        const CMat C = hermitian_part(rng.cnormal_matrix(n, n));
        SdpProblem prob;
        prob.blocks = {{n, true}};
        prob.objective = {C};
        SdpConstraint tr;
        tr.coeffs.emplace_back(0, CMat::Identity(n, n));
        tr.sense = Sense::eq;
        tr.rhs = 1.0;
        prob.constraints = {tr};
        const SdpSolution sol = solve_sdp(prob);
        if (sol.status != SolveStatus::optimal) {
            rep.detail = format("top-eigenvalue instance %d: status %s", t, to_string(sol.status));
            return rep;
        }
        const double lmax = hermitian_eig(C).eigenvalues(0);
        worst_lmax_err = std::max(worst_lmax_err,
                                  std::abs(sol.objective - lmax) / (1.0 + std::abs(lmax)));
    }
    if (worst_lmax_err > 1e-7) {
        rep.detail = format("top-eigenvalue error %.2e > 1e-7", worst_lmax_err);
        return rep;
    }

    // Certified infeasibility: Tr(X) <= 1 against Tr(X) >= 2.
    {
        SdpProblem prob;
        prob.blocks = {{2, true}};
        prob.objective = {CMat::Identity(2, 2)};
        SdpConstraint lo, hi;
        lo.coeffs.emplace_back(0, CMat::Identity(2, 2));
        lo.sense = Sense::le;
        lo.rhs = 1.0;
        hi.coeffs.emplace_back(0, CMat::Identity(2, 2));
        hi.sense = Sense::ge;
        hi.rhs = 2.0;
        prob.constraints = {lo, hi};
        const SdpSolution sol = solve_sdp(prob);
        if (sol.status != SolveStatus::infeasible || !sol.has_certificate) {
            rep.detail = format("contradictory traces: status %s, certificate=%d",
                                to_string(sol.status), sol.has_certificate ? 1 : 0);
            return rep;
        }
        const double q = verify_infeasibility_certificate(prob, sol.farkas_weights);
        if (q > 1e-6) {
            rep.detail = format("infeasibility certificate quality %.2e > 1e-6", q);
            return rep;
        }
    }

    // Random feasible batch: 100 instances, duality gap <= 1e-7.
    double worst_gap = 0.0, worst_feas = 0.0;
    for (int t = 0; t < 100; ++t) {
        Rng rng = Rng::derive(4300, t, "batch");
        const int nb = 1 + static_cast<int>(rng.uniform(0.0, 2.0));
        SdpProblem prob;
        std::vector<CMat> X0;
        for (int k = 0; k < nb; ++k) {
            const int n = 2 + static_cast<int>(rng.uniform(0.0, 4.0));
            prob.blocks.push_back({n, true});
            prob.objective.push_back(hermitian_part(rng.cnormal_matrix(n, n)));
            const CMat g = rng.cnormal_matrix(n, n);
            X0.push_back(g * g.adjoint() + 0.5 * CMat::Identity(n, n));
        }
        for (int k = 0; k < nb; ++k) {
            SdpConstraint cap;
            cap.coeffs.emplace_back(k, CMat::Identity(prob.blocks[k].dim, prob.blocks[k].dim));
            cap.sense = Sense::le;
            cap.rhs = std::real(X0[k].trace()) + 1.0;
            prob.constraints.push_back(cap);
        }
        const int extra = 1 + static_cast<int>(rng.uniform(0.0, 3.0));
        for (int i = 0; i < extra; ++i) {
            SdpConstraint con;
            double val = 0.0;
            for (int k = 0; k < nb; ++k) {
                const CMat A = hermitian_part(rng.cnormal_matrix(prob.blocks[k].dim, prob.blocks[k].dim));
                val += std::real((A * X0[k]).trace());
                con.coeffs.emplace_back(k, A);
            }
            const double slack = 0.3 + rng.uniform();
            con.sense = (rng.uniform() < 0.5) ? Sense::le : Sense::ge;
            con.rhs = (con.sense == Sense::le) ? val + slack : val - slack;
            prob.constraints.push_back(con);
        }

        const SdpSolution sol = solve_sdp(prob);
        if (sol.status != SolveStatus::optimal) {
            rep.detail = format("random instance %d: status %s", t, to_string(sol.status));
            return rep;
        }
        worst_gap = std::max(worst_gap, sol.rel_gap);
        worst_feas = std::max({worst_feas, sol.max_ineq_violation, sol.max_eq_violation,
                               -sol.min_eig_ratio});
    }
    if (worst_gap > 1e-7 || worst_feas > 1e-7) {
        rep.detail = format("random batch: worst gap %.2e, worst violation %.2e", worst_gap,
                            worst_feas);
        return rep;
    }

    rep.pass = true;
    rep.detail = format("top-eig err %.1e; certified infeasibility; batch gap %.1e", worst_lmax_err,
                        worst_gap);
    return rep;
}

} // namespace detail

inline std::vector<Criterion> all_criteria() {
    return {
        {"solver-suite", detail::solver_suite},
    };
}

} // namespace cfisac::acceptance
