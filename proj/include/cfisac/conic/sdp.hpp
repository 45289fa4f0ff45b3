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
 * @file sdp.hpp
 * @brief Block semidefinite programming layer over the conic engine.
 *
 * Problems are stated in natural form over complex Hermitian (or real
 * symmetric) PSD blocks:
 *
 *     maximize   sum_k Tr(C_k X_k)
 *     subject to sum_k Tr(A_{ik} X_k)  (<=|=|>=)  b_i,   X_k >= 0.
 *
 * Complex blocks are solved through the 2n real embedding with halved
 * coefficients, so objective values, constraint values and multipliers all
 * match the complex-domain problem exactly; solutions are mapped back to
 * Hermitian matrices before anything is reported.
 *
 * Reported multipliers follow the maximize convention: m_i >= 0 for both
 * inequality senses, with block stationarity
 *     C_k - sum_{<=} m_i A_{ik} + sum_{>=} m_i A_{ik} - sum_{=} m_i A_{ik}
 * negative semidefinite, and dual objective (an upper bound on the optimum)
 *     sum_{<=} m_i b_i - sum_{>=} m_i b_i + sum_{=} m_i b_i.
 *
 * After the interior-point solve, a least-norm "polish" projection snaps
 * violated constraints onto their boundary; this keeps per-constraint
 * *relative* feasibility tight even for badly scaled rows (tiny noise
 * powers) where the absolute residual floor of any IPM would dominate.
 * An independent re-verification pass (direct evaluation of every
 * constraint and of block eigenvalues) fills the violation fields.
 */

#include <utility>
#include <vector>

#include "cfisac/common.hpp"
#include "cfisac/conic/eig.hpp"
#include "cfisac/conic/solver.hpp"

namespace cfisac::conic {

enum class Sense { eq, le, ge };

struct SdpBlockSpec {
    int dim = 0;               ///< matrix side (complex side for complex blocks)
    bool complex_field = true; ///< complex Hermitian block vs real symmetric
};

/// One linear constraint: sparse list of (block index, coefficient matrix).
/// Coefficients of complex blocks must be Hermitian; real blocks symmetric
/// (stored in the real part of the CMat).
struct SdpConstraint {
    std::vector<std::pair<int, CMat>> coeffs;
    Sense sense = Sense::le;
    double rhs = 0.0;
};

struct SdpProblem {
    std::vector<SdpBlockSpec> blocks;
    std::vector<CMat> objective; ///< per block, maximize sum Tr(C_k X_k); may be empty matrices
    std::vector<SdpConstraint> constraints;
};

struct SdpOptions {
    SolverOptions solver;
    bool polish = true;
    bool feasibility_only = false; ///< ignore the objective (phase-I probe)
    double herm_tol = 1e-12;       ///< Hermitian validation tolerance
};

struct SdpSolution {
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<CMat> X;      ///< Hermitian blocks (real blocks: zero imag part)
    RVec multipliers;         ///< per constraint, maximize convention (see file docs)
    double objective = 0.0;
    double dual_objective = 0.0;
    double rel_gap = 0.0, primal_res = 0.0, dual_res = 0.0;
    int iterations = 0;

    /// Independent feasibility re-verification (direct evaluation):
    double max_eq_violation = 0.0;   ///< relative, over equality rows
    double max_ineq_violation = 0.0; ///< relative, over violated inequality rows
    double min_eig_ratio = 0.0;      ///< min block eigenvalue / max block eigenvalue

    /// Farkas certificate when status == infeasible: weights w with
    /// w_i >= 0 on <= rows, w_i <= 0 on >= rows, sum_i w_i b_i = -1 and
    /// -sum_i w_i A_{ik} >= 0 per block (an inconsistent aggregate).
    RVec farkas_weights;
    bool has_certificate = false;
};

namespace detail {

/// Symmetrized engine coefficient of one SDP coefficient matrix.
inline RMat engine_coeff(const SdpBlockSpec& blk, const CMat& A) {
    if (blk.complex_field) return 0.5 * embed_hermitian(hermitian_part(A));
    return symmetric_part(A.real());
}

} // namespace detail

/// Direct evaluation of constraint i on complex-domain blocks.
inline double sdp_constraint_value(const SdpProblem& prob, const SdpConstraint& con,
                                   const std::vector<CMat>& X) {
    double v = 0.0;
    for (const auto& [k, A] : con.coeffs) {
        if (prob.blocks[k].complex_field)
            v += std::real((A * X[k]).trace());
        else
            v += (A.real().cwiseProduct(X[k].real())).sum();
    }
    return v;
}

inline double sdp_objective_value(const SdpProblem& prob, const std::vector<CMat>& X) {
    double v = 0.0;
    for (size_t k = 0; k < prob.blocks.size(); ++k) {
        if (prob.objective.size() <= k || prob.objective[k].size() == 0) continue;
        if (prob.blocks[k].complex_field)
            v += std::real((prob.objective[k] * X[k]).trace());
        else
            v += (prob.objective[k].real().cwiseProduct(X[k].real())).sum();
    }
    return v;
}

/// Least-norm correction moving X onto the boundary of the rows listed in
/// `active`: X += sum_i w_i A_i with Gram-system weights. Complex-domain,
/// preserves Hermitian structure exactly.
inline void sdp_polish(const SdpProblem& prob, std::vector<CMat>& X,
                       const std::vector<int>& active) {
    const int na = static_cast<int>(active.size());
    if (na == 0) return;
    RMat G(na, na);
    RVec d(na);
    for (int a = 0; a < na; ++a) {
        const auto& ca = prob.constraints[active[a]];
        d(a) = ca.rhs - sdp_constraint_value(prob, ca, X);
        for (int bidx = a; bidx < na; ++bidx) {
            const auto& cb = prob.constraints[active[bidx]];
            double g = 0.0;
            for (const auto& [ka, Aa] : ca.coeffs)
                for (const auto& [kb, Ab] : cb.coeffs)
                    if (ka == kb) g += std::real((Aa.adjoint() * Ab).trace());
            G(a, bidx) = g;
            G(bidx, a) = g;
        }
    }
    G.diagonal().array() += 1e-12 * (1.0 + G.trace() / na);
    const RVec w = G.ldlt().solve(d);
    for (int a = 0; a < na; ++a)
        for (const auto& [k, A] : prob.constraints[active[a]].coeffs)
            X[k] += w(a) * (prob.blocks[k].complex_field ? hermitian_part(A)
                                                         : CMat(symmetric_part(A.real())));
}

/// Solves a block SDP. See the file comment for conventions.
inline SdpSolution solve_sdp(const SdpProblem& prob, const SdpOptions& opts = {}) {
    const int nb = static_cast<int>(prob.blocks.size());
    const int m = static_cast<int>(prob.constraints.size());
    if (nb == 0 || m == 0) throw contract_error("solve_sdp: empty problem");

    // Validate coefficient symmetry up front.
    for (int k = 0; k < nb; ++k)
        if (k < static_cast<int>(prob.objective.size()) && prob.objective[k].size() != 0 &&
            prob.blocks[k].complex_field)
            require_hermitian(prob.objective[k], opts.herm_tol,
                              "solve_sdp: objective block must be Hermitian");
    for (const auto& con : prob.constraints)
        for (const auto& [k, A] : con.coeffs)
            if (prob.blocks[k].complex_field)
                require_hermitian(A, opts.herm_tol, "solve_sdp: constraint block must be Hermitian");

    // Engine layout: PSD blocks in order, then one slack block for the
    // inequality rows.
    Problem eng;
    int n_slack = 0;
    for (const auto& con : prob.constraints)
        if (con.sense != Sense::eq) ++n_slack;
    for (int k = 0; k < nb; ++k) {
        const int d = prob.blocks[k].complex_field ? 2 * prob.blocks[k].dim : prob.blocks[k].dim;
        eng.layout.blocks.push_back({BlockType::psd, d});
    }
    const int slack_block = nb;
    if (n_slack > 0) eng.layout.blocks.push_back({BlockType::nonneg, n_slack});

    eng.c = ConeVec::zero(eng.layout);
    if (!opts.feasibility_only) {
        for (int k = 0; k < nb && k < static_cast<int>(prob.objective.size()); ++k)
            if (prob.objective[k].size() != 0)
                eng.c.M[k] = -detail::engine_coeff(prob.blocks[k], prob.objective[k]);
    }

    eng.b.resize(m);
    int slack_pos = 0;
    std::vector<int> slack_index(m, -1);
    for (int i = 0; i < m; ++i) {
        const auto& con = prob.constraints[i];
        ConeVec row = ConeVec::zero(eng.layout);
        for (const auto& [k, A] : con.coeffs)
            row.M[k] += detail::engine_coeff(prob.blocks[k], A);
        if (con.sense != Sense::eq) {
            slack_index[i] = slack_pos;
            row.v[slack_block](slack_pos++) = (con.sense == Sense::le) ? 1.0 : -1.0;
        }
        eng.rows.push_back(std::move(row));
        eng.b(i) = con.rhs;
    }

    Solver solver(eng, opts.solver);
    const SolverResult r = solver.solve();

    SdpSolution sol;
    sol.status = r.status;
    sol.iterations = r.iterations;
    sol.rel_gap = r.rel_gap;
    sol.primal_res = r.primal_res;
    sol.dual_res = r.dual_res;

    if (r.status == SolveStatus::infeasible && r.has_certificate) {
        // Engine certificate has b^T y = 1 with -A^T y in K; flip to the
        // documented maximize-frame normalization sum w b = -1.
        sol.farkas_weights = -r.y_certificate;
        sol.has_certificate = true;
        return sol;
    }
    if (r.status != SolveStatus::optimal && r.status != SolveStatus::max_iters) return sol;

    // Map blocks back to the complex domain.
    sol.X.resize(nb);
    for (int k = 0; k < nb; ++k) {
        if (prob.blocks[k].complex_field)
            sol.X[k] = complexify_embedded(r.x.M[k]);
        else
            sol.X[k] = symmetric_part(r.x.M[k]).cast<cplx>();
    }
    // Multipliers in the maximize convention.
    sol.multipliers.resize(m);
    for (int i = 0; i < m; ++i)
        sol.multipliers(i) = (prob.constraints[i].sense == Sense::ge) ? r.y(i) : -r.y(i);

    if (opts.polish && r.status == SolveStatus::optimal) {
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<int> active;
            for (int i = 0; i < m; ++i) {
                const auto& con = prob.constraints[i];
                const double v = sdp_constraint_value(prob, con, sol.X);
                const double tol0 = 0.0;
                if (con.sense == Sense::eq ? true
                                           : (con.sense == Sense::le ? v > con.rhs + tol0
                                                                     : v < con.rhs - tol0))
                    active.push_back(i);
            }
            if (active.empty()) break;
            sdp_polish(prob, sol.X, active);
        }
    }

    sol.objective = sdp_objective_value(prob, sol.X);
    sol.dual_objective = 0.0;
    for (int i = 0; i < m; ++i) {
        const auto& con = prob.constraints[i];
        const double sgn = (con.sense == Sense::ge) ? -1.0 : 1.0;
        sol.dual_objective += sgn * sol.multipliers(i) * con.rhs;
    }

    // Independent feasibility re-verification on the reported blocks.
    for (int i = 0; i < m; ++i) {
        const auto& con = prob.constraints[i];
        const double v = sdp_constraint_value(prob, con, sol.X);
        const double rel = (v - con.rhs) / (1.0 + std::abs(con.rhs));
        if (con.sense == Sense::eq)
            sol.max_eq_violation = std::max(sol.max_eq_violation, std::abs(rel));
        else if (con.sense == Sense::le)
            sol.max_ineq_violation = std::max(sol.max_ineq_violation, rel);
        else
            sol.max_ineq_violation = std::max(sol.max_ineq_violation, -rel);
    }
    sol.max_ineq_violation = std::max(sol.max_ineq_violation, 0.0);
    double min_ratio = 0.0;
    for (int k = 0; k < nb; ++k) {
        const RVec ev = hermitian_eig(sol.X[k]).eigenvalues;
        const double top = std::max(ev(0), 1e-300);
        min_ratio = std::min(min_ratio, ev(ev.size() - 1) / top);
    }
    sol.min_eig_ratio = min_ratio;
    return sol;
}

/// Validates a Farkas infeasibility certificate by direct evaluation.
/// The weighted constraint aggregate forces <sum_i w_i A_i, X> <= -1 for
/// any feasible X (w >= 0 on <= rows, w <= 0 on >= rows), while
/// sum_i w_i A_{ik} >= 0 makes that inner product nonnegative over the PSD
/// cone — a contradiction. Returns the worst violation of these conditions.
inline double verify_infeasibility_certificate(const SdpProblem& prob, const RVec& w) {
    const int m = static_cast<int>(prob.constraints.size());
    double worst = 0.0;
    double wb = 0.0;
    std::vector<CMat> agg(prob.blocks.size());
    for (size_t k = 0; k < prob.blocks.size(); ++k)
        agg[k] = CMat::Zero(prob.blocks[k].dim, prob.blocks[k].dim);
    for (int i = 0; i < m; ++i) {
        const auto& con = prob.constraints[i];
        wb += w(i) * con.rhs;
        if (con.sense == Sense::le) worst = std::max(worst, -w(i));
        if (con.sense == Sense::ge) worst = std::max(worst, w(i));
        for (const auto& [k, A] : con.coeffs)
            agg[k] += w(i) * (prob.blocks[k].complex_field ? hermitian_part(A)
                                                           : CMat(symmetric_part(A.real())));
    }
    worst = std::max(worst, std::abs(wb + 1.0));
    for (size_t k = 0; k < prob.blocks.size(); ++k) {
        const RVec ev = hermitian_eig(agg[k]).eigenvalues;
        const double scale = std::max(std::abs(ev(0)), 1.0);
        worst = std::max(worst, -ev(ev.size() - 1) / scale);
    }
    return worst;
}

} // namespace cfisac::conic
