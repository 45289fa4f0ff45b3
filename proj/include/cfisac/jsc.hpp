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
 * @file jsc.hpp
 * @brief Joint sensing-and-communication beamforming via semidefinite
 *        relaxation.
 *
 * The joint design maximizes the sensing SNR numerator Tr(A sum_s F_s)
 * over PSD covariance blocks {F_u} (one per user with an active SINR
 * threshold) and one aggregate sensing block F_Q, subject to per-user SINR
 * thresholds and per-AP power budgets. Dropping the rank constraints makes
 * this a semidefinite program whose optimum upper-bounds every
 * beamforming-vector design; a closed-form conversion then recovers rank-1
 * user beams without losing objective value, and the aggregate sensing
 * block is spent on at most Q eigen-beams.
 *
 * The module also exposes the dual certificates: the per-user and sensing
 * dual matrices (whose negative semidefiniteness and complementary
 * slackness certify optimality) and the structural consequences for how
 * many sensing streams can carry power.
 */

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "cfisac/common.hpp"
#include "cfisac/conic/eig.hpp"
#include "cfisac/conic/sdp.hpp"
#include "cfisac/model.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

/// Joint-design problem instance: network, channels, per-user SINR
/// thresholds (linear), and the sensing stream budget Q.
struct JscProblemSpec {
    Scenario scenario;
    ChannelSet channels;
    RVec gamma;             ///< per-user SINR thresholds, linear scale
    int n_sens_streams = 1; ///< Q, used by recovery and rank reporting

    /// Users below this threshold are treated as switched off: they get no
    /// covariance block and a zero beam.
    static constexpr double active_gamma_floor = 1e-12;

    void validate() const {
        if (gamma.size() != scenario.num_ues() || channels.num_ues() != scenario.num_ues())
            throw contract_error("JscProblemSpec: user count mismatch");
        if ((gamma.array() < 0.0).any())
            throw contract_error("JscProblemSpec: SINR thresholds must be non-negative");
        if (n_sens_streams < 0)
            throw contract_error("JscProblemSpec: sensing stream count must be non-negative");
        if (channels.num_tx_aps() != scenario.num_tx_aps() ||
            channels.n_tx_antennas() != scenario.n_tx_antennas)
            throw contract_error("JscProblemSpec: channel set does not match scenario");
    }
    bool user_active(int u) const { return gamma(u) > active_gamma_floor; }
};

/// Solution of the relaxed joint design (covariance form).
struct JscSdrSolution {
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<CMat> user_matrices; ///< F'_u, stacked dim; zero for inactive users
    CMat sensing_matrix;             ///< F'_Q, stacked dim
    double sdr_objective = 0.0;      ///< sensing-SNR numerator Tr(A sum F)
    RVec lambda_u;                   ///< SINR duals (zero for inactive users)
    RVec nu_m;                       ///< per-AP power duals
    double dual_objective = 0.0;     ///< sum nu_m P_m - sum lambda_u sigma_u^2
    double rel_gap = 0.0;
    double max_constraint_violation = 0.0; ///< relative, after polishing
    double min_eig_ratio = 0.0;            ///< block PSD quality
    int iterations = 0;
    bool has_certificate = false; ///< validated infeasibility certificate

    /// Primal blocks from the dual-producing barrier solve. The reported
    /// user/sensing matrices may be a different equal-objective point of
    /// the optimal face (see solve_jsc_sdr), and complementary slackness
    /// is a property of a primal/dual pair, so the KKT report checks it
    /// against these.
    std::vector<CMat> certificate_user_matrices;
    CMat certificate_sensing_matrix;
};

namespace detail {

/// Per-AP orthonormal bases spanning the local user channels and the local
/// target steering vector. Any feasible covariance set can be compressed
/// onto these spans without changing the objective, the SINR traces, or
/// feasibility (per-AP power only shrinks), so the semidefinite solve runs
/// in the reduced dimension.
struct JscBasis {
    std::vector<CMat> basis; ///< per AP: N_t x r_m
    std::vector<int> offset; ///< starting row of AP m in the reduced space
    int total = 0;           ///< sum r_m

    CVec reduce(const ChannelSet& ch, const CVec& stacked) const {
        const int nt = ch.n_tx_antennas();
        CVec out(total);
        for (size_t m = 0; m < basis.size(); ++m)
            out.segment(offset[m], basis[m].cols()) =
                basis[m].adjoint() *
                stacked.segment(static_cast<Eigen::Index>(m) * nt, nt);
        return out;
    }
    CMat expand(const ChannelSet& ch, const CMat& reduced) const {
        const int nt = ch.n_tx_antennas();
        const Eigen::Index d = static_cast<Eigen::Index>(basis.size()) * nt;
        CMat out = CMat::Zero(d, d);
        for (size_t m = 0; m < basis.size(); ++m)
            for (size_t mm = 0; mm < basis.size(); ++mm)
                out.block(static_cast<Eigen::Index>(m) * nt,
                          static_cast<Eigen::Index>(mm) * nt, nt, nt) =
                    basis[m] *
                    reduced.block(offset[m], offset[mm], basis[m].cols(), basis[mm].cols()) *
                    basis[mm].adjoint();
        return out;
    }
};

inline JscBasis make_jsc_basis(const ChannelSet& ch) {
    const int mt = ch.num_tx_aps();
    const int nt = ch.n_tx_antennas();
    JscBasis jb;
    jb.basis.resize(static_cast<size_t>(mt));
    jb.offset.resize(static_cast<size_t>(mt));
    for (int m = 0; m < mt; ++m) {
        CMat span(nt, ch.num_ues() + 1);
        if (ch.num_ues() > 0) span.leftCols(ch.num_ues()) = ch.h[static_cast<size_t>(m)];
        span.col(ch.num_ues()) = ch.tx_steering[static_cast<size_t>(m)];
        Eigen::ColPivHouseholderQR<CMat> qr(span);
        const Eigen::Index r = std::max<Eigen::Index>(qr.rank(), 1);
        jb.offset[static_cast<size_t>(m)] = jb.total;
        jb.basis[static_cast<size_t>(m)] = CMat(qr.householderQ()).leftCols(r);
        jb.total += static_cast<int>(r);
    }
    return jb;
}


/// The channel-orthogonal steering slice (reduced coordinates).
///
/// Columns form an orthonormal basis for covariance directions that are
/// (a) supported by the per-AP steering directions -- at an optimum the
/// sensing block has no mass anywhere else -- and (b) orthogonal to every
/// active user channel, so power placed there creates no interference.
inline CMat make_sensing_slice(const JscBasis& jb, const ChannelSet& ch,
                               const std::vector<CVec>& hr,
                               const std::vector<int>& active) {
    const int mt = ch.num_tx_aps();
    const int r = jb.total;
    const int na = static_cast<int>(active.size());

    // Unit steering directions embedded in the reduced space, one per AP.
    CMat w = CMat::Zero(r, mt);
    for (int m = 0; m < mt; ++m) {
        CVec am = jb.basis[static_cast<size_t>(m)].adjoint() * ch.tx_steering[static_cast<size_t>(m)];
        const double an = am.norm();
        if (an > 0.0) w.block(jb.offset[static_cast<size_t>(m)], m, am.size(), 1) = am / an;
    }

    // Steering-coefficient vectors orthogonal to every active channel.
    CMat nullb;
    if (na == 0) {
        nullb = CMat::Identity(mt, mt);
    } else {
        CMat g(na, mt);
        for (int i = 0; i < na; ++i)
            g.row(i) = hr[static_cast<size_t>(active[static_cast<size_t>(i)])].adjoint() * w;
        Eigen::JacobiSVD<CMat> svd(g, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        Eigen::Index rank = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > 1e-8 * sv(0)) ++rank;
        nullb = svd.matrixV().rightCols(mt - rank);
    }
    return w * nullb;
}

} // namespace detail

/// Solves the relaxed joint design. The relaxation optimum upper-bounds
/// every rank-constrained beam design with the same thresholds; duals are
/// returned for the certificate reports. Status is `infeasible` (with a
/// validated certificate) when the thresholds cannot be met.
inline JscSdrSolution solve_jsc_sdr(const JscProblemSpec& spec,
                                    const conic::SdpOptions& opts = {}) {
    spec.validate();
    const Scenario& sc = spec.scenario;
    const ChannelSet& ch = spec.channels;
    const int mt = sc.num_tx_aps();
    const int u_count = sc.num_ues();
    const Eigen::Index d = sc.stacked_dim();

    std::vector<int> active;
    for (int u = 0; u < u_count; ++u)
        if (spec.user_active(u)) active.push_back(u);
    const int na = static_cast<int>(active.size());

    const detail::JscBasis jb = detail::make_jsc_basis(ch);
    const int r = jb.total;

    // Reduced data: channel vectors, steering outer products, AP selectors.
    std::vector<CVec> hr(static_cast<size_t>(u_count));
    for (int u = 0; u < u_count; ++u) hr[static_cast<size_t>(u)] = jb.reduce(ch, ch.stacked_channel(u));
    const RVec zbar = sc.aggregated_sensing_gain();
    CMat a_red = CMat::Zero(r, r);
    for (int m = 0; m < mt; ++m) {
        const CVec am = jb.basis[static_cast<size_t>(m)].adjoint() * ch.tx_steering[static_cast<size_t>(m)];
        a_red.block(jb.offset[static_cast<size_t>(m)], jb.offset[static_cast<size_t>(m)], am.size(), am.size()) =
            zbar(m) * (am * am.adjoint());
    }

    conic::SdpProblem prob;
    prob.blocks.assign(static_cast<size_t>(na) + 1, conic::SdpBlockSpec{r, true});
    prob.objective.assign(static_cast<size_t>(na) + 1, a_red);

    // SINR rows (one per active user), normalized by ||h_u||^2 so every row
    // is O(1) regardless of pathloss scale. The user's own block keeps the
    // 1/gamma_u coefficient; every other block sees -Q_u.
    for (int i = 0; i < na; ++i) {
        const int u = active[static_cast<size_t>(i)];
        const double hn2 = hr[static_cast<size_t>(u)].squaredNorm();
        if (!(hn2 > 0.0))
            throw contract_error("solve_jsc_sdr: active user with zero channel");
        const CMat q = hr[static_cast<size_t>(u)] * hr[static_cast<size_t>(u)].adjoint() / hn2;
        conic::SdpConstraint con;
        con.sense = conic::Sense::ge;
        con.rhs = sc.ue_noise_var(u) / hn2;
        for (int k = 0; k <= na; ++k)
            con.coeffs.push_back({k, k == i ? CMat(q / spec.gamma(u)) : CMat(-q)});
        prob.constraints.push_back(std::move(con));
    }
    for (int m = 0; m < mt; ++m) {
        conic::SdpConstraint con;
        con.sense = conic::Sense::le;
        con.rhs = sc.ap_power_budget(m);
        CMat sel = CMat::Zero(r, r);
        const Eigen::Index rm = jb.basis[static_cast<size_t>(m)].cols();
        sel.block(jb.offset[static_cast<size_t>(m)], jb.offset[static_cast<size_t>(m)], rm, rm).setIdentity();
        for (int k = 0; k <= na; ++k) con.coeffs.push_back({k, sel});
        prob.constraints.push_back(std::move(con));
    }

    const conic::SdpSolution sol = conic::solve_sdp(prob, opts);

    JscSdrSolution out;
    out.status = sol.status;
    out.iterations = sol.iterations;
    out.rel_gap = sol.rel_gap;
    out.has_certificate = sol.has_certificate;
    if (sol.status != SolveStatus::optimal) return out;
    out.max_constraint_violation = std::max(sol.max_eq_violation, sol.max_ineq_violation);
    out.min_eig_ratio = sol.min_eig_ratio;

    // Structured re-solve. The first pass certifies the optimal value but
    // lands on an arbitrary member of the optimal face, and near power
    // saturation that face (or its within-tolerance neighborhood) is fat:
    // the returned sensing block is typically max-rank. A canonical
    // representative always exists with the sensing block confined to the
    // channel-orthogonal steering slice V: at an optimum the sensing block
    // has no mass outside the per-AP steering directions, and any of its
    // mass along an active user's channel can be reassigned to that user's
    // block (every other rate row sees the mass as interference either
    // way; the user's own row only gains). The re-solve therefore imposes
    // F_Q = V C V^H with C = S + t I (S PSD on the slice, t a scalar
    // eigenvalue floor), which bounds the sensing rank by the slice
    // dimension structurally, and pins the remaining freedom in two
    // stages: stage A locks the first-pass objective and maximizes the
    // floor t, so every slice direction carries comparable sensing mass
    // (the block-diagonal gain cannot distinguish how mass is spread
    // across the slice, and the degenerate extremes -- all mass on one
    // cross-AP beam, or absorbed into the communication beams -- would
    // misreport how many sensing streams the optimum needs); stage B
    // locks the floor too and maximizes own-channel gains, collapsing
    // each user block onto a single beam. Where the optimum is unique the
    // lock pins the re-solve to it and t is simply its smallest slice
    // eigenvalue, so nothing is distorted. Each stage is accepted only if
    // it reproduces the first-pass objective; otherwise the first-pass
    // matrices stand.
    std::vector<CMat> x_final(static_cast<size_t>(na) + 1);
    for (int k = 0; k <= na; ++k) x_final[static_cast<size_t>(k)] = sol.X[static_cast<size_t>(k)];
    if (na > 0) {
        double obj_red = 0.0;
        for (int k = 0; k <= na; ++k)
            obj_red += std::real((a_red * sol.X[static_cast<size_t>(k)]).trace());
        const CMat slice = detail::make_sensing_slice(jb, ch, hr, active);
        const Eigen::Index kdim = slice.cols();
        const bool with_c = kdim > 0;
        const int sblk = na;     // slice block S, if present
        const int tblk = na + 1; // eigenvalue-floor scalar, if present
        const CMat a_c = with_c ? CMat(slice.adjoint() * a_red * slice) : CMat();
        const CMat one = CMat::Identity(1, 1);

        conic::SdpProblem up;
        up.blocks.assign(static_cast<size_t>(na), conic::SdpBlockSpec{r, true});
        if (with_c) {
            up.blocks.push_back(conic::SdpBlockSpec{static_cast<int>(kdim), true});
            up.blocks.push_back(conic::SdpBlockSpec{1, false});
        }
        for (int i = 0; i < na; ++i) {
            const int u = active[static_cast<size_t>(i)];
            const double hn2 = hr[static_cast<size_t>(u)].squaredNorm();
            const CMat q = hr[static_cast<size_t>(u)] * hr[static_cast<size_t>(u)].adjoint() / hn2;
            conic::SdpConstraint con;
            con.sense = conic::Sense::ge;
            con.rhs = sc.ue_noise_var(u) / hn2;
            for (int kk = 0; kk < na; ++kk)
                con.coeffs.push_back({kk, kk == i ? CMat(q / spec.gamma(u)) : CMat(-q)});
            // the slice block creates no interference by construction
            up.constraints.push_back(std::move(con));
        }
        for (int m = 0; m < mt; ++m) {
            conic::SdpConstraint con;
            con.sense = conic::Sense::le;
            con.rhs = sc.ap_power_budget(m);
            CMat sel = CMat::Zero(r, r);
            const Eigen::Index rm = jb.basis[static_cast<size_t>(m)].cols();
            sel.block(jb.offset[static_cast<size_t>(m)], jb.offset[static_cast<size_t>(m)], rm, rm)
                .setIdentity();
            for (int kk = 0; kk < na; ++kk) con.coeffs.push_back({kk, sel});
            if (with_c) {
                const CMat vm = slice.block(jb.offset[static_cast<size_t>(m)], 0, rm, kdim);
                const CMat gm = vm.adjoint() * vm;
                con.coeffs.push_back({sblk, gm});
                con.coeffs.push_back({tblk, CMat(std::real(gm.trace()) * one)});
            }
            up.constraints.push_back(std::move(con));
        }

        // Both stages share the objective lock; the structured problem
        // always reaches the first-pass value in exact arithmetic, so the
        // lock is set a hair below it to absorb first-pass roundoff. A
        // slightly softer lock is retried when the tight one leaves the
        // interior too thin for the engine.
        const size_t idx_lock = up.constraints.size();
        {
            conic::SdpConstraint lock;
            lock.sense = conic::Sense::ge;
            lock.rhs = obj_red * (1.0 - 1e-7);
            for (int kk = 0; kk < na; ++kk) lock.coeffs.push_back({kk, a_red});
            if (with_c) {
                lock.coeffs.push_back({sblk, a_c});
                lock.coeffs.push_back({tblk, CMat(std::real(a_c.trace()) * one)});
            }
            up.constraints.push_back(std::move(lock));
        }
        const auto total_gain = [&](const conic::SdpSolution& s) {
            double v = 0.0;
            for (int i = 0; i < na; ++i)
                v += std::real((a_red * s.X[static_cast<size_t>(i)]).trace());
            if (with_c)
                v += std::real((a_c * s.X[static_cast<size_t>(sblk)]).trace()) +
                     std::real(a_c.trace()) * std::real(s.X[static_cast<size_t>(tblk)](0, 0));
            return v;
        };

        const conic::SdpSolution* accepted = nullptr;
        conic::SdpSolution usol_a, usol_b;
        bool stage_a_ok = !with_c; // no slice: nothing to pin, go concentrate
        if (with_c) {
            // Stage A: maximize the eigenvalue floor of the slice block.
            up.objective.assign(static_cast<size_t>(na), CMat(CMat::Zero(r, r)));
            up.objective.push_back(CMat(CMat::Zero(kdim, kdim)));
            up.objective.push_back(one);
            for (double lock_rel : {1e-7, 1e-6}) {
                up.constraints[idx_lock].rhs = obj_red * (1.0 - lock_rel);
                usol_a = conic::solve_sdp(up, opts);
                if (usol_a.status == SolveStatus::optimal &&
                    total_gain(usol_a) >= obj_red * (1.0 - 1e-5)) {
                    stage_a_ok = true;
                    break;
                }
            }
            if (stage_a_ok) {
                accepted = &usol_a;
                out.iterations += usol_a.iterations;
                conic::SdpConstraint pin;
                pin.sense = conic::Sense::ge;
                pin.rhs = std::real(usol_a.X[static_cast<size_t>(tblk)](0, 0)) * (1.0 - 1e-6);
                pin.coeffs.push_back({tblk, one});
                up.constraints.push_back(std::move(pin));
            }
        }
        if (stage_a_ok) {
            // Stage B: concentrate each user block onto its own channel.
            up.objective.clear();
            for (int i = 0; i < na; ++i) {
                const int u = active[static_cast<size_t>(i)];
                const CVec qh = hr[static_cast<size_t>(u)].normalized();
                up.objective.push_back(CMat(qh * qh.adjoint()));
            }
            if (with_c) {
                up.objective.push_back(CMat(CMat::Zero(kdim, kdim)));
                up.objective.push_back(CMat(CMat::Zero(1, 1)));
            }
            usol_b = conic::solve_sdp(up, opts);
            if (usol_b.status == SolveStatus::optimal &&
                total_gain(usol_b) >= obj_red * (1.0 - 1e-5)) {
                accepted = &usol_b;
                out.iterations += usol_b.iterations;
            }
        }
        if (accepted != nullptr) {
            for (int i = 0; i < na; ++i)
                x_final[static_cast<size_t>(i)] = accepted->X[static_cast<size_t>(i)];
            if (with_c) {
                const CMat c_mat =
                    accepted->X[static_cast<size_t>(sblk)] +
                    std::real(accepted->X[static_cast<size_t>(tblk)](0, 0)) *
                        CMat::Identity(kdim, kdim);
                x_final[static_cast<size_t>(na)] = CMat(slice * c_mat * slice.adjoint());
            } else {
                x_final[static_cast<size_t>(na)] = CMat(CMat::Zero(r, r));
            }
            out.max_constraint_violation =
                std::max(accepted->max_eq_violation, accepted->max_ineq_violation);
            out.min_eig_ratio = accepted->min_eig_ratio;
        }
    }

    const auto expand_blocks = [&](const std::vector<CMat>& xs, std::vector<CMat>& users,
                                   CMat& sensing) {
        users.assign(static_cast<size_t>(u_count), CMat::Zero(d, d));
        for (int i = 0; i < na; ++i)
            users[static_cast<size_t>(active[static_cast<size_t>(i)])] =
                jb.expand(ch, xs[static_cast<size_t>(i)]);
        sensing = jb.expand(ch, xs[static_cast<size_t>(na)]);
    };
    expand_blocks(sol.X, out.certificate_user_matrices, out.certificate_sensing_matrix);
    expand_blocks(x_final, out.user_matrices, out.sensing_matrix);

    // Recompute the objective in the full complex domain rather than
    // trusting the engine's internal accounting.
    const CMat a_full = build_sensing_matrix_A(sc, ch);
    CMat total = out.sensing_matrix;
    for (const CMat& fu : out.user_matrices) total += fu;
    out.sdr_objective = std::real((a_full * total).trace());

    out.lambda_u = RVec::Zero(u_count);
    for (int i = 0; i < na; ++i) {
        const int u = active[static_cast<size_t>(i)];
        out.lambda_u(u) = sol.multipliers(i) / hr[static_cast<size_t>(u)].squaredNorm();
    }
    out.nu_m = sol.multipliers.segment(na, mt);
    out.dual_objective = out.nu_m.dot(sc.ap_power_budget);
    for (int u = 0; u < u_count; ++u) out.dual_objective -= out.lambda_u(u) * sc.ue_noise_var(u);
    return out;
}

// ----------------------------------------------------------- rank-1 step

/// Outcome of the covariance-to-beam conversion.
struct RecoveryReport {
    std::string label;        ///< "optimal" or "truncated"
    int rank_sensing = 0;     ///< eps-rank of the converted sensing block
    double gap = 0.0;         ///< SDR objective minus achieved numerator
    double achieved_objective = 0.0; ///< Tr(A sum f f^H) of the beam set
};

/// Converts the covariance solution into beams: closed-form rank-1 user
/// beams that preserve every constraint trace, then the top-Q eigen-beams
/// of the repaired sensing block. When that block has eps-rank <= Q the
/// conversion is lossless ("optimal"); otherwise the report carries the
/// exact truncation gap.
inline std::pair<BeamSet, RecoveryReport> recover_rank1(const JscSdrSolution& sol,
                                                        const JscProblemSpec& spec) {
    if (sol.status != SolveStatus::optimal)
        throw contract_error("recover_rank1: requires an optimal covariance solution");
    const Scenario& sc = spec.scenario;
    const ChannelSet& ch = spec.channels;
    const int u_count = sc.num_ues();
    const int q_count = spec.n_sens_streams;
    const Eigen::Index d = sc.stacked_dim();

    BeamSet beams;
    beams.n_comm = u_count;
    beams.n_sens = q_count;
    beams.n_tx_antennas = sc.n_tx_antennas;
    beams.beams = CMat::Zero(d, u_count + q_count);

    CMat fq = sol.sensing_matrix;
    for (int u = 0; u < u_count; ++u) {
        const CMat& fu = sol.user_matrices[static_cast<size_t>(u)];
        const double fnorm = fu.norm();
        fq += fu;
        if (!spec.user_active(u) && fnorm == 0.0) continue;
        const CVec hu = ch.stacked_channel(u);
        const CVec fh = fu * hu;
        const double quad = std::real(hu.dot(fh));
        if (quad <= 1e-14 * fnorm * hu.squaredNorm()) {
            if (spec.user_active(u))
                throw numerical_error("recover_rank1: degenerate user covariance");
            continue; // inactive user with stray mass: leave the beam zero
        }
        const CVec fu_beam = fh / std::sqrt(quad);
        beams.beams.col(u) = fu_beam;
        fq -= fu_beam * fu_beam.adjoint();
    }

    // The repaired sensing block (PSD by construction up to roundoff).
    const HermitianEig eig = hermitian_eig(hermitian_part(fq), 1e-6);
    RecoveryReport rep;
    rep.rank_sensing = rank_eps(eig.eigenvalues);
    for (int q = 0; q < std::min(q_count, static_cast<int>(eig.eigenvalues.size())); ++q) {
        if (eig.eigenvalues(q) <= 0.0) break;
        beams.beams.col(u_count + q) = std::sqrt(eig.eigenvalues(q)) * eig.eigenvectors.col(q);
    }

    const CMat a_full = build_sensing_matrix_A(sc, ch);
    rep.achieved_objective =
        std::real((a_full * (beams.beams * beams.beams.adjoint())).trace());
    rep.gap = sol.sdr_objective - rep.achieved_objective;
    rep.label = rep.rank_sensing <= q_count ? "optimal" : "truncated";
    return {std::move(beams), rep};
}

// ------------------------------------------------------------ KKT report

/// Dual matrices and certificate residuals at a covariance solution.
struct KktReport {
    std::vector<CMat> b_u; ///< per user (inactive users: equals b_q)
    CMat b_q;
    RVec bu_max_eig;          ///< top eigenvalue per user matrix (<= tol)
    double bq_max_eig = 0.0;  ///< top eigenvalue of the sensing dual matrix
    RVec slackness_u;         ///< ||B_u F_u||_F / (||B_u|| ||F_total||)
    double slackness_q = 0.0; ///< same for the sensing pair
    double remark_identity_residual = 0.0; ///< max_u of the algebraic identity check
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double duality_gap = 0.0; ///< |primal - dual|
};

/// Evaluates the dual certificates: negative semidefiniteness of the dual
/// matrices, complementary slackness against the primal blocks, the
/// algebraic identity linking per-user and sensing dual matrices, and the
/// strong-duality gap.
inline KktReport kkt_dual_report(const JscSdrSolution& sol, const JscProblemSpec& spec) {
    if (sol.status != SolveStatus::optimal)
        throw contract_error("kkt_dual_report: requires an optimal covariance solution");
    const Scenario& sc = spec.scenario;
    const ChannelSet& ch = spec.channels;
    const int u_count = sc.num_ues();
    const int mt = sc.num_tx_aps();
    const int nt = sc.n_tx_antennas;
    const Eigen::Index d = sc.stacked_dim();

    const CMat a_full = build_sensing_matrix_A(sc, ch);
    CMat b_q = a_full;
    for (int u = 0; u < u_count; ++u) {
        const CVec hu = ch.stacked_channel(u);
        b_q -= sol.lambda_u(u) * (hu * hu.adjoint());
    }
    for (int m = 0; m < mt; ++m)
        b_q.block(static_cast<Eigen::Index>(m) * nt, static_cast<Eigen::Index>(m) * nt, nt, nt) -=
            sol.nu_m(m) * CMat::Identity(nt, nt);

    KktReport rep;
    rep.b_q = b_q;
    rep.b_u.resize(static_cast<size_t>(u_count));
    rep.bu_max_eig = RVec::Zero(u_count);
    rep.slackness_u = RVec::Zero(u_count);
    rep.remark_identity_residual = 0.0;

    // Slackness pairs the duals with the primal iterate of the solve that
    // produced them; the reported blocks may sit elsewhere on the optimal
    // face (within the objective lock), where exact complementarity need
    // not hold.
    const bool has_pair = !sol.certificate_user_matrices.empty();
    const std::vector<CMat>& f_users = has_pair ? sol.certificate_user_matrices : sol.user_matrices;
    const CMat& f_sense = has_pair ? sol.certificate_sensing_matrix : sol.sensing_matrix;

    // Complementarity is measured against the aggregate covariance, so a
    // block the optimizer drives to zero cannot dominate its ratio with
    // sub-tolerance residue (a near-zero block is complementary by virtue
    // of being near zero).
    CMat f_total = f_sense;
    for (const CMat& fu : f_users) f_total += fu;
    const double total_norm = f_total.norm();

    for (int u = 0; u < u_count; ++u) {
        const CVec hu = ch.stacked_channel(u);
        // Direct construction from the dual definition...
        CMat b_u = a_full;
        for (int up = 0; up < u_count; ++up) {
            const CVec hp = ch.stacked_channel(up);
            if (up == u) {
                if (spec.user_active(u))
                    b_u += sol.lambda_u(u) / spec.gamma(u) * (hp * hp.adjoint());
            } else {
                b_u -= sol.lambda_u(up) * (hp * hp.adjoint());
            }
        }
        for (int m = 0; m < mt; ++m)
            b_u.block(static_cast<Eigen::Index>(m) * nt, static_cast<Eigen::Index>(m) * nt, nt,
                      nt) -= sol.nu_m(m) * CMat::Identity(nt, nt);
        rep.b_u[static_cast<size_t>(u)] = b_u;

        // ...cross-checked against the composed form B_q + lambda (1+1/gamma) Q.
        if (spec.user_active(u)) {
            const CMat composed =
                b_q + sol.lambda_u(u) * (1.0 + 1.0 / spec.gamma(u)) * (hu * hu.adjoint());
            const double scale = 1.0 + b_u.norm();
            rep.remark_identity_residual =
                std::max(rep.remark_identity_residual, (b_u - composed).norm() / scale);
        }

        rep.bu_max_eig(u) = hermitian_eig(hermitian_part(b_u)).eigenvalues(0);
        const CMat& fu = f_users[static_cast<size_t>(u)];
        const double denom = b_u.norm() * total_norm;
        rep.slackness_u(u) = denom > 0.0 ? (b_u * fu).norm() / denom : 0.0;
    }

    rep.bq_max_eig = hermitian_eig(hermitian_part(b_q)).eigenvalues(0);
    const double denom_q = b_q.norm() * total_norm;
    rep.slackness_q = denom_q > 0.0 ? (b_q * f_sense).norm() / denom_q : 0.0;

    rep.primal_objective = sol.sdr_objective;
    rep.dual_objective = sol.dual_objective;
    rep.duality_gap = std::abs(rep.primal_objective - rep.dual_objective);
    return rep;
}

// ----------------------------------------------------- stream-count laws

/// Structural facts about the sensing covariance rank and its nullspace
/// certificates.
struct StreamBoundReport {
    int rank_sensing = 0;   ///< eps-rank of the aggregate sensing block
    int hard_bound = 0;     ///< number of transmit APs
    int generic_bound = 0;  ///< max(M_t - U_active, 0) for generic channels
    bool within_hard_bound = true;
    bool within_generic_bound = true;
    /// |h_u^H F_Q h_u| / (||h_u||^2 lambda_max(F_Q)) for users with an
    /// active SINR dual; -1 for users whose dual is (numerically) zero.
    RVec ue_nullspace_residual;
    /// ||(A - sum nu_m D_m) F_Q||_F / (||A - sum nu D|| ||F_Q||).
    double gain_nullspace_residual = 0.0;
    RVec nu_minus_zbar; ///< per AP: nu_m - aggregate gain (informational)
};

/// Reports how many sensing streams actually carry power and verifies the
/// nullspace structure implied by the dual solution.
inline StreamBoundReport stream_bound_check(const JscSdrSolution& sol,
                                            const JscProblemSpec& spec) {
    if (sol.status != SolveStatus::optimal)
        throw contract_error("stream_bound_check: requires an optimal covariance solution");
    const Scenario& sc = spec.scenario;
    const ChannelSet& ch = spec.channels;
    const int u_count = sc.num_ues();
    const int mt = sc.num_tx_aps();
    const int nt = sc.n_tx_antennas;

    StreamBoundReport rep;
    const HermitianEig eig =
        hermitian_eig(hermitian_part(sol.sensing_matrix), 1e-6);
    rep.rank_sensing = rank_eps(eig.eigenvalues);
    rep.hard_bound = mt;
    int n_active = 0;
    for (int u = 0; u < u_count; ++u)
        if (spec.user_active(u)) ++n_active;
    rep.generic_bound = std::max(mt - n_active, 0);
    rep.within_hard_bound = rep.rank_sensing <= rep.hard_bound;
    rep.within_generic_bound = rep.rank_sensing <= rep.generic_bound;

    const double fq_top = std::max(eig.eigenvalues(0), 0.0);
    const double dual_floor = 1e-6 * std::max(sol.lambda_u.size() > 0 ? sol.lambda_u.maxCoeff() : 0.0, 0.0);
    rep.ue_nullspace_residual = RVec::Constant(u_count, -1.0);
    for (int u = 0; u < u_count; ++u) {
        if (!(sol.lambda_u(u) > dual_floor)) continue;
        const CVec hu = ch.stacked_channel(u);
        const double denom = hu.squaredNorm() * fq_top;
        rep.ue_nullspace_residual(u) =
            denom > 0.0 ? std::abs(std::real(hu.dot(sol.sensing_matrix * hu))) / denom : 0.0;
    }

    CMat gain_matrix = build_sensing_matrix_A(sc, ch);
    for (int m = 0; m < mt; ++m)
        gain_matrix.block(static_cast<Eigen::Index>(m) * nt, static_cast<Eigen::Index>(m) * nt,
                          nt, nt) -= sol.nu_m(m) * CMat::Identity(nt, nt);
    const double denom = gain_matrix.norm() * sol.sensing_matrix.norm();
    rep.gain_nullspace_residual =
        denom > 0.0 ? (gain_matrix * sol.sensing_matrix).norm() / denom : 0.0;

    rep.nu_minus_zbar = sol.nu_m - sc.aggregated_sensing_gain();
    return rep;
}

} // namespace cfisac
