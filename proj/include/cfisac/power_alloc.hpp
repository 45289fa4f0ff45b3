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
 * @file power_alloc.hpp
 * @brief Power allocation over fixed per-AP unit beam directions.
 *
 * The beamforming optimizer shapes beams and splits power jointly; the
 * complementary question is how much can be gained by only re-weighting a
 * fixed set of per-AP unit directions fbar_{m,s}, i.e. transmitting
 * f_{m,s} = sqrt(p_{m,s}) fbar_{m,s} with powers p_{m,s} >= 0. Once the
 * directions are frozen, the network enters the problem only through
 * scalar effective gains:
 *
 *   rho_{m,u,s}  = h_{m,u}^H fbar_{m,s}                       (complex),
 *   varrho_{m,s} = |a(theta_m)^H fbar_{m,s}|^2 sum_{m_r} zeta_{m,m_r}^2.
 *
 * The sensing-SNR numerator becomes sum_{m,s} p_{m,s} varrho_{m,s}, and
 * each UE's SINR couples the powers only through the per-stream stacked
 * vectors p_s = [sqrt(p_{1,s}), ..., sqrt(p_{M,s})]^T of nonnegative
 * reals. Maximizing the numerator under SINR targets and per-AP budgets
 * is a nonconvex QCQP in p_s; lifting P_s = p_s p_s^T (real symmetric
 * PSD) and dropping the rank-1 constraint yields a small dense SDP whose
 * optimum upper-bounds every feasible power assignment for the given
 * directions. A rank-1 heuristic (top eigenvector, entrywise magnitude,
 * budget rescale) converts the lifted blocks back into powers; the
 * resulting SINRs are re-checked and reported honestly, since the
 * heuristic carries no feasibility guarantee.
 */

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cfisac/baselines.hpp"
#include "cfisac/common.hpp"
#include "cfisac/conic/sdp.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

// ------------------------------------------------------- effective gains

/// Scalar effective gains of a fixed unit-direction beam set. Stream
/// indexing follows BeamSet: streams 0..U-1 are the user streams (stream
/// u serves UE u), any further streams are sensing streams.
struct EffectiveGains {
    /// Per stream s: M_t x U complex matrix with entry (m, u) equal to
    /// rho_{m,u,s}, the channel of UE u at AP m through direction s.
    std::vector<CMat> comm;
    /// M_t x S matrix of nonnegative sensing gains varrho_{m,s}.
    RMat sensing;
    /// Per-UE noise variance sigma_u^2 [W].
    RVec noise_var;

    int num_streams() const { return static_cast<int>(comm.size()); }
    int num_tx_aps() const { return static_cast<int>(sensing.rows()); }
    int num_ues() const { return comm.empty() ? 0 : static_cast<int>(comm.front().cols()); }

    /// Gain vector rho_{u,s} over APs for (UE u, stream s).
    CVec rho(int u, int s) const { return comm[static_cast<size_t>(s)].col(u); }
};

/// Computes the effective gains of `unit_beams` under the given channels.
/// Every per-AP sub-vector of every stream must have unit norm (1e-9
/// tolerance): the gains describe directions, not powered beams.
inline EffectiveGains effective_gains(const Scenario& scenario, const ChannelSet& channels,
                                      const BeamSet& unit_beams) {
    const int mt = scenario.num_tx_aps();
    const int nt = scenario.n_tx_antennas;
    const int u_count = scenario.num_ues();
    const int s_count = unit_beams.num_streams();
    if (channels.num_tx_aps() != mt || channels.n_tx_antennas() != nt ||
        channels.num_ues() != u_count)
        throw contract_error("effective_gains: channel set does not match scenario");
    if (unit_beams.n_tx_antennas != nt ||
        unit_beams.beams.rows() != static_cast<Eigen::Index>(mt) * nt)
        throw contract_error("effective_gains: beam set does not match scenario");
    if (s_count < 1) throw contract_error("effective_gains: beam set has no streams");

    for (int s = 0; s < s_count; ++s)
        for (int m = 0; m < mt; ++m)
            if (std::abs(unit_beams.ap_beam(m, s).norm() - 1.0) > 1e-9)
                throw contract_error(
                    "effective_gains: every per-AP beam sub-vector must have unit norm");

    const RVec zbar = scenario.aggregated_sensing_gain();
    EffectiveGains g;
    g.comm.assign(static_cast<size_t>(s_count), CMat(mt, u_count));
    g.sensing.resize(mt, s_count);
    g.noise_var = scenario.ue_noise_var;
    for (int m = 0; m < mt; ++m) {
        const CMat blk = unit_beams.ap_block(m);                     // N_t x S
        const CMat r = channels.h[static_cast<size_t>(m)].adjoint() * blk; // U x S
        const Eigen::RowVectorXcd st =
            channels.tx_steering[static_cast<size_t>(m)].adjoint() * blk;
        for (int s = 0; s < s_count; ++s) {
            g.comm[static_cast<size_t>(s)].row(m) = r.col(s).transpose();
            g.sensing(m, s) = zbar(m) * std::norm(st(s));
        }
    }
    return g;
}

/// Sensing-SNR numerator sum_{m,s} p_{m,s} varrho_{m,s} for powers given
/// as sqrt-power entries (sqrt_powers(m, s) = sqrt(p_{m,s})).
inline double power_objective(const EffectiveGains& gains, const RMat& sqrt_powers) {
    if (sqrt_powers.rows() != gains.sensing.rows() || sqrt_powers.cols() != gains.sensing.cols())
        throw contract_error("power_objective: sqrt-power shape mismatch");
    return (sqrt_powers.array().square() * gains.sensing.array()).sum();
}

/// SINR of UE u under the given sqrt-powers:
///   |p_u^T rho_{u,u}|^2 / (sum_{s != u} |p_s^T rho_{u,s}|^2 + sigma_u^2).
inline double power_sinr(const EffectiveGains& gains, const RMat& sqrt_powers, int u) {
    if (u < 0 || u >= gains.num_ues()) throw contract_error("power_sinr: UE index out of range");
    if (sqrt_powers.rows() != gains.sensing.rows() || sqrt_powers.cols() != gains.sensing.cols())
        throw contract_error("power_sinr: sqrt-power shape mismatch");
    if (!(gains.noise_var(u) > 0.0))
        throw contract_error("power_sinr: noise variance must be positive");
    const auto term = [&](int s) {
        return std::norm(gains.rho(u, s).dot(sqrt_powers.col(s).cast<cplx>()));
    };
    double interference = gains.noise_var(u);
    for (int s = 0; s < gains.num_streams(); ++s)
        if (s != u) interference += term(s);
    return term(u) / interference;
}

/// SINR of UE u under lifted per-stream blocks {P_s}: the relaxed
/// analogue of power_sinr with |p_s^T rho_{u,s}|^2 replaced by
/// Tr(P_s rho rho^H) = rho^H P_s rho.
inline double power_sinr_lifted(const EffectiveGains& gains,
                                const std::vector<RMat>& power_matrices, int u) {
    if (u < 0 || u >= gains.num_ues())
        throw contract_error("power_sinr_lifted: UE index out of range");
    if (static_cast<int>(power_matrices.size()) != gains.num_streams())
        throw contract_error("power_sinr_lifted: stream count mismatch");
    if (!(gains.noise_var(u) > 0.0))
        throw contract_error("power_sinr_lifted: noise variance must be positive");
    const auto term = [&](int s) {
        const CVec rho = gains.rho(u, s);
        if (power_matrices[static_cast<size_t>(s)].rows() != rho.size())
            throw contract_error("power_sinr_lifted: block dimension mismatch");
        return std::real(rho.dot(power_matrices[static_cast<size_t>(s)].cast<cplx>() * rho));
    };
    double interference = gains.noise_var(u);
    for (int s = 0; s < gains.num_streams(); ++s)
        if (s != u) interference += term(s);
    return term(u) / interference;
}

/// Scales each per-AP sub-vector of a direction set by the matching
/// sqrt-power entry, turning unit directions plus an allocation into a
/// transmittable beam set.
inline BeamSet apply_powers(const BeamSet& directions, const RMat& sqrt_powers) {
    const int mt = directions.num_tx_aps();
    const int nt = directions.n_tx_antennas;
    const int s_count = directions.num_streams();
    if (sqrt_powers.rows() != mt || sqrt_powers.cols() != s_count)
        throw contract_error("apply_powers: sqrt-power shape mismatch");
    if ((sqrt_powers.array() < 0.0).any())
        throw contract_error("apply_powers: sqrt-powers must be non-negative");
    BeamSet out = directions;
    for (int m = 0; m < mt; ++m)
        for (int s = 0; s < s_count; ++s)
            out.beams.block(static_cast<Eigen::Index>(m) * nt, s, nt, 1) *= sqrt_powers(m, s);
    return out;
}

// ------------------------------------------------------ fixed directions

/// Default fixed directions for the power allocator: per-AP-normalized
/// regularized zero-forcing user directions plus `q_sens` copies of the
/// per-AP-normalized null-space sensing direction. A negative
/// `rzf_lambda` selects the default heuristic regularization. Throws
/// numerical_error when the null-space direction vanishes at an AP (its
/// steering lies inside the local channel span), since a unit direction
/// cannot represent a silent antenna array.
inline BeamSet ns_rzf_unit_beams(const Scenario& scenario, const ChannelSet& channels,
                                 int q_sens = 1, double rzf_lambda = -1.0) {
    const int mt = scenario.num_tx_aps();
    const int nt = scenario.n_tx_antennas;
    const int u_count = channels.num_ues();
    if (q_sens < 0) throw contract_error("ns_rzf_unit_beams: negative sensing stream count");
    if (u_count < 1) throw contract_error("ns_rzf_unit_beams: no users");
    const double lambda = rzf_lambda < 0.0 ? rzf_default_lambda(scenario) : rzf_lambda;
    // rzf_comm scales each per-AP sub-vector to sqrt(p_comm / U) watts, so
    // a budget of U per AP yields exactly unit sub-vectors.
    const CMat comm = rzf_comm(channels, lambda, RVec::Constant(mt, static_cast<double>(u_count)));
    CMat sens(static_cast<Eigen::Index>(mt) * nt, q_sens);
    if (q_sens > 0) {
        const SensingBeamResult nsr = nullspace_sensing(scenario, channels, RVec::Ones(mt));
        if (nsr.any_degenerate)
            throw numerical_error("ns_rzf_unit_beams: null-space sensing direction vanishes");
        for (int q = 0; q < q_sens; ++q) sens.col(q) = nsr.beam;
    }
    return assemble_beam_set(comm, sens, nt);
}

// ------------------------------------------------------------- SDR solve

/// Lifted power-allocation solution. `power_matrices` are the relaxed
/// per-stream blocks P_s; `sqrt_powers` and the feasibility flag are
/// filled in by extract_rank1_powers.
struct PowerSolution {
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<RMat> power_matrices; ///< per stream: M_t x M_t symmetric PSD
    RMat sqrt_powers;                 ///< M_t x S after extraction (else empty)
    bool feasibility_after_extraction = false;
    double sdr_objective = 0.0; ///< sum_s Tr(P_s diag(varrho_s)), recomputed
    double rel_gap = 0.0;
    double max_constraint_violation = 0.0; ///< relative, re-verified
    double min_eig_ratio = 0.0;            ///< block PSD quality
    int iterations = 0;
    bool has_certificate = false; ///< validated infeasibility certificate
};

/// Maximizes the sensing numerator over lifted power blocks {P_s} subject
/// to per-UE SINR targets and per-AP budgets. A zero target drops that
/// UE's constraint (the stream still exists and may carry power for its
/// sensing gain). The optimum upper-bounds every feasible rank-1 power
/// assignment for the same directions; an infeasible status means the
/// targets are unattainable with these directions at any power.
inline PowerSolution solve_power_sdr(const EffectiveGains& gains, const RVec& gamma_u,
                                     const RVec& p_budget, const conic::SdpOptions& opts = {}) {
    const int mt = gains.num_tx_aps();
    const int s_count = gains.num_streams();
    const int u_count = gains.num_ues();
    if (mt < 1 || s_count < 1) throw contract_error("solve_power_sdr: empty gain set");
    if (gamma_u.size() != u_count)
        throw contract_error("solve_power_sdr: SINR target count mismatch");
    if ((gamma_u.array() < 0.0).any())
        throw contract_error("solve_power_sdr: negative SINR target");
    if (p_budget.size() != mt || (p_budget.array() <= 0.0).any())
        throw contract_error("solve_power_sdr: per-AP budgets must be positive");
    if ((gains.sensing.array() < -1e-15).any())
        throw contract_error("solve_power_sdr: negative sensing gain");

    conic::SdpProblem prob;
    prob.blocks.assign(static_cast<size_t>(s_count), conic::SdpBlockSpec{mt, false});
    for (int s = 0; s < s_count; ++s)
        prob.objective.push_back(CMat(gains.sensing.col(s).asDiagonal().toDenseMatrix().cast<cplx>()));

    for (int u = 0; u < u_count; ++u) {
        if (!(gamma_u(u) > 0.0)) continue;
        if (!(gains.noise_var(u) > 0.0))
            throw contract_error("solve_power_sdr: noise variance must be positive");
        conic::SdpConstraint con;
        con.sense = conic::Sense::ge;
        con.rhs = gains.noise_var(u);
        for (int s = 0; s < s_count; ++s) {
            const CVec rho = gains.rho(u, s);
            // Real-symmetric coefficient: for real p, |p^T rho|^2 =
            // p^T Re(rho rho^H) p, so the imaginary part never acts.
            const RMat gram = (rho * rho.adjoint()).real();
            con.coeffs.push_back(
                {s, CMat((s == u ? gram / gamma_u(u) : RMat(-gram)).cast<cplx>())});
        }
        prob.constraints.push_back(std::move(con));
    }
    for (int m = 0; m < mt; ++m) {
        conic::SdpConstraint con;
        con.sense = conic::Sense::le;
        con.rhs = p_budget(m);
        RMat sel = RMat::Zero(mt, mt);
        sel(m, m) = 1.0;
        for (int s = 0; s < s_count; ++s) con.coeffs.push_back({s, CMat(sel.cast<cplx>())});
        prob.constraints.push_back(std::move(con));
    }

    const conic::SdpSolution sol = conic::solve_sdp(prob, opts);
    PowerSolution out;
    out.status = sol.status;
    out.rel_gap = sol.rel_gap;
    out.iterations = sol.iterations;
    out.has_certificate = sol.has_certificate;
    out.max_constraint_violation = std::max(sol.max_eq_violation, sol.max_ineq_violation);
    out.min_eig_ratio = sol.min_eig_ratio;
    if (sol.status != SolveStatus::optimal) return out;

    out.power_matrices.reserve(static_cast<size_t>(s_count));
    for (int s = 0; s < s_count; ++s)
        out.power_matrices.push_back(symmetric_part(sol.X[static_cast<size_t>(s)].real()));
    for (int s = 0; s < s_count; ++s)
        out.sdr_objective += out.power_matrices[static_cast<size_t>(s)].diagonal().dot(
            gains.sensing.col(s));
    return out;
}

// -------------------------------------------------------- rank-1 powers

/// How extracted powers are squeezed back under the per-AP budgets.
enum class BudgetScaling {
    global_factor, ///< one common factor <= 1 on every sqrt-power entry,
                   ///< preserving all cross-stream power ratios
    per_ap,        ///< independent factor per AP row
};

/// Outcome of the rank-1 power extraction.
struct PowerExtractionReport {
    RMat sqrt_powers;             ///< M_t x S, entrywise nonnegative
    double scale = 1.0;           ///< smallest budget factor applied
    RVec achieved_sinr;           ///< linear, per UE
    double achieved_objective = 0.0;
    double min_sinr_margin = 0.0; ///< min over targeted UEs of sinr/gamma - 1
    double max_budget_use = 0.0;  ///< max_m (used power / budget) after scaling
    bool feasible = false;        ///< budgets and all SINR targets hold
};

/// Converts the lifted blocks into powers: per stream, the top eigenpair
/// gives sqrt-powers sqrt(lambda_1) |u_1| (entrywise magnitude, since the
/// eigenvector of a lifted matrix is sign-ambiguous while sqrt-powers
/// must be nonnegative), then the budgets are re-imposed by scaling and
/// every SINR target is re-checked (1e-6 relative headroom). The
/// heuristic has no feasibility guarantee; the report says what actually
/// holds. Mirrors `sqrt_powers` and the feasibility flag into `sol`.
inline PowerExtractionReport extract_rank1_powers(PowerSolution& sol, const EffectiveGains& gains,
                                                  const RVec& gamma_u, const RVec& p_budget,
                                                  BudgetScaling scaling = BudgetScaling::global_factor) {
    const int mt = gains.num_tx_aps();
    const int s_count = gains.num_streams();
    const int u_count = gains.num_ues();
    if (sol.status != SolveStatus::optimal ||
        sol.power_matrices.size() != static_cast<size_t>(s_count))
        throw contract_error("extract_rank1_powers: requires an optimal lifted solution");
    if (gamma_u.size() != u_count || p_budget.size() != mt)
        throw contract_error("extract_rank1_powers: target/budget size mismatch");

    PowerExtractionReport rep;
    rep.sqrt_powers.resize(mt, s_count);
    for (int s = 0; s < s_count; ++s) {
        Eigen::SelfAdjointEigenSolver<RMat> es(sol.power_matrices[static_cast<size_t>(s)]);
        if (es.info() != Eigen::Success)
            throw numerical_error("extract_rank1_powers: eigendecomposition failed");
        const double top = std::max(es.eigenvalues()(mt - 1), 0.0);
        rep.sqrt_powers.col(s) = std::sqrt(top) * es.eigenvectors().col(mt - 1).cwiseAbs();
    }

    const RVec used = rep.sqrt_powers.array().square().matrix().rowwise().sum();
    rep.scale = 1.0;
    if (scaling == BudgetScaling::global_factor) {
        for (int m = 0; m < mt; ++m)
            if (used(m) > p_budget(m)) rep.scale = std::min(rep.scale, std::sqrt(p_budget(m) / used(m)));
        rep.sqrt_powers *= rep.scale;
    } else {
        for (int m = 0; m < mt; ++m)
            if (used(m) > p_budget(m)) {
                const double c = std::sqrt(p_budget(m) / used(m));
                rep.sqrt_powers.row(m) *= c;
                rep.scale = std::min(rep.scale, c);
            }
    }

    rep.achieved_objective = power_objective(gains, rep.sqrt_powers);
    rep.achieved_sinr = RVec::Zero(u_count);
    rep.max_budget_use = 0.0;
    for (int m = 0; m < mt; ++m)
        rep.max_budget_use =
            std::max(rep.max_budget_use, rep.sqrt_powers.row(m).squaredNorm() / p_budget(m));
    rep.min_sinr_margin = 0.0;
    bool first = true;
    for (int u = 0; u < u_count; ++u) {
        rep.achieved_sinr(u) = power_sinr(gains, rep.sqrt_powers, u);
        if (!(gamma_u(u) > 0.0)) continue;
        const double margin = rep.achieved_sinr(u) / gamma_u(u) - 1.0;
        rep.min_sinr_margin = first ? margin : std::min(rep.min_sinr_margin, margin);
        first = false;
    }
    rep.feasible = rep.max_budget_use <= 1.0 + 1e-9 && rep.min_sinr_margin >= -1e-6;

    sol.sqrt_powers = rep.sqrt_powers;
    sol.feasibility_after_extraction = rep.feasible;
    return rep;
}

} // namespace cfisac
