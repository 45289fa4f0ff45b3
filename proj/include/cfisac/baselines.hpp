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
 * @file baselines.hpp
 * @brief Separate-design beamforming strategies.
 *
 * These are the strategies that design sensing and communication beams
 * independently under a fixed power split:
 *
 *  - conjugate_sensing: per-AP conjugate (matched) beams toward the target,
 *    optimal when no users are present.
 *  - nullspace_sensing: the conjugate direction projected into the null
 *    space of the local user channels, so sensing causes zero interference.
 *  - rzf_comm: regularized zero-forcing user beams with per-AP power
 *    normalization.
 *  - maxmin_comm_bisection: max-min SINR user beams for fixed sensing
 *    beams, via bisection over second-order-cone feasibility problems.
 */

#include <cstdint>
#include <vector>

#include <Eigen/QR>

#include "cfisac/common.hpp"
#include "cfisac/conic/socp.hpp"
#include "cfisac/model.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

/// Fixed fractional split of each AP's power budget between the
/// communication beams (fraction rho) and the sensing beams (the rest).
struct PowerSplit {
    double rho = 0.5;

    void validate() const {
        if (!(rho > 0.0 && rho < 1.0))
            throw contract_error("PowerSplit: rho must lie strictly inside (0, 1)");
    }
    RVec comm_power(const Scenario& sc) const {
        validate();
        return rho * sc.ap_power_budget;
    }
    RVec sens_power(const Scenario& sc) const {
        validate();
        return (1.0 - rho) * sc.ap_power_budget;
    }
};

/// Assembles a stacked beam set from user beams (D x U) and sensing beams
/// (D x Q); either matrix may have zero columns.
inline BeamSet assemble_beam_set(const CMat& comm, const CMat& sens, int n_tx_antennas) {
    if (comm.cols() > 0 && sens.cols() > 0 && comm.rows() != sens.rows())
        throw contract_error("assemble_beam_set: stacked dimensions disagree");
    BeamSet bs;
    bs.n_comm = static_cast<int>(comm.cols());
    bs.n_sens = static_cast<int>(sens.cols());
    bs.n_tx_antennas = n_tx_antennas;
    const Eigen::Index d = comm.cols() > 0 ? comm.rows() : sens.rows();
    bs.beams.resize(d, comm.cols() + sens.cols());
    if (comm.cols() > 0) bs.beams.leftCols(comm.cols()) = comm;
    if (sens.cols() > 0) bs.beams.rightCols(sens.cols()) = sens;
    return bs;
}

// --------------------------------------------------------------- sensing

/// Conjugate sensing beam: each AP points a matched beam at the target,
/// f_m = sqrt(p_m / N_t) a(theta_m), so that ||f_m||^2 = p_m exactly.
/// Returns the stacked beam (dimension M_t * N_t).
inline CVec conjugate_sensing(const Scenario& scenario, const RVec& p_sensing) {
    const int mt = scenario.num_tx_aps();
    const int nt = scenario.n_tx_antennas;
    if (p_sensing.size() != mt)
        throw contract_error("conjugate_sensing: power vector size mismatch");
    if ((p_sensing.array() < 0.0).any())
        throw contract_error("conjugate_sensing: negative sensing power");
    CVec f = CVec::Zero(static_cast<Eigen::Index>(mt) * nt);
    for (int m = 0; m < mt; ++m) {
        const CVec a = array_response(nt, scenario.tx_target_angle(m));
        f.segment(static_cast<Eigen::Index>(m) * nt, nt) = std::sqrt(p_sensing(m) / nt) * a;
    }
    return f;
}

/// Result of the null-space sensing construction. APs whose target steering
/// lies (numerically) inside the span of their user channels cannot radiate
/// interference-free sensing power; those APs fall back to a zero beam and
/// are flagged.
struct SensingBeamResult {
    CVec beam;                             ///< stacked, dimension M_t * N_t
    std::vector<std::uint8_t> degenerate;  ///< per-AP degenerate-direction flag
    bool any_degenerate = false;
};

/// Null-space sensing beam: the conjugate direction projected orthogonal to
/// every local user channel, then scaled back to the sensing power budget:
/// f_m = sqrt(p_m) P_m a(theta_m) / ||P_m a(theta_m)|| with
/// P_m = I - H_m (H_m^H H_m)^+ H_m^H.
inline SensingBeamResult nullspace_sensing(const Scenario& scenario, const ChannelSet& channels,
                                           const RVec& p_sensing) {
    const int mt = scenario.num_tx_aps();
    const int nt = scenario.n_tx_antennas;
    if (p_sensing.size() != mt)
        throw contract_error("nullspace_sensing: power vector size mismatch");
    if (channels.num_tx_aps() != mt || channels.n_tx_antennas() != nt)
        throw contract_error("nullspace_sensing: channel set does not match scenario");
    SensingBeamResult res;
    res.beam = CVec::Zero(static_cast<Eigen::Index>(mt) * nt);
    res.degenerate.assign(static_cast<size_t>(mt), 0);
    for (int m = 0; m < mt; ++m) {
        const CVec a = channels.tx_steering[static_cast<size_t>(m)];
        CVec dir = a;
        const CMat& hm = channels.h[static_cast<size_t>(m)];
        if (hm.cols() > 0) {
            Eigen::ColPivHouseholderQR<CMat> qr(hm);
            const Eigen::Index r = qr.rank();
            if (r > 0) {
                const CMat q = CMat(qr.householderQ()).leftCols(r);
                // Two projection passes keep the residual orthogonal to the
                // channel span to machine precision.
                dir -= q * (q.adjoint() * dir);
                dir -= q * (q.adjoint() * dir);
            }
        }
        const double dn = dir.norm();
        if (dn < 1e-10 * a.norm()) {
            res.degenerate[static_cast<size_t>(m)] = 1;
            res.any_degenerate = true;
            continue;  // zero beam for this AP
        }
        res.beam.segment(static_cast<Eigen::Index>(m) * nt, nt) =
            std::sqrt(p_sensing(m)) / dn * dir;
    }
    return res;
}

// --------------------------------------------------------------- comms

/// Default regularization for rzf_comm: an MMSE-style heuristic scaling
/// with the noise-to-power ratio, lambda = U * mean(sigma_u^2) / sum_m P_m.
inline double rzf_default_lambda(const Scenario& scenario) {
    const double ptot = scenario.ap_power_budget.sum();
    if (!(ptot > 0.0)) throw contract_error("rzf_default_lambda: zero total power");
    const double nbar =
        scenario.ue_noise_var.size() > 0 ? scenario.ue_noise_var.mean() : 0.0;
    return scenario.num_ues() * nbar / ptot;
}

/// Unnormalized regularized zero-forcing directions over the stacked
/// channel: column u is (lambda I + sum_u' h_u' h_u'^H)^{-1} h_u. A tiny
/// regularization floor stands in for the pseudo-inverse when lambda = 0
/// leaves the Gram matrix singular.
inline CMat rzf_directions(const ChannelSet& channels, double lambda) {
    if (lambda < 0.0) throw contract_error("rzf_directions: negative regularization");
    const int u_count = channels.num_ues();
    if (u_count < 1) throw contract_error("rzf_directions: no users");
    const Eigen::Index d =
        static_cast<Eigen::Index>(channels.num_tx_aps()) * channels.n_tx_antennas();
    CMat h(d, u_count);
    for (int u = 0; u < u_count; ++u) h.col(u) = channels.stacked_channel(u);
    CMat gram = h * h.adjoint();
    const double mean_diag = gram.real().trace() / static_cast<double>(d);
    if (!(mean_diag > 0.0)) return CMat::Zero(d, u_count);  // all channels zero
    gram.diagonal().array() += std::max(lambda, 1e-12 * mean_diag);
    return gram.ldlt().solve(h);
}

/// Regularized zero-forcing user beams with per-AP normalization: each
/// per-AP subvector of the RZF direction is scaled to carry exactly
/// p_comm(m) / U watts (zero-norm subvectors stay zero and radiate none).
inline CMat rzf_comm(const ChannelSet& channels, double lambda, const RVec& p_comm) {
    const int mt = channels.num_tx_aps();
    const int nt = channels.n_tx_antennas();
    const int u_count = channels.num_ues();
    if (p_comm.size() != mt) throw contract_error("rzf_comm: power vector size mismatch");
    if ((p_comm.array() < 0.0).any()) throw contract_error("rzf_comm: negative power");
    CMat f = rzf_directions(channels, lambda);
    for (int u = 0; u < u_count; ++u)
        for (int m = 0; m < mt; ++m) {
            auto sub = f.col(u).segment(static_cast<Eigen::Index>(m) * nt, nt);
            const double norm = sub.norm();
            if (norm > 0.0)
                sub *= std::sqrt(p_comm(m) / u_count) / norm;
            else
                sub.setZero();
        }
    return f;
}

// ------------------------------------------------- max-min SINR bisection

/// Bracket and termination control for maxmin_comm_bisection.
struct BisectionParams {
    double gamma_min = 0.0;  ///< known-feasible lower SINR (0 = trivially feasible)
    double gamma_max = -1.0; ///< known-infeasible upper SINR; <= 0 selects the
                             ///< interference-free matched-filter bound
    double rel_tol = 1e-3;   ///< relative bracket width at termination
    int max_iters = 40;
};

struct MaxMinResult {
    SolveStatus status = SolveStatus::numerical_failure;
    double gamma_star = 0.0; ///< largest SINR found feasible (linear)
    CMat comm_beams;         ///< D x U stacked user beams achieving gamma_star
    int probes = 0;          ///< feasibility problems solved
};

namespace detail {

/// Per-AP orthonormal bases of the local channel span. The optimal user
/// beams never leave these spans (an orthogonal component changes no
/// channel inner product and only burns power), so the feasibility SOCP is
/// solved over basis coefficients instead of full antenna vectors.
struct CommBasis {
    std::vector<CMat> basis;  ///< per AP: N_t x r_m, orthonormal columns
    std::vector<int> offset;  ///< coefficient offset of AP m within one stream
    int per_stream = 0;       ///< sum of r_m
};

inline CommBasis make_comm_basis(const ChannelSet& channels, const RVec& p_comm) {
    const int mt = channels.num_tx_aps();
    CommBasis cb;
    cb.basis.resize(static_cast<size_t>(mt));
    cb.offset.resize(static_cast<size_t>(mt));
    for (int m = 0; m < mt; ++m) {
        cb.offset[static_cast<size_t>(m)] = cb.per_stream;
        if (p_comm(m) <= 0.0) continue;  // AP cannot radiate: no variables
        const CMat& hm = channels.h[static_cast<size_t>(m)];
        Eigen::ColPivHouseholderQR<CMat> qr(hm);
        const Eigen::Index r = qr.rank();
        if (r == 0) continue;
        cb.basis[static_cast<size_t>(m)] = CMat(qr.householderQ()).leftCols(r);
        cb.per_stream += static_cast<int>(r);
    }
    return cb;
}

/// Builds the fixed-gamma feasibility SOCP over basis coefficients.
/// Stream-u SINR cones are soft (they carry the feasibility margin) and are
/// normalized by sigma_u; per-AP power cones are hard.
inline conic::SocpFeasibilityProblem make_comm_feasibility_socp(
    const Scenario& scenario, const ChannelSet& channels, const CMat& fixed_sensing,
    const RVec& p_comm, double gamma, const CommBasis& cb) {
    const int mt = channels.num_tx_aps();
    const int nt = channels.n_tx_antennas();
    const int u_count = channels.num_ues();
    const int qf = static_cast<int>(fixed_sensing.cols());
    const int r_total = cb.per_stream;

    conic::SocpFeasibilityProblem prob;
    prob.dim = u_count * r_total;
    const double kappa = std::sqrt(1.0 + 1.0 / gamma);

    for (int u = 0; u < u_count; ++u) {
        const double sigma = std::sqrt(scenario.ue_noise_var(u));
        if (!(sigma > 0.0))
            throw contract_error("maxmin_comm_bisection: noise variance must be positive");
        conic::SocpCone cone;
        cone.soft = true;
        cone.d = 0.0;
        cone.c = CVec::Zero(prob.dim);
        cone.A = CMat::Zero(u_count + qf + 1, prob.dim);
        cone.b = CVec::Zero(u_count + qf + 1);
        for (int m = 0; m < mt; ++m) {
            const CMat& bm = cb.basis[static_cast<size_t>(m)];
            if (bm.cols() == 0) continue;
            const CVec g = bm.adjoint() * channels.h[static_cast<size_t>(m)].col(u);
            const int off = cb.offset[static_cast<size_t>(m)];
            for (int up = 0; up < u_count; ++up)
                cone.A.row(up).segment(static_cast<Eigen::Index>(up) * r_total + off,
                                       g.size()) = g.adjoint() / sigma;
            cone.c.segment(static_cast<Eigen::Index>(u) * r_total + off, g.size()) =
                kappa / sigma * g;
        }
        for (int q = 0; q < qf; ++q) {
            cplx gain = 0.0;
            for (int m = 0; m < mt; ++m)
                gain += channels.h[static_cast<size_t>(m)].col(u).dot(
                    fixed_sensing.col(q).segment(static_cast<Eigen::Index>(m) * nt, nt));
            cone.b(u_count + q) = gain / sigma;
        }
        cone.b(u_count + qf) = 1.0;  // sigma_u / sigma_u
        prob.cones.push_back(std::move(cone));
    }

    for (int m = 0; m < mt; ++m) {
        const Eigen::Index rm = cb.basis[static_cast<size_t>(m)].cols();
        if (rm == 0) continue;
        const double root_p = std::sqrt(p_comm(m));
        conic::SocpCone cone;
        cone.soft = false;
        cone.d = 1.0;
        cone.c = CVec::Zero(prob.dim);
        cone.A = CMat::Zero(u_count * rm, prob.dim);
        cone.b = CVec::Zero(u_count * rm);
        const int off = cb.offset[static_cast<size_t>(m)];
        for (int up = 0; up < u_count; ++up)
            for (Eigen::Index j = 0; j < rm; ++j)
                cone.A(static_cast<Eigen::Index>(up) * rm + j,
                       static_cast<Eigen::Index>(up) * r_total + off + j) = 1.0 / root_p;
        prob.cones.push_back(std::move(cone));
    }
    return prob;
}

/// Expands SOCP basis coefficients back into stacked user beams.
inline CMat expand_comm_beams(const ChannelSet& channels, const CommBasis& cb, const CVec& x) {
    const int mt = channels.num_tx_aps();
    const int nt = channels.n_tx_antennas();
    const int u_count = channels.num_ues();
    CMat f = CMat::Zero(static_cast<Eigen::Index>(mt) * nt, u_count);
    for (int u = 0; u < u_count; ++u)
        for (int m = 0; m < mt; ++m) {
            const CMat& bm = cb.basis[static_cast<size_t>(m)];
            if (bm.cols() == 0) continue;
            const int off = cb.offset[static_cast<size_t>(m)];
            f.col(u).segment(static_cast<Eigen::Index>(m) * nt, nt) =
                bm * x.segment(static_cast<Eigen::Index>(u) * cb.per_stream + off, bm.cols());
        }
    return f;
}

} // namespace detail

/// Max-min fair user beams for fixed sensing beams: maximizes min_u SINR_u
/// subject to per-AP communication power budgets, by bisecting the SINR
/// target over second-order-cone feasibility problems. fixed_sensing may
/// have zero columns. Throws if the bracket is invalid (gamma_max feasible
/// or gamma_min > 0 infeasible).
inline MaxMinResult maxmin_comm_bisection(const Scenario& scenario, const ChannelSet& channels,
                                          const CMat& fixed_sensing, const RVec& p_comm,
                                          BisectionParams params = {}) {
    const int mt = channels.num_tx_aps();
    const int nt = channels.n_tx_antennas();
    const int u_count = channels.num_ues();
    if (u_count < 1) throw contract_error("maxmin_comm_bisection: no users");
    if (p_comm.size() != mt)
        throw contract_error("maxmin_comm_bisection: power vector size mismatch");
    if (fixed_sensing.cols() > 0 && fixed_sensing.rows() != static_cast<Eigen::Index>(mt) * nt)
        throw contract_error("maxmin_comm_bisection: sensing beam dimension mismatch");
    if (params.gamma_min < 0.0 ||
        (params.gamma_max > 0.0 && params.gamma_max <= params.gamma_min))
        throw contract_error("maxmin_comm_bisection: invalid bracket");

    const detail::CommBasis cb = detail::make_comm_basis(channels, p_comm);
    MaxMinResult res;
    res.comm_beams = CMat::Zero(static_cast<Eigen::Index>(mt) * nt, u_count);
    if (cb.per_stream == 0) {  // no AP can serve: gamma* = 0 with zero beams
        res.status = SolveStatus::optimal;
        return res;
    }

    double hi = params.gamma_max;
    if (hi <= 0.0) {
        // Interference-free matched-filter bound: SINR_u <= ||h_u||^2 P / sigma_u^2.
        double bound = 0.0;
        for (int u = 0; u < u_count; ++u)
            bound = std::max(bound, channels.stacked_channel(u).squaredNorm() * p_comm.sum() /
                                        scenario.ue_noise_var(u));
        if (!(bound > 0.0)) {  // all channels zero
            res.status = SolveStatus::optimal;
            return res;
        }
        hi = bound * (1.0 + 1e-3);
    }

    const auto probe = [&](double gamma) {
        return conic::solve_socp_feasibility(
            detail::make_comm_feasibility_socp(scenario, channels, fixed_sensing, p_comm, gamma,
                                               cb));
    };

    double lo = params.gamma_min;
    bool have_beams = false;
    if (lo > 0.0) {
        const auto r = probe(lo);
        ++res.probes;
        if (r.status != SolveStatus::optimal) {
            res.status = r.status;
            return res;
        }
        if (!r.feasible)
            throw contract_error("maxmin_comm_bisection: gamma_min is infeasible");
        res.comm_beams = detail::expand_comm_beams(channels, cb, r.x);
        have_beams = true;
    }
    {
        const auto r = probe(hi);
        ++res.probes;
        if (r.status != SolveStatus::optimal) {
            res.status = r.status;
            return res;
        }
        if (r.feasible)
            throw contract_error("maxmin_comm_bisection: gamma_max is feasible (bracket too small)");
    }

    while (hi - lo > params.rel_tol * hi && res.probes < params.max_iters) {
        const double mid = 0.5 * (hi + lo);
        const auto r = probe(mid);
        ++res.probes;
        if (r.status != SolveStatus::optimal) {
            res.status = r.status;
            return res;
        }
        if (r.feasible) {
            lo = mid;
            res.comm_beams = detail::expand_comm_beams(channels, cb, r.x);
            have_beams = true;
        } else {
            hi = mid;
        }
    }
    res.gamma_star = lo;
    res.status = SolveStatus::optimal;
    if (!have_beams) res.comm_beams.setZero();
    return res;
}

} // namespace cfisac
