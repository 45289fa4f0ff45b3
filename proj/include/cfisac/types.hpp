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
 * @file types.hpp
 * @brief Value types shared across the simulator.
 *
 * Conventions used throughout:
 *  - M_t transmit APs with N_t antennas each, M_r receive APs with N_r
 *    antennas each, U single-antenna UEs, Q dedicated sensing streams,
 *    S = U + Q transmit streams in total.
 *  - "Stacked" vectors concatenate the per-AP subvectors of all transmit
 *    APs, giving dimension D = M_t * N_t. Stream s of a BeamSet is the
 *    stacked beam f_s; its AP-m subvector is rows [m*N_t, (m+1)*N_t).
 *  - All quantities are linear SI units (watts, meters, hertz, radians).
 *    Decibel conversion happens only at reporting boundaries.
 */

#include <string>
#include <vector>

#include "cfisac/common.hpp"

namespace cfisac {

/// Outcome of an optimizer / solver call.
enum class SolveStatus {
    optimal,
    infeasible,
    unbounded,
    max_iters,
    numerical_failure,
};

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::max_iters: return "max-iters";
        case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

/// Static description of one network realization: geometry, radio
/// constants and per-node budgets. Channels live in ChannelSet.
struct Scenario {
    std::vector<Eigen::Vector2d> tx_ap_positions; ///< M_t transmit AP positions [m]
    std::vector<Eigen::Vector2d> rx_ap_positions; ///< M_r receive AP positions [m]
    Eigen::Vector2d target_position{0.0, 0.0};    ///< sensing target position [m]
    std::vector<Eigen::Vector2d> ue_positions;    ///< U UE positions [m]

    int n_tx_antennas = 0; ///< N_t antennas per transmit AP
    int n_rx_antennas = 0; ///< N_r antennas per receive AP

    RVec ap_power_budget;  ///< per-AP transmit power budget P_m [W], size M_t
    RVec ue_noise_var;     ///< per-UE noise variance sigma_u^2 [W], size U
    RVec radar_noise_var;  ///< per-receive-AP noise variance [W], size M_r
    RMat sensing_gain_var; ///< per-(tx,rx)-pair sensing channel gain variance
                           ///< zeta_{m_t,m_r}^2 (linear), M_t x M_r
    double carrier_freq_hz = 0.0;

    int num_tx_aps() const { return static_cast<int>(tx_ap_positions.size()); }
    int num_rx_aps() const { return static_cast<int>(rx_ap_positions.size()); }
    int num_ues() const { return static_cast<int>(ue_positions.size()); }
    int stacked_dim() const { return num_tx_aps() * n_tx_antennas; }

    /// Angle of point p seen from AP position ap. Arrays lie along the
    /// local x-axis, so the angle is measured from broadside (+y):
    /// theta = atan2(dx, dy).
    static double angle_from(const Eigen::Vector2d& ap, const Eigen::Vector2d& p) {
        const Eigen::Vector2d d = p - ap;
        return std::atan2(d.x(), d.y());
    }

    double tx_target_angle(int m) const { return angle_from(tx_ap_positions.at(m), target_position); }
    double rx_target_angle(int mr) const { return angle_from(rx_ap_positions.at(mr), target_position); }
    double ue_angle(int m, int u) const { return angle_from(tx_ap_positions.at(m), ue_positions.at(u)); }

    /// Receive-side-aggregated sensing gain zbar_m = sum_{m_r} zeta_{m,m_r}^2.
    RVec aggregated_sensing_gain() const { return sensing_gain_var.rowwise().sum(); }
};

/// Channel realizations for one scenario draw.
struct ChannelSet {
    /// Per transmit AP m: N_t x U matrix whose column u is h_{m,u}.
    std::vector<CMat> h;
    /// Transmit steering vectors a(theta_m) toward the target, size N_t each.
    std::vector<CVec> tx_steering;
    /// Receive steering vectors toward the target, size N_r each.
    std::vector<CVec> rx_steering;

    int num_tx_aps() const { return static_cast<int>(h.size()); }
    int num_ues() const { return h.empty() ? 0 : static_cast<int>(h.front().cols()); }
    int n_tx_antennas() const { return h.empty() ? 0 : static_cast<int>(h.front().rows()); }

    /// Stacked channel of UE u over all transmit APs, dimension M_t * N_t.
    CVec stacked_channel(int u) const {
        const int mt = num_tx_aps();
        const int nt = n_tx_antennas();
        CVec v(static_cast<Eigen::Index>(mt) * nt);
        for (int m = 0; m < mt; ++m) v.segment(static_cast<Eigen::Index>(m) * nt, nt) = h[m].col(u);
        return v;
    }

    /// Stacked target steering of AP m embedded at block m (zeros elsewhere).
    CVec stacked_steering(int m) const {
        const int mt = num_tx_aps();
        const int nt = n_tx_antennas();
        CVec v = CVec::Zero(static_cast<Eigen::Index>(mt) * nt);
        v.segment(static_cast<Eigen::Index>(m) * nt, nt) = tx_steering[m];
        return v;
    }
};

/// A set of stacked transmit beams: U communication streams followed by
/// Q sensing streams, as columns of a D x S matrix (D = M_t * N_t).
struct BeamSet {
    CMat beams;       ///< D x S, column s = stacked beam f_s
    int n_comm = 0;   ///< U
    int n_sens = 0;   ///< Q
    int n_tx_antennas = 0;

    int num_streams() const { return n_comm + n_sens; }
    int num_tx_aps() const {
        return n_tx_antennas > 0 ? static_cast<int>(beams.rows()) / n_tx_antennas : 0;
    }

    /// AP-m subvector of stream s.
    CVec ap_beam(int m, int s) const {
        return beams.block(static_cast<Eigen::Index>(m) * n_tx_antennas, s, n_tx_antennas, 1);
    }

    /// N_t x S matrix of all AP-m subvectors ("per-AP beam block").
    CMat ap_block(int m) const {
        return beams.middleRows(static_cast<Eigen::Index>(m) * n_tx_antennas, n_tx_antennas);
    }

    /// Power radiated by AP m: sum_s ||f_{m,s}||^2.
    double ap_power(int m) const { return ap_block(m).squaredNorm(); }
};

/// Positive-semidefinite beam covariance blocks: one matrix per
/// communication stream plus a single aggregate sensing matrix.
/// All blocks are D x D Hermitian with eigenvalues >= -1e-8 * ||block||.
struct BeamMatrixSet {
    std::vector<CMat> comm; ///< F_u, u = 0..U-1
    CMat sens;              ///< aggregate sensing matrix F_Q

    int num_comm() const { return static_cast<int>(comm.size()); }

    /// Total transmit covariance sum_u F_u + F_Q.
    CMat total() const {
        CMat t = sens;
        for (const auto& f : comm) t += f;
        return t;
    }

    /// Power radiated by AP m (trace of the AP-m diagonal block).
    double ap_power(int m, int n_tx_antennas) const {
        const Eigen::Index o = static_cast<Eigen::Index>(m) * n_tx_antennas;
        return total().block(o, o, n_tx_antennas, n_tx_antennas).real().trace();
    }
};

/// One row of experiment output: everything measured for a single
/// (realization, strategy) pair. Metrics are recomputed from beams or
/// beam matrices with the model evaluators, never copied from solver
/// objectives.
struct MetricsRecord {
    std::string strategy;
    std::uint64_t seed = 0;
    SolveStatus status = SolveStatus::optimal;
    bool feasible = false;

    double sensing_snr = 0.0;     ///< linear
    RVec ue_sinrs;                ///< linear, size U
    double min_sinr = 0.0;        ///< linear
    double gamma_target = 0.0;    ///< linear SINR target used (0 if n/a)

    int rank_sens = -1;           ///< eps-rank of the sensing matrix (-1 if n/a)
    std::string recovery;         ///< "", "optimal" or "truncated"
    double recovery_gap = 0.0;    ///< sensing SNR numerator lost by truncation
    double wall_ms = 0.0;
};

} // namespace cfisac
