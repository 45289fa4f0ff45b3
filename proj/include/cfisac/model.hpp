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
 * @file model.hpp
 * @brief Core signal-model evaluators.
 *
 * These functions are the single source of truth for every reported metric:
 * communication SINR, sensing SNR (closed form, quadratic form and Monte
 * Carlo), and the block-diagonal sensing covariance matrix. Optimizers are
 * validated against them, never the other way around.
 */

#include "cfisac/common.hpp"
#include "cfisac/rng.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

/// Half-wavelength ULA array response, a_k(theta) = exp(j*pi*k*sin(theta))
/// for k = 0..n-1. ||a(theta)||^2 = n for every theta.
inline CVec array_response(int n, double theta) {
    if (n <= 0) throw contract_error("array_response: n must be positive");
    CVec a(n);
    const double s = std::sin(theta);
    for (int k = 0; k < n; ++k) {
        const double phase = pi * static_cast<double>(k) * s;
        a(k) = cplx(std::cos(phase), std::sin(phase));
    }
    return a;
}

/// Downlink SINR of UE u given stacked beams (communication streams are
/// desired for their own UE; every other stream is interference).
inline double comm_sinr(const ChannelSet& channels, const BeamSet& beams, int u,
                        double noise_var) {
    if (u < 0 || u >= channels.num_ues()) throw contract_error("comm_sinr: UE index out of range");
    if (noise_var <= 0.0) throw contract_error("comm_sinr: noise variance must be positive");
    const CVec h = channels.stacked_channel(u);
    const CVec gains = beams.beams.adjoint() * h; // gains(s) = f_s^H h = conj(h^H f_s)
    const double signal = std::norm(gains(u));
    double interference = 0.0;
    for (int s = 0; s < beams.num_streams(); ++s)
        if (s != u) interference += std::norm(gains(s));
    return signal / (interference + noise_var);
}

/// SINR of UE u evaluated directly on covariance blocks:
/// h^H F_u h / (h^H (sum_s F_s - F_u) h + sigma^2). Used for the
/// relaxation upper-bound strategies where no rank-1 beams exist.
inline double comm_sinr_sdp_form(const ChannelSet& channels, const BeamMatrixSet& mats, int u,
                                 double noise_var) {
    if (u < 0 || u >= mats.num_comm()) throw contract_error("comm_sinr_sdp_form: UE index out of range");
    const CVec h = channels.stacked_channel(u);
    const double signal = std::real(h.dot(mats.comm[u] * h));
    double interference = std::real(h.dot(mats.sens * h));
    for (int v = 0; v < mats.num_comm(); ++v)
        if (v != u) interference += std::real(h.dot(mats.comm[v] * h));
    return std::max(signal, 0.0) / (std::max(interference, 0.0) + noise_var);
}

/// Closed-form sensing SNR of a beam set:
///   sum_{m_r} sum_{m_t} zeta_{m_t,m_r}^2 ||a(theta_{m_t})^H Fbar_{m_t}||^2
///   ---------------------------------------------------------------------
///                     sum_{m_r} varsigma_{m_r}^2
/// where Fbar_m is the AP-m block of all S beams. The number of receive
/// antennas and the observation length cancel out of the ratio.
inline double sensing_snr(const Scenario& scenario, const ChannelSet& channels,
                          const BeamSet& beams) {
    const RVec zbar = scenario.aggregated_sensing_gain();
    double num = 0.0;
    for (int m = 0; m < scenario.num_tx_aps(); ++m) {
        const Eigen::RowVectorXcd r = channels.tx_steering[m].adjoint() * beams.ap_block(m);
        num += zbar(m) * r.squaredNorm();
    }
    const double den = scenario.radar_noise_var.sum();
    if (den <= 0.0) throw contract_error("sensing_snr: radar noise must be positive");
    return num / den;
}

/// Block-diagonal sensing covariance matrix
///   A = blockdiag_m( zbar_m * a(theta_m) a(theta_m)^H ),
/// with zbar_m the receive-aggregated gain. Hermitian PSD with rank M_t.
/// The sensing SNR numerator of any beam set equals Tr(A sum_s f_s f_s^H).
inline CMat build_sensing_matrix_A(const Scenario& scenario, const ChannelSet& channels) {
    const int nt = scenario.n_tx_antennas;
    const RVec zbar = scenario.aggregated_sensing_gain();
    CMat A = CMat::Zero(scenario.stacked_dim(), scenario.stacked_dim());
    for (int m = 0; m < scenario.num_tx_aps(); ++m) {
        const CVec& a = channels.tx_steering[m];
        A.block(static_cast<Eigen::Index>(m) * nt, static_cast<Eigen::Index>(m) * nt, nt, nt) =
            zbar(m) * (a * a.adjoint());
    }
    return A;
}

/// Sensing SNR evaluated on covariance blocks: Tr(A sum F) / sum(varsigma^2).
inline double sensing_snr_sdp_form(const Scenario& scenario, const CMat& A,
                                   const BeamMatrixSet& mats) {
    const double num = std::real((A * mats.total()).trace());
    const double den = scenario.radar_noise_var.sum();
    if (den <= 0.0) throw contract_error("sensing_snr_sdp_form: radar noise must be positive");
    return std::max(num, 0.0) / den;
}

/// Result of the Monte Carlo sensing SNR estimator.
struct McSnrEstimate {
    double value = 0.0;      ///< ratio-of-sample-means estimate (linear)
    double std_error = 0.0;  ///< delta-method standard error of `value`
    double num_mean = 0.0;   ///< mean per-trial received signal energy
    double den_mean = 0.0;   ///< mean per-trial received noise energy
};

/// Simulates the sensing link and estimates the SNR from received sample
/// energies. Per trial: i.i.d. CN(0,1) transmit symbols over L uses, one
/// CN(0, zeta^2) reflection coefficient per (tx,rx) AP pair, and CN(0,
/// varsigma^2) receiver noise. The estimate is the ratio of summed signal
/// energy to summed noise energy over all trials; its standard error uses
/// the delta method for a ratio of independent sample means.
inline McSnrEstimate monte_carlo_snr_estimate(const Scenario& scenario, const ChannelSet& channels,
                                              const BeamSet& beams, int observation_len, int trials,
                                              Rng rng) {
    if (observation_len <= 0 || trials <= 0)
        throw contract_error("monte_carlo_snr_estimate: observation_len and trials must be positive");
    const int mt = scenario.num_tx_aps();
    const int mr = scenario.num_rx_aps();
    const int nr = scenario.n_rx_antennas;
    const int ns = beams.num_streams();
    const int L = observation_len;

    // Deterministic per-AP rows a(theta_m)^H Fbar_m (independent of trial).
    std::vector<Eigen::RowVectorXcd> rows(mt);
    for (int m = 0; m < mt; ++m) rows[m] = channels.tx_steering[m].adjoint() * beams.ap_block(m);

    RVec num_samples(trials), den_samples(trials);
    for (int t = 0; t < trials; ++t) {
        const CMat symbols = rng.cnormal_matrix(ns, L); // shared by all receive APs
        double sig = 0.0;
        for (int r = 0; r < mr; ++r) {
            Eigen::RowVectorXcd g = Eigen::RowVectorXcd::Zero(ns);
            for (int m = 0; m < mt; ++m) g += rng.cnormal(scenario.sensing_gain_var(m, r)) * rows[m];
            sig += static_cast<double>(nr) * (g * symbols).squaredNorm();
        }
        double noise = 0.0;
        for (int r = 0; r < mr; ++r) {
            const double var = scenario.radar_noise_var(r);
            for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(nr) * L; ++i)
                noise += std::norm(rng.cnormal(var));
        }
        num_samples(t) = sig;
        den_samples(t) = noise;
    }

    McSnrEstimate est;
    est.num_mean = num_samples.mean();
    est.den_mean = den_samples.mean();
    est.value = est.num_mean / est.den_mean;
    if (trials >= 2 && est.num_mean > 0.0) {
        const double vn = (num_samples.array() - est.num_mean).square().sum() / (trials - 1);
        const double vd = (den_samples.array() - est.den_mean).square().sum() / (trials - 1);
        const double rel_var = vn / (static_cast<double>(trials) * est.num_mean * est.num_mean) +
                               vd / (static_cast<double>(trials) * est.den_mean * est.den_mean);
        est.std_error = est.value * std::sqrt(rel_var);
    }
    return est;
}

} // namespace cfisac
