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
 * @file scenario_gen.hpp
 * @brief Scenario and channel generation for the two benchmark setups.
 *
 * Two geometries are built in:
 *  - "line": two co-located tx/rx APs at (25,0) and (75,0) with 16-antenna
 *    arrays; the target and the UEs sit on the line y = 50 with x drawn
 *    uniformly from [0,100]. Channels are unit-amplitude line-of-sight,
 *    all noise variances are 1 W.
 *  - "square": five co-located tx/rx APs (four corners inset by 10 m plus
 *    the center) in a 100 m x 100 m area at 28 GHz with 8-antenna arrays;
 *    target and UEs uniform in the square. Channels are i.i.d. Rayleigh
 *    with an urban-microcell pathloss law and -135 dBm UE noise.
 */

#include <cstdint>

#include "cfisac/common.hpp"
#include "cfisac/model.hpp"
#include "cfisac/rng.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

enum class SetupKind { line, square };
enum class ChannelModel { los, rayleigh };

inline const char* to_string(SetupKind s) { return s == SetupKind::line ? "line" : "square"; }
inline const char* to_string(ChannelModel c) { return c == ChannelModel::los ? "los" : "rayleigh"; }

/// Everything needed to draw a random network realization.
struct GeneratorConfig {
    SetupKind setup = SetupKind::line;
    ChannelModel channel = ChannelModel::los;
    int n_ues = 5;
    int n_tx_antennas = 16;
    int n_rx_antennas = 16;
    double ap_power_w = 1.0;        ///< per-AP budget P_m
    double ue_noise_var_w = 1.0;    ///< sigma_u^2
    double radar_noise_var_w = 1.0; ///< varsigma^2 per receive AP
    double sensing_gain = 0.1;      ///< zeta amplitude (variance zeta^2 enters the model)
    double carrier_freq_hz = 28e9;

    static GeneratorConfig line_setup(int n_ues = 5) {
        GeneratorConfig c;
        c.setup = SetupKind::line;
        c.channel = ChannelModel::los;
        c.n_ues = n_ues;
        c.n_tx_antennas = 16;
        c.n_rx_antennas = 16;
        return c;
    }

    static GeneratorConfig square_setup(int n_ues) {
        GeneratorConfig c;
        c.setup = SetupKind::square;
        c.channel = ChannelModel::rayleigh;
        c.n_ues = n_ues;
        c.n_tx_antennas = 8;
        c.n_rx_antennas = 8;
        c.ue_noise_var_w = dbm_to_watt(-135.0);
        return c;
    }
};

/// Urban-microcell pathloss in dB (a negative gain). Distances below 1 m
/// are clamped to 1 m to keep the law bounded.
inline double umi_pathloss_db(double distance_m, double carrier_freq_hz) {
    const double d = std::max(distance_m, 1.0);
    const double fc_ghz = carrier_freq_hz / 1e9;
    return -32.4 - 21.0 * std::log10(d) - 20.0 * std::log10(fc_ghz);
}

/// Draws AP/UE/target geometry and fills radio constants. RNG draw order
/// (target x, then UE positions in index order) is part of the contract:
/// a given (config, seed) always produces the same scenario.
inline Scenario make_scenario(const GeneratorConfig& cfg, Rng& rng) {
    if (cfg.n_ues < 0) throw contract_error("make_scenario: n_ues must be non-negative");
    Scenario sc;
    sc.n_tx_antennas = cfg.n_tx_antennas;
    sc.n_rx_antennas = cfg.n_rx_antennas;
    sc.carrier_freq_hz = cfg.carrier_freq_hz;

    if (cfg.setup == SetupKind::line) {
        sc.tx_ap_positions = {{25.0, 0.0}, {75.0, 0.0}};
        sc.target_position = {rng.uniform(0.0, 100.0), 50.0};
        for (int u = 0; u < cfg.n_ues; ++u) sc.ue_positions.push_back({rng.uniform(0.0, 100.0), 50.0});
    } else {
        sc.tx_ap_positions = {{10.0, 10.0}, {10.0, 90.0}, {90.0, 10.0}, {90.0, 90.0}, {50.0, 50.0}};
        sc.target_position = {rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0)};
        for (int u = 0; u < cfg.n_ues; ++u)
            sc.ue_positions.push_back({rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0)});
    }
    sc.rx_ap_positions = sc.tx_ap_positions; // co-located tx/rx APs

    const int mt = sc.num_tx_aps();
    const int mr = sc.num_rx_aps();
    sc.ap_power_budget = RVec::Constant(mt, cfg.ap_power_w);
    sc.ue_noise_var = RVec::Constant(cfg.n_ues, cfg.ue_noise_var_w);
    sc.radar_noise_var = RVec::Constant(mr, cfg.radar_noise_var_w);
    sc.sensing_gain_var = RMat::Constant(mt, mr, cfg.sensing_gain * cfg.sensing_gain);
    return sc;
}

/// Draws UE channels and computes the target steering vectors.
/// Draw order: AP-major, then UE, then antenna.
inline ChannelSet draw_channels(const Scenario& sc, const GeneratorConfig& cfg, Rng& rng) {
    ChannelSet ch;
    const int mt = sc.num_tx_aps();
    const int u_count = sc.num_ues();
    ch.h.resize(mt);
    for (int m = 0; m < mt; ++m) {
        ch.h[m].resize(sc.n_tx_antennas, u_count);
        for (int u = 0; u < u_count; ++u) {
            if (cfg.channel == ChannelModel::los) {
                ch.h[m].col(u) = array_response(sc.n_tx_antennas, sc.ue_angle(m, u));
            } else {
                const double d = (sc.ue_positions[u] - sc.tx_ap_positions[m]).norm();
                const double gain = from_db(umi_pathloss_db(d, sc.carrier_freq_hz));
                ch.h[m].col(u) = rng.cnormal_vector(sc.n_tx_antennas, gain);
            }
        }
    }
    for (int m = 0; m < mt; ++m)
        ch.tx_steering.push_back(array_response(sc.n_tx_antennas, sc.tx_target_angle(m)));
    for (int r = 0; r < sc.num_rx_aps(); ++r)
        ch.rx_steering.push_back(array_response(sc.n_rx_antennas, sc.rx_target_angle(r)));
    return ch;
}

/// Convenience: scenario + channels from a config and a realization seed.
/// Internally derives separate RNG streams for geometry and fading.
struct Realization {
    Scenario scenario;
    ChannelSet channels;
};

inline Realization draw_realization(const GeneratorConfig& cfg, std::uint64_t seed) {
    Rng geo = Rng::derive(seed, 0, "geometry");
    Rng fad = Rng::derive(seed, 0, "fading");
    Realization r;
    r.scenario = make_scenario(cfg, geo);
    r.channels = draw_channels(r.scenario, cfg, fad);
    return r;
}

} // namespace cfisac
