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

#include <catch2/catch_amalgamated.hpp>

#include "cfisac/jsc.hpp"
#include "cfisac/power_alloc.hpp"
#include "cfisac/scenario_gen.hpp"

using namespace cfisac;

namespace {

/// Hand-built flat network with explicit user noise levels.
Scenario make_test_scenario(int mt, int nt, int n_ues, double power, double noise) {
    Scenario sc;
    for (int m = 0; m < mt; ++m) sc.tx_ap_positions.push_back({40.0 * m, 0.0});
    sc.rx_ap_positions = sc.tx_ap_positions;
    sc.target_position = {20.0, 60.0};
    for (int u = 0; u < n_ues; ++u) sc.ue_positions.push_back({15.0 * u, 50.0});
    sc.n_tx_antennas = nt;
    sc.n_rx_antennas = nt;
    sc.ap_power_budget = RVec::Constant(mt, power);
    sc.ue_noise_var = RVec::Constant(n_ues, noise);
    sc.radar_noise_var = RVec::Constant(mt, 1.0);
    sc.sensing_gain_var = RMat::Constant(mt, mt, 0.01);
    return sc;
}

ChannelSet make_random_channels(const Scenario& sc, int n_ues, Rng& rng) {
    ChannelSet ch;
    for (int m = 0; m < sc.num_tx_aps(); ++m)
        ch.h.push_back(rng.cnormal_matrix(sc.n_tx_antennas, n_ues));
    for (int m = 0; m < sc.num_tx_aps(); ++m)
        ch.tx_steering.push_back(array_response(sc.n_tx_antennas, sc.tx_target_angle(m)));
    for (int r = 0; r < sc.num_rx_aps(); ++r)
        ch.rx_steering.push_back(array_response(sc.n_rx_antennas, sc.rx_target_angle(r)));
    return ch;
}

/// Matched-direction beam set: stream u follows h_{m,u}/||h_{m,u}|| per AP,
/// plus one unit conjugate sensing stream.
BeamSet matched_unit_beams(const Scenario& sc, const ChannelSet& ch) {
    const int mt = sc.num_tx_aps();
    const int nt = sc.n_tx_antennas;
    const int u_count = ch.num_ues();
    CMat comm(static_cast<Eigen::Index>(mt) * nt, u_count);
    for (int u = 0; u < u_count; ++u)
        for (int m = 0; m < mt; ++m)
            comm.col(u).segment(static_cast<Eigen::Index>(m) * nt, nt) =
                ch.h[static_cast<size_t>(m)].col(u).normalized();
    CMat sens(static_cast<Eigen::Index>(mt) * nt, 1);
    for (int m = 0; m < mt; ++m)
        sens.col(0).segment(static_cast<Eigen::Index>(m) * nt, nt) =
            ch.tx_steering[static_cast<size_t>(m)].normalized();
    return assemble_beam_set(comm, sens, nt);
}

/// Applies sqrt-powers to a unit-direction beam set, per AP and stream.
BeamSet scale_beams(const BeamSet& unit, const RMat& sqrt_powers) {
    BeamSet out = unit;
    for (int s = 0; s < unit.num_streams(); ++s)
        for (int m = 0; m < unit.num_tx_aps(); ++m)
            out.beams.col(s).segment(
                static_cast<Eigen::Index>(m) * unit.n_tx_antennas, unit.n_tx_antennas) *=
                sqrt_powers(m, s);
    return out;
}

} // namespace

TEST_CASE("matched directions turn channel norms into gains", "[power]") {
    const Scenario sc = make_test_scenario(2, 4, 2, 2.0, 0.5);
    Rng rng = Rng::derive(2024, 0, "power-gains");
    const ChannelSet ch = make_random_channels(sc, 2, rng);
    BeamSet fb = matched_unit_beams(sc, ch);

    const EffectiveGains g = effective_gains(sc, ch, fb);
    REQUIRE(g.num_streams() == 3);
    REQUIRE(g.num_ues() == 2);
    REQUIRE(g.num_tx_aps() == 2);

    const RVec zbar = sc.aggregated_sensing_gain();
    for (int m = 0; m < 2; ++m) {
        for (int u = 0; u < 2; ++u) {
            // Own-stream gain of a matched direction is the channel norm.
            const cplx own = g.comm[static_cast<size_t>(u)](m, u);
            REQUIRE(std::abs(own - cplx(ch.h[static_cast<size_t>(m)].col(u).norm(), 0.0)) <=
                    1e-12 * std::abs(own));
        }
        // Unit conjugate sensing direction: |a^H a / ||a|| |^2 = N_t.
        REQUIRE(g.sensing(m, 2) ==
                Catch::Approx(zbar(m) * sc.n_tx_antennas).epsilon(1e-12));
        REQUIRE((g.sensing.row(m).array() >= 0.0).all());
    }

    // A direction orthogonal to the channel contributes zero gain.
    CVec ortho = ch.h[0].col(1);
    const CVec h00 = ch.h[0].col(0);
    ortho -= h00 * (h00.dot(ortho) / h00.squaredNorm());
    ortho.normalize();
    fb.beams.col(0).segment(0, 4) = ortho;
    const EffectiveGains g2 = effective_gains(sc, ch, fb);
    REQUIRE(std::abs(g2.comm[0](0, 0)) <= 1e-12 * h00.norm());

    // Powered (non-unit) sub-vectors violate the contract.
    fb.beams.col(0).segment(0, 4) *= 1.01;
    REQUIRE_THROWS_AS(effective_gains(sc, ch, fb), contract_error);
}

TEST_CASE("gain-based evaluators match the full model on a seeded draw", "[power]") {
    const auto real = draw_realization(GeneratorConfig::line_setup(3), 47);
    const BeamSet fb = ns_rzf_unit_beams(real.scenario, real.channels, 1);
    const EffectiveGains g = effective_gains(real.scenario, real.channels, fb);

    Rng rng = Rng::derive(2024, 1, "power-eval");
    RMat sp(g.num_tx_aps(), g.num_streams());
    for (int m = 0; m < g.num_tx_aps(); ++m)
        for (int s = 0; s < g.num_streams(); ++s)
            sp(m, s) = rng.uniform(0.05, std::sqrt(real.scenario.ap_power_budget(m) /
                                                   g.num_streams()));
    const BeamSet powered = scale_beams(fb, sp);

    for (int u = 0; u < 3; ++u) {
        const double via_gains = power_sinr(g, sp, u);
        const double via_model = comm_sinr(real.channels, powered, u, real.scenario.ue_noise_var(u));
        REQUIRE(via_gains == Catch::Approx(via_model).epsilon(1e-12));
    }
    const double num_model =
        sensing_snr(real.scenario, real.channels, powered) * real.scenario.radar_noise_var.sum();
    REQUIRE(power_objective(g, sp) == Catch::Approx(num_model).epsilon(1e-10));
}

TEST_CASE("single-link allocation matches the one-variable optimum", "[power]") {
    const Scenario sc = make_test_scenario(1, 4, 1, 2.0, 0.5);
    Rng rng = Rng::derive(2024, 2, "power-single");
    const ChannelSet ch = make_random_channels(sc, 1, rng);
    const CMat comm = CMat(ch.h[0].col(0).normalized());
    const BeamSet fb = assemble_beam_set(comm, CMat(4, 0), 4);
    const EffectiveGains g = effective_gains(sc, ch, fb);

    const double p_max = sc.ap_power_budget(0);
    const double bound = p_max * ch.h[0].col(0).squaredNorm() / sc.ue_noise_var(0);

    SECTION("attainable target: full budget, objective P * gain") {
        PowerSolution ps = solve_power_sdr(g, RVec::Constant(1, 0.5 * bound), sc.ap_power_budget);
        REQUIRE(ps.status == SolveStatus::optimal);
        REQUIRE(ps.sdr_objective == Catch::Approx(p_max * g.sensing(0, 0)).epsilon(1e-7));
        const auto rep = extract_rank1_powers(ps, g, RVec::Constant(1, 0.5 * bound),
                                              sc.ap_power_budget);
        REQUIRE(rep.sqrt_powers(0, 0) * rep.sqrt_powers(0, 0) ==
                Catch::Approx(p_max).epsilon(1e-7));
        REQUIRE(rep.feasible);
        REQUIRE(ps.feasibility_after_extraction);
    }
    SECTION("target beyond the single-beam bound is certified infeasible") {
        PowerSolution ps = solve_power_sdr(g, RVec::Constant(1, 1.1 * bound), sc.ap_power_budget);
        REQUIRE(ps.status == SolveStatus::infeasible);
        REQUIRE(ps.has_certificate);
    }
    SECTION("a zero target drops the constraint, not the stream") {
        PowerSolution ps = solve_power_sdr(g, RVec::Zero(1), sc.ap_power_budget);
        REQUIRE(ps.status == SolveStatus::optimal);
        REQUIRE(ps.sdr_objective == Catch::Approx(p_max * g.sensing(0, 0)).epsilon(1e-7));
    }
}

TEST_CASE("rank-1 lifted blocks extract exactly and budgets re-impose by scaling", "[power]") {
    const Scenario sc = make_test_scenario(2, 4, 2, 2.0, 0.5);
    Rng rng = Rng::derive(2024, 3, "power-extract");
    const ChannelSet ch = make_random_channels(sc, 2, rng);
    const EffectiveGains g = effective_gains(sc, ch, matched_unit_beams(sc, ch));

    RMat sp_true(2, 3);
    sp_true << 0.7, 0.2, 0.5, //
        0.3, 0.9, 0.4;
    const auto lift = [&](const RVec& p) { return RMat(p * p.transpose()); };

    PowerSolution sol;
    sol.status = SolveStatus::optimal;
    for (int s = 0; s < 3; ++s) {
        RVec p = sp_true.col(s);
        if (s == 1) p(1) = -p(1); // sign-flipped eigenvector, same lifted matrix rank
        sol.power_matrices.push_back(lift(p));
    }
    const RVec tiny_gamma = RVec::Constant(2, 1e-6);

    SECTION("exact recovery under generous budgets") {
        const auto rep = extract_rank1_powers(sol, g, tiny_gamma, sc.ap_power_budget);
        REQUIRE((rep.sqrt_powers - sp_true).cwiseAbs().maxCoeff() <= 1e-12);
        REQUIRE(rep.scale == Catch::Approx(1.0));
        REQUIRE((rep.sqrt_powers.array() >= 0.0).all());
        REQUIRE(rep.feasible);
    }
    SECTION("global factor preserves every power ratio") {
        const RVec small = RVec::Constant(2, 0.5);
        const auto rep = extract_rank1_powers(sol, g, tiny_gamma, small);
        REQUIRE(rep.scale < 1.0);
        REQUIRE((rep.sqrt_powers - rep.scale * sp_true).cwiseAbs().maxCoeff() <= 1e-12);
        REQUIRE(rep.max_budget_use <= 1.0 + 1e-9);
        // The binding AP uses its budget exactly.
        REQUIRE(rep.max_budget_use == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("per-AP factors saturate every violated budget") {
        const RVec small = RVec::Constant(2, 0.5);
        const auto rep =
            extract_rank1_powers(sol, g, tiny_gamma, small, BudgetScaling::per_ap);
        for (int m = 0; m < 2; ++m)
            REQUIRE(rep.sqrt_powers.row(m).squaredNorm() ==
                    Catch::Approx(small(m)).epsilon(1e-12));
    }
    SECTION("extraction demands an optimal lifted solution") {
        PowerSolution bad;
        bad.status = SolveStatus::infeasible;
        REQUIRE_THROWS_AS(extract_rank1_powers(bad, g, tiny_gamma, sc.ap_power_budget),
                          contract_error);
    }
}

TEST_CASE("relaxation sandwich on a seeded line draw", "[power]") {
    const auto real = draw_realization(GeneratorConfig::line_setup(3), 47);
    const BeamSet fb = ns_rzf_unit_beams(real.scenario, real.channels, 1);
    const EffectiveGains g = effective_gains(real.scenario, real.channels, fb);
    const RVec budget = real.scenario.ap_power_budget;

    SECTION("moderate target: relaxed value frozen, heuristic honestly short") {
        const RVec gv = RVec::Constant(3, 0.1);
        PowerSolution ps = solve_power_sdr(g, gv, budget);
        REQUIRE(ps.status == SolveStatus::optimal);
        REQUIRE(ps.rel_gap <= 1e-6);
        REQUIRE(ps.sdr_objective == Catch::Approx(6.060742173e-01).epsilon(1e-6));
        for (int m = 0; m < 2; ++m) {
            double use = 0.0;
            for (const RMat& p : ps.power_matrices) use += p(m, m);
            REQUIRE(use <= budget(m) * (1.0 + 1e-9));
        }

        const auto rep = extract_rank1_powers(ps, g, gv, budget);
        REQUIRE(rep.achieved_objective <= ps.sdr_objective * (1.0 + 1e-9));
        REQUIRE(rep.max_budget_use <= 1.0 + 1e-9);
        REQUIRE((rep.sqrt_powers.array() >= 0.0).all());
        // The top-eigenvector heuristic loses SINR here and must say so.
        REQUIRE_FALSE(rep.feasible);
        REQUIRE(rep.min_sinr_margin < -1e-3);

        // Re-weighting fixed directions can never beat re-shaping the beams.
        JscProblemSpec spec;
        spec.scenario = real.scenario;
        spec.channels = real.channels;
        spec.gamma = gv;
        spec.n_sens_streams = 1;
        const auto js = solve_jsc_sdr(spec);
        REQUIRE(js.status == SolveStatus::optimal);
        REQUIRE(js.sdr_objective == Catch::Approx(6.398001395e-01).epsilon(1e-6));
        REQUIRE(ps.sdr_objective <= js.sdr_objective * (1.0 + 1e-6));
    }
    SECTION("binding target: the relaxed optimum is already rank-1") {
        const RVec gv = RVec::Constant(3, 0.5);
        PowerSolution ps = solve_power_sdr(g, gv, budget);
        REQUIRE(ps.status == SolveStatus::optimal);
        const auto rep = extract_rank1_powers(ps, g, gv, budget);
        REQUIRE(rep.feasible);
        REQUIRE(rep.min_sinr_margin >= -1e-6);
        REQUIRE(rep.achieved_objective == Catch::Approx(ps.sdr_objective).epsilon(1e-4));
    }
    SECTION("unattainable target is certified infeasible") {
        PowerSolution ps = solve_power_sdr(g, RVec::Constant(3, 1e3), budget);
        REQUIRE(ps.status == SolveStatus::infeasible);
        REQUIRE(ps.has_certificate);
    }
}

TEST_CASE("zero targets reduce to a per-AP best-gain split", "[power]") {
    const auto real = draw_realization(GeneratorConfig::square_setup(1), 7);
    const BeamSet fb = ns_rzf_unit_beams(real.scenario, real.channels, 1);
    const EffectiveGains g = effective_gains(real.scenario, real.channels, fb);

    PowerSolution ps = solve_power_sdr(g, RVec::Zero(1), real.scenario.ap_power_budget);
    REQUIRE(ps.status == SolveStatus::optimal);
    double closed = 0.0;
    for (int m = 0; m < g.num_tx_aps(); ++m)
        closed += real.scenario.ap_power_budget(m) * g.sensing.row(m).maxCoeff();
    REQUIRE(ps.sdr_objective == Catch::Approx(closed).epsilon(1e-8));

    const auto rep = extract_rank1_powers(ps, g, RVec::Zero(1), real.scenario.ap_power_budget);
    REQUIRE(rep.feasible); // no targets: only budgets can bind
    REQUIRE(rep.achieved_objective <= ps.sdr_objective * (1.0 + 1e-9));
}

TEST_CASE("high targets on a dense draw: relaxation feasible, heuristic short", "[power]") {
    const auto real = draw_realization(GeneratorConfig::square_setup(2), 101);
    const BeamSet fb = ns_rzf_unit_beams(real.scenario, real.channels, 1);
    const EffectiveGains g = effective_gains(real.scenario, real.channels, fb);
    const RVec gv = RVec::Constant(2, 10.0);

    PowerSolution ps = solve_power_sdr(g, gv, real.scenario.ap_power_budget);
    REQUIRE(ps.status == SolveStatus::optimal);
    REQUIRE(ps.sdr_objective == Catch::Approx(1.389859e+00).epsilon(1e-5));
    // Cauchy-Schwarz ceiling over all beam shapes: sum_m P_m zbar_m N_t.
    const double ceiling = (real.scenario.ap_power_budget.array() *
                            real.scenario.aggregated_sensing_gain().array())
                               .sum() *
                           real.scenario.n_tx_antennas;
    REQUIRE(ps.sdr_objective < ceiling);

    const auto rep = extract_rank1_powers(ps, g, gv, real.scenario.ap_power_budget);
    REQUIRE_FALSE(rep.feasible);
    REQUIRE(rep.min_sinr_margin < -0.9);
}

TEST_CASE("power allocation argument contracts", "[power]") {
    const Scenario sc = make_test_scenario(2, 4, 2, 2.0, 0.5);
    Rng rng = Rng::derive(2024, 4, "power-contracts");
    const ChannelSet ch = make_random_channels(sc, 2, rng);
    const EffectiveGains g = effective_gains(sc, ch, matched_unit_beams(sc, ch));

    REQUIRE_THROWS_AS(solve_power_sdr(g, RVec::Constant(3, 1.0), sc.ap_power_budget),
                      contract_error);
    REQUIRE_THROWS_AS(solve_power_sdr(g, RVec::Constant(2, -1.0), sc.ap_power_budget),
                      contract_error);
    REQUIRE_THROWS_AS(solve_power_sdr(g, RVec::Constant(2, 1.0), RVec::Zero(2)), contract_error);
    REQUIRE_THROWS_AS(power_sinr(g, RMat::Zero(3, 3), 0), contract_error);
    REQUIRE_THROWS_AS(ns_rzf_unit_beams(sc, ch, -1), contract_error);
}
