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

#include "cfisac/baselines.hpp"
#include "cfisac/jsc.hpp"
#include "cfisac/scenario_gen.hpp"

using namespace cfisac;

namespace {

JscProblemSpec make_spec(const Realization& real, const RVec& gamma, int q) {
    JscProblemSpec spec;
    spec.scenario = real.scenario;
    spec.channels = real.channels;
    spec.gamma = gamma;
    spec.n_sens_streams = q;
    return spec;
}

/// Largest equal SINR threshold the relaxed joint design can meet, found
/// by bisection (the relaxation is exact for feasibility questions).
double sdr_feasibility_gamma(const Realization& real, double hi, double rel_tol) {
    double lo = 0.0;
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (hi + lo);
        const auto sol = solve_jsc_sdr(
            make_spec(real, RVec::Constant(real.scenario.num_ues(), mid), 0));
        REQUIRE(sol.status != SolveStatus::numerical_failure);
        (sol.status == SolveStatus::optimal ? lo : hi) = mid;
    }
    return lo;
}

} // namespace

TEST_CASE("all power goes to sensing when no SINR threshold binds", "[jsc]") {
    const auto real = draw_realization(GeneratorConfig::line_setup(3), 31);
    const Scenario& sc = real.scenario;

    const auto sol = solve_jsc_sdr(make_spec(real, RVec::Zero(3), 2));
    REQUIRE(sol.status == SolveStatus::optimal);

    // Per-AP matched covariance is optimal: objective sum_m P_m zbar_m N_t.
    const double expect =
        (sc.ap_power_budget.array() * sc.aggregated_sensing_gain().array()).sum() *
        sc.n_tx_antennas;
    REQUIRE(sol.sdr_objective == Catch::Approx(expect).epsilon(1e-6));

    // Users are switched off entirely.
    for (const CMat& fu : sol.user_matrices) REQUIRE(fu.norm() == 0.0);
    REQUIRE(sol.lambda_u.maxCoeff() == 0.0);

    // Both AP blocks carry one full-power eigen-direction, so rank 2 at Q=2
    // recovers losslessly ...
    const auto [beams, rep] = recover_rank1(sol, make_spec(real, RVec::Zero(3), 2));
    REQUIRE(rep.rank_sensing == 2);
    REQUIRE(rep.label == "optimal");
    REQUIRE(rep.achieved_objective == Catch::Approx(sol.sdr_objective).epsilon(1e-9));
    REQUIRE(sensing_snr(sc, real.channels, beams) ==
            Catch::Approx(sol.sdr_objective / sc.radar_noise_var.sum()).epsilon(1e-9));

    // ... while Q=1 must truncate and lose exactly the weaker eigen-beam.
    const auto [beams1, rep1] = recover_rank1(sol, make_spec(real, RVec::Zero(3), 1));
    REQUIRE(rep1.label == "truncated");
    REQUIRE(rep1.gap == Catch::Approx(0.5 * expect).epsilon(1e-6));
    REQUIRE(beams1.beams.col(3).norm() > 0.0);
}

TEST_CASE("unreachable SINR thresholds yield a certified infeasibility", "[jsc]") {
    const auto real = draw_realization(GeneratorConfig::line_setup(2), 37);
    const auto sol = solve_jsc_sdr(make_spec(real, RVec::Constant(2, 1e9), 1));
    REQUIRE(sol.status == SolveStatus::infeasible);
    REQUIRE(sol.has_certificate);
}

TEST_CASE("relaxed joint design agrees with the cone-program max-min", "[jsc]") {
    const auto real = draw_realization(GeneratorConfig::line_setup(2), 41);
    const Scenario& sc = real.scenario;

    const auto mm = maxmin_comm_bisection(sc, real.channels, CMat(sc.stacked_dim(), 0),
                                          sc.ap_power_budget);
    REQUIRE(mm.status == SolveStatus::optimal);

    const double gamma_sdr = sdr_feasibility_gamma(real, 2.0 * mm.gamma_star, 2e-4);
    REQUIRE(gamma_sdr == Catch::Approx(mm.gamma_star).epsilon(2e-3));
}

TEST_CASE("rank-1 conversion preserves every constraint trace", "[jsc]") {
    const auto real = draw_realization(GeneratorConfig::square_setup(2), 43);
    const Scenario& sc = real.scenario;
    const ChannelSet& ch = real.channels;
    const auto spec = make_spec(real, RVec::Constant(2, 10.0), 3);

    const auto sol = solve_jsc_sdr(spec);
    REQUIRE(sol.status == SolveStatus::optimal);
    REQUIRE(sol.rel_gap < 1e-6);
    REQUIRE(sol.max_constraint_violation < 1e-7);

    const auto [beams, rep] = recover_rank1(sol, spec);

    // Total covariance is conserved up to the eigen-mass the conversion is
    // allowed to drop (everything below the rank threshold).
    CMat before = sol.sensing_matrix;
    for (const CMat& fu : sol.user_matrices) before += fu;
    CMat after = CMat::Zero(sc.stacked_dim(), sc.stacked_dim());
    for (int s = 0; s < beams.num_streams(); ++s)
        after += beams.beams.col(s) * beams.beams.col(s).adjoint();
    if (rep.label == "optimal")
        REQUIRE((before - after).norm() <= 1e-7 * before.norm());

    // Per-user gains survive the conversion exactly.
    for (int u = 0; u < 2; ++u) {
        const CVec hu = ch.stacked_channel(u);
        const double direct = std::real(hu.dot(sol.user_matrices[u] * hu));
        const double converted = std::norm(hu.dot(beams.beams.col(u)));
        REQUIRE(converted == Catch::Approx(direct).epsilon(1e-9));
    }

    // Recovered beams meet the thresholds and the budgets.
    for (int u = 0; u < 2; ++u)
        REQUIRE(comm_sinr(ch, beams, u, sc.ue_noise_var(u)) >= 10.0 * (1.0 - 1e-6));
    for (int m = 0; m < sc.num_tx_aps(); ++m)
        REQUIRE(beams.ap_power(m) <= sc.ap_power_budget(m) * (1.0 + 1e-7));

    // Lossless here: rank(F_Q) <= M_t - U = 3 and Q = 3.
    REQUIRE(rep.label == "optimal");
    REQUIRE(sensing_snr(sc, ch, beams) ==
            Catch::Approx(sol.sdr_objective / sc.radar_noise_var.sum()).epsilon(1e-6));
}

TEST_CASE("dual certificates close the loop at the optimum", "[jsc]") {
    const auto check = [](const JscProblemSpec& spec) {
        const auto sol = solve_jsc_sdr(spec);
        REQUIRE(sol.status == SolveStatus::optimal);
        REQUIRE((sol.lambda_u.array() >= 0.0).all());
        REQUIRE((sol.nu_m.array() >= 0.0).all());

        const auto kkt = kkt_dual_report(sol, spec);
        const double scale = 1.0 + kkt.b_q.norm();
        REQUIRE(kkt.bq_max_eig <= 1e-6 * scale);
        for (int u = 0; u < spec.scenario.num_ues(); ++u)
            REQUIRE(kkt.bu_max_eig(u) <= 1e-6 * scale);
        REQUIRE(kkt.slackness_q <= 1e-5);
        for (int u = 0; u < spec.scenario.num_ues(); ++u)
            REQUIRE(kkt.slackness_u(u) <= 1e-5);
        REQUIRE(kkt.remark_identity_residual <= 1e-12);
        REQUIRE(kkt.duality_gap <= 1e-6 * (1.0 + std::abs(kkt.primal_objective)));
    };

    SECTION("power-saturated geometry") {
        const auto real = draw_realization(GeneratorConfig::square_setup(3), 47);
        check(make_spec(real, RVec::Constant(3, 10.0), 2));
    }

    SECTION("binding thresholds near the max-min limit") {
        const auto real = draw_realization(GeneratorConfig::line_setup(3), 47);
        const Scenario& sc = real.scenario;
        const auto mm = maxmin_comm_bisection(sc, real.channels,
                                              CMat(sc.stacked_dim(), 0),
                                              sc.ap_power_budget);
        REQUIRE(mm.status == SolveStatus::optimal);
        check(make_spec(real, RVec::Constant(3, 0.7 * mm.gamma_star), 2));
    }
}

TEST_CASE("sensing rank obeys the stream-count laws", "[jsc]") {
    const auto real = draw_realization(GeneratorConfig::square_setup(2), 53);
    const auto spec = make_spec(real, RVec::Constant(2, 10.0), 3);
    const auto sol = solve_jsc_sdr(spec);
    REQUIRE(sol.status == SolveStatus::optimal);

    const auto rep = stream_bound_check(sol, spec);
    REQUIRE(rep.hard_bound == 5);
    REQUIRE(rep.generic_bound == 3);
    REQUIRE(rep.within_hard_bound);
    REQUIRE(rep.within_generic_bound);
    REQUIRE(rep.gain_nullspace_residual <= 1e-4);
    for (int u = 0; u < 2; ++u)
        if (rep.ue_nullspace_residual(u) >= 0.0)
            REQUIRE(rep.ue_nullspace_residual(u) <= 1e-4);
}

TEST_CASE("releasing a user's threshold can only help the objective", "[jsc]") {
    const auto real = draw_realization(GeneratorConfig::line_setup(2), 59);

    RVec both(2);
    both << 2.0, 2.0;
    const auto tight = solve_jsc_sdr(make_spec(real, both, 1));
    REQUIRE(tight.status == SolveStatus::optimal);

    RVec second_off(2);
    second_off << 2.0, 0.0;
    const auto loose = solve_jsc_sdr(make_spec(real, second_off, 1));
    REQUIRE(loose.status == SolveStatus::optimal);
    REQUIRE(loose.sdr_objective >= tight.sdr_objective * (1.0 - 1e-9));
    REQUIRE(loose.user_matrices[1].norm() == 0.0);
    REQUIRE(loose.lambda_u(1) == 0.0);

    // Recovery leaves the switched-off user without a beam.
    const auto [beams, rep2] = recover_rank1(loose, make_spec(real, second_off, 1));
    REQUIRE(beams.beams.col(1).norm() == 0.0);
    REQUIRE(beams.beams.col(0).norm() > 0.0);

    // Tightening the remaining threshold keeps shrinking the objective.
    RVec harder(2);
    harder << 8.0, 0.0;
    const auto tighter = solve_jsc_sdr(make_spec(real, harder, 1));
    REQUIRE(tighter.status == SolveStatus::optimal);
    REQUIRE(tighter.sdr_objective <= loose.sdr_objective * (1.0 + 1e-9));
}

TEST_CASE("joint design dominates the separate baseline at its own SINRs", "[jsc]") {
    const auto real = draw_realization(GeneratorConfig::square_setup(3), 61);
    const Scenario& sc = real.scenario;
    const ChannelSet& ch = real.channels;
    const PowerSplit split{0.5};

    const auto ns = nullspace_sensing(sc, ch, split.sens_power(sc));
    const CMat rzf = rzf_comm(ch, rzf_default_lambda(sc), split.comm_power(sc));
    CMat sens(sc.stacked_dim(), 1);
    sens.col(0) = ns.beam;
    const BeamSet base = assemble_beam_set(rzf, sens, sc.n_tx_antennas);

    RVec gamma(3);
    for (int u = 0; u < 3; ++u) gamma(u) = comm_sinr(ch, base, u, sc.ue_noise_var(u));

    const auto sol = solve_jsc_sdr(make_spec(real, gamma, 1));
    REQUIRE(sol.status == SolveStatus::optimal);
    const double base_numerator = sensing_snr(sc, ch, base) * sc.radar_noise_var.sum();
    REQUIRE(sol.sdr_objective >= base_numerator * (1.0 - 1e-7));
}

TEST_CASE("problem validation rejects malformed inputs", "[jsc]") {
    const auto real = draw_realization(GeneratorConfig::line_setup(2), 67);
    REQUIRE_THROWS_AS(solve_jsc_sdr(make_spec(real, RVec::Zero(3), 1)), contract_error);
    REQUIRE_THROWS_AS(solve_jsc_sdr(make_spec(real, RVec::Constant(2, -1.0), 1)),
                      contract_error);
    JscProblemSpec bad_q = make_spec(real, RVec::Zero(2), -1);
    REQUIRE_THROWS_AS(solve_jsc_sdr(bad_q), contract_error);
}
