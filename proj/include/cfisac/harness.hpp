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
 * @file harness.hpp
 * @brief Monte-Carlo experiment harness: configuration, per-realization
 *        strategy evaluation, sweep drivers, and CSV reporting.
 *
 * A realization draws one scenario + channel set from a seed and runs a
 * list of design strategies on it. Every strategy ends in a concrete
 * transmit design whose metrics are recomputed through the core model
 * evaluators (never read back from a solver), so all strategies are
 * compared under identical accounting:
 *
 *   - "ns-rzf":  fixed power split rho; regularized zero-forcing user
 *                beams plus a null-space sensing beam.
 *   - "ns-opt":  same null-space sensing beam; user beams from the
 *                max-min SINR bisection.
 *   - "cb-opt":  conjugate (target-matched) sensing beam; user beams
 *                from the max-min SINR bisection.
 *   - "jsc-beam": joint semidefinite design with per-UE SINR thresholds,
 *                converted to beams by the rank-1 recovery step.
 *   - "jsc-beam-ub": the same relaxed solve reported at its covariance
 *                optimum (an upper bound; no beam conversion).
 *   - "jsc-power": power re-allocation over the fixed ns-rzf unit
 *                directions, converted to powers by the rank-1 step.
 *   - "jsc-power-ub": the lifted power relaxation at its optimum.
 *
 * The joint strategies need per-UE SINR thresholds; the threshold rule is
 * part of the configuration ("gamma mode"): a fixed value, the min-SINR
 * achieved by ns-opt on the same realization (equal thresholds), or the
 * per-UE SINRs achieved by ns-rzf.
 *
 * Sweeps fan realizations out over a work pool; each realization is fully
 * determined by (config, seed), so results, aggregation, and the CSV byte
 * stream are independent of thread count and scheduling. All internal
 * math is linear-scale; dB conversions happen only in the CSV writers.
 */

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cfisac/baselines.hpp"
#include "cfisac/common.hpp"
#include "cfisac/jsc.hpp"
#include "cfisac/model.hpp"
#include "cfisac/power_alloc.hpp"
#include "cfisac/scenario_gen.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

// ------------------------------------------------------------ strategies

enum class Strategy {
    ns_rzf,
    ns_opt,
    cb_opt,
    jsc_beam,
    jsc_power,
    jsc_beam_ub,
    jsc_power_ub,
};

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::ns_rzf: return "ns-rzf";
        case Strategy::ns_opt: return "ns-opt";
        case Strategy::cb_opt: return "cb-opt";
        case Strategy::jsc_beam: return "jsc-beam";
        case Strategy::jsc_power: return "jsc-power";
        case Strategy::jsc_beam_ub: return "jsc-beam-ub";
        case Strategy::jsc_power_ub: return "jsc-power-ub";
    }
    return "?";
}

inline Strategy strategy_from_string(const std::string& name) {
    for (Strategy s : {Strategy::ns_rzf, Strategy::ns_opt, Strategy::cb_opt, Strategy::jsc_beam,
                       Strategy::jsc_power, Strategy::jsc_beam_ub, Strategy::jsc_power_ub})
        if (name == to_string(s)) return s;
    throw contract_error("unknown strategy: " + name);
}

/// Rule that turns a realization into per-UE SINR thresholds for the
/// joint strategies.
enum class GammaMode {
    equal_from_ns_opt,   ///< all UEs get the min-SINR achieved by ns-opt
    per_ue_from_ns_rzf,  ///< each UE gets the SINR achieved by ns-rzf
    fixed,               ///< all UEs get the configured fixed value
};

inline const char* to_string(GammaMode m) {
    switch (m) {
        case GammaMode::equal_from_ns_opt: return "equal-from-ns-opt";
        case GammaMode::per_ue_from_ns_rzf: return "per-ue-from-ns-rzf";
        case GammaMode::fixed: return "fixed";
    }
    return "?";
}

inline GammaMode gamma_mode_from_string(const std::string& name) {
    for (GammaMode m :
         {GammaMode::equal_from_ns_opt, GammaMode::per_ue_from_ns_rzf, GammaMode::fixed})
        if (name == to_string(m)) return m;
    throw contract_error("unknown gamma mode: " + name);
}

// ----------------------------------------------------------- experiment

/// Full description of a Monte-Carlo experiment. A record produced from
/// (config, seed) is deterministic; `threads` only controls scheduling.
struct ExperimentConfig {
    GeneratorConfig generator = GeneratorConfig::line_setup();
    std::vector<Strategy> strategies = {Strategy::ns_rzf, Strategy::ns_opt, Strategy::cb_opt,
                                        Strategy::jsc_beam};

    GammaMode gamma_mode = GammaMode::equal_from_ns_opt;
    double fixed_gamma_db = 10.0; ///< used only when gamma_mode == fixed
    int n_streams = 1;            ///< sensing stream budget Q for jsc-beam
    double rho = 0.5;             ///< power split for the baseline strategies

    int realizations = 100;
    std::uint64_t seed_base = 1; ///< realization i uses seed_base + i
    int threads = 0;             ///< work-pool width; 0 = hardware concurrency

    // Sweep grids (each sweep reads only the grid it varies).
    std::vector<double> rho_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    double distance_bin_m = 5.0; ///< bin width for the target-distance sweep
    std::vector<int> ue_grid = {1, 2, 3, 4, 5};
    std::vector<int> stream_grid = {0, 1, 2, 3, 4};

    void validate() const {
        if (realizations < 1) throw contract_error("ExperimentConfig: realizations must be >= 1");
        if (strategies.empty()) throw contract_error("ExperimentConfig: empty strategy list");
        for (size_t i = 0; i < strategies.size(); ++i)
            for (size_t j = i + 1; j < strategies.size(); ++j)
                if (strategies[i] == strategies[j])
                    throw contract_error("ExperimentConfig: duplicate strategy");
        if (!(rho > 0.0 && rho < 1.0))
            throw contract_error("ExperimentConfig: rho must lie strictly inside (0, 1)");
        if (n_streams < 0) throw contract_error("ExperimentConfig: n_streams must be >= 0");
        if (!std::isfinite(fixed_gamma_db))
            throw contract_error("ExperimentConfig: fixed_gamma_db must be finite");
        if (threads < 0) throw contract_error("ExperimentConfig: threads must be >= 0");
        if (rho_grid.empty()) throw contract_error("ExperimentConfig: empty rho grid");
        for (double r : rho_grid)
            if (!(r > 0.0 && r < 1.0))
                throw contract_error("ExperimentConfig: rho grid values must lie in (0, 1)");
        if (!(distance_bin_m > 0.0))
            throw contract_error("ExperimentConfig: distance_bin_m must be positive");
        if (ue_grid.empty()) throw contract_error("ExperimentConfig: empty UE grid");
        for (int u : ue_grid)
            if (u < 1) throw contract_error("ExperimentConfig: UE grid values must be >= 1");
        if (stream_grid.empty()) throw contract_error("ExperimentConfig: empty stream grid");
        for (int q : stream_grid)
            if (q < 0) throw contract_error("ExperimentConfig: stream grid values must be >= 0");
    }

    bool has_strategy(Strategy s) const {
        return std::find(strategies.begin(), strategies.end(), s) != strategies.end();
    }
};

/// Records of one realization: one row per configured strategy, in
/// configuration order, plus the geometry fact used by the distance sweep.
struct RealizationResult {
    std::uint64_t seed = 0;
    double min_target_ue_distance_m = 0.0; ///< min over UEs of ||target - UE||
    std::vector<MetricsRecord> records;
};

// ------------------------------------------------------------- internals

namespace detail {

/// Per-realization workspace. Strategies share expensive intermediates
/// (the null-space beam, the ns-opt bisection, the semidefinite solves)
/// through lazy caches, so e.g. requesting both a joint design and its
/// relaxation bound costs one solve. Threshold rules that reference a
/// baseline compute that baseline here even when it is not in the
/// configured strategy list.
class StrategyContext {
  public:
    StrategyContext(const ExperimentConfig& cfg, const Scenario& sc, const ChannelSet& ch)
        : cfg_(cfg), sc_(sc), ch_(ch) {}

    const Scenario& scenario() const { return sc_; }
    const ChannelSet& channels() const { return ch_; }
    const ExperimentConfig& config() const { return cfg_; }

    /// Null-space sensing beam at the (1 - rho) split.
    const CVec& ns_beam() {
        if (!ns_beam_) {
            const PowerSplit split{cfg_.rho};
            ns_beam_ = nullspace_sensing(sc_, ch_, split.sens_power(sc_)).beam;
        }
        return *ns_beam_;
    }

    /// ns-rzf beam set (RZF user beams + null-space sensing beam).
    const BeamSet& rzf_beams() {
        if (!rzf_beams_) {
            const PowerSplit split{cfg_.rho};
            const CMat comm =
                rzf_comm(ch_, rzf_default_lambda(sc_), split.comm_power(sc_));
            rzf_beams_ = assemble_beam_set(comm, ns_beam(), sc_.n_tx_antennas);
        }
        return *rzf_beams_;
    }

    /// ns-opt max-min bisection result (status checked by callers).
    const MaxMinResult& ns_opt() {
        if (!ns_opt_) {
            const PowerSplit split{cfg_.rho};
            ns_opt_ = maxmin_comm_bisection(sc_, ch_, ns_beam(), split.comm_power(sc_));
        }
        return *ns_opt_;
    }

    /// Per-UE SINR thresholds per the configured gamma mode.
    const RVec& gamma() {
        if (!gamma_) {
            const int u_count = sc_.num_ues();
            switch (cfg_.gamma_mode) {
                case GammaMode::fixed:
                    gamma_ = RVec::Constant(u_count, from_db(cfg_.fixed_gamma_db));
                    break;
                case GammaMode::equal_from_ns_opt: {
                    const MaxMinResult& mm = ns_opt();
                    if (mm.status != SolveStatus::optimal)
                        throw numerical_error(
                            "gamma rule: ns-opt reference did not solve");
                    gamma_ = RVec::Constant(u_count, mm.gamma_star);
                    break;
                }
                case GammaMode::per_ue_from_ns_rzf: {
                    const BeamSet& b = rzf_beams();
                    RVec g(u_count);
                    for (int u = 0; u < u_count; ++u)
                        g(u) = comm_sinr(ch_, b, u, sc_.ue_noise_var(u));
                    gamma_ = std::move(g);
                    break;
                }
            }
        }
        return *gamma_;
    }

    JscProblemSpec jsc_spec() {
        JscProblemSpec spec;
        spec.scenario = sc_;
        spec.channels = ch_;
        spec.gamma = gamma();
        spec.n_sens_streams = cfg_.n_streams;
        return spec;
    }

    /// Joint covariance solve, shared by jsc-beam and jsc-beam-ub.
    const JscSdrSolution& jsc() {
        if (!jsc_) jsc_ = solve_jsc_sdr(jsc_spec());
        return *jsc_;
    }

    /// Fixed unit directions for the power allocator.
    const BeamSet& power_directions() {
        if (!power_dirs_) power_dirs_ = ns_rzf_unit_beams(sc_, ch_, 1);
        return *power_dirs_;
    }

    const EffectiveGains& power_gains() {
        if (!power_gains_) power_gains_ = effective_gains(sc_, ch_, power_directions());
        return *power_gains_;
    }

    /// Lifted power solve, shared by jsc-power and jsc-power-ub.
    /// Non-const: the rank-1 extraction annotates the solution in place.
    PowerSolution& power() {
        if (!power_) power_ = solve_power_sdr(power_gains(), gamma(), sc_.ap_power_budget);
        return *power_;
    }

  private:
    const ExperimentConfig& cfg_;
    const Scenario& sc_;
    const ChannelSet& ch_;

    std::optional<CVec> ns_beam_;
    std::optional<BeamSet> rzf_beams_;
    std::optional<MaxMinResult> ns_opt_;
    std::optional<RVec> gamma_;
    std::optional<JscSdrSolution> jsc_;
    std::optional<BeamSet> power_dirs_;
    std::optional<EffectiveGains> power_gains_;
    std::optional<PowerSolution> power_;
};

/// Fills the metric fields of `rec` from a concrete beam set using the
/// core-model evaluators. If `gamma` is non-null, feasibility means every
/// thresholded UE reaches its target up to 1e-6 relative slack; otherwise
/// it means the producing solve finished optimally.
inline void fill_from_beams(MetricsRecord& rec, const Scenario& sc, const ChannelSet& ch,
                            const BeamSet& beams, const RVec* gamma) {
    const int u_count = sc.num_ues();
    rec.sensing_snr = sensing_snr(sc, ch, beams);
    rec.ue_sinrs = RVec::Zero(u_count);
    for (int u = 0; u < u_count; ++u)
        rec.ue_sinrs(u) = comm_sinr(ch, beams, u, sc.ue_noise_var(u));
    rec.min_sinr = u_count > 0 ? rec.ue_sinrs.minCoeff() : 0.0;
    if (gamma != nullptr) {
        rec.gamma_target = gamma->size() > 0 ? gamma->minCoeff() : 0.0;
        bool ok = rec.status == SolveStatus::optimal;
        for (int u = 0; u < u_count && ok; ++u)
            if ((*gamma)(u) > JscProblemSpec::active_gamma_floor)
                ok = rec.ue_sinrs(u) >= (*gamma)(u) * (1.0 - 1e-6);
        rec.feasible = ok;
    } else {
        rec.feasible = rec.status == SolveStatus::optimal;
    }
}

/// Same as fill_from_beams but for covariance blocks (the relaxation
/// bound rows), using the trace-form evaluators.
inline void fill_from_matrices(MetricsRecord& rec, const Scenario& sc, const ChannelSet& ch,
                               const BeamMatrixSet& mats, const RVec& gamma) {
    const int u_count = sc.num_ues();
    const CMat a_full = build_sensing_matrix_A(sc, ch);
    rec.sensing_snr = sensing_snr_sdp_form(sc, a_full, mats);
    rec.ue_sinrs = RVec::Zero(u_count);
    for (int u = 0; u < u_count; ++u)
        rec.ue_sinrs(u) = comm_sinr_sdp_form(ch, mats, u, sc.ue_noise_var(u));
    rec.min_sinr = u_count > 0 ? rec.ue_sinrs.minCoeff() : 0.0;
    rec.gamma_target = gamma.size() > 0 ? gamma.minCoeff() : 0.0;
    bool ok = rec.status == SolveStatus::optimal;
    for (int u = 0; u < u_count && ok; ++u)
        if (gamma(u) > JscProblemSpec::active_gamma_floor)
            ok = rec.ue_sinrs(u) >= gamma(u) * (1.0 - 1e-6);
    rec.feasible = ok;
    const HermitianEig eig = hermitian_eig(hermitian_part(mats.sens), 1e-6);
    rec.rank_sens = rank_eps(eig.eigenvalues);
}

/// Runs one strategy on one realization. Solver failures of any kind are
/// recorded in the row (status numerical-failure) and never propagate.
inline MetricsRecord eval_strategy(StrategyContext& ctx, Strategy strat, std::uint64_t seed) {
    const Scenario& sc = ctx.scenario();
    const ChannelSet& ch = ctx.channels();
    MetricsRecord rec;
    rec.strategy = to_string(strat);
    rec.seed = seed;
    rec.ue_sinrs = RVec::Zero(sc.num_ues());
    const auto t0 = std::chrono::steady_clock::now();
    try {
        switch (strat) {
            case Strategy::ns_rzf: {
                rec.status = SolveStatus::optimal;
                fill_from_beams(rec, sc, ch, ctx.rzf_beams(), nullptr);
                break;
            }
            case Strategy::ns_opt:
            case Strategy::cb_opt: {
                const PowerSplit split{ctx.config().rho};
                const CVec sens = strat == Strategy::ns_opt
                                      ? ctx.ns_beam()
                                      : conjugate_sensing(sc, split.sens_power(sc));
                const MaxMinResult mm =
                    strat == Strategy::ns_opt
                        ? ctx.ns_opt()
                        : maxmin_comm_bisection(sc, ch, sens, split.comm_power(sc));
                rec.status = mm.status;
                if (mm.status == SolveStatus::optimal) {
                    const BeamSet beams =
                        assemble_beam_set(mm.comm_beams, sens, sc.n_tx_antennas);
                    fill_from_beams(rec, sc, ch, beams, nullptr);
                    rec.gamma_target = mm.gamma_star;
                }
                break;
            }
            case Strategy::jsc_beam: {
                const RVec& gamma = ctx.gamma();
                const JscSdrSolution& sol = ctx.jsc();
                rec.status = sol.status;
                if (sol.status == SolveStatus::optimal) {
                    const auto [beams, rep] = recover_rank1(sol, ctx.jsc_spec());
                    fill_from_beams(rec, sc, ch, beams, &gamma);
                    rec.rank_sens = rep.rank_sensing;
                    rec.recovery = rep.label;
                    rec.recovery_gap = rep.gap;
                } else {
                    rec.gamma_target = gamma.size() > 0 ? gamma.minCoeff() : 0.0;
                }
                break;
            }
            case Strategy::jsc_beam_ub: {
                const RVec& gamma = ctx.gamma();
                const JscSdrSolution& sol = ctx.jsc();
                rec.status = sol.status;
                if (sol.status == SolveStatus::optimal) {
                    BeamMatrixSet mats;
                    mats.comm = sol.user_matrices;
                    mats.sens = sol.sensing_matrix;
                    fill_from_matrices(rec, sc, ch, mats, gamma);
                } else {
                    rec.gamma_target = gamma.size() > 0 ? gamma.minCoeff() : 0.0;
                }
                break;
            }
            case Strategy::jsc_power: {
                const RVec& gamma = ctx.gamma();
                PowerSolution& sol = ctx.power();
                rec.status = sol.status;
                if (sol.status == SolveStatus::optimal) {
                    const PowerExtractionReport rep = extract_rank1_powers(
                        sol, ctx.power_gains(), gamma, sc.ap_power_budget);
                    const BeamSet beams = apply_powers(ctx.power_directions(), rep.sqrt_powers);
                    fill_from_beams(rec, sc, ch, beams, &gamma);
                    // The extraction report already enforces budgets and
                    // re-checks the targets; its verdict is authoritative.
                    rec.feasible = rep.feasible;
                } else {
                    rec.gamma_target = gamma.size() > 0 ? gamma.minCoeff() : 0.0;
                }
                break;
            }
            case Strategy::jsc_power_ub: {
                const RVec& gamma = ctx.gamma();
                PowerSolution& sol = ctx.power();
                rec.status = sol.status;
                if (sol.status == SolveStatus::optimal) {
                    const EffectiveGains& gains = ctx.power_gains();
                    rec.sensing_snr = sol.sdr_objective / sc.radar_noise_var.sum();
                    rec.ue_sinrs = RVec::Zero(sc.num_ues());
                    for (int u = 0; u < sc.num_ues(); ++u)
                        rec.ue_sinrs(u) = power_sinr_lifted(gains, sol.power_matrices, u);
                    rec.min_sinr = sc.num_ues() > 0 ? rec.ue_sinrs.minCoeff() : 0.0;
                    rec.gamma_target = gamma.size() > 0 ? gamma.minCoeff() : 0.0;
                    bool ok = true;
                    for (int u = 0; u < sc.num_ues() && ok; ++u)
                        if (gamma(u) > JscProblemSpec::active_gamma_floor)
                            ok = rec.ue_sinrs(u) >= gamma(u) * (1.0 - 1e-6);
                    rec.feasible = ok;
                } else {
                    rec.gamma_target = gamma.size() > 0 ? gamma.minCoeff() : 0.0;
                }
                break;
            }
        }
    } catch (const std::exception&) {
        rec.status = SolveStatus::numerical_failure;
        rec.feasible = false;
    }
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

/// Static work pool over [0, n_tasks). `fn` must not throw. With
/// `threads` <= 1 (or a single task) everything runs inline.
inline void parallel_for(int n_tasks, int threads, const std::function<void(int)>& fn) {
    if (n_tasks <= 0) return;
    int width = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    width = std::max(1, std::min(width, n_tasks));
    if (width == 1) {
        for (int i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(width));
    for (int w = 0; w < width; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

} // namespace detail

// ----------------------------------------------------------- realization

/// Evaluates every configured strategy on the realization drawn from
/// `seed`. Produces exactly one record per strategy in configuration
/// order; per-strategy failures are recorded in their row so a batch is
/// never aborted by a single bad solve.
inline RealizationResult run_realization(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    RealizationResult out;
    out.seed = seed;
    try {
        const Realization real = draw_realization(cfg.generator, seed);
        const Scenario& sc = real.scenario;
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto& ue : sc.ue_positions)
            dmin = std::min(dmin, (sc.target_position - ue).norm());
        out.min_target_ue_distance_m = std::isfinite(dmin) ? dmin : 0.0;
        detail::StrategyContext ctx(cfg, sc, real.channels);
        out.records.reserve(cfg.strategies.size());
        for (Strategy s : cfg.strategies)
            out.records.push_back(detail::eval_strategy(ctx, s, seed));
    } catch (const std::exception&) {
        // Defensive: a failure before any strategy ran (e.g. a degenerate
        // draw) still yields a complete, explicitly failed row set.
        out.records.clear();
        for (Strategy s : cfg.strategies) {
            MetricsRecord rec;
            rec.strategy = to_string(s);
            rec.seed = seed;
            rec.status = SolveStatus::numerical_failure;
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

/// Runs `cfg.realizations` independent realizations with seeds
/// seed_base, seed_base+1, ... on the work pool. The result order is by
/// seed regardless of scheduling.
inline std::vector<RealizationResult> run_batch(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<RealizationResult> results(static_cast<size_t>(cfg.realizations));
    detail::parallel_for(cfg.realizations, cfg.threads, [&](int i) {
        results[static_cast<size_t>(i)] =
            run_realization(cfg, cfg.seed_base + static_cast<std::uint64_t>(i));
    });
    return results;
}

// -------------------------------------------------------------- sweeps

/// One aggregated cell of a sweep: a (grid value, strategy) pair averaged
/// over realizations. Metric means are taken in linear scale over the
/// rows whose solve finished optimally (`n_ok`) and converted to dB here,
/// at the reporting boundary; NaN marks an empty aggregate.
struct SweepRow {
    std::string variable; ///< name of the swept quantity
    double value = 0.0;
    double value2 = std::numeric_limits<double>::quiet_NaN(); ///< secondary grid value, if any
    std::string strategy;

    int n = 0;    ///< realizations aggregated
    int n_ok = 0; ///< rows with an optimal solve
    double feasible_rate = 0.0;
    int failures = 0; ///< rows with a numerical failure

    double mean_sensing_snr_db = std::numeric_limits<double>::quiet_NaN();
    double median_sensing_snr_db = std::numeric_limits<double>::quiet_NaN();
    double mean_sinr_db = std::numeric_limits<double>::quiet_NaN();     ///< over UEs and rows
    double mean_min_sinr_db = std::numeric_limits<double>::quiet_NaN(); ///< per-row min, averaged
    double mean_gamma_db = std::numeric_limits<double>::quiet_NaN();    ///< mean threshold used
    double mean_rank = std::numeric_limits<double>::quiet_NaN(); ///< sensing rank where reported
    double mean_wall_ms = 0.0;
};

struct SweepTable {
    std::string name;     ///< "rho", "distance", or "streams"
    std::string variable; ///< primary grid column name
    std::vector<SweepRow> rows;

    int total_failures() const {
        int f = 0;
        for (const SweepRow& r : rows) f += r.failures;
        return f;
    }
};

namespace detail {

inline SweepRow aggregate_rows(std::string variable, double value, double value2,
                               std::string strategy,
                               const std::vector<const MetricsRecord*>& rs) {
    SweepRow row;
    row.variable = std::move(variable);
    row.value = value;
    row.value2 = value2;
    row.strategy = std::move(strategy);
    row.n = static_cast<int>(rs.size());

    std::vector<double> snr;
    double sum_snr = 0.0, sum_sinr = 0.0, sum_min = 0.0, sum_gamma = 0.0, sum_wall = 0.0;
    double sum_rank = 0.0;
    int n_sinr = 0, n_gamma = 0, n_rank = 0, n_feasible = 0;
    for (const MetricsRecord* r : rs) {
        sum_wall += r->wall_ms;
        if (r->feasible) ++n_feasible;
        if (r->status == SolveStatus::numerical_failure) ++row.failures;
        if (r->status != SolveStatus::optimal) continue;
        ++row.n_ok;
        snr.push_back(r->sensing_snr);
        sum_snr += r->sensing_snr;
        if (r->ue_sinrs.size() > 0) {
            sum_sinr += r->ue_sinrs.mean();
            sum_min += r->min_sinr;
            ++n_sinr;
        }
        if (r->gamma_target > 0.0) {
            sum_gamma += r->gamma_target;
            ++n_gamma;
        }
        if (r->rank_sens >= 0) {
            sum_rank += r->rank_sens;
            ++n_rank;
        }
    }
    if (row.n > 0) {
        row.feasible_rate = static_cast<double>(n_feasible) / row.n;
        row.mean_wall_ms = sum_wall / row.n;
    }
    if (row.n_ok > 0) {
        row.mean_sensing_snr_db = to_db(sum_snr / row.n_ok);
        std::sort(snr.begin(), snr.end());
        const size_t h = snr.size() / 2;
        const double med =
            snr.size() % 2 == 1 ? snr[h] : 0.5 * (snr[h - 1] + snr[h]);
        row.median_sensing_snr_db = to_db(med);
    }
    if (n_sinr > 0) {
        row.mean_sinr_db = to_db(sum_sinr / n_sinr);
        row.mean_min_sinr_db = to_db(sum_min / n_sinr);
    }
    if (n_gamma > 0) row.mean_gamma_db = to_db(sum_gamma / n_gamma);
    if (n_rank > 0) row.mean_rank = sum_rank / n_rank;
    return row;
}

} // namespace detail

/// Sweeps the power-split fraction rho over `cfg.rho_grid` on the line
/// setup. Per realization, the joint strategy's thresholds equal the
/// min-SINR achieved by ns-opt at the same rho, so the comparison is at
/// matched communication quality; the joint design itself never splits
/// power and is affected by rho only through that threshold. Rows come
/// out grid-major, then strategy, so the row count is
/// |rho_grid| x |strategies|.
inline SweepTable sweep_power_ratio(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.generator.setup != SetupKind::line)
        throw contract_error("sweep_power_ratio: line setup required");
    if (cfg.gamma_mode != GammaMode::equal_from_ns_opt)
        throw contract_error("sweep_power_ratio: gamma mode equal-from-ns-opt required");
    for (Strategy s : cfg.strategies)
        if (s != Strategy::ns_rzf && s != Strategy::ns_opt && s != Strategy::cb_opt &&
            s != Strategy::jsc_beam)
            throw contract_error(
                "sweep_power_ratio: strategies limited to ns-rzf/ns-opt/cb-opt/jsc-beam");

    const int n_rho = static_cast<int>(cfg.rho_grid.size());
    const int n_real = cfg.realizations;
    std::vector<std::vector<RealizationResult>> results(
        static_cast<size_t>(n_rho), std::vector<RealizationResult>(static_cast<size_t>(n_real)));
    detail::parallel_for(n_rho * n_real, cfg.threads, [&](int t) {
        const int r = t / n_real;
        const int i = t % n_real;
        ExperimentConfig point = cfg;
        point.rho = cfg.rho_grid[static_cast<size_t>(r)];
        results[static_cast<size_t>(r)][static_cast<size_t>(i)] =
            run_realization(point, cfg.seed_base + static_cast<std::uint64_t>(i));
    });

    SweepTable table;
    table.name = "rho";
    table.variable = "rho";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int r = 0; r < n_rho; ++r)
        for (size_t j = 0; j < cfg.strategies.size(); ++j) {
            std::vector<const MetricsRecord*> rs;
            rs.reserve(static_cast<size_t>(n_real));
            for (int i = 0; i < n_real; ++i)
                rs.push_back(&results[static_cast<size_t>(r)][static_cast<size_t>(i)].records[j]);
            table.rows.push_back(detail::aggregate_rows(
                "rho", cfg.rho_grid[static_cast<size_t>(r)], nan,
                to_string(cfg.strategies[j]), rs));
        }
    return table;
}

/// Runs the batch at fixed rho and groups realizations by the minimum
/// target-to-UE distance into bins of width `cfg.distance_bin_m`. The
/// grid is data-driven: empty bins are omitted, and each row's value is
/// its bin center. The threshold rule is taken from the configuration
/// (equal-from-ns-opt or per-ue-from-ns-rzf are the intended variants).
inline SweepTable sweep_target_distance(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.generator.setup != SetupKind::line)
        throw contract_error("sweep_target_distance: line setup required");

    const std::vector<RealizationResult> results = run_batch(cfg);
    std::map<int, std::vector<const RealizationResult*>> bins;
    for (const RealizationResult& r : results) {
        const int k = static_cast<int>(std::floor(r.min_target_ue_distance_m /
                                                  cfg.distance_bin_m));
        bins[k].push_back(&r);
    }

    SweepTable table;
    table.name = "distance";
    table.variable = "distance_m";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [k, group] : bins)
        for (size_t j = 0; j < cfg.strategies.size(); ++j) {
            std::vector<const MetricsRecord*> rs;
            rs.reserve(group.size());
            for (const RealizationResult* rr : group) rs.push_back(&rr->records[j]);
            table.rows.push_back(detail::aggregate_rows(
                "distance_m", (k + 0.5) * cfg.distance_bin_m, nan,
                to_string(cfg.strategies[j]), rs));
        }
    return table;
}

/// Square-setup sweep over the UE count (`cfg.ue_grid`) and the sensing
/// stream budget (`cfg.stream_grid`) at a fixed threshold. The strategy
/// list is implied by the sweep itself: per UE count, one jsc-beam row
/// per stream budget plus jsc-beam-ub, jsc-power, and jsc-power-ub rows.
/// The covariance solve is independent of the stream budget, so one
/// solve per realization serves every jsc-beam row; only the rank-1
/// recovery is repeated per budget.
inline SweepTable sweep_streams_ues(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.generator.setup != SetupKind::square)
        throw contract_error("sweep_streams_ues: square setup required");
    if (cfg.gamma_mode != GammaMode::fixed)
        throw contract_error("sweep_streams_ues: fixed gamma mode required");

    const int n_q = static_cast<int>(cfg.stream_grid.size());
    const int slots = n_q + 3; // jsc-beam per Q, then ub / power / power-ub
    const int n_real = cfg.realizations;
    const int n_u = static_cast<int>(cfg.ue_grid.size());

    std::vector<std::vector<std::vector<MetricsRecord>>> results(
        static_cast<size_t>(n_u),
        std::vector<std::vector<MetricsRecord>>(static_cast<size_t>(n_real)));

    detail::parallel_for(n_u * n_real, cfg.threads, [&](int t) {
        const int ui = t / n_real;
        const int i = t % n_real;
        const std::uint64_t seed = cfg.seed_base + static_cast<std::uint64_t>(i);

        ExperimentConfig point = cfg;
        point.generator.n_ues = cfg.ue_grid[static_cast<size_t>(ui)];
        point.strategies = {Strategy::jsc_beam}; // context only dispatches below
        // One covariance solve at the largest budget serves all
        // recoveries; the recovery step reads the budget from the
        // problem spec it is given.
        point.n_streams = *std::max_element(cfg.stream_grid.begin(), cfg.stream_grid.end());

        std::vector<MetricsRecord>& out = results[static_cast<size_t>(ui)][static_cast<size_t>(i)];
        out.assign(static_cast<size_t>(slots), MetricsRecord{});
        for (int q = 0; q < n_q; ++q) out[static_cast<size_t>(q)].strategy = "jsc-beam";
        out[static_cast<size_t>(n_q)].strategy = "jsc-beam-ub";
        out[static_cast<size_t>(n_q) + 1].strategy = "jsc-power";
        out[static_cast<size_t>(n_q) + 2].strategy = "jsc-power-ub";
        for (auto& rec : out) {
            rec.seed = seed;
            rec.status = SolveStatus::numerical_failure;
        }

        try {
            const Realization real = draw_realization(point.generator, seed);
            detail::StrategyContext ctx(point, real.scenario, real.channels);
            // One covariance solve at the largest budget serves all
            // recoveries; the recovery step reads the budget from the
            // problem spec it is given.
            point.n_streams =
                *std::max_element(cfg.stream_grid.begin(), cfg.stream_grid.end());
            for (int q = 0; q < n_q; ++q) {
                MetricsRecord& rec = out[static_cast<size_t>(q)];
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    const RVec& gamma = ctx.gamma();
                    const JscSdrSolution& sol = ctx.jsc();
                    rec.status = sol.status;
                    if (sol.status == SolveStatus::optimal) {
                        JscProblemSpec spec = ctx.jsc_spec();
                        spec.n_sens_streams = cfg.stream_grid[static_cast<size_t>(q)];
                        const auto [beams, rep] = recover_rank1(sol, spec);
                        detail::fill_from_beams(rec, real.scenario, real.channels, beams, &gamma);
                        rec.rank_sens = rep.rank_sensing;
                        rec.recovery = rep.label;
                        rec.recovery_gap = rep.gap;
                    }
                } catch (const std::exception&) {
                    rec.status = SolveStatus::numerical_failure;
                }
                rec.wall_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            }
            out[static_cast<size_t>(n_q)] =
                detail::eval_strategy(ctx, Strategy::jsc_beam_ub, seed);
            out[static_cast<size_t>(n_q) + 1] =
                detail::eval_strategy(ctx, Strategy::jsc_power, seed);
            out[static_cast<size_t>(n_q) + 2] =
                detail::eval_strategy(ctx, Strategy::jsc_power_ub, seed);
        } catch (const std::exception&) {
            // Rows already initialized as failed.
        }
    });

    SweepTable table;
    table.name = "streams";
    table.variable = "n_ues";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int ui = 0; ui < n_u; ++ui) {
        const double u_val = cfg.ue_grid[static_cast<size_t>(ui)];
        for (int slot = 0; slot < slots; ++slot) {
            std::vector<const MetricsRecord*> rs;
            rs.reserve(static_cast<size_t>(n_real));
            for (int i = 0; i < n_real; ++i)
                rs.push_back(
                    &results[static_cast<size_t>(ui)][static_cast<size_t>(i)][static_cast<size_t>(slot)]);
            const double q_val =
                slot < n_q ? static_cast<double>(cfg.stream_grid[static_cast<size_t>(slot)]) : nan;
            table.rows.push_back(detail::aggregate_rows(
                "n_ues", u_val, q_val, std::string(rs.front()->strategy), rs));
        }
    }
    return table;
}

// ----------------------------------------------------------- CSV output

namespace detail {

inline std::string csv_num(double v) {
    if (!std::isfinite(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace detail

/// One row per (realization, strategy), ordered by seed then by the
/// configured strategy order. SINRs, SNRs, and thresholds are converted
/// to dB here; empty cells mark values that do not exist for the row
/// (e.g. dB of a zero metric on a failed solve).
inline void write_metrics_csv(std::ostream& os, const std::vector<RealizationResult>& results) {
    os << "# cfisac metrics csv v1\n";
    os << "seed,strategy,status,feasible,gamma_target_db,sensing_snr_db,mean_sinr_db,"
          "min_sinr_db,ue_sinrs_db,rank_sens,recovery,recovery_gap,wall_ms,"
          "min_target_ue_distance_m\n";
    for (const RealizationResult& rr : results)
        for (const MetricsRecord& r : rr.records) {
            os << r.seed << ',' << r.strategy << ',' << to_string(r.status) << ','
               << (r.feasible ? 1 : 0) << ','
               << detail::csv_num(r.gamma_target > 0.0 ? to_db(r.gamma_target) : std::nan(""))
               << ','
               << detail::csv_num(r.sensing_snr > 0.0 ? to_db(r.sensing_snr) : std::nan(""))
               << ',';
            if (r.ue_sinrs.size() > 0 && r.status == SolveStatus::optimal) {
                os << detail::csv_num(to_db(r.ue_sinrs.mean())) << ','
                   << detail::csv_num(to_db(r.min_sinr)) << ',';
                for (Eigen::Index u = 0; u < r.ue_sinrs.size(); ++u) {
                    if (u > 0) os << ';';
                    os << detail::csv_num(to_db(r.ue_sinrs(u)));
                }
                os << ',';
            } else {
                os << ",,,";
            }
            os << r.rank_sens << ',' << r.recovery << ',' << detail::csv_num(r.recovery_gap)
               << ',' << detail::csv_num(r.wall_ms) << ','
               << detail::csv_num(rr.min_target_ue_distance_m) << '\n';
        }
}

/// Aggregated sweep table. `value2` is the secondary grid value where the
/// sweep has one (the stream budget in the streams sweep) and empty
/// otherwise.
inline void write_sweep_csv(std::ostream& os, const SweepTable& table) {
    os << "# cfisac sweep csv v1 (" << table.name << ")\n";
    os << "variable,value,value2,strategy,n,n_ok,feasible_rate,failures,"
          "mean_sensing_snr_db,median_sensing_snr_db,mean_sinr_db,mean_min_sinr_db,"
          "mean_gamma_db,mean_rank,mean_wall_ms\n";
    for (const SweepRow& r : table.rows) {
        os << r.variable << ',' << detail::csv_num(r.value) << ',' << detail::csv_num(r.value2)
           << ',' << r.strategy << ',' << r.n << ',' << r.n_ok << ','
           << detail::csv_num(r.feasible_rate) << ',' << r.failures << ','
           << detail::csv_num(r.mean_sensing_snr_db) << ','
           << detail::csv_num(r.median_sensing_snr_db) << ',' << detail::csv_num(r.mean_sinr_db)
           << ',' << detail::csv_num(r.mean_min_sinr_db) << ','
           << detail::csv_num(r.mean_gamma_db) << ',' << detail::csv_num(r.mean_rank) << ','
           << detail::csv_num(r.mean_wall_ms) << '\n';
    }
}

/// Number of numerical-failure rows in a batch (drives CLI exit codes).
inline int count_failures(const std::vector<RealizationResult>& results) {
    int f = 0;
    for (const RealizationResult& rr : results)
        for (const MetricsRecord& r : rr.records)
            if (r.status == SolveStatus::numerical_failure) ++f;
    return f;
}

} // namespace cfisac
