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
 * @file sdpa_io.hpp
 * @brief Import/export of semidefinite programs in the sparse SDPA format.
 *
 * The SDPA ".dat-s" file describes
 *
 *     maximize    tr(F_0 Y)
 *     subject to  tr(F_i Y) = b_i   (i = 1..m),   Y >= 0 block-diagonal,
 *
 * with negative block sizes denoting diagonal (linear) blocks. Complex
 * Hermitian blocks of an SdpProblem are exported through their real
 * embedding, scaled so objective and constraint values are preserved;
 * inequality rows gain one shared diagonal slack block. Parsing maps
 * every diagonal block to scalar semidefinite blocks, which is exact, so
 * any parsed instance can be handed straight to solve_sdp.
 */

#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cfisac/common.hpp"
#include "cfisac/conic/sdp.hpp"

namespace cfisac::conic {

/// One nonzero coefficient: matrices are 0 (objective) .. m, indices 1-based,
/// upper triangle (i <= j).
struct SdpaEntry {
    int matrix = 0;
    int block = 1;
    int i = 1;
    int j = 1;
    double value = 0.0;
    friend bool operator==(const SdpaEntry&, const SdpaEntry&) = default;
};

/// In-memory mirror of a sparse SDPA file.
struct SdpaInstance {
    int num_constraints = 0;
    std::vector<int> block_sizes; ///< negative size = diagonal block
    RVec rhs;
    std::vector<SdpaEntry> entries;
};

inline bool operator==(const SdpaInstance& a, const SdpaInstance& b) {
    return a.num_constraints == b.num_constraints && a.block_sizes == b.block_sizes &&
           a.rhs.size() == b.rhs.size() && a.rhs == b.rhs && a.entries == b.entries;
}

/// Render with full double precision (%.17g), one entry per line.
inline std::string sdpa_to_string(const SdpaInstance& inst) {
    std::string out;
    char buf[128];
    auto append = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof(buf), fmt, args...);
        out += buf;
    };
    append("%d\n", inst.num_constraints);
    append("%zu\n", inst.block_sizes.size());
    for (size_t k = 0; k < inst.block_sizes.size(); ++k)
        append(k + 1 < inst.block_sizes.size() ? "%d " : "%d\n", inst.block_sizes[k]);
    for (Eigen::Index i = 0; i < inst.rhs.size(); ++i)
        append(i + 1 < inst.rhs.size() ? "%.17g " : "%.17g\n", inst.rhs(i));
    if (inst.rhs.size() == 0) out += "\n";
    for (const auto& e : inst.entries)
        append("%d %d %d %d %.17g\n", e.matrix, e.block, e.i, e.j, e.value);
    return out;
}

/// Parse the sparse SDPA format. Comment lines (leading '*' or '"') are
/// skipped; ',', '(', ')', '{', '}' act as whitespace as the format allows.
inline SdpaInstance parse_sdpa(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    bool line_comment = false;
    bool at_line_start = true;
    for (char ch : text) {
        if (at_line_start && (ch == '*' || ch == '"')) line_comment = true;
        at_line_start = false;
        if (ch == '\n') {
            line_comment = false;
            at_line_start = true;
        }
        const bool sep = std::isspace(static_cast<unsigned char>(ch)) || ch == ',' ||
                         ch == '(' || ch == ')' || ch == '{' || ch == '}';
        if (line_comment || sep) {
            if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));

    size_t pos = 0;
    auto next_int = [&]() {
        if (pos >= tokens.size()) throw contract_error("parse_sdpa: truncated input");
        return std::stoi(tokens[pos++]);
    };
    auto next_double = [&]() {
        if (pos >= tokens.size()) throw contract_error("parse_sdpa: truncated input");
        return std::stod(tokens[pos++]);
    };

    SdpaInstance inst;
    inst.num_constraints = next_int();
    const int nblocks = next_int();
    if (inst.num_constraints < 0 || nblocks <= 0)
        throw contract_error("parse_sdpa: bad header");
    inst.block_sizes.resize(nblocks);
    for (int k = 0; k < nblocks; ++k) {
        inst.block_sizes[k] = next_int();
        if (inst.block_sizes[k] == 0) throw contract_error("parse_sdpa: zero block size");
    }
    inst.rhs.resize(inst.num_constraints);
    for (int i = 0; i < inst.num_constraints; ++i) inst.rhs(i) = next_double();
    while (pos + 5 <= tokens.size()) {
        SdpaEntry e;
        e.matrix = next_int();
        e.block = next_int();
        e.i = next_int();
        e.j = next_int();
        e.value = next_double();
        const int bs = std::abs(inst.block_sizes.at(e.block - 1));
        if (e.matrix < 0 || e.matrix > inst.num_constraints || e.i < 1 || e.j < e.i ||
            e.j > bs)
            throw contract_error("parse_sdpa: entry out of range");
        if (inst.block_sizes[e.block - 1] < 0 && e.i != e.j)
            throw contract_error("parse_sdpa: off-diagonal entry in diagonal block");
        inst.entries.push_back(e);
    }
    if (pos != tokens.size()) throw contract_error("parse_sdpa: trailing tokens");
    return inst;
}

namespace detail {

/// Collect the upper triangle of a dense symmetric matrix as sparse entries.
inline void push_sdpa_entries(std::vector<SdpaEntry>& out, int matrix, int block,
                              const RMat& mat) {
    for (Eigen::Index i = 0; i < mat.rows(); ++i)
        for (Eigen::Index j = i; j < mat.cols(); ++j)
            if (mat(i, j) != 0.0)
                out.push_back({matrix, block, static_cast<int>(i + 1),
                               static_cast<int>(j + 1), mat(i, j)});
}

} // namespace detail

/// Export an SdpProblem. Complex blocks are embedded (size doubles); rows
/// with sense <= or >= share one trailing diagonal slack block, +1 for <=
/// and -1 for >=; optimal objective values coincide with solve_sdp output.
inline SdpaInstance sdpa_from_problem(const SdpProblem& prob) {
    const int nb = static_cast<int>(prob.blocks.size());
    const int m = static_cast<int>(prob.constraints.size());
    int n_ineq = 0;
    for (const auto& con : prob.constraints)
        if (con.sense != Sense::eq) ++n_ineq;

    SdpaInstance inst;
    inst.num_constraints = m;
    for (const auto& blk : prob.blocks)
        inst.block_sizes.push_back(blk.complex_field ? 2 * blk.dim : blk.dim);
    if (n_ineq > 0) inst.block_sizes.push_back(-n_ineq);
    inst.rhs.resize(m);
    for (int i = 0; i < m; ++i) inst.rhs(i) = prob.constraints[i].rhs;

    for (size_t k = 0; k < prob.objective.size(); ++k)
        if (prob.objective[k].size() != 0)
            detail::push_sdpa_entries(inst.entries, 0, static_cast<int>(k) + 1,
                                      detail::engine_coeff(prob.blocks.at(k), prob.objective[k]));
    int slack_pos = 0;
    for (int i = 0; i < m; ++i) {
        const auto& con = prob.constraints[i];
        for (const auto& [k, mat] : con.coeffs)
            detail::push_sdpa_entries(inst.entries, i + 1, k + 1,
                                      detail::engine_coeff(prob.blocks.at(k), mat));
        if (con.sense != Sense::eq) {
            ++slack_pos;
            inst.entries.push_back({i + 1, nb + 1, slack_pos, slack_pos,
                                    con.sense == Sense::le ? 1.0 : -1.0});
        }
    }
    return inst;
}

/// Rebuild a real-field SdpProblem from a parsed instance. Diagonal blocks
/// become scalar semidefinite blocks, so the conversion is exact.
inline SdpProblem problem_from_sdpa(const SdpaInstance& inst) {
    SdpProblem prob;
    // Map (sdpa block, diag index) -> problem block.
    std::vector<int> block_base(inst.block_sizes.size());
    for (size_t k = 0; k < inst.block_sizes.size(); ++k) {
        block_base[k] = static_cast<int>(prob.blocks.size());
        if (inst.block_sizes[k] > 0)
            prob.blocks.push_back({inst.block_sizes[k], false});
        else
            for (int d = 0; d < -inst.block_sizes[k]; ++d) prob.blocks.push_back({1, false});
    }
    prob.constraints.resize(inst.num_constraints);
    for (int i = 0; i < inst.num_constraints; ++i) {
        prob.constraints[i].sense = Sense::eq;
        prob.constraints[i].rhs = inst.rhs(i);
    }
    // Accumulate dense symmetric matrices per (matrix, problem block).
    std::map<std::pair<int, int>, CMat> acc;
    for (const auto& e : inst.entries) {
        const bool diag = inst.block_sizes[e.block - 1] < 0;
        const int pb = block_base[e.block - 1] + (diag ? e.i - 1 : 0);
        const int dim = prob.blocks[pb].dim;
        auto [it, inserted] =
            acc.try_emplace({e.matrix, pb}, CMat::Zero(dim, dim).eval());
        CMat& mat = it->second;
        if (diag) {
            mat(0, 0) += e.value;
        } else {
            mat(e.i - 1, e.j - 1) += e.value;
            if (e.i != e.j) mat(e.j - 1, e.i - 1) += e.value;
        }
    }
    prob.objective.resize(prob.blocks.size());
    for (auto& [key, mat] : acc) {
        if (key.first == 0)
            prob.objective[key.second] = std::move(mat);
        else
            prob.constraints[key.first - 1].coeffs.emplace_back(key.second, std::move(mat));
    }
    return prob;
}

} // namespace cfisac::conic
