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
 * @file solver.hpp
 * @brief Small dense conic interior-point solver.
 *
 * Solves the primal/dual pair
 *
 *     min <c, x>              max  b^T y
 *     s.t. A x = b            s.t. c - A^T y = s,  s in K
 *          x in K
 *
 * over products of nonnegative-orthant, second-order and (real symmetric)
 * positive-semidefinite cones, using a homogeneous self-dual embedding with
 * Nesterov-Todd scaling and a Mehrotra predictor-corrector. Infeasibility
 * and unboundedness are certified by Farkas rays of the embedding.
 *
 * The implementation is deliberately dense and factorization-based: target
 * problems have at most a few hundred rows and PSD blocks of side <= ~100,
 * where forming the Schur complement A H^{-1} A^T and Cholesky-factoring it
 * is both fastest and simplest. Determinism: identical inputs produce
 * bit-identical iterates (no randomness, fixed reduction order).
 */

#include <cstdint>
#include <limits>
#include <vector>

#include "cfisac/common.hpp"
#include "cfisac/types.hpp"

namespace cfisac::conic {

enum class BlockType { nonneg, soc, psd };

struct BlockDim {
    BlockType type;
    int dim; ///< nonneg: variable count; soc: cone dimension; psd: matrix side
};

struct ConeLayout {
    std::vector<BlockDim> blocks;

    int num_blocks() const { return static_cast<int>(blocks.size()); }

    /// Barrier degree: nonneg contributes its dimension, each second-order
    /// cone 1, each PSD block its side length.
    int degree() const {
        int d = 0;
        for (const auto& b : blocks)
            d += (b.type == BlockType::nonneg) ? b.dim : (b.type == BlockType::soc ? 1 : b.dim);
        return d;
    }
};

/// Element of the product-cone space (or its coefficient dual): a real
/// vector per nonneg/soc block, a symmetric matrix per PSD block.
struct ConeVec {
    std::vector<RVec> v;  ///< used for nonneg and soc blocks
    std::vector<RMat> M;  ///< used for PSD blocks

    static ConeVec zero(const ConeLayout& layout) {
        ConeVec z;
        z.v.resize(layout.blocks.size());
        z.M.resize(layout.blocks.size());
        for (size_t i = 0; i < layout.blocks.size(); ++i) {
            if (layout.blocks[i].type == BlockType::psd)
                z.M[i] = RMat::Zero(layout.blocks[i].dim, layout.blocks[i].dim);
            else
                z.v[i] = RVec::Zero(layout.blocks[i].dim);
        }
        return z;
    }

    static ConeVec identity(const ConeLayout& layout) {
        ConeVec e = zero(layout);
        for (size_t i = 0; i < layout.blocks.size(); ++i) {
            switch (layout.blocks[i].type) {
                case BlockType::nonneg: e.v[i].setOnes(); break;
                case BlockType::soc: e.v[i](0) = 1.0; break;
                case BlockType::psd: e.M[i].setIdentity(); break;
            }
        }
        return e;
    }
};

inline double dot(const ConeLayout& layout, const ConeVec& a, const ConeVec& b) {
    double d = 0.0;
    for (size_t i = 0; i < layout.blocks.size(); ++i)
        d += (layout.blocks[i].type == BlockType::psd) ? a.M[i].cwiseProduct(b.M[i]).sum()
                                                       : a.v[i].dot(b.v[i]);
    return d;
}

inline void axpy(const ConeLayout& layout, double alpha, const ConeVec& x, ConeVec& y) {
    for (size_t i = 0; i < layout.blocks.size(); ++i) {
        if (layout.blocks[i].type == BlockType::psd)
            y.M[i] += alpha * x.M[i];
        else
            y.v[i] += alpha * x.v[i];
    }
}

inline void scale_inplace(const ConeLayout& layout, ConeVec& x, double alpha) {
    for (size_t i = 0; i < layout.blocks.size(); ++i) {
        if (layout.blocks[i].type == BlockType::psd)
            x.M[i] *= alpha;
        else
            x.v[i] *= alpha;
    }
}

inline double frob_norm(const ConeLayout& layout, const ConeVec& x) {
    return std::sqrt(dot(layout, x, x));
}

/// Conic optimization problem in engine standard form.
struct Problem {
    ConeLayout layout;
    std::vector<ConeVec> rows; ///< m rows of the constraint operator A
    RVec b;                    ///< right-hand side (size m)
    ConeVec c;                 ///< objective

    int num_rows() const { return static_cast<int>(rows.size()); }
};

struct SolverOptions {
    double tol_feas = 1e-8;        ///< targeted relative residual
    double tol_gap = 1e-8;         ///< targeted relative duality gap
    double tol_acceptable = 1e-7;  ///< fallback acceptance at stall / iter cap
    double tol_infeas = 1e-8;      ///< certificate quality threshold
    int max_iters = 120;
    double min_step = 1e-9;        ///< declare stall below this step length
    bool equilibrate = true;
};

struct SolverResult {
    SolveStatus status = SolveStatus::numerical_failure;
    ConeVec x, s;          ///< primal point and dual slack (original units)
    RVec y;                ///< dual vector (original units)
    double pobj = 0.0, dobj = 0.0;
    double primal_res = 0.0, dual_res = 0.0, rel_gap = 0.0;
    int iterations = 0;
    double tau = 0.0, kappa = 0.0;
    /// status == infeasible: Farkas ray with s_cert = -A^T y_cert in K and
    /// b^T y_cert = 1. status == unbounded: ray x_cert in K with
    /// A x_cert = 0 and <c, x_cert> = -1.
    RVec y_certificate;
    ConeVec s_certificate, x_certificate;
    bool has_certificate = false;
};

namespace detail {

/// Nesterov-Todd scaling state for all blocks. The scaling W satisfies
/// lambda = W x = W^{-T} s, H = W^T W, H x = s.
struct NTScaling {
    const ConeLayout* layout = nullptr;
    // nonneg blocks
    std::vector<RVec> lp_w;      ///< w_i = sqrt(s_i / x_i)
    // soc blocks
    std::vector<RVec> soc_omega; ///< hyperbolic Householder vector, omega^T J omega = 1
    std::vector<double> soc_beta;
    // psd blocks
    std::vector<RMat> psd_R;     ///< W(U) = R^{-1} U R^{-T}
    std::vector<RMat> psd_Rinv;
    std::vector<RMat> psd_Wm;    ///< W_m = R R^T, H^{-1}(U) = W_m U W_m
    std::vector<Eigen::LLT<RMat>> psd_chol_x, psd_chol_s; ///< reused for step lengths
    // scaled point lambda
    std::vector<RVec> lam_v;     ///< vector blocks
    std::vector<RVec> lam_sigma; ///< psd blocks: lambda = diag(sigma)

    /// J-product for SOC: J u = (u0, -u1).
    static RVec jmul(const RVec& u) {
        RVec r = -u;
        r(0) = u(0);
        return r;
    }

    bool compute(const ConeLayout& lay, const ConeVec& x, const ConeVec& s) {
        layout = &lay;
        const size_t nb = lay.blocks.size();
        lp_w.assign(nb, {});
        soc_omega.assign(nb, {});
        soc_beta.assign(nb, 0.0);
        psd_R.assign(nb, {});
        psd_Rinv.assign(nb, {});
        psd_Wm.assign(nb, {});
        psd_chol_x.resize(nb);
        psd_chol_s.resize(nb);
        lam_v.assign(nb, {});
        lam_sigma.assign(nb, {});
        for (size_t i = 0; i < nb; ++i) {
            switch (lay.blocks[i].type) {
                case BlockType::nonneg: {
                    if ((x.v[i].array() <= 0.0).any() || (s.v[i].array() <= 0.0).any()) return false;
                    lp_w[i] = (s.v[i].array() / x.v[i].array()).sqrt();
                    lam_v[i] = (s.v[i].array() * x.v[i].array()).sqrt();
                    break;
                }
                case BlockType::soc: {
                    const RVec& xv = x.v[i];
                    const RVec& sv = s.v[i];
                    const double gx2 = xv(0) * xv(0) - xv.tail(xv.size() - 1).squaredNorm();
                    const double gs2 = sv(0) * sv(0) - sv.tail(sv.size() - 1).squaredNorm();
                    if (gx2 <= 0.0 || gs2 <= 0.0 || xv(0) <= 0.0 || sv(0) <= 0.0) return false;
                    const double gx = std::sqrt(gx2), gs = std::sqrt(gs2);
                    const RVec xb = xv / gx, sb = sv / gs;
                    const double gamma = std::sqrt(0.5 * (1.0 + xb.dot(sb)));
                    // Scaling point w = (xb + J sb) / (2 gamma) has unit
                    // hyperbolic norm; the reflector must be built from its
                    // Jordan square root (w itself would represent the full
                    // quadratic map W^T W rather than W).  With v = J w:
                    //     J w^{1/2} = (v + e) / sqrt(2 (v0 + 1)).
                    RVec omega = (sb + jmul(xb)) / (2.0 * gamma);
                    omega(0) += 1.0;
                    omega /= std::sqrt(2.0 * omega(0));
                    soc_omega[i] = omega;
                    soc_beta[i] = std::sqrt(gs / gx);
                    // Scaled point: lambda = W x = W^{-T} s in closed form
                    // (more accurate than applying the reflector to x).
                    const auto nq = xv.size();
                    const double dd = 2.0 * gamma + xb(0) + sb(0);
                    RVec lam(nq);
                    lam(0) = gamma;
                    lam.tail(nq - 1) = ((gamma + sb(0)) * xb.tail(nq - 1) +
                                        (gamma + xb(0)) * sb.tail(nq - 1)) /
                                       dd;
                    lam_v[i] = std::sqrt(gx * gs) * lam;
                    break;
                }
                case BlockType::psd: {
                    const RMat X = 0.5 * (x.M[i] + x.M[i].transpose());
                    const RMat S = 0.5 * (s.M[i] + s.M[i].transpose());
                    psd_chol_x[i].compute(X);
                    psd_chol_s[i].compute(S);
                    if (psd_chol_x[i].info() != Eigen::Success ||
                        psd_chol_s[i].info() != Eigen::Success)
                        return false;
                    const RMat L = psd_chol_x[i].matrixL();
                    Eigen::SelfAdjointEigenSolver<RMat> es(L.transpose() * S * L);
                    if (es.info() != Eigen::Success) return false;
                    if ((es.eigenvalues().array() <= 0.0).any()) return false;
                    const RVec sigma = es.eigenvalues().array().sqrt();
                    const RMat V = es.eigenvectors();
                    psd_R[i] = L * V * sigma.array().rsqrt().matrix().asDiagonal();
                    // R^{-1} = sigma^{1/2} V^T L^{-1}
                    psd_Rinv[i] = sigma.array().sqrt().matrix().asDiagonal() * V.transpose() *
                                  L.triangularView<Eigen::Lower>().solve(RMat::Identity(L.rows(), L.cols()));
                    psd_Wm[i] = psd_R[i] * psd_R[i].transpose();
                    lam_sigma[i] = sigma;
                    break;
                }
            }
        }
        return true;
    }

    ConeVec apply_W(const ConeVec& u) const {
        ConeVec r = ConeVec::zero(*layout);
        for (size_t i = 0; i < layout->blocks.size(); ++i) {
            switch (layout->blocks[i].type) {
                case BlockType::nonneg: r.v[i] = lp_w[i].cwiseProduct(u.v[i]); break;
                case BlockType::soc:
                    r.v[i] = soc_beta[i] *
                             (2.0 * soc_omega[i] * soc_omega[i].dot(u.v[i]) - jmul(u.v[i]));
                    break;
                case BlockType::psd:
                    r.M[i] = psd_Rinv[i] * u.M[i] * psd_Rinv[i].transpose();
                    break;
            }
        }
        return r;
    }

    ConeVec apply_WinvT(const ConeVec& u) const { // W^{-T}; W symmetric on vector blocks
        ConeVec r = ConeVec::zero(*layout);
        for (size_t i = 0; i < layout->blocks.size(); ++i) {
            switch (layout->blocks[i].type) {
                case BlockType::nonneg: r.v[i] = u.v[i].cwiseQuotient(lp_w[i]); break;
                case BlockType::soc: {
                    const RVec jw = jmul(soc_omega[i]);
                    r.v[i] = (2.0 * jw * jw.dot(u.v[i]) - jmul(u.v[i])) / soc_beta[i];
                    break;
                }
                case BlockType::psd:
                    r.M[i] = psd_R[i].transpose() * u.M[i] * psd_R[i];
                    break;
            }
        }
        return r;
    }

    ConeVec apply_WT(const ConeVec& u) const {
        ConeVec r = ConeVec::zero(*layout);
        for (size_t i = 0; i < layout->blocks.size(); ++i) {
            switch (layout->blocks[i].type) {
                case BlockType::nonneg: r.v[i] = lp_w[i].cwiseProduct(u.v[i]); break;
                case BlockType::soc:
                    r.v[i] = soc_beta[i] *
                             (2.0 * soc_omega[i] * soc_omega[i].dot(u.v[i]) - jmul(u.v[i]));
                    break;
                case BlockType::psd:
                    r.M[i] = psd_Rinv[i].transpose() * u.M[i] * psd_Rinv[i];
                    break;
            }
        }
        return r;
    }

    ConeVec apply_Hinv(const ConeVec& u) const {
        ConeVec r = ConeVec::zero(*layout);
        for (size_t i = 0; i < layout->blocks.size(); ++i) {
            switch (layout->blocks[i].type) {
                case BlockType::nonneg:
                    r.v[i] = u.v[i].cwiseQuotient(lp_w[i].cwiseProduct(lp_w[i]));
                    break;
                case BlockType::soc: { // W^{-1}(W^{-1} u), both O(dim)
                    const RVec jw = jmul(soc_omega[i]);
                    const RVec t = (2.0 * jw * jw.dot(u.v[i]) - jmul(u.v[i])) / soc_beta[i];
                    r.v[i] = (2.0 * jw * jw.dot(t) - jmul(t)) / soc_beta[i];
                    break;
                }
                case BlockType::psd:
                    r.M[i] = psd_Wm[i] * u.M[i] * psd_Wm[i];
                    break;
            }
        }
        return r;
    }

    /// lambda o lambda (squared scaled point).
    ConeVec lambda_sq() const {
        ConeVec r = ConeVec::zero(*layout);
        for (size_t i = 0; i < layout->blocks.size(); ++i) {
            switch (layout->blocks[i].type) {
                case BlockType::nonneg: r.v[i] = lam_v[i].cwiseProduct(lam_v[i]); break;
                case BlockType::soc: {
                    const RVec& l = lam_v[i];
                    r.v[i] = 2.0 * l(0) * l;
                    r.v[i](0) = l.squaredNorm();
                    break;
                }
                case BlockType::psd:
                    r.M[i] = lam_sigma[i].cwiseProduct(lam_sigma[i]).asDiagonal();
                    break;
            }
        }
        return r;
    }

    double lambda_dot() const { // <lambda, lambda> = <x, s>
        double d = 0.0;
        for (size_t i = 0; i < layout->blocks.size(); ++i)
            d += (layout->blocks[i].type == BlockType::psd) ? lam_sigma[i].squaredNorm()
                                                            : lam_v[i].squaredNorm();
        return d;
    }

    /// The scaled point lambda as a cone vector (PSD blocks are diagonal).
    ConeVec lambda_vec() const {
        ConeVec r = ConeVec::zero(*layout);
        for (size_t i = 0; i < layout->blocks.size(); ++i) {
            if (layout->blocks[i].type == BlockType::psd)
                r.M[i] = lam_sigma[i].asDiagonal();
            else
                r.v[i] = lam_v[i];
        }
        return r;
    }

    /// Solves lambda o u = d blockwise.
    ConeVec jordan_solve(const ConeVec& d) const {
        ConeVec r = ConeVec::zero(*layout);
        for (size_t i = 0; i < layout->blocks.size(); ++i) {
            switch (layout->blocks[i].type) {
                case BlockType::nonneg: r.v[i] = d.v[i].cwiseQuotient(lam_v[i]); break;
                case BlockType::soc: { // arrow system solve
                    const RVec& l = lam_v[i];
                    const RVec& dv = d.v[i];
                    const auto n = l.size();
                    const double det = l(0) * l(0) - l.tail(n - 1).squaredNorm();
                    const double u0 = (l(0) * dv(0) - l.tail(n - 1).dot(dv.tail(n - 1))) / det;
                    r.v[i].resize(n);
                    r.v[i](0) = u0;
                    r.v[i].tail(n - 1) = (dv.tail(n - 1) - u0 * l.tail(n - 1)) / l(0);
                    break;
                }
                case BlockType::psd: {
                    const RVec& sg = lam_sigma[i];
                    r.M[i].resizeLike(d.M[i]);
                    for (Eigen::Index a = 0; a < sg.size(); ++a)
                        for (Eigen::Index b = 0; b < sg.size(); ++b)
                            r.M[i](a, b) = 2.0 * d.M[i](a, b) / (sg(a) + sg(b));
                    break;
                }
            }
        }
        return r;
    }

    /// Jordan product u o v blockwise.
    ConeVec jordan_prod(const ConeVec& u, const ConeVec& w) const {
        ConeVec r = ConeVec::zero(*layout);
        for (size_t i = 0; i < layout->blocks.size(); ++i) {
            switch (layout->blocks[i].type) {
                case BlockType::nonneg: r.v[i] = u.v[i].cwiseProduct(w.v[i]); break;
                case BlockType::soc: {
                    const auto n = u.v[i].size();
                    r.v[i].resize(n);
                    r.v[i](0) = u.v[i].dot(w.v[i]);
                    r.v[i].tail(n - 1) =
                        u.v[i](0) * w.v[i].tail(n - 1) + w.v[i](0) * u.v[i].tail(n - 1);
                    break;
                }
                case BlockType::psd:
                    r.M[i] = 0.5 * (u.M[i] * w.M[i] + w.M[i] * u.M[i]);
                    break;
            }
        }
        return r;
    }

    /// Largest step alpha with z + alpha dz still in the cone (per block,
    /// using the cached Cholesky factors for PSD blocks of x and s).
    double max_step(const ConeVec& z, const ConeVec& dz, bool is_primal) const {
        double alpha = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < layout->blocks.size(); ++i) {
            switch (layout->blocks[i].type) {
                case BlockType::nonneg: {
                    for (Eigen::Index k = 0; k < z.v[i].size(); ++k)
                        if (dz.v[i](k) < 0.0) alpha = std::min(alpha, -z.v[i](k) / dz.v[i](k));
                    break;
                }
                case BlockType::soc: {
                    alpha = std::min(alpha, soc_max_step(z.v[i], dz.v[i]));
                    break;
                }
                case BlockType::psd: {
                    const auto& chol = is_primal ? psd_chol_x[i] : psd_chol_s[i];
                    const RMat L = chol.matrixL();
                    RMat Mi = L.triangularView<Eigen::Lower>().solve(
                        0.5 * (dz.M[i] + dz.M[i].transpose()));
                    Mi = L.triangularView<Eigen::Lower>()
                             .solve(Mi.transpose())
                             .transpose(); // L^{-1} dZ L^{-T}
                    Eigen::SelfAdjointEigenSolver<RMat> es(Mi, Eigen::EigenvaluesOnly);
                    const double emin = es.eigenvalues().minCoeff();
                    if (emin < 0.0) alpha = std::min(alpha, -1.0 / emin);
                    break;
                }
            }
        }
        return alpha;
    }

    static double soc_max_step(const RVec& z, const RVec& dz) {
        const auto n = z.size();
        const double c2 = dz(0) * dz(0) - dz.tail(n - 1).squaredNorm();
        const double c1 = 2.0 * (z(0) * dz(0) - z.tail(n - 1).dot(dz.tail(n - 1)));
        const double c0 = z(0) * z(0) - z.tail(n - 1).squaredNorm();
        double alpha = std::numeric_limits<double>::infinity();
        if (dz(0) < 0.0) alpha = std::min(alpha, -z(0) / dz(0));
        // Smallest positive root of c2 a^2 + c1 a + c0 = 0 (c0 > 0 inside).
        if (std::abs(c2) < 1e-300) {
            if (c1 < 0.0) alpha = std::min(alpha, -c0 / c1);
            return alpha;
        }
        const double disc = c1 * c1 - 4.0 * c2 * c0;
        if (disc < 0.0) return alpha; // no boundary crossing on the det side
        const double sq = std::sqrt(disc);
        // Numerically stable pair of roots.
        const double q = -0.5 * (c1 + (c1 >= 0.0 ? sq : -sq));
        const double r1 = q / c2;
        const double r2 = (q != 0.0) ? c0 / q : std::numeric_limits<double>::infinity();
        for (double r : {r1, r2})
            if (r > 0.0) alpha = std::min(alpha, r);
        return alpha;
    }
};

} // namespace detail

/// Homogeneous self-dual interior-point solver, see file comment.
class Solver {
  public:
    Solver(const Problem& prob, SolverOptions opts = {}) : P_(prob), opts_(opts) {
        if (P_.num_rows() != P_.b.size())
            throw contract_error("Solver: row count and b size mismatch");
        if (P_.num_rows() == 0) throw contract_error("Solver: empty problem");
    }

    SolverResult solve() {
        equilibrate();
        const ConeLayout& lay = P_.layout;
        const int m = P_.num_rows();
        const double nu = lay.degree() + 1.0;

        ConeVec x = ConeVec::identity(lay), s = ConeVec::identity(lay);
        RVec y = RVec::Zero(m);
        double tau = 1.0, kappa = 1.0;

        const double bnorm = 1.0 + b_.norm();
        const double cnorm = 1.0 + frob_norm(lay, c_);

        SolverResult res;
        detail::NTScaling nt;
        int iter = 0;
        std::string fail_reason;
        for (; iter < opts_.max_iters; ++iter) {
            // Residuals of the embedding.
            RVec rp = mul_A(x) - b_ * tau;                   // A x - b tau
            ConeVec rd = mul_AT(y);                          // A^T y + s - c tau
            axpy(lay, 1.0, s, rd);
            axpy(lay, -tau, c_, rd);
            const double cx = dot(lay, c_, x), by = b_.dot(y);
            const double rg = cx - by + kappa;

            // Convergence on the de-homogenized point.
            const double pres = (rp / tau).norm() / bnorm;
            const double dres = frob_norm(lay, rd) / tau / cnorm;
            const double pobj = cx / tau, dobj = by / tau;
            const double relgap =
                std::abs(pobj - dobj) / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));
            if (pres <= opts_.tol_feas && dres <= opts_.tol_feas && relgap <= opts_.tol_gap) {
                finalize_optimal(res, x, y, s, tau, kappa, iter);
                return res;
            }
            // Infeasibility / unboundedness: only probed once the embedding
            // clearly heads for the tau -> 0 ray, then validated by the
            // quality of the Farkas certificate itself.
            if (tau < 0.1 * kappa) {
                if (by > 0.0) {
                    RVec yc = y / by;
                    ConeVec sc = s;
                    scale_inplace(lay, sc, 1.0 / by);
                    ConeVec dual_res = mul_AT(yc);
                    axpy(lay, 1.0, sc, dual_res);
                    if (frob_norm(lay, dual_res) / cnorm <= opts_.tol_infeas) {
                        finalize_infeasible(res, yc, iter);
                        return res;
                    }
                }
                if (cx < 0.0) {
                    ConeVec xc = x;
                    scale_inplace(lay, xc, -1.0 / cx);
                    if (mul_A(xc).norm() / bnorm <= opts_.tol_infeas) {
                        finalize_unbounded(res, xc, iter);
                        return res;
                    }
                }
            }

            double mu = (dot(lay, x, s) + tau * kappa) / nu;

            if (!nt.compute(lay, x, s)) {
                fail_reason = "scaling failure";
                break;
            }
            if (!build_schur(nt)) {
                fail_reason = "factorization failure";
                break;
            }

            // Affine (predictor) direction.
            Dir aff = solve_kkt(nt, -rp, negate(rd), -(rg), negate(nt.lambda_sq()),
                                -tau * kappa, tau, kappa);
            double amax = step_bound(nt, x, s, tau, kappa, aff);
            const double a_aff = std::min(1.0, amax);
            // Centering weight from the affine step length.  The classical
            // mu-ratio rule can report sigma = 1 whenever second-order terms
            // make the affine trial point raise mu, which freezes residual
            // reduction entirely; the step-length form keeps eta = 1 - sigma
            // strictly positive as long as the predictor makes any progress.
            const double sigma = std::pow(1.0 - a_aff, 3.0);

            // Combined (corrector) direction.
            ConeVec ds_target = negate(nt.lambda_sq());
            {
                const ConeVec u = nt.apply_W(aff.dx);
                const ConeVec w = nt.apply_WinvT(aff.ds);
                axpy(lay, -1.0, nt.jordan_prod(u, w), ds_target);
                ConeVec e = ConeVec::identity(lay);
                axpy(lay, sigma * mu, e, ds_target);
            }
            const double dk_target = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
            const double eta = 1.0 - sigma;
            Dir dir = solve_kkt(nt, -eta * rp, scaled(rd, -eta), -eta * rg, ds_target, dk_target,
                                tau, kappa);
            amax = step_bound(nt, x, s, tau, kappa, dir);
            const double alpha = std::min(1.0, 0.99 * amax);
            if (alpha < opts_.min_step) {
                fail_reason = "step collapse";
                break;
            }

            axpy(lay, alpha, dir.dx, x);
            axpy(lay, alpha, dir.ds, s);
            y += alpha * dir.dy;
            tau += alpha * dir.dtau;
            kappa += alpha * dir.dkappa;

            // The embedding is homogeneous: rescaling the whole iterate
            // changes nothing mathematically but keeps magnitudes O(1),
            // which protects the Schur solves from losing precision when
            // tau would otherwise drift over many orders of magnitude.
            const double inv_tau = 1.0 / tau;
            scale_inplace(lay, x, inv_tau);
            scale_inplace(lay, s, inv_tau);
            y *= inv_tau;
            kappa *= inv_tau;
            tau = 1.0;
        }

        // Iteration cap or stall: accept if within the relaxed tolerance,
        // otherwise report the failure honestly.
        finalize_optimal(res, x, y, s, tau, kappa, iter);
        if (res.primal_res <= opts_.tol_acceptable && res.dual_res <= opts_.tol_acceptable &&
            res.rel_gap <= opts_.tol_acceptable) {
            res.status = SolveStatus::optimal;
        } else {
            res.status =
                fail_reason.empty() ? SolveStatus::max_iters : SolveStatus::numerical_failure;
        }
        return res;
    }

  private:
    struct Dir {
        ConeVec dx, ds;
        RVec dy;
        double dtau = 0.0, dkappa = 0.0;
    };

    Problem P_;
    SolverOptions opts_;
    RVec b_;            // equilibrated copy
    ConeVec c_;
    RVec row_scale_;    // original row i was divided by row_scale_(i)
    double c_scale_ = 1.0, b_scale_ = 1.0;
    RMat schur_;        // A H^{-1} A^T (+ tiny regularization)
    Eigen::LDLT<RMat> schur_fact_;
    std::vector<ConeVec> hinv_rows_; // H^{-1} a_i, reused within an iteration

    ConeVec negate(const ConeVec& u) const {
        ConeVec r = u;
        scale_inplace(P_.layout, r, -1.0);
        return r;
    }
    ConeVec scaled(const ConeVec& u, double a) const {
        ConeVec r = u;
        scale_inplace(P_.layout, r, a);
        return r;
    }
    ConeVec add_scaled(const ConeVec& u, double a, const ConeVec& w) const {
        ConeVec r = u;
        axpy(P_.layout, a, w, r);
        return r;
    }

    RVec mul_A(const ConeVec& u) const {
        RVec r(P_.num_rows());
        for (int i = 0; i < P_.num_rows(); ++i) r(i) = dot(P_.layout, P_.rows[i], u) / row_scale_(i);
        return r;
    }

    ConeVec mul_AT(const RVec& yv) const {
        ConeVec r = ConeVec::zero(P_.layout);
        for (int i = 0; i < P_.num_rows(); ++i)
            if (yv(i) != 0.0) axpy(P_.layout, yv(i) / row_scale_(i), P_.rows[i], r);
        return r;
    }

    void equilibrate() {
        const int m = P_.num_rows();
        row_scale_ = RVec::Ones(m);
        if (opts_.equilibrate) {
            for (int i = 0; i < m; ++i)
                row_scale_(i) = std::max(frob_norm(P_.layout, P_.rows[i]), 1e-12);
        }
        b_ = P_.b.cwiseQuotient(row_scale_);
        b_scale_ = opts_.equilibrate ? std::max(b_.cwiseAbs().maxCoeff(), 1e-12) : 1.0;
        if (P_.b.isZero(0.0)) b_scale_ = 1.0;
        b_ /= b_scale_;
        c_ = P_.c;
        c_scale_ = 1.0;
        if (opts_.equilibrate) {
            const double cn = frob_norm(P_.layout, c_);
            if (cn > 1e-12) {
                c_scale_ = cn;
                scale_inplace(P_.layout, c_, 1.0 / c_scale_);
            }
        }
    }

    /// Schur complement M = A H^{-1} A^T with a static ridge; LDLT factored.
    bool build_schur(const detail::NTScaling& nt) {
        const int m = P_.num_rows();
        hinv_rows_.resize(m);
        for (int i = 0; i < m; ++i) {
            hinv_rows_[i] = nt.apply_Hinv(P_.rows[i]);
            scale_inplace(P_.layout, hinv_rows_[i], 1.0 / row_scale_(i));
        }
        schur_.resize(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) {
                const double v = dot(P_.layout, P_.rows[i], hinv_rows_[j]) / row_scale_(i);
                schur_(i, j) = v;
                schur_(j, i) = v;
            }
        // Factor without perturbation first: near a strictly complementary
        // boundary optimum the Schur matrix spans many orders of magnitude,
        // and any ridge sized from its large entries would dwarf the small
        // eigenvalues and freeze the primal residual.  A ridge is added only
        // as an escalating fallback for genuinely rank-deficient rows.
        const double diag_scale = std::max(1.0, schur_.diagonal().maxCoeff());
        for (double rel : {0.0, 1e-14, 1e-11, 1e-8}) {
            RMat reg = schur_;
            if (rel > 0.0) reg.diagonal().array() += rel * diag_scale;
            schur_fact_.compute(reg);
            if (schur_fact_.info() != Eigen::Success) continue;
            if (schur_fact_.solve(b_).allFinite()) return true;
        }
        return false;
    }

    RVec schur_solve(const RVec& r) const {
        RVec sol = schur_fact_.solve(r);
        sol += schur_fact_.solve(r - schur_ * sol); // one refinement pass
        return sol;
    }

    /// Newton system of the embedding with iterative refinement: the block
    /// elimination through H^{-1} loses digits on ill-conditioned scalings,
    /// so the direction is re-solved against its own residual until the
    /// refinement stops paying for itself (at most three passes).
    Dir solve_kkt(const detail::NTScaling& nt, const RVec& rhs_p, const ConeVec& rhs_d,
                  double rhs_g, const ConeVec& d_s, double d_kappa, double tau,
                  double kappa) const {
        const ConeLayout& lay = P_.layout;
        Dir d = solve_kkt_once(nt, rhs_p, rhs_d, rhs_g, d_s, d_kappa, tau, kappa);
        const double rhs_scale = 1.0 + rhs_p.norm() + frob_norm(lay, rhs_d) + std::abs(rhs_g) +
                                 frob_norm(lay, d_s) + std::abs(d_kappa);
        double prev_norm = std::numeric_limits<double>::infinity();
        for (int pass = 0; pass < 3; ++pass) {
            // Residuals of all five block equations at the computed direction.
            const RVec res_p = rhs_p - (mul_A(d.dx) - b_ * d.dtau);
            ConeVec res_d = rhs_d;
            axpy(lay, -1.0, mul_AT(d.dy), res_d);
            axpy(lay, -1.0, d.ds, res_d);
            axpy(lay, d.dtau, c_, res_d);
            const double res_g = rhs_g - (dot(lay, c_, d.dx) - b_.dot(d.dy) + d.dkappa);
            ConeVec wsum = nt.apply_W(d.dx);
            axpy(lay, 1.0, nt.apply_WinvT(d.ds), wsum);
            ConeVec res_s = d_s;
            axpy(lay, -1.0, nt.jordan_prod(nt.lambda_vec(), wsum), res_s);
            const double res_k = d_kappa - (kappa * d.dtau + tau * d.dkappa);

            const double res_norm = res_p.norm() + frob_norm(lay, res_d) + std::abs(res_g) +
                                    frob_norm(lay, res_s) + std::abs(res_k);
            if (!(res_norm > 1e-14 * rhs_scale) || !(res_norm < 0.5 * prev_norm)) break;
            prev_norm = res_norm;

            const Dir corr = solve_kkt_once(nt, res_p, res_d, res_g, res_s, res_k, tau, kappa);
            axpy(lay, 1.0, corr.dx, d.dx);
            axpy(lay, 1.0, corr.ds, d.ds);
            d.dy += corr.dy;
            d.dtau += corr.dtau;
            d.dkappa += corr.dkappa;
        }
        return d;
    }

    Dir solve_kkt_once(const detail::NTScaling& nt, const RVec& rhs_p, const ConeVec& rhs_d,
                       double rhs_g, const ConeVec& d_s, double d_kappa, double tau,
                       double kappa) const {
        const ConeLayout& lay = P_.layout;
        const ConeVec dtil = nt.jordan_solve(d_s);
        const ConeVec wt_dtil = nt.apply_WT(dtil);

        // M y1 = b + A H^{-1} c ; M y2 = rhs_p - A H^{-1}(W^T dtil - rhs_d)
        const ConeVec hc = nt.apply_Hinv(c_);
        const RVec y1 = schur_solve(b_ + mul_A(hc));
        ConeVec tmp = wt_dtil;
        axpy(lay, -1.0, rhs_d, tmp); // W^T dtil - rhs_d
        const ConeVec htmp = nt.apply_Hinv(tmp);
        const RVec y2 = schur_solve(rhs_p - mul_A(htmp));

        // x1 = H^{-1}(A^T y1 - c) ; x2 = H^{-1} A^T y2 + H^{-1}(W^T dtil - rhs_d)
        ConeVec aty1 = mul_AT(y1);
        axpy(lay, -1.0, c_, aty1);
        const ConeVec x1 = nt.apply_Hinv(aty1);
        ConeVec x2 = nt.apply_Hinv(mul_AT(y2));
        axpy(lay, 1.0, htmp, x2);

        const double den = dot(lay, c_, x1) - b_.dot(y1) - kappa / tau;
        const double num = rhs_g - dot(lay, c_, x2) + b_.dot(y2) - d_kappa / tau;
        Dir d;
        d.dtau = num / den;
        d.dy = d.dtau * y1 + y2;
        d.dx = add_scaled(x2, d.dtau, x1);
        // ds from the dual equation keeps it consistent to machine precision.
        d.ds = rhs_d;
        axpy(lay, d.dtau, c_, d.ds);
        axpy(lay, -1.0, mul_AT(d.dy), d.ds);
        d.dkappa = (d_kappa - kappa * d.dtau) / tau;
        return d;
    }

    double step_bound(const detail::NTScaling& nt, const ConeVec& x, const ConeVec& s, double tau,
                      double kappa, const Dir& d) const {
        double a = std::min(nt.max_step(x, d.dx, true), nt.max_step(s, d.ds, false));
        if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
        if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
        return a;
    }

    void finalize_optimal(SolverResult& res, const ConeVec& x, const RVec& y, const ConeVec& s,
                          double tau, double kappa, int iter) const {
        const ConeLayout& lay = P_.layout;
        res.status = SolveStatus::optimal;
        res.iterations = iter;
        res.tau = tau;
        res.kappa = kappa;
        // De-homogenize and undo the equilibration: the primal picks up the
        // b scale, dual quantities the c scale and the per-row factors.
        res.x = x;
        scale_inplace(lay, res.x, b_scale_ / tau);
        res.y = y * (c_scale_ / tau);
        res.y.array() /= row_scale_.array();
        res.s = s;
        scale_inplace(lay, res.s, c_scale_ / tau);
        res.pobj = dot(lay, P_.c, res.x);
        res.dobj = P_.b.dot(res.y);
        // Residuals on the original data.
        RVec rp(P_.num_rows());
        for (int i = 0; i < P_.num_rows(); ++i) rp(i) = dot(lay, P_.rows[i], res.x) - P_.b(i);
        ConeVec rd = ConeVec::zero(lay);
        for (int i = 0; i < P_.num_rows(); ++i)
            if (res.y(i) != 0.0) axpy(lay, res.y(i), P_.rows[i], rd);
        axpy(lay, 1.0, res.s, rd);
        axpy(lay, -1.0, P_.c, rd);
        res.primal_res = rp.norm() / (1.0 + P_.b.norm());
        res.dual_res = frob_norm(lay, rd) / (1.0 + frob_norm(lay, P_.c));
        res.rel_gap = std::abs(res.pobj - res.dobj) /
                      (1.0 + std::max(std::abs(res.pobj), std::abs(res.dobj)));
    }

    void finalize_infeasible(SolverResult& res, const RVec& yc, int iter) const {
        res.status = SolveStatus::infeasible;
        res.iterations = iter;
        // Map the ray back to original data and normalize to b^T y = 1;
        // the slack certificate is recomputed as -A^T y for exactness.
        RVec yo = yc;
        yo.array() /= row_scale_.array();
        const double byo = P_.b.dot(yo);
        res.y_certificate = yo / byo;
        res.s_certificate = ConeVec::zero(P_.layout);
        for (int i = 0; i < P_.num_rows(); ++i)
            axpy(P_.layout, -res.y_certificate(i), P_.rows[i], res.s_certificate);
        res.has_certificate = true;
    }

    void finalize_unbounded(SolverResult& res, const ConeVec& xc, int iter) const {
        res.status = SolveStatus::unbounded;
        res.iterations = iter;
        const double cval = -dot(P_.layout, P_.c, xc); // < 0 along the ray
        res.x_certificate = xc;
        scale_inplace(P_.layout, res.x_certificate, 1.0 / cval);
        res.has_certificate = true;
    }
};

} // namespace cfisac::conic
