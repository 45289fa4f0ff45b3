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
 * @file eig.hpp
 * @brief Hermitian eigen-decompositions, epsilon-rank and the real
 *        embedding of complex Hermitian matrices.
 *
 * The optimizer works internally on real symmetric matrices via the usual
 * 2n x 2n embedding T(H) = [[Re H, -Im H], [Im H, Re H]]. T maps Hermitian
 * to symmetric, PSD to PSD, and doubles every eigenvalue's multiplicity,
 * so ranks and eigen-reports are always taken in the complex domain after
 * mapping back.
 */

#include <algorithm>

#include "cfisac/common.hpp"

namespace cfisac {

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
struct HermitianEig {
    RVec eigenvalues;  ///< descending
    CMat eigenvectors; ///< column k pairs with eigenvalues(k)
};

/// Full eigen-decomposition of a Hermitian matrix (validated to rel_tol).
inline HermitianEig hermitian_eig(const CMat& H, double herm_rel_tol = 1e-12) {
    require_hermitian(H, herm_rel_tol, "hermitian_eig: input must be Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(H));
    if (es.info() != Eigen::Success) throw numerical_error("hermitian_eig: decomposition failed");
    const Eigen::Index n = H.rows();
    HermitianEig out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) { // Eigen returns ascending order
        out.eigenvalues(k) = es.eigenvalues()(n - 1 - k);
        out.eigenvectors.col(k) = es.eigenvectors().col(n - 1 - k);
    }
    return out;
}

/// Epsilon-rank from a descending eigenvalue list: the number of
/// eigenvalues exceeding rel_tol * scale. When `scale` is not given it
/// defaults to the largest eigenvalue (clamped at 0 for PSD semantics).
inline int rank_eps(const RVec& eigenvalues_desc, double rel_tol = 1e-6, double scale = -1.0) {
    if (eigenvalues_desc.size() == 0) return 0;
    const double ref = scale >= 0.0 ? scale : std::max(eigenvalues_desc(0), 0.0);
    const double thresh = rel_tol * ref;
    int r = 0;
    for (Eigen::Index i = 0; i < eigenvalues_desc.size(); ++i)
        if (eigenvalues_desc(i) > thresh) ++r;
    return r;
}

/// Epsilon-rank of a Hermitian PSD (up to tolerance) matrix.
inline int rank_eps(const CMat& H, double rel_tol = 1e-6, double scale = -1.0) {
    return rank_eps(hermitian_eig(H).eigenvalues, rel_tol, scale);
}

/// Real embedding of a complex matrix: T(H) = [[Re H, -Im H],[Im H, Re H]].
/// For Hermitian H the result is symmetric with doubled spectrum, and
/// Tr(T(A) T(X)) = 2 Tr(A X) for Hermitian A, X.
inline RMat embed_hermitian(const CMat& H) {
    const Eigen::Index n = H.rows();
    RMat T(2 * n, 2 * H.cols());
    T.topLeftCorner(n, H.cols()) = H.real();
    T.topRightCorner(n, H.cols()) = -H.imag();
    T.bottomLeftCorner(n, H.cols()) = H.imag();
    T.bottomRightCorner(n, H.cols()) = H.real();
    return T;
}

/// Real embedding of a complex vector: [Re x; Im x]. Satisfies
/// T(H) embed(x) = embed(H x).
inline RVec embed_vector(const CVec& x) {
    RVec v(2 * x.size());
    v.head(x.size()) = x.real();
    v.tail(x.size()) = x.imag();
    return v;
}

/// Inverse of embed_hermitian for (possibly asymmetric-in-structure)
/// solver output: averages over the complex-structure symmetry so that
/// any real symmetric S maps to the Hermitian matrix with the same
/// quadratic form on embedded vectors:
///   C = (S11 + S22)/2 + i (S21 - S12)/2.
inline CMat complexify_embedded(const RMat& S) {
    if (S.rows() != S.cols() || S.rows() % 2 != 0)
        throw contract_error("complexify_embedded: expected even-dimension square matrix");
    const Eigen::Index n = S.rows() / 2;
    CMat C(n, n);
    C.real() = 0.5 * (S.topLeftCorner(n, n) + S.bottomRightCorner(n, n));
    C.imag() = 0.5 * (S.bottomLeftCorner(n, n) - S.topRightCorner(n, n));
    return hermitian_part(C);
}

} // namespace cfisac
