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
 * @file common.hpp
 * @brief Shared aliases, error types and small numeric helpers.
 */

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cfisac {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double pi = 3.14159265358979323846;

/// Thrown when an argument violates a documented precondition.
class contract_error : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation cannot proceed for numerical reasons
/// (degenerate directions, non-PSD inputs, failed factorizations, ...).
class numerical_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Linear power ratio to decibel. Only used at reporting boundaries;
/// all internal math stays in linear SI units.
inline double to_db(double linear) { return 10.0 * std::log10(linear); }

/// Decibel to linear power ratio.
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

/// dBm to watt.
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// Largest absolute deviation of H from its Hermitian part, relative to
/// its Frobenius norm. Returns 0 for the zero matrix.
inline double hermitian_asymmetry(const CMat& H) {
    const double nrm = H.norm();
    if (nrm == 0.0) return 0.0;
    return (H - H.adjoint()).norm() / nrm;
}

/// Checks that H is Hermitian to a relative tolerance (default 1e-12) and
/// throws contract_error otherwise.
inline void require_hermitian(const CMat& H, double rel_tol = 1e-12,
                              const char* what = "matrix must be Hermitian") {
    if (H.rows() != H.cols()) throw contract_error(what);
    if (hermitian_asymmetry(H) > rel_tol) throw contract_error(what);
}

/// Force exact Hermitian symmetry: (H + H^*)/2.
inline CMat hermitian_part(const CMat& H) { return 0.5 * (H + H.adjoint()); }

/// Force exact symmetry of a real matrix: (S + S^T)/2.
inline RMat symmetric_part(const RMat& S) { return 0.5 * (S + S.transpose()); }

} // namespace cfisac
