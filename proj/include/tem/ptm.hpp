// Copyright 2026 The tem-mitigation Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "tem/pauli.hpp"

namespace tem {

// Dense Pauli-transfer-matrix machinery. These routines densify operators and
// channels, so they are capped at kDensePtmMaxQubits sites by policy; they
// exist as oracles and small-register tools, never in the scaling path.
inline constexpr int kDensePtmMaxQubits = 6;

using Cmat = Eigen::MatrixXcd;
using Cvec = Eigen::VectorXcd;

/// 2x2 Pauli matrix for axis 0..3.
const Eigen::Matrix2cd& pauli_matrix(int axis);

/// Dense 2^n x 2^n matrix of a Pauli string (coefficient included).
Cmat pauli_string_matrix(const PauliString& p);

/// PTM vector of an n-qubit operator A: a_alpha = 2^{-n/2} tr[A sigma_alpha].
/// Index order: alpha = sum_m 4^{n-1-m} alpha_m (site 0 most significant).
Eigen::VectorXd ptm_vector_of_operator(const Cmat& a, int n);

/// Inverse of ptm_vector_of_operator.
Cmat operator_of_ptm_vector(const Eigen::VectorXd& v, int n);

/// PTM of the unitary channel U . U^dagger.
Eigen::MatrixXd ptm_of_unitary(const Cmat& u, int n);

/// PTM of a channel given by Kraus operators.
Eigen::MatrixXd ptm_of_kraus(const std::vector<Cmat>& kraus, int n);

/// PTM of an n-qubit Pauli channel sum_P q_P (P . P), P running over all 4^n
/// strings with quasiprobabilities q (diagonal PTM).
Eigen::MatrixXd ptm_of_pauli_channel(const Eigen::VectorXd& quasiprob, int n);

/// True iff the first row of a PTM equals (1, 0, ..., 0) within tol.
bool is_trace_preserving(const Eigen::MatrixXd& ptm, double tol = 1e-10);

/// Walsh-Hadamard-like transform between diagonal-PTM fidelities f_beta and
/// Pauli-channel quasiprobabilities q_P: q = 4^{-n} H f with
/// H_{P,beta} = (-1)^{<P,beta>}. Exact inverse pair.
Eigen::VectorXd quasiprob_of_fidelities(const Eigen::VectorXd& fidelities, int n);
Eigen::VectorXd fidelities_of_quasiprob(const Eigen::VectorXd& quasiprob, int n);

}  // namespace tem
