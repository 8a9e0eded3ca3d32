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

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tem/mpo.hpp"
#include "tem/pauli.hpp"

namespace tem {

enum class LayerKind { SingleQubit, Clifford, Cnot, TwoLocal };

/// One circuit layer. Only the fields of the active kind are meaningful.
struct CircuitLayer {
    LayerKind kind = LayerKind::SingleQubit;
    std::vector<Eigen::Matrix2cd> unitaries;       // SingleQubit: one per qubit
    std::vector<int> clifford_ids;                 // Clifford: one id (0..23) per qubit
    std::vector<std::pair<int, int>> pairs;        // Cnot: (control, target)
    Eigen::MatrixXd two_local_ptm;                 // TwoLocal: 16x16 PTM
    int q1 = -1, q2 = -1;                          // TwoLocal qubits

    static CircuitLayer single_qubit(std::vector<Eigen::Matrix2cd> us);
    static CircuitLayer clifford(std::vector<int> ids);
    static CircuitLayer cnot(std::vector<std::pair<int, int>> pairs);
    static CircuitLayer two_local(Eigen::MatrixXd ptm16, int q1, int q2);

    bool is_clifford_compatible() const { return kind != LayerKind::SingleQubit && kind != LayerKind::TwoLocal; }
};

struct NoiseAttachment {
    int after_layer;       // index into Circuit::layers
    std::string model_id;  // key into the experiment's noise model map
};

struct Circuit {
    int n = 0;
    std::vector<CircuitLayer> layers;
    std::vector<NoiseAttachment> noise;

    void validate() const;
    int depth() const { return static_cast<int>(layers.size()); }
};

// --- layer -> MPO conversion -------------------------------------------------

/// Bond-1 MPO of a layer of single-qubit unitaries (identity allowed).
/// Throws if any input fails the unitarity check at 1e-10.
SuperopMPO single_qubit_layer_mpo(const std::vector<Eigen::Matrix2cd>& us);

/// MPO of a layer of non-overlapping CNOT gates; bond 4 inside each
/// control-target span (with identity passthrough sites where the pair is
/// non-adjacent), bond 1 elsewhere.
SuperopMPO cnot_layer_mpo(const std::vector<std::pair<int, int>>& pairs, int n);

/// SVD split of a generic two-local gate PTM across the (out,in)|(out,in)
/// site grouping; bond <= 16 with singular values below 1e-12 (relative)
/// pruned; identity passthrough between non-adjacent qubits.
SuperopMPO two_local_gate_mpo(const Eigen::MatrixXd& ptm16, int q1, int q2, int n);

SuperopMPO layer_mpo(const CircuitLayer& layer, int n);

/// MPO of the inverse of a unitary layer (sitewise inverse gates; a CNOT
/// layer is its own inverse). Throws for non-unitary two-local layers.
SuperopMPO inverse_layer_mpo(const CircuitLayer& layer, int n);

// --- benchmark circuits ------------------------------------------------------

/// One Trotter step of the 1-d transverse-field Ising evolution:
/// an R_X(2 h dt) layer, then the even-link ZZ block
/// [CNOT; R_Z(-2 J dt) on targets; CNOT] and the odd-link ZZ block likewise.
/// Every CNOT layer carries a noise attachment: "layer1" on even-link layers,
/// "layer2" on odd-link layers.
Circuit trotter_step_circuit(int n, double h, double j, double dt);

/// `steps` Trotter steps concatenated.
Circuit trotter_circuit(int n, int steps, double h, double j, double dt);

/// Brickwork random-Clifford circuit: L repetitions of [random single-qubit
/// Clifford layer; CNOT layer], the CNOT offset alternating even/odd.
/// Noise attachments "even"/"odd" follow each CNOT layer. Deterministic in
/// the seed.
Circuit brickwork_clifford_circuit(int n, int l, std::uint64_t seed);

// --- single-qubit Clifford group --------------------------------------------

/// Conjugation action of a single-qubit Clifford: pauli p in 0..3 maps to
/// sign[p] * pauli img[p].
struct CliffordAction {
    std::array<std::uint8_t, 4> img;
    std::array<int, 4> sign;
};

/// The 24 single-qubit Cliffords in a fixed canonical order.
const std::array<Eigen::Matrix2cd, 24>& clifford_unitaries();
const std::array<CliffordAction, 24>& clifford_actions();
/// clifford_inverse_ids()[c] is the id of the inverse of Clifford c.
const std::array<int, 24>& clifford_inverse_ids();

/// Rotation u with u sigma_axis u^dag = sigma_z, used to turn measurements
/// along x/y/z into computational-basis measurements.
const Eigen::Matrix2cd& basis_rotation_unitary(int axis);
int basis_rotation_clifford_id(int axis);

}  // namespace tem
