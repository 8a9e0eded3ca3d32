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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tem/layers.hpp"
#include "tem/noise.hpp"
#include "tem/pauli.hpp"
#include "tem/rng.hpp"

namespace tem {

// Dense evolution is quadratic in Hilbert space dimension; hard cap.
inline constexpr int kDenseStateMaxQubits = 12;

/// Density operator in PTM coordinates (length 4^n, real). The trace
/// coordinate r[0] stays pinned at 2^{-n/2} under every channel here.
struct DenseState {
    int n = 0;
    Eigen::VectorXd ptm;
};

DenseState dense_initial_state(int n);  // |0...0><0...0|

void dense_apply_layer(DenseState& state, const CircuitLayer& layer);
void dense_apply_noise(DenseState& state, const NoiseModel& model);
void dense_apply_pauli_gate(DenseState& state, const PauliString& p);

/// Run the full noisy circuit from |0...0>. Throws if n exceeds the dense
/// cap or a noise attachment references an unknown model.
DenseState dense_evolve(const Circuit& circuit, const NoiseModelMap& noise);

/// Measurement records grouped as Q circuits x M shots. Outcome index
/// convention per qubit: k = 2*axis + sign with axis in {0:x, 1:y, 2:z} and
/// sign 0 for +, 1 for -.
struct OutcomeSet {
    int n = 0, Q = 0, M = 0;
    std::uint64_t seed = 0;
    std::string backend;
    std::array<double, 3> basis_probs{0, 0, 0};
    std::vector<std::uint8_t> axes;   // Q * n entries
    std::vector<std::uint8_t> signs;  // Q * M * stride bytes, bit 1 = '-'
    std::string fingerprint;

    long shots() const { return static_cast<long>(Q) * M; }
    int stride() const { return (n + 7) / 8; }
    int axis(int q, int m) const { return axes[static_cast<size_t>(q) * n + m]; }
    bool sign(int q, int s, int m) const {
        const size_t byte = (static_cast<size_t>(q) * M + s) * stride() + m / 8;
        return (signs[byte] >> (m % 8)) & 1;
    }
    void set_sign(int q, int s, int m, bool v) {
        const size_t byte = (static_cast<size_t>(q) * M + s) * stride() + m / 8;
        if (v)
            signs[byte] |= static_cast<std::uint8_t>(1u << (m % 8));
        else
            signs[byte] &= static_cast<std::uint8_t>(~(1u << (m % 8)));
    }
    int outcome_index(int q, int s, int m) const { return 2 * axis(q, m) + (sign(q, s, m) ? 1 : 0); }
    void allocate() {
        axes.assign(static_cast<size_t>(Q) * n, 2);
        signs.assign((static_cast<size_t>(Q) * M) * stride(), 0);
    }
};

/// IC sampling from a dense state: per circuit, draw one basis axis per
/// qubit from basis_probs; per shot, exact sampling of the basis-rotated
/// outcome distribution through sequential conditional marginals.
/// Deterministic in the seed.
OutcomeSet sample_ic_outcomes(const DenseState& state, const std::array<double, 3>& basis_probs,
                              int Q, int M, std::uint64_t seed);

/// Noiseless expectation of a Pauli-string observable: dense route for small
/// registers, tableau route for Clifford circuits of any size.
double exact_expectation(const Circuit& circuit, const PauliString& obs);

// --- stabilizer backend ------------------------------------------------------

/// Stabilizer tableau: N generator rows over packed (x|z) bits with +-1 signs.
struct StabilizerTableau {
    int n = 0, words = 0;
    std::vector<std::uint64_t> x, z;  // row-major, n rows of `words` words
    std::vector<std::uint8_t> r;      // sign bit per row (1 means -1)

    static StabilizerTableau zero_state(int n);
    void apply_clifford(int site, int clifford_id);
    void apply_cnot(int control, int target);
    void apply_layer(const CircuitLayer& layer);

    bool xbit(int row, int q) const { return (x[static_cast<size_t>(row) * words + q / 64] >> (q % 64)) & 1; }
    bool zbit(int row, int q) const { return (z[static_cast<size_t>(row) * words + q / 64] >> (q % 64)) & 1; }
};

/// Tableau of the noiseless circuit output (Clifford layers only).
StabilizerTableau stab_apply_circuit(const Circuit& circuit);

/// Conjugate a Pauli string through the circuit: returns U P U^dag with its
/// sign in coeff (+-1 times the input coefficient).
PauliString conjugate_through_circuit(const Circuit& circuit, const PauliString& p);

/// <psi| P |psi> for the stabilizer output state: +-1 if P (up to sign) is in
/// the stabilizer group, 0 otherwise.
double stab_expectation(const StabilizerTableau& t, const PauliString& p);

/// Exact sampling of all-qubit measurements of the noisy Clifford circuit in
/// a fixed product basis (one axis per qubit): noiseless outcomes from the
/// affine-subspace form of the tableau, per-shot Pauli error frames from the
/// attached noise models. Layout Q x M with Q*M = S total shots.
OutcomeSet stab_sample_outcomes(const Circuit& circuit, const NoiseModelMap& noise,
                                const std::vector<std::uint8_t>& basis_axes, int Q, int M,
                                std::uint64_t seed);

// --- state-vector trajectory backend ------------------------------------------

/// Per-shot computational-basis sampling of a noisy circuit by trajectory
/// unraveling of the Pauli noise: the state vector is evolved per shot with
/// freshly sampled Pauli errors (plus fixed inserted gates), then one
/// bitstring is drawn. `snapshots[k]` selects prefix depths (layer counts)
/// at which a bitstring is drawn along the way; bits are packed qubit-0
/// first into uint64 words (n <= 64 here, dense amplitudes cap n lower).
struct TrajectoryResult {
    // outcome[snapshot][shot] -> packed bitstring (bit m = qubit m outcome, 1 means |1>)
    std::vector<std::vector<std::uint64_t>> outcomes;
};
TrajectoryResult sample_trajectories(const Circuit& circuit, const NoiseModelMap& noise,
                                     const std::vector<std::pair<int, PauliString>>& insertions,
                                     const std::vector<int>& snapshot_depths, int shots,
                                     RngStream& rng);

}  // namespace tem
