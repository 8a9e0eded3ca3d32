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
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tem {

// Pauli axis codes used everywhere: 0=I, 1=X, 2=Y, 3=Z.
enum PauliAxis : std::uint8_t { kI = 0, kX = 1, kY = 2, kZ = 3 };

/// N-site Pauli string with a real coefficient.
struct PauliString {
    std::vector<std::uint8_t> axes;
    double coeff = 1.0;

    PauliString() = default;
    PauliString(std::vector<std::uint8_t> a, double c = 1.0) : axes(std::move(a)), coeff(c) {}

    static PauliString identity(int n) { return PauliString(std::vector<std::uint8_t>(n, 0)); }

    /// Parse labels like "XIZY" or "IIZZ" (site 0 first).
    static PauliString from_label(const std::string& label, double coeff = 1.0);

    std::string label() const;
    int size() const { return static_cast<int>(axes.size()); }
    int weight() const;  // number of non-identity sites

    bool operator==(const PauliString& o) const { return axes == o.axes && coeff == o.coeff; }
};

/// Symplectic form <a,b>: 0 if the strings commute, 1 if they anticommute.
int symplectic_form(const PauliString& a, const PauliString& b);

/// Single-qubit IC POVM built from randomized projective measurements along
/// the x/y/z axes with probabilities (p_x, p_y, p_z). Outcome index
/// convention: k in {0..5} ordered (x+, x-, y+, y-, z+, z-).
///
/// effect_rows/dual_rows are 6x4 matrices whose k-th row is the PTM vector
/// (a_alpha = tr[A sigma_alpha]/sqrt(2)) of the k-th effect / dual operator.
struct LocalPovm {
    std::array<double, 3> basis_probs;      // (p_x, p_y, p_z)
    Eigen::Matrix<double, 6, 4> effects;    // PTM rows of Pi_k
    Eigen::Matrix<double, 6, 4> duals;      // PTM rows of D_k
};

/// IC POVM with all three basis probabilities strictly positive.
/// Throws std::invalid_argument if any p <= 0 or they do not sum to 1.
LocalPovm make_ic_povm(double px, double py, double pz);

/// Degenerate single-basis POVM (p_axis = 1) for basis-aligned estimation of
/// observables diagonal in that basis. Not informationally complete; rows for
/// the other two axes are zero and must never be sampled.
LocalPovm make_aligned_povm(int axis);

/// The six dual operators D_{alpha +/-} = (I +/- p_alpha^{-1} sigma_alpha)/2
/// as PTM rows, ordered (x+, x-, y+, y-, z+, z-).
Eigen::Matrix<double, 6, 4> dual_operators(double px, double py, double pz);

}  // namespace tem
