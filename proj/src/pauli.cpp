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

#include "tem/pauli.hpp"

#include <cmath>

namespace tem {

PauliString PauliString::from_label(const std::string& label, double coeff) {
    std::vector<std::uint8_t> axes;
    axes.reserve(label.size());
    for (char c : label) {
        switch (c) {
            case 'I': case 'i': case '_': axes.push_back(0); break;
            case 'X': case 'x': axes.push_back(1); break;
            case 'Y': case 'y': axes.push_back(2); break;
            case 'Z': case 'z': axes.push_back(3); break;
            default: throw std::invalid_argument("bad Pauli label character");
        }
    }
    return PauliString(std::move(axes), coeff);
}

std::string PauliString::label() const {
    static const char kNames[] = "IXYZ";
    std::string s;
    s.reserve(axes.size());
    for (auto a : axes) s.push_back(kNames[a]);
    return s;
}

int PauliString::weight() const {
    int w = 0;
    for (auto a : axes) w += (a != 0);
    return w;
}

int symplectic_form(const PauliString& a, const PauliString& b) {
    if (a.axes.size() != b.axes.size())
        throw std::invalid_argument("symplectic_form: length mismatch");
    int acc = 0;
    for (size_t m = 0; m < a.axes.size(); ++m) {
        auto p = a.axes[m], q = b.axes[m];
        acc ^= (p != 0 && q != 0 && p != q) ? 1 : 0;
    }
    return acc;
}

Eigen::Matrix<double, 6, 4> dual_operators(double px, double py, double pz) {
    if (px <= 0.0 || py <= 0.0 || pz <= 0.0)
        throw std::invalid_argument(
            "dual_operators: all basis probabilities must be positive "
            "(informationally incomplete otherwise)");
    if (std::abs(px + py + pz - 1.0) > 1e-12)
        throw std::invalid_argument("dual_operators: basis probabilities must sum to 1");
    const double s = 1.0 / std::sqrt(2.0);
    Eigen::Matrix<double, 6, 4> d = Eigen::Matrix<double, 6, 4>::Zero();
    const double pinv[3] = {1.0 / px, 1.0 / py, 1.0 / pz};
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign = 0; sign < 2; ++sign) {
            int k = 2 * axis + sign;
            d(k, 0) = s;
            d(k, 1 + axis) = (sign == 0 ? s : -s) * pinv[axis];
        }
    }
    return d;
}

LocalPovm make_ic_povm(double px, double py, double pz) {
    LocalPovm povm;
    povm.basis_probs = {px, py, pz};
    povm.duals = dual_operators(px, py, pz);
    const double s = 1.0 / std::sqrt(2.0);
    povm.effects.setZero();
    const double p[3] = {px, py, pz};
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign = 0; sign < 2; ++sign) {
            int k = 2 * axis + sign;
            povm.effects(k, 0) = p[axis] * s;
            povm.effects(k, 1 + axis) = (sign == 0 ? s : -s) * p[axis];
        }
    }
    return povm;
}

LocalPovm make_aligned_povm(int axis) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("make_aligned_povm: axis must be 0..2");
    LocalPovm povm;
    povm.basis_probs = {0.0, 0.0, 0.0};
    povm.basis_probs[axis] = 1.0;
    povm.effects.setZero();
    povm.duals.setZero();
    const double s = 1.0 / std::sqrt(2.0);
    for (int sign = 0; sign < 2; ++sign) {
        int k = 2 * axis + sign;
        povm.effects(k, 0) = s;
        povm.effects(k, 1 + axis) = (sign == 0 ? s : -s);
        povm.duals(k, 0) = s;
        povm.duals(k, 1 + axis) = (sign == 0 ? s : -s);
    }
    return povm;
}

}  // namespace tem
