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

#include "tem/ptm.hpp"

#include <cmath>

namespace tem {

namespace {

void check_cap(int n, const char* where) {
    if (n < 1 || n > kDensePtmMaxQubits)
        throw std::invalid_argument(std::string(where) + ": dense PTM capped at " +
                                    std::to_string(kDensePtmMaxQubits) + " qubits");
}

// Recursive Pauli decomposition: fills coeffs c_alpha such that
// A = sum_alpha c_alpha sigma_alpha. Cost O(n 4^n).
void pauli_decompose_rec(const Cmat& a, int n, std::complex<double>* out, long stride) {
    if (n == 0) {
        *out = a(0, 0);
        return;
    }
    const long h = a.rows() / 2;
    Cmat blocks[4];
    blocks[0] = 0.5 * (a.topLeftCorner(h, h) + a.bottomRightCorner(h, h));
    blocks[1] = 0.5 * (a.topRightCorner(h, h) + a.bottomLeftCorner(h, h));
    blocks[2] = std::complex<double>(0, 0.5) *
                (a.topRightCorner(h, h) - a.bottomLeftCorner(h, h));
    blocks[3] = 0.5 * (a.topLeftCorner(h, h) - a.bottomRightCorner(h, h));
    const long sub = stride / 4;
    for (int k = 0; k < 4; ++k) pauli_decompose_rec(blocks[k], n - 1, out + k * sub, sub);
}

Eigen::VectorXd pauli_coeffs_real(const Cmat& a, int n, const char* where) {
    const long d = 1l << n;
    if (a.rows() != d || a.cols() != d)
        throw std::invalid_argument(std::string(where) + ": operator dimension mismatch");
    std::vector<std::complex<double>> c(static_cast<size_t>(1) << (2 * n));
    pauli_decompose_rec(a, n, c.data(), static_cast<long>(c.size()));
    Eigen::VectorXd out(static_cast<long>(c.size()));
    for (long i = 0; i < out.size(); ++i) out[i] = c[static_cast<size_t>(i)].real();
    return out;
}

}  // namespace

const Eigen::Matrix2cd& pauli_matrix(int axis) {
    static const std::array<Eigen::Matrix2cd, 4> mats = [] {
        std::array<Eigen::Matrix2cd, 4> m;
        const std::complex<double> i(0, 1);
        m[0] << 1, 0, 0, 1;
        m[1] << 0, 1, 1, 0;
        m[2] << 0, -i, i, 0;
        m[3] << 1, 0, 0, -1;
        return m;
    }();
    if (axis < 0 || axis > 3) throw std::invalid_argument("pauli_matrix: axis must be 0..3");
    return mats[static_cast<size_t>(axis)];
}

Cmat pauli_string_matrix(const PauliString& p) {
    check_cap(p.size(), "pauli_string_matrix");
    Cmat out = Cmat::Identity(1, 1);
    for (auto a : p.axes) {
        const auto& s = pauli_matrix(a);
        Cmat next(out.rows() * 2, out.cols() * 2);
        for (long r = 0; r < out.rows(); ++r)
            for (long c = 0; c < out.cols(); ++c) next.block(r * 2, c * 2, 2, 2) = out(r, c) * s;
        out.swap(next);
    }
    return p.coeff * out;
}

Eigen::VectorXd ptm_vector_of_operator(const Cmat& a, int n) {
    check_cap(n, "ptm_vector_of_operator");
    // a_alpha = 2^{-n/2} tr[A sigma_alpha] and tr[A sigma] = 2^n c_alpha.
    return pauli_coeffs_real(a, n, "ptm_vector_of_operator") * std::pow(2.0, n / 2.0);
}

Cmat operator_of_ptm_vector(const Eigen::VectorXd& v, int n) {
    check_cap(n, "operator_of_ptm_vector");
    const long d = 1l << n;
    if (v.size() != (1l << (2 * n)))
        throw std::invalid_argument("operator_of_ptm_vector: length mismatch");
    Cmat out = Cmat::Zero(d, d);
    const double scale = std::pow(2.0, -n / 2.0);
    for (long idx = 0; idx < v.size(); ++idx) {
        if (v[idx] == 0.0) continue;
        std::vector<std::uint8_t> axes(static_cast<size_t>(n));
        long rem = idx;
        for (int m = n - 1; m >= 0; --m) {
            axes[static_cast<size_t>(m)] = static_cast<std::uint8_t>(rem % 4);
            rem /= 4;
        }
        out += scale * v[idx] * pauli_string_matrix(PauliString(axes));
    }
    return out;
}

Eigen::MatrixXd ptm_of_kraus(const std::vector<Cmat>& kraus, int n) {
    check_cap(n, "ptm_of_kraus");
    const long d = 1l << n;
    const long dim = 1l << (2 * n);
    Eigen::MatrixXd ptm(dim, dim);
    for (long beta = 0; beta < dim; ++beta) {
        std::vector<std::uint8_t> axes(static_cast<size_t>(n));
        long rem = beta;
        for (int m = n - 1; m >= 0; --m) {
            axes[static_cast<size_t>(m)] = static_cast<std::uint8_t>(rem % 4);
            rem /= 4;
        }
        Cmat sb = pauli_string_matrix(PauliString(axes));
        Cmat out = Cmat::Zero(d, d);
        for (const auto& k : kraus) out += k * sb * k.adjoint();
        ptm.col(beta) = pauli_coeffs_real(out, n, "ptm_of_kraus");
    }
    return ptm;
}

Eigen::MatrixXd ptm_of_unitary(const Cmat& u, int n) {
    if ((u * u.adjoint() - Cmat::Identity(u.rows(), u.rows())).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("ptm_of_unitary: input is not unitary");
    return ptm_of_kraus({u}, n);
}

Eigen::MatrixXd ptm_of_pauli_channel(const Eigen::VectorXd& quasiprob, int n) {
    check_cap(n, "ptm_of_pauli_channel");
    return fidelities_of_quasiprob(quasiprob, n).asDiagonal();
}

bool is_trace_preserving(const Eigen::MatrixXd& ptm, double tol) {
    if (std::abs(ptm(0, 0) - 1.0) > tol) return false;
    for (long c = 1; c < ptm.cols(); ++c)
        if (std::abs(ptm(0, c)) > tol) return false;
    return true;
}

namespace {

// In-place transform y_P = sum_beta (-1)^{<P,beta>} x_beta, factorized per
// site: the 4x4 single-site kernel K(p,b) = (-1)^{[p,b anticommute]}.
Eigen::VectorXd anticommutation_transform(const Eigen::VectorXd& x, int n) {
    Eigen::VectorXd v = x;
    Eigen::Matrix4d k;
    for (int p = 0; p < 4; ++p)
        for (int b = 0; b < 4; ++b) k(p, b) = (p != 0 && b != 0 && p != b) ? -1.0 : 1.0;
    long lead = 1;
    long trail = v.size() / 4;
    for (int m = 0; m < n; ++m) {
        Eigen::VectorXd next(v.size());
        for (long l = 0; l < lead; ++l)
            for (long t = 0; t < trail; ++t) {
                double in[4], out[4];
                for (int b = 0; b < 4; ++b) in[b] = v[(l * 4 + b) * trail + t];
                for (int p = 0; p < 4; ++p) {
                    out[p] = 0;
                    for (int b = 0; b < 4; ++b) out[p] += k(p, b) * in[b];
                }
                for (int p = 0; p < 4; ++p) next[(l * 4 + p) * trail + t] = out[p];
            }
        v.swap(next);
        lead *= 4;
        trail /= 4;
    }
    return v;
}

}  // namespace

Eigen::VectorXd quasiprob_of_fidelities(const Eigen::VectorXd& fidelities, int n) {
    if (fidelities.size() != (1l << (2 * n)))
        throw std::invalid_argument("quasiprob_of_fidelities: length mismatch");
    return anticommutation_transform(fidelities, n) / std::pow(4.0, n);
}

Eigen::VectorXd fidelities_of_quasiprob(const Eigen::VectorXd& quasiprob, int n) {
    if (quasiprob.size() != (1l << (2 * n)))
        throw std::invalid_argument("fidelities_of_quasiprob: length mismatch");
    return anticommutation_transform(quasiprob, n);
}

}  // namespace tem
