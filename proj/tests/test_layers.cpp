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

#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "tem/layers.hpp"
#include "tem/ptm.hpp"

using namespace tem;
using tem::testing::kron;
using tem::testing::random_unitary;

namespace {

Eigen::MatrixXcd cnot_unitary() {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(4, 4);
    u(0, 0) = u(1, 1) = u(2, 3) = u(3, 2) = 1;
    return u;
}

Eigen::Matrix2cd rx(double theta) {
    const std::complex<double> i(0, 1);
    Eigen::Matrix2cd u;
    u << std::cos(theta / 2), -i * std::sin(theta / 2), -i * std::sin(theta / 2), std::cos(theta / 2);
    return u;
}

}  // namespace

TEST_CASE("single qubit layer mpo") {
    std::vector<Eigen::Matrix2cd> ids(3, Eigen::Matrix2cd::Identity());
    SuperopMPO layer = single_qubit_layer_mpo(ids);
    CHECK(frobenius_distance(layer, SuperopMPO::identity(3)) < 1e-14);

    // R_X(2 h dt) with h=1, dt=0.5: rotation by 1 rad in the (Y,Z) PTM block
    Eigen::MatrixXd p = ptm_of_unitary(rx(1.0), 1);
    CHECK(p(0, 0) == doctest::Approx(1.0));
    CHECK(p(1, 1) == doctest::Approx(1.0));
    CHECK(p(2, 2) == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
    CHECK(p(3, 3) == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
    CHECK(std::abs(p(2, 3)) == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
    CHECK(p(2, 3) == doctest::Approx(-p(3, 2)).epsilon(1e-12));

    // random layer vs kron oracle
    RngStream rng(3);
    std::vector<Eigen::Matrix2cd> us;
    for (int m = 0; m < 3; ++m) us.push_back(Eigen::Matrix2cd(random_unitary(2, rng)));
    SuperopMPO mpo = single_qubit_layer_mpo(us);
    Eigen::MatrixXcd u = kron(kron(us[0], us[1]), us[2]);
    CHECK((mpo_to_dense(mpo) - ptm_of_unitary(u, 3)).cwiseAbs().maxCoeff() < 1e-10);

    // non-unitary input is rejected
    std::vector<Eigen::Matrix2cd> bad(1, Eigen::Matrix2cd::Identity() * 1.5);
    CHECK_THROWS_AS(single_qubit_layer_mpo(bad), std::invalid_argument);
}

TEST_CASE("cnot layer mpo against dense conjugation") {
    // single adjacent gate
    SuperopMPO m = cnot_layer_mpo({{0, 1}}, 2);
    CHECK((mpo_to_dense(m) - ptm_of_unitary(cnot_unitary(), 2)).cwiseAbs().maxCoeff() < 1e-13);

    // reversed orientation: control above target
    Eigen::MatrixXcd u_rev = Eigen::MatrixXcd::Zero(4, 4);
    u_rev(0, 0) = u_rev(3, 1) = u_rev(2, 2) = u_rev(1, 3) = 1;  // control = qubit 1
    SuperopMPO mrev = cnot_layer_mpo({{1, 0}}, 2);
    CHECK((mpo_to_dense(mrev) - ptm_of_unitary(u_rev, 2)).cwiseAbs().maxCoeff() < 1e-13);

    // non-adjacent pair: passthrough in the middle
    SuperopMPO m3 = cnot_layer_mpo({{0, 2}}, 3);
    CHECK(m3.bond_dims() == std::vector<int>{4, 4});
    Eigen::MatrixXcd big = Eigen::MatrixXcd::Zero(8, 8);
    // CNOT(0 -> 2) on 3 qubits
    for (int b = 0; b < 8; ++b) {
        const int ctl = (b >> 2) & 1;
        const int flipped = ctl ? b ^ 1 : b;
        big(flipped, b) = 1;
    }
    CHECK((mpo_to_dense(m3) - ptm_of_unitary(big, 3)).cwiseAbs().maxCoeff() < 1e-13);

    // brickwork bond pattern
    SuperopMPO m4 = cnot_layer_mpo({{0, 1}, {2, 3}}, 4);
    CHECK(m4.bond_dims() == std::vector<int>{4, 1, 4});

    CHECK_THROWS_AS(cnot_layer_mpo({{0, 1}, {1, 2}}, 3), std::invalid_argument);
    CHECK_THROWS_AS(cnot_layer_mpo({{0, 2}, {1, 3}}, 4), std::invalid_argument);
}

TEST_CASE("two-local gate splitting") {
    Eigen::MatrixXd cnot_ptm = ptm_of_unitary(cnot_unitary(), 2);
    SuperopMPO m = two_local_gate_mpo(cnot_ptm, 0, 1, 2);
    CHECK(m.max_bond() == 4);
    CHECK((mpo_to_dense(m) - cnot_ptm).cwiseAbs().maxCoeff() < 1e-12);

    // SWAP has a maximally entangling superoperator split
    Eigen::MatrixXcd swap = Eigen::MatrixXcd::Zero(4, 4);
    swap(0, 0) = swap(1, 2) = swap(2, 1) = swap(3, 3) = 1;
    SuperopMPO ms = two_local_gate_mpo(ptm_of_unitary(swap, 2), 0, 1, 2);
    CHECK(ms.max_bond() == 16);

    // product gates split into bond 1
    RngStream rng(7);
    Eigen::Matrix2cd u = Eigen::Matrix2cd(random_unitary(2, rng));
    Eigen::Matrix2cd v = Eigen::Matrix2cd(random_unitary(2, rng));
    SuperopMPO mp = two_local_gate_mpo(ptm_of_unitary(kron(u, v), 2), 0, 1, 2);
    CHECK(mp.max_bond() == 1);

    // swapped qubit order reproduces the same operator as conjugating by SWAP
    SuperopMPO mswapped = two_local_gate_mpo(cnot_ptm, 1, 0, 2);
    Eigen::MatrixXd want = ptm_of_unitary(swap * cnot_unitary() * swap, 2);
    CHECK((mpo_to_dense(mswapped) - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("inverse layers cancel") {
    RngStream rng(11);
    std::vector<Eigen::Matrix2cd> us;
    for (int m = 0; m < 4; ++m) us.push_back(Eigen::Matrix2cd(random_unitary(2, rng)));
    CircuitLayer layer = CircuitLayer::single_qubit(us);
    SuperopMPO fwd = layer_mpo(layer, 4);
    SuperopMPO inv = inverse_layer_mpo(layer, 4);
    CHECK((mpo_to_dense(mpo_multiply(fwd, inv)) - Eigen::MatrixXd::Identity(256, 256))
              .cwiseAbs()
              .maxCoeff() < 1e-10);

    // for unitary PTMs the inverse is the transpose, sitewise
    for (int m = 0; m < 4; ++m) {
        Eigen::MatrixXd a(4, 4), b(4, 4);
        for (int o = 0; o < 4; ++o)
            for (int i = 0; i < 4; ++i) {
                a(o, i) = fwd.site(m).at(0, o, i, 0);
                b(o, i) = inv.site(m).at(0, o, i, 0);
            }
        CHECK((b - a.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }

    CircuitLayer cl = CircuitLayer::cnot({{0, 1}, {2, 3}});
    CHECK((mpo_to_dense(mpo_multiply(layer_mpo(cl, 4), inverse_layer_mpo(cl, 4))) -
           Eigen::MatrixXd::Identity(256, 256))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
}

TEST_CASE("trotter step structure") {
    Circuit c = trotter_step_circuit(10, 1.0, 0.5236, 0.5);
    c.validate();
    CHECK(c.depth() == 7);
    std::set<std::string> ids;
    for (const auto& a : c.noise) ids.insert(a.model_id);
    CHECK(ids == std::set<std::string>{"layer1", "layer2"});
    CHECK(c.noise.size() == 4);
    // noise attaches only to CNOT layers
    for (const auto& a : c.noise)
        CHECK(c.layers[static_cast<size_t>(a.after_layer)].kind == LayerKind::Cnot);

    // J = 0: the ZZ blocks cancel and the step reduces to the R_X layer (dense, N=4)
    Circuit c0 = trotter_step_circuit(4, 1.0, 0.0, 0.5);
    SuperopMPO total = SuperopMPO::identity(4);
    for (const auto& l : c0.layers) total = mpo_multiply(layer_mpo(l, 4), total);
    SuperopMPO rxl = layer_mpo(c0.layers[0], 4);
    CHECK(frobenius_distance(total, rxl) < 1e-9 * frobenius_norm(rxl));

    // a noiseless step is unitary: orthogonal dense PTM
    Circuit c4 = trotter_step_circuit(4, 1.0, 0.5236, 0.5);
    SuperopMPO step = SuperopMPO::identity(4);
    for (const auto& l : c4.layers) step = mpo_multiply(layer_mpo(l, 4), step);
    Eigen::MatrixXd d = mpo_to_dense(step);
    CHECK((d.transpose() * d - Eigen::MatrixXd::Identity(256, 256)).cwiseAbs().maxCoeff() < 1e-9);

    // parameter symmetry: (h, dt) -> (-h, -dt) leaves the single-qubit layer unchanged
    Circuit cp = trotter_step_circuit(4, 1.0, 0.3, 0.5);
    Circuit cm = trotter_step_circuit(4, -1.0, 0.3, -0.5);
    CHECK(frobenius_distance(layer_mpo(cp.layers[0], 4), layer_mpo(cm.layers[0], 4)) < 1e-12);

    Circuit multi = trotter_circuit(6, 3, 1.0, 0.5236, 0.5);
    CHECK(multi.depth() == 21);
    CHECK(multi.noise.size() == 12);
}

TEST_CASE("brickwork clifford circuit") {
    Circuit a = brickwork_clifford_circuit(4, 2, 42);
    Circuit b = brickwork_clifford_circuit(4, 2, 42);
    Circuit c = brickwork_clifford_circuit(4, 2, 43);
    a.validate();
    CHECK(a.depth() == 4);
    int cnot_layers = 0, clifford_layers = 0;
    for (const auto& l : a.layers) {
        cnot_layers += l.kind == LayerKind::Cnot;
        clifford_layers += l.kind == LayerKind::Clifford;
    }
    CHECK(cnot_layers == 2);
    CHECK(clifford_layers == 2);
    for (int m = 0; m < a.depth(); ++m) {
        if (a.layers[static_cast<size_t>(m)].kind != LayerKind::Clifford) continue;
        CHECK(a.layers[static_cast<size_t>(m)].clifford_ids ==
              b.layers[static_cast<size_t>(m)].clifford_ids);
    }
    bool differs = false;
    for (int m = 0; m < a.depth(); ++m)
        if (a.layers[static_cast<size_t>(m)].kind == LayerKind::Clifford &&
            a.layers[static_cast<size_t>(m)].clifford_ids != c.layers[static_cast<size_t>(m)].clifford_ids)
            differs = true;
    CHECK(differs);
    // alternating offsets
    CHECK(a.layers[1].pairs == std::vector<std::pair<int, int>>{{0, 1}, {2, 3}});
    CHECK(a.layers[3].pairs == std::vector<std::pair<int, int>>{{1, 2}});
}

TEST_CASE("single-qubit clifford tables") {
    const auto& us = clifford_unitaries();
    const auto& acts = clifford_actions();
    std::set<int> codes;
    for (int c = 0; c < 24; ++c) {
        // action consistent with the unitary
        Eigen::MatrixXd p = ptm_of_unitary(us[static_cast<size_t>(c)], 1);
        for (int axis = 1; axis <= 3; ++axis) {
            Eigen::Vector4d col = p.col(axis);
            CHECK(std::abs(col[acts[static_cast<size_t>(c)].img[static_cast<size_t>(axis)]]) ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
        codes.insert(acts[static_cast<size_t>(c)].img[1] * 100 + (acts[static_cast<size_t>(c)].sign[1] + 1) * 10 +
                     acts[static_cast<size_t>(c)].img[3] * 2 + (acts[static_cast<size_t>(c)].sign[3] + 1) / 2);
    }
    CHECK(codes.size() == 24);
    for (int c = 0; c < 24; ++c) {
        const int inv = clifford_inverse_ids()[static_cast<size_t>(c)];
        Eigen::Matrix2cd prod = us[static_cast<size_t>(c)] * us[static_cast<size_t>(inv)];
        // proportional to the identity
        CHECK(std::abs(prod(0, 1)) < 1e-12);
        CHECK(std::abs(prod(1, 0)) < 1e-12);
        CHECK(std::abs(std::abs(prod(0, 0)) - 1.0) < 1e-12);
        CHECK(std::abs(prod(0, 0) - prod(1, 1)) < 1e-12);
    }
    // basis rotations map their axis to z
    for (int axis = 0; axis < 3; ++axis) {
        Eigen::MatrixXd p = ptm_of_unitary(basis_rotation_unitary(axis), 1);
        CHECK(p(3, 1 + axis) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(basis_rotation_clifford_id(axis) >= 0);
    }
}
