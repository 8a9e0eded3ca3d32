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

#include "tem/layers.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/SVD>

#include "tem/ptm.hpp"
#include "tem/rng.hpp"

namespace tem {

namespace {

// PTM site matrices F_k (control) and G_k (target) whose contraction
// sum_k F_k (x) G_k is the CNOT superoperator.
const std::array<Eigen::Matrix4d, 4>& cnot_f() {
    static const std::array<Eigen::Matrix4d, 4> f = [] {
        std::array<Eigen::Matrix4d, 4> m;
        for (auto& x : m) x.setZero();
        m[0](0, 0) = 1; m[0](3, 3) = 1;
        m[1](0, 3) = 1; m[1](3, 0) = 1;
        m[2](1, 1) = 1; m[2](2, 2) = 1;
        m[3](1, 2) = 1; m[3](2, 1) = -1;
        return m;
    }();
    return f;
}

const std::array<Eigen::Matrix4d, 4>& cnot_g() {
    static const std::array<Eigen::Matrix4d, 4> g = [] {
        std::array<Eigen::Matrix4d, 4> m;
        for (auto& x : m) x.setZero();
        m[0](0, 0) = 1; m[0](1, 1) = 1;
        m[1](2, 2) = 1; m[1](3, 3) = 1;
        m[2](0, 1) = 1; m[2](1, 0) = 1;
        m[3](2, 3) = 1; m[3](3, 2) = -1;
        return m;
    }();
    return g;
}

Eigen::Matrix4d ptm4(const Eigen::Matrix2cd& u) {
    Eigen::MatrixXd p = ptm_of_unitary(u, 1);
    return Eigen::Matrix4d(p);
}

Eigen::Matrix2cd rx_gate(double theta) {
    Eigen::Matrix2cd u;
    const std::complex<double> i(0, 1);
    u << std::cos(theta / 2), -i * std::sin(theta / 2), -i * std::sin(theta / 2),
        std::cos(theta / 2);
    return u;
}

Eigen::Matrix2cd rz_gate(double theta) {
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Zero();
    const std::complex<double> i(0, 1);
    u(0, 0) = std::exp(-i * (theta / 2));
    u(1, 1) = std::exp(i * (theta / 2));
    return u;
}

void check_pairs(const std::vector<std::pair<int, int>>& pairs, int n, const char* where) {
    std::vector<char> covered(static_cast<size_t>(n), 0);
    for (auto [c, t] : pairs) {
        if (c < 0 || t < 0 || c >= n || t >= n || c == t)
            throw std::invalid_argument(std::string(where) + ": bad qubit pair");
        const int lo = std::min(c, t), hi = std::max(c, t);
        for (int q = lo; q <= hi; ++q) {
            if (covered[static_cast<size_t>(q)])
                throw std::invalid_argument(std::string(where) + ": overlapping pairs");
            covered[static_cast<size_t>(q)] = 1;
        }
    }
}

}  // namespace

CircuitLayer CircuitLayer::single_qubit(std::vector<Eigen::Matrix2cd> us) {
    CircuitLayer l;
    l.kind = LayerKind::SingleQubit;
    l.unitaries = std::move(us);
    return l;
}

CircuitLayer CircuitLayer::clifford(std::vector<int> ids) {
    CircuitLayer l;
    l.kind = LayerKind::Clifford;
    l.clifford_ids = std::move(ids);
    return l;
}

CircuitLayer CircuitLayer::cnot(std::vector<std::pair<int, int>> pairs) {
    CircuitLayer l;
    l.kind = LayerKind::Cnot;
    l.pairs = std::move(pairs);
    return l;
}

CircuitLayer CircuitLayer::two_local(Eigen::MatrixXd ptm16, int q1, int q2) {
    CircuitLayer l;
    l.kind = LayerKind::TwoLocal;
    l.two_local_ptm = std::move(ptm16);
    l.q1 = q1;
    l.q2 = q2;
    return l;
}

void Circuit::validate() const {
    if (n < 1) throw std::invalid_argument("Circuit: register size must be >= 1");
    for (const auto& l : layers) {
        switch (l.kind) {
            case LayerKind::SingleQubit:
                if (static_cast<int>(l.unitaries.size()) != n)
                    throw std::invalid_argument("Circuit: single-qubit layer size mismatch");
                break;
            case LayerKind::Clifford:
                if (static_cast<int>(l.clifford_ids.size()) != n)
                    throw std::invalid_argument("Circuit: clifford layer size mismatch");
                for (int id : l.clifford_ids)
                    if (id < 0 || id > 23) throw std::invalid_argument("Circuit: bad clifford id");
                break;
            case LayerKind::Cnot:
                check_pairs(l.pairs, n, "Circuit");
                break;
            case LayerKind::TwoLocal:
                if (l.q1 < 0 || l.q2 < 0 || l.q1 >= n || l.q2 >= n || l.q1 == l.q2)
                    throw std::invalid_argument("Circuit: bad two-local qubits");
                if (l.two_local_ptm.rows() != 16 || l.two_local_ptm.cols() != 16)
                    throw std::invalid_argument("Circuit: two-local PTM must be 16x16");
                break;
        }
    }
    for (const auto& a : noise)
        if (a.after_layer < 0 || a.after_layer >= depth())
            throw std::invalid_argument("Circuit: noise attachment out of range");
}

SuperopMPO single_qubit_layer_mpo(const std::vector<Eigen::Matrix2cd>& us) {
    std::vector<Eigen::Matrix4d> ptms;
    ptms.reserve(us.size());
    for (const auto& u : us) ptms.push_back(ptm4(u));
    return SuperopMPO::from_site_ptms(ptms);
}

SuperopMPO cnot_layer_mpo(const std::vector<std::pair<int, int>>& pairs, int n) {
    check_pairs(pairs, n, "cnot_layer_mpo");
    // role per site: 0 free, 1 span-left, 2 span-inner, 3 span-right
    std::vector<int> role(static_cast<size_t>(n), 0);
    std::vector<char> control_left(static_cast<size_t>(n), 0);
    for (auto [c, t] : pairs) {
        const int lo = std::min(c, t), hi = std::max(c, t);
        role[static_cast<size_t>(lo)] = 1;
        role[static_cast<size_t>(hi)] = 3;
        for (int q = lo + 1; q < hi; ++q) role[static_cast<size_t>(q)] = 2;
        control_left[static_cast<size_t>(lo)] = (c < t);
        control_left[static_cast<size_t>(hi)] = (c < t);
    }
    std::vector<SiteTensor> sites;
    sites.reserve(static_cast<size_t>(n));
    for (int q = 0; q < n; ++q) {
        switch (role[static_cast<size_t>(q)]) {
            case 0: {
                SiteTensor st(1, 4, 4, 1);
                for (int p = 0; p < 4; ++p) st.at(0, p, p, 0) = 1.0;
                sites.push_back(std::move(st));
                break;
            }
            case 1: {
                const auto& m = control_left[static_cast<size_t>(q)] ? cnot_f() : cnot_g();
                SiteTensor st(1, 4, 4, 4);
                for (int k = 0; k < 4; ++k)
                    for (int o = 0; o < 4; ++o)
                        for (int i = 0; i < 4; ++i) st.at(0, o, i, k) = m[static_cast<size_t>(k)](o, i);
                sites.push_back(std::move(st));
                break;
            }
            case 2: {
                SiteTensor st(4, 4, 4, 4);
                for (int k = 0; k < 4; ++k)
                    for (int p = 0; p < 4; ++p) st.at(k, p, p, k) = 1.0;
                sites.push_back(std::move(st));
                break;
            }
            default: {
                const auto& m = control_left[static_cast<size_t>(q)] ? cnot_g() : cnot_f();
                SiteTensor st(4, 4, 4, 1);
                for (int k = 0; k < 4; ++k)
                    for (int o = 0; o < 4; ++o)
                        for (int i = 0; i < 4; ++i) st.at(k, o, i, 0) = m[static_cast<size_t>(k)](o, i);
                sites.push_back(std::move(st));
                break;
            }
        }
    }
    return SuperopMPO(std::move(sites));
}

SuperopMPO two_local_gate_mpo(const Eigen::MatrixXd& ptm16, int q1, int q2, int n) {
    if (ptm16.rows() != 16 || ptm16.cols() != 16)
        throw std::invalid_argument("two_local_gate_mpo: PTM must be 16x16");
    if (q1 < 0 || q2 < 0 || q1 >= n || q2 >= n || q1 == q2)
        throw std::invalid_argument("two_local_gate_mpo: bad qubit indices");
    const int lo = std::min(q1, q2), hi = std::max(q1, q2);
    // If the gate sits with its first qubit below, the PTM index convention
    // is already (site-lo, site-hi); otherwise swap the two site factors.
    const bool swapped = q1 > q2;
    // reshape to rows (o1, i1), cols (o2, i2) of the low/high chain sites
    RowMat r(16, 16);
    for (int o1 = 0; o1 < 4; ++o1)
        for (int o2 = 0; o2 < 4; ++o2)
            for (int i1 = 0; i1 < 4; ++i1)
                for (int i2 = 0; i2 < 4; ++i2) {
                    const int row = swapped ? o2 * 4 + i2 : o1 * 4 + i1;
                    const int col = swapped ? o1 * 4 + i1 : o2 * 4 + i2;
                    r(row, col) = ptm16(o1 * 4 + o2, i1 * 4 + i2);
                }
    Eigen::BDCSVD<RowMat> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    int k = 0;
    for (long i = 0; i < s.size(); ++i)
        if (s[i] > 1e-12 * s[0]) k = static_cast<int>(i) + 1;
    k = std::max(k, 1);

    std::vector<SiteTensor> sites;
    for (int q = 0; q < n; ++q) {
        if (q == lo) {
            SiteTensor st(1, 4, 4, k);
            for (int o = 0; o < 4; ++o)
                for (int i = 0; i < 4; ++i)
                    for (int b = 0; b < k; ++b)
                        st.at(0, o, i, b) = svd.matrixU()(o * 4 + i, b) * std::sqrt(s[b]);
            sites.push_back(std::move(st));
        } else if (q == hi) {
            SiteTensor st(k, 4, 4, 1);
            for (int o = 0; o < 4; ++o)
                for (int i = 0; i < 4; ++i)
                    for (int b = 0; b < k; ++b)
                        st.at(b, o, i, 0) = svd.matrixV()(o * 4 + i, b) * std::sqrt(s[b]);
            sites.push_back(std::move(st));
        } else if (q > lo && q < hi) {
            SiteTensor st(k, 4, 4, k);
            for (int b = 0; b < k; ++b)
                for (int p = 0; p < 4; ++p) st.at(b, p, p, b) = 1.0;
            sites.push_back(std::move(st));
        } else {
            SiteTensor st(1, 4, 4, 1);
            for (int p = 0; p < 4; ++p) st.at(0, p, p, 0) = 1.0;
            sites.push_back(std::move(st));
        }
    }
    return SuperopMPO(std::move(sites));
}

SuperopMPO layer_mpo(const CircuitLayer& layer, int n) {
    switch (layer.kind) {
        case LayerKind::SingleQubit:
            return single_qubit_layer_mpo(layer.unitaries);
        case LayerKind::Clifford: {
            std::vector<Eigen::Matrix2cd> us;
            us.reserve(layer.clifford_ids.size());
            for (int id : layer.clifford_ids) us.push_back(clifford_unitaries()[static_cast<size_t>(id)]);
            return single_qubit_layer_mpo(us);
        }
        case LayerKind::Cnot:
            return cnot_layer_mpo(layer.pairs, n);
        case LayerKind::TwoLocal:
            return two_local_gate_mpo(layer.two_local_ptm, layer.q1, layer.q2, n);
    }
    throw std::logic_error("layer_mpo: unreachable");
}

SuperopMPO inverse_layer_mpo(const CircuitLayer& layer, int n) {
    switch (layer.kind) {
        case LayerKind::SingleQubit: {
            std::vector<Eigen::Matrix2cd> inv;
            inv.reserve(layer.unitaries.size());
            for (const auto& u : layer.unitaries) inv.push_back(u.adjoint());
            return single_qubit_layer_mpo(inv);
        }
        case LayerKind::Clifford: {
            std::vector<Eigen::Matrix2cd> inv;
            inv.reserve(layer.clifford_ids.size());
            for (int id : layer.clifford_ids)
                inv.push_back(clifford_unitaries()[static_cast<size_t>(clifford_inverse_ids()[static_cast<size_t>(id)])]);
            return single_qubit_layer_mpo(inv);
        }
        case LayerKind::Cnot:
            return cnot_layer_mpo(layer.pairs, n);  // self-inverse
        case LayerKind::TwoLocal: {
            const Eigen::MatrixXd& p = layer.two_local_ptm;
            if ((p.transpose() * p - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff() > 1e-10)
                throw std::invalid_argument("inverse_layer_mpo: two-local layer is not unitary");
            return two_local_gate_mpo(p.transpose(), layer.q1, layer.q2, n);
        }
    }
    throw std::logic_error("inverse_layer_mpo: unreachable");
}

Circuit trotter_step_circuit(int n, double h, double j, double dt) {
    if (n < 2) throw std::invalid_argument("trotter_step_circuit: need n >= 2");
    Circuit c;
    c.n = n;
    std::vector<std::pair<int, int>> even, odd;
    for (int q = 0; q + 1 < n; q += 2) even.emplace_back(q, q + 1);
    for (int q = 1; q + 1 < n; q += 2) odd.emplace_back(q, q + 1);

    auto rx_layer = [&] {
        return CircuitLayer::single_qubit(
            std::vector<Eigen::Matrix2cd>(static_cast<size_t>(n), rx_gate(2.0 * h * dt)));
    };
    // R_Z(-2 J dt) on the target qubit of every pair in the block.
    // If validation against exact dynamics ever fails, the alternate reading
    // of the rotation acting on the control qubits is the first suspect.
    auto rz_layer = [&](const std::vector<std::pair<int, int>>& pairs) {
        std::vector<Eigen::Matrix2cd> us(static_cast<size_t>(n), Eigen::Matrix2cd::Identity());
        for (auto [ctl, tgt] : pairs) us[static_cast<size_t>(tgt)] = rz_gate(-2.0 * j * dt);
        return CircuitLayer::single_qubit(std::move(us));
    };

    c.layers.push_back(rx_layer());
    c.layers.push_back(CircuitLayer::cnot(even));
    c.noise.push_back({1, "layer1"});
    c.layers.push_back(rz_layer(even));
    c.layers.push_back(CircuitLayer::cnot(even));
    c.noise.push_back({3, "layer1"});
    c.layers.push_back(CircuitLayer::cnot(odd));
    c.noise.push_back({4, "layer2"});
    c.layers.push_back(rz_layer(odd));
    c.layers.push_back(CircuitLayer::cnot(odd));
    c.noise.push_back({6, "layer2"});
    return c;
}

Circuit trotter_circuit(int n, int steps, double h, double j, double dt) {
    Circuit step = trotter_step_circuit(n, h, j, dt);
    Circuit c;
    c.n = n;
    for (int s = 0; s < steps; ++s) {
        const int base = c.depth();
        for (const auto& l : step.layers) c.layers.push_back(l);
        for (const auto& a : step.noise) c.noise.push_back({base + a.after_layer, a.model_id});
    }
    return c;
}

Circuit brickwork_clifford_circuit(int n, int l, std::uint64_t seed) {
    if (n < 2 || l < 1) throw std::invalid_argument("brickwork_clifford_circuit: need n >= 2, l >= 1");
    Circuit c;
    c.n = n;
    for (int layer = 0; layer < l; ++layer) {
        RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(layer));
        std::vector<int> ids(static_cast<size_t>(n));
        for (auto& id : ids) id = static_cast<int>(rng.integer(24));
        c.layers.push_back(CircuitLayer::clifford(std::move(ids)));
        const int offset = layer % 2;
        std::vector<std::pair<int, int>> pairs;
        for (int q = offset; q + 1 < n; q += 2) pairs.emplace_back(q, q + 1);
        c.layers.push_back(CircuitLayer::cnot(std::move(pairs)));
        c.noise.push_back({c.depth() - 1, offset == 0 ? "even" : "odd"});
    }
    return c;
}

namespace {

struct CliffordTables {
    std::array<Eigen::Matrix2cd, 24> unitaries;
    std::array<CliffordAction, 24> actions;
    std::array<int, 24> inverses;
};

CliffordAction action_of_unitary(const Eigen::Matrix2cd& u) {
    CliffordAction act;
    act.img[0] = 0;
    act.sign[0] = 1;
    Eigen::MatrixXd p = ptm_of_unitary(u, 1);
    for (int col = 1; col < 4; ++col) {
        int img = 0;
        int sgn = 0;
        for (int row = 1; row < 4; ++row) {
            if (std::abs(p(row, col)) > 0.5) {
                img = row;
                sgn = p(row, col) > 0 ? 1 : -1;
            }
        }
        if (sgn == 0) throw std::logic_error("action_of_unitary: not a Clifford");
        act.img[static_cast<size_t>(col)] = static_cast<std::uint8_t>(img);
        act.sign[static_cast<size_t>(col)] = sgn;
    }
    return act;
}

int action_code(const CliffordAction& a) {
    // encode by the images of X and Z; 24 valid combinations
    const int xcode = (a.img[1] - 1) * 2 + (a.sign[1] < 0 ? 1 : 0);
    const int zcode = (a.img[3] - 1) * 2 + (a.sign[3] < 0 ? 1 : 0);
    return xcode * 6 + zcode;
}

const CliffordTables& clifford_tables() {
    static const CliffordTables tables = [] {
        const std::complex<double> i(0, 1);
        Eigen::Matrix2cd h, s;
        h << 1, 1, 1, -1;
        h /= std::sqrt(2.0);
        s << 1, 0, 0, i;
        // breadth-first closure of <H, S> modulo global phase
        std::map<int, Eigen::Matrix2cd> found;
        std::vector<Eigen::Matrix2cd> frontier = {Eigen::Matrix2cd::Identity()};
        found[action_code(action_of_unitary(frontier[0]))] = frontier[0];
        while (!frontier.empty() && found.size() < 24) {
            std::vector<Eigen::Matrix2cd> next;
            for (const auto& u : frontier) {
                for (const auto& g : {h, s}) {
                    Eigen::Matrix2cd v = g * u;
                    const int code = action_code(action_of_unitary(v));
                    if (!found.count(code)) {
                        found[code] = v;
                        next.push_back(v);
                    }
                }
            }
            frontier.swap(next);
        }
        if (found.size() != 24) throw std::logic_error("clifford_tables: closure failed");
        CliffordTables t;
        int idx = 0;
        for (auto& [code, u] : found) {
            t.unitaries[static_cast<size_t>(idx)] = u;
            t.actions[static_cast<size_t>(idx)] = action_of_unitary(u);
            ++idx;
        }
        for (int a = 0; a < 24; ++a) {
            const Eigen::Matrix2cd inv = t.unitaries[static_cast<size_t>(a)].adjoint();
            const int code = action_code(action_of_unitary(inv));
            int pos = 0;
            for (int b = 0; b < 24; ++b)
                if (action_code(t.actions[static_cast<size_t>(b)]) == code) pos = b;
            t.inverses[static_cast<size_t>(a)] = pos;
        }
        return t;
    }();
    return tables;
}

}  // namespace

const std::array<Eigen::Matrix2cd, 24>& clifford_unitaries() { return clifford_tables().unitaries; }
const std::array<CliffordAction, 24>& clifford_actions() { return clifford_tables().actions; }
const std::array<int, 24>& clifford_inverse_ids() { return clifford_tables().inverses; }

const Eigen::Matrix2cd& basis_rotation_unitary(int axis) {
    static const std::array<Eigen::Matrix2cd, 3> rots = [] {
        const std::complex<double> i(0, 1);
        std::array<Eigen::Matrix2cd, 3> r;
        Eigen::Matrix2cd h, sdg;
        h << 1, 1, 1, -1;
        h /= std::sqrt(2.0);
        sdg << 1, 0, 0, -i;
        r[0] = h;        // H X H = Z
        r[1] = h * sdg;  // (H S^dag) Y (H S^dag)^dag = Z
        r[2] = Eigen::Matrix2cd::Identity();
        return r;
    }();
    if (axis < 0 || axis > 2) throw std::invalid_argument("basis_rotation_unitary: bad axis");
    return rots[static_cast<size_t>(axis)];
}

int basis_rotation_clifford_id(int axis) {
    static const std::array<int, 3> ids = [] {
        std::array<int, 3> out{};
        for (int a = 0; a < 3; ++a) {
            const int code = action_code(action_of_unitary(basis_rotation_unitary(a)));
            out[static_cast<size_t>(a)] = -1;
            for (int c = 0; c < 24; ++c)
                if (action_code(clifford_actions()[static_cast<size_t>(c)]) == code)
                    out[static_cast<size_t>(a)] = c;
        }
        return out;
    }();
    if (axis < 0 || axis > 2) throw std::invalid_argument("basis_rotation_clifford_id: bad axis");
    return ids[static_cast<size_t>(axis)];
}

}  // namespace tem
