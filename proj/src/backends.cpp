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

#include "tem/backends.hpp"

#include <algorithm>
#include <cmath>

#include "tem/ptm.hpp"

namespace tem {

namespace {

long pow4(int k) { return 1l << (2 * k); }

inline bool anti1(int a, int b) { return a != 0 && b != 0 && a != b; }

const Eigen::Matrix4d& clifford_ptm(int id) {
    static const std::array<Eigen::Matrix4d, 24> table = [] {
        std::array<Eigen::Matrix4d, 24> t;
        for (int c = 0; c < 24; ++c)
            t[static_cast<size_t>(c)] = Eigen::Matrix4d(ptm_of_unitary(clifford_unitaries()[static_cast<size_t>(c)], 1));
        return t;
    }();
    return table[static_cast<size_t>(id)];
}

const Eigen::MatrixXd& cnot_ptm16() {
    static const Eigen::MatrixXd p = [] {
        Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(4, 4);
        u(0, 0) = u(1, 1) = u(2, 3) = u(3, 2) = 1;
        return ptm_of_unitary(u, 2);
    }();
    return p;
}

// Apply a 4x4 PTM to one site of the PTM vector.
void apply_site(Eigen::VectorXd& v, int n, int site, const Eigen::Matrix4d& p) {
    const long lead = pow4(site);
    const long trail = pow4(n - 1 - site);
    for (long l = 0; l < lead; ++l) {
        double* base = v.data() + l * 4 * trail;
        for (long t = 0; t < trail; ++t) {
            double in[4];
            for (int a = 0; a < 4; ++a) in[a] = base[a * trail + t];
            for (int o = 0; o < 4; ++o) {
                double acc = 0;
                for (int a = 0; a < 4; ++a) acc += p(o, a) * in[a];
                base[o * trail + t] = acc;
            }
        }
    }
}

// Apply a diagonal 4-vector to one site.
void apply_site_diag(Eigen::VectorXd& v, int n, int site, const Eigen::Vector4d& d) {
    const long lead = pow4(site);
    const long trail = pow4(n - 1 - site);
    for (long l = 0; l < lead; ++l) {
        double* base = v.data() + l * 4 * trail;
        for (int a = 0; a < 4; ++a) {
            if (d[a] == 1.0) continue;
            for (long t = 0; t < trail; ++t) base[a * trail + t] *= d[a];
        }
    }
}

// Apply a 16x16 PTM indexed (q1, q2) to two distinct sites.
void apply_two_site(Eigen::VectorXd& v, int n, int q1, int q2, const Eigen::MatrixXd& p) {
    const int lo = std::min(q1, q2), hi = std::max(q1, q2);
    const bool direct = q1 == lo;
    const long lead = pow4(lo);
    const long mid = pow4(hi - lo - 1);
    const long trail = pow4(n - 1 - hi);
    const long s_lo = mid * 4 * trail;
    const long s_hi = trail;
    for (long l = 0; l < lead; ++l)
        for (long m = 0; m < mid; ++m)
            for (long t = 0; t < trail; ++t) {
                double* base = v.data() + (l * 4 * mid + m) * 4 * trail + t;
                double in[16], out[16];
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) {
                        const int idx = direct ? a * 4 + b : b * 4 + a;
                        in[idx] = base[a * s_lo + b * s_hi];
                    }
                for (int o = 0; o < 16; ++o) {
                    double acc = 0;
                    for (int i = 0; i < 16; ++i) acc += p(o, i) * in[i];
                    out[o] = acc;
                }
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) {
                        const int idx = direct ? a * 4 + b : b * 4 + a;
                        base[a * s_lo + b * s_hi] = out[idx];
                    }
            }
}

void apply_two_site_diag(Eigen::VectorXd& v, int n, int lo, const Eigen::VectorXd& d16) {
    const long lead = pow4(lo);
    const long mid = 1;  // adjacent pair
    const long trail = pow4(n - 2 - lo);
    (void)mid;
    for (long l = 0; l < lead; ++l) {
        double* base = v.data() + l * 16 * trail;
        for (int ab = 0; ab < 16; ++ab) {
            const double f = d16[ab];
            if (f == 1.0) continue;
            for (long t = 0; t < trail; ++t) base[ab * trail + t] *= f;
        }
    }
}

void check_dense_cap(int n, const char* where) {
    if (n < 1 || n > kDenseStateMaxQubits)
        throw std::invalid_argument(std::string(where) + ": dense backend capped at " +
                                    std::to_string(kDenseStateMaxQubits) + " qubits");
}

}  // namespace

DenseState dense_initial_state(int n) {
    check_dense_cap(n, "dense_initial_state");
    DenseState s;
    s.n = n;
    s.ptm = Eigen::VectorXd::Zero(pow4(n));
    // product of per-site (1, 0, 0, 1)/sqrt(2): support on I/Z digit patterns
    const double w = std::pow(2.0, -0.5 * n);
    for (long mask = 0; mask < (1l << n); ++mask) {
        long idx = 0;
        for (int m = 0; m < n; ++m) idx = idx * 4 + (((mask >> (n - 1 - m)) & 1) ? 3 : 0);
        s.ptm[idx] = w;
    }
    return s;
}

void dense_apply_layer(DenseState& state, const CircuitLayer& layer) {
    switch (layer.kind) {
        case LayerKind::SingleQubit:
            for (int q = 0; q < state.n; ++q) {
                Eigen::Matrix4d p = Eigen::Matrix4d(ptm_of_unitary(layer.unitaries[static_cast<size_t>(q)], 1));
                if ((p - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-15) continue;
                apply_site(state.ptm, state.n, q, p);
            }
            return;
        case LayerKind::Clifford:
            for (int q = 0; q < state.n; ++q)
                apply_site(state.ptm, state.n, q, clifford_ptm(layer.clifford_ids[static_cast<size_t>(q)]));
            return;
        case LayerKind::Cnot:
            for (auto [c, t] : layer.pairs) apply_two_site(state.ptm, state.n, c, t, cnot_ptm16());
            return;
        case LayerKind::TwoLocal:
            apply_two_site(state.ptm, state.n, layer.q1, layer.q2, layer.two_local_ptm);
            return;
    }
}

void dense_apply_noise(DenseState& state, const NoiseModel& model) {
    if (const auto* spl = std::get_if<SparsePauliLindblad>(&model)) {
        if (spl->n != state.n) throw std::invalid_argument("dense_apply_noise: register size mismatch");
        SplKappas k = spl_kappa(*spl);
        for (int q = 0; q < state.n; ++q)
            apply_site_diag(state.ptm, state.n, q, Eigen::Vector4d(k.single[static_cast<size_t>(q)].fidelities));
        for (int q = 0; q + 1 < state.n; ++q)
            apply_two_site_diag(state.ptm, state.n, q, k.pair[static_cast<size_t>(q)].fidelities);
        return;
    }
    if (const auto* dep = std::get_if<TwoQubitDepolarizing>(&model)) {
        Eigen::VectorXd f = Eigen::VectorXd::Constant(16, 1.0 - dep->eps);
        f[0] = 1.0;
        apply_two_site_diag(state.ptm, state.n, dep->q, f);
        return;
    }
    const auto& g = std::get<GlobalDepolarizing>(model);
    const double keep = state.ptm[0];
    state.ptm *= (1.0 - g.eps);
    state.ptm[0] = keep;
}

void dense_apply_pauli_gate(DenseState& state, const PauliString& p) {
    if (p.size() != state.n) throw std::invalid_argument("dense_apply_pauli_gate: size mismatch");
    for (int q = 0; q < state.n; ++q) {
        const int a = p.axes[static_cast<size_t>(q)];
        if (a == 0) continue;
        Eigen::Vector4d d;
        for (int b = 0; b < 4; ++b) d[b] = anti1(a, b) ? -1.0 : 1.0;
        apply_site_diag(state.ptm, state.n, q, d);
    }
}

DenseState dense_evolve(const Circuit& circuit, const NoiseModelMap& noise) {
    check_dense_cap(circuit.n, "dense_evolve");
    circuit.validate();
    DenseState state = dense_initial_state(circuit.n);
    std::vector<std::vector<const NoiseModel*>> attach(static_cast<size_t>(circuit.depth()));
    for (const auto& a : circuit.noise) {
        auto it = noise.find(a.model_id);
        if (it == noise.end())
            throw std::invalid_argument("dense_evolve: unattached noise id '" + a.model_id + "'");
        attach[static_cast<size_t>(a.after_layer)].push_back(&it->second);
    }
    for (int l = 0; l < circuit.depth(); ++l) {
        dense_apply_layer(state, circuit.layers[static_cast<size_t>(l)]);
        for (const NoiseModel* m : attach[static_cast<size_t>(l)]) dense_apply_noise(state, *m);
    }
    return state;
}

namespace {

const Eigen::Matrix4d& basis_rotation_ptm(int axis) {
    static const std::array<Eigen::Matrix4d, 3> rots = [] {
        std::array<Eigen::Matrix4d, 3> r;
        for (int a = 0; a < 3; ++a)
            r[static_cast<size_t>(a)] = Eigen::Matrix4d(ptm_of_unitary(basis_rotation_unitary(a), 1));
        return r;
    }();
    return rots[static_cast<size_t>(axis)];
}

}  // namespace

OutcomeSet sample_ic_outcomes(const DenseState& state, const std::array<double, 3>& basis_probs,
                              int Q, int M, std::uint64_t seed) {
    if (Q < 1 || M < 1) throw std::invalid_argument("sample_ic_outcomes: need Q*M >= 1");
    const double psum = basis_probs[0] + basis_probs[1] + basis_probs[2];
    if (basis_probs[0] < 0 || basis_probs[1] < 0 || basis_probs[2] < 0 || std::abs(psum - 1.0) > 1e-12)
        throw std::invalid_argument("sample_ic_outcomes: invalid basis probabilities");
    const int n = state.n;
    OutcomeSet out;
    out.n = n;
    out.Q = Q;
    out.M = M;
    out.seed = seed;
    out.backend = "dense";
    out.basis_probs = basis_probs;
    out.allocate();

    for (int q = 0; q < Q; ++q) {
        RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(q));
        // per-circuit basis assignment
        std::vector<std::uint8_t> axes(static_cast<size_t>(n));
        for (int m = 0; m < n; ++m) {
            const double u = rng.uniform();
            axes[static_cast<size_t>(m)] =
                u < basis_probs[0] ? 0 : (u < basis_probs[0] + basis_probs[1] ? 1 : 2);
            out.axes[static_cast<size_t>(q) * n + m] = axes[static_cast<size_t>(m)];
        }
        // rotate the state so every measurement is along z
        Eigen::VectorXd rot = state.ptm;
        for (int m = 0; m < n; ++m)
            if (axes[static_cast<size_t>(m)] != 2) apply_site(rot, n, m, basis_rotation_ptm(axes[static_cast<size_t>(m)]));
        // cascade the PTM tensor into the 2^n diagonal of outcomes
        const double s = 1.0 / std::sqrt(2.0);
        Eigen::VectorXd cur = std::move(rot);
        long lead = 1, trail = pow4(n) / 4;
        for (int m = 0; m < n; ++m) {
            Eigen::VectorXd next(lead * 2 * trail);
            for (long l = 0; l < lead; ++l)
                for (long t = 0; t < trail; ++t) {
                    const double ci = cur[(l * 4 + 0) * trail + t];
                    const double cz = cur[(l * 4 + 3) * trail + t];
                    next[(l * 2 + 0) * trail + t] = s * (ci + cz);
                    next[(l * 2 + 1) * trail + t] = s * (ci - cz);
                }
            cur = std::move(next);
            lead *= 2;
            trail /= 4;
        }
        // prefix-marginal tree over the diagonal
        const long dim = 1l << n;
        double total = 0;
        for (long i = 0; i < dim; ++i) {
            if (cur[i] < 0) cur[i] = 0;
            total += cur[i];
        }
        if (std::abs(total - 1.0) > 1e-8)
            throw std::runtime_error("sample_ic_outcomes: state unnormalized beyond 1e-8");
        std::vector<Eigen::VectorXd> levels(static_cast<size_t>(n) + 1);
        levels[static_cast<size_t>(n)] = cur;
        for (int m = n - 1; m >= 0; --m) {
            const Eigen::VectorXd& lo = levels[static_cast<size_t>(m) + 1];
            Eigen::VectorXd up(1l << m);
            for (long i = 0; i < up.size(); ++i) up[i] = lo[2 * i] + lo[2 * i + 1];
            levels[static_cast<size_t>(m)] = std::move(up);
        }
        for (int shot = 0; shot < M; ++shot) {
            double u = rng.uniform() * levels[0][0];
            long node = 0;
            for (int m = 0; m < n; ++m) {
                const double left = levels[static_cast<size_t>(m) + 1][2 * node];
                if (u < left) {
                    node = 2 * node;
                } else {
                    u -= left;
                    node = 2 * node + 1;
                    out.set_sign(q, shot, m, true);
                }
            }
        }
    }
    return out;
}

// --- stabilizer tableau -------------------------------------------------------

StabilizerTableau StabilizerTableau::zero_state(int n) {
    StabilizerTableau t;
    t.n = n;
    t.words = (n + 63) / 64;
    t.x.assign(static_cast<size_t>(n) * t.words, 0);
    t.z.assign(static_cast<size_t>(n) * t.words, 0);
    t.r.assign(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i) t.z[static_cast<size_t>(i) * t.words + i / 64] |= 1ull << (i % 64);
    return t;
}

void StabilizerTableau::apply_clifford(int site, int clifford_id) {
    const CliffordAction& act = clifford_actions()[static_cast<size_t>(clifford_id)];
    const int w = site / 64;
    const std::uint64_t bit = 1ull << (site % 64);
    for (int row = 0; row < n; ++row) {
        std::uint64_t& xw = x[static_cast<size_t>(row) * words + w];
        std::uint64_t& zw = z[static_cast<size_t>(row) * words + w];
        const int p = ((xw & bit) ? 1 : 0) | ((zw & bit) ? 2 : 0);
        const int code = p == 0 ? 0 : (p == 1 ? 1 : (p == 2 ? 3 : 2));  // (x,z) bits to axis
        const int img = act.img[static_cast<size_t>(code)];
        if (act.sign[static_cast<size_t>(code)] < 0) r[static_cast<size_t>(row)] ^= 1;
        const bool nx = img == 1 || img == 2;
        const bool nz = img == 2 || img == 3;
        xw = nx ? (xw | bit) : (xw & ~bit);
        zw = nz ? (zw | bit) : (zw & ~bit);
    }
}

void StabilizerTableau::apply_cnot(int control, int target) {
    const int wc = control / 64, wt = target / 64;
    const std::uint64_t bc = 1ull << (control % 64), bt = 1ull << (target % 64);
    for (int row = 0; row < n; ++row) {
        std::uint64_t& xc = x[static_cast<size_t>(row) * words + wc];
        std::uint64_t& zc = z[static_cast<size_t>(row) * words + wc];
        std::uint64_t& xt = x[static_cast<size_t>(row) * words + wt];
        std::uint64_t& zt = z[static_cast<size_t>(row) * words + wt];
        const bool bxc = xc & bc, bzc = zc & bc, bxt = xt & bt, bzt = zt & bt;
        if (bxc && bzt && (bxt == bzc)) r[static_cast<size_t>(row)] ^= 1;
        if (bxc) xt ^= bt;
        if (bzt) zc ^= bc;
    }
}

void StabilizerTableau::apply_layer(const CircuitLayer& layer) {
    if (layer.kind == LayerKind::Clifford) {
        for (int q = 0; q < n; ++q) apply_clifford(q, layer.clifford_ids[static_cast<size_t>(q)]);
    } else if (layer.kind == LayerKind::Cnot) {
        for (auto [c, t] : layer.pairs) apply_cnot(c, t);
    } else {
        throw std::invalid_argument("StabilizerTableau: non-Clifford layer");
    }
}

StabilizerTableau stab_apply_circuit(const Circuit& circuit) {
    circuit.validate();
    StabilizerTableau t = StabilizerTableau::zero_state(circuit.n);
    for (const auto& l : circuit.layers) t.apply_layer(l);
    return t;
}

PauliString conjugate_through_circuit(const Circuit& circuit, const PauliString& p) {
    if (p.size() != circuit.n) throw std::invalid_argument("conjugate_through_circuit: size mismatch");
    std::vector<std::uint8_t> xb(static_cast<size_t>(circuit.n)), zb(static_cast<size_t>(circuit.n));
    int sign = p.coeff < 0 ? 1 : 0;
    for (int q = 0; q < circuit.n; ++q) {
        const int a = p.axes[static_cast<size_t>(q)];
        xb[static_cast<size_t>(q)] = a == 1 || a == 2;
        zb[static_cast<size_t>(q)] = a == 2 || a == 3;
    }
    for (const auto& layer : circuit.layers) {
        if (layer.kind == LayerKind::Clifford) {
            for (int q = 0; q < circuit.n; ++q) {
                const CliffordAction& act = clifford_actions()[static_cast<size_t>(layer.clifford_ids[static_cast<size_t>(q)])];
                const int code = xb[static_cast<size_t>(q)] ? (zb[static_cast<size_t>(q)] ? 2 : 1)
                                                            : (zb[static_cast<size_t>(q)] ? 3 : 0);
                const int img = act.img[static_cast<size_t>(code)];
                if (act.sign[static_cast<size_t>(code)] < 0) sign ^= 1;
                xb[static_cast<size_t>(q)] = img == 1 || img == 2;
                zb[static_cast<size_t>(q)] = img == 2 || img == 3;
            }
        } else if (layer.kind == LayerKind::Cnot) {
            for (auto [c, t] : layer.pairs) {
                const bool bxc = xb[static_cast<size_t>(c)], bzc = zb[static_cast<size_t>(c)];
                const bool bxt = xb[static_cast<size_t>(t)], bzt = zb[static_cast<size_t>(t)];
                if (bxc && bzt && (bxt == bzc)) sign ^= 1;
                xb[static_cast<size_t>(t)] = bxt ^ bxc;
                zb[static_cast<size_t>(c)] = bzc ^ bzt;
            }
        } else {
            throw std::invalid_argument("conjugate_through_circuit: non-Clifford layer");
        }
    }
    PauliString out = PauliString::identity(circuit.n);
    for (int q = 0; q < circuit.n; ++q) {
        const bool bx = xb[static_cast<size_t>(q)], bz = zb[static_cast<size_t>(q)];
        out.axes[static_cast<size_t>(q)] = bx ? (bz ? 2 : 1) : (bz ? 3 : 0);
    }
    out.coeff = (sign ? -1.0 : 1.0) * std::abs(p.coeff);
    return out;
}

namespace {

// phase exponent (mod 4) of W(x1,z1) W(x2,z2) relative to W(x1^x2, z1^z2),
// with W(x,z) = i^{xz} X^x Z^z per site
inline int phase_contrib(bool x1, bool z1, bool x2, bool z2) {
    const int e = (x1 && z1) + (x2 && z2) + 2 * (z1 && x2) - (((x1 ^ x2) && (z1 ^ z2)) ? 1 : 0);
    return ((e % 4) + 4) % 4;
}

struct PauliAccum {
    std::vector<std::uint64_t> x, z;
    int phase = 0;  // exponent of i, mod 4; includes 2*sign bits

    explicit PauliAccum(int words) : x(static_cast<size_t>(words), 0), z(static_cast<size_t>(words), 0) {}

    void multiply_row(const StabilizerTableau& t, int row) {
        for (int q = 0; q < t.n; ++q) {
            const bool x1 = (x[static_cast<size_t>(q / 64)] >> (q % 64)) & 1;
            const bool z1 = (z[static_cast<size_t>(q / 64)] >> (q % 64)) & 1;
            const bool x2 = t.xbit(row, q), z2 = t.zbit(row, q);
            phase = (phase + phase_contrib(x1, z1, x2, z2)) % 4;
        }
        for (int w = 0; w < t.words; ++w) {
            x[static_cast<size_t>(w)] ^= t.x[static_cast<size_t>(row) * t.words + w];
            z[static_cast<size_t>(w)] ^= t.z[static_cast<size_t>(row) * t.words + w];
        }
        if (t.r[static_cast<size_t>(row)]) phase = (phase + 2) % 4;
    }
};

}  // namespace

double stab_expectation(const StabilizerTableau& t, const PauliString& p) {
    if (p.size() != t.n) throw std::invalid_argument("stab_expectation: size mismatch");
    const int words = t.words;
    std::vector<std::uint64_t> px(static_cast<size_t>(words), 0), pz(static_cast<size_t>(words), 0);
    for (int q = 0; q < t.n; ++q) {
        const int a = p.axes[static_cast<size_t>(q)];
        if (a == 1 || a == 2) px[static_cast<size_t>(q / 64)] |= 1ull << (q % 64);
        if (a == 2 || a == 3) pz[static_cast<size_t>(q / 64)] |= 1ull << (q % 64);
    }
    // commutation with every generator
    for (int row = 0; row < t.n; ++row) {
        int acc = 0;
        for (int w = 0; w < words; ++w)
            acc ^= __builtin_parityll((t.x[static_cast<size_t>(row) * words + w] & pz[static_cast<size_t>(w)]) ^
                                      (t.z[static_cast<size_t>(row) * words + w] & px[static_cast<size_t>(w)]));
        if (acc) return 0.0;
    }
    // Gaussian elimination to express P as a product of generators
    const int cols = 2 * t.n;
    std::vector<std::vector<std::uint64_t>> rows(static_cast<size_t>(t.n));
    std::vector<std::vector<std::uint64_t>> combo(static_cast<size_t>(t.n));
    const int cwords = (t.n + 63) / 64;
    for (int i = 0; i < t.n; ++i) {
        rows[static_cast<size_t>(i)].assign(static_cast<size_t>(2 * words), 0);
        for (int w = 0; w < words; ++w) {
            rows[static_cast<size_t>(i)][static_cast<size_t>(w)] = t.x[static_cast<size_t>(i) * words + w];
            rows[static_cast<size_t>(i)][static_cast<size_t>(words + w)] = t.z[static_cast<size_t>(i) * words + w];
        }
        combo[static_cast<size_t>(i)].assign(static_cast<size_t>(cwords), 0);
        combo[static_cast<size_t>(i)][static_cast<size_t>(i / 64)] |= 1ull << (i % 64);
    }
    std::vector<std::uint64_t> target(static_cast<size_t>(2 * words), 0);
    for (int w = 0; w < words; ++w) {
        target[static_cast<size_t>(w)] = px[static_cast<size_t>(w)];
        target[static_cast<size_t>(words + w)] = pz[static_cast<size_t>(w)];
    }
    std::vector<std::uint64_t> tcombo(static_cast<size_t>(cwords), 0);
    int rank = 0;
    for (int col = 0; col < cols && rank < t.n; ++col) {
        const int w = col < t.n ? col / 64 : words + (col - t.n) / 64;
        const std::uint64_t bit = 1ull << (col < t.n ? col % 64 : (col - t.n) % 64);
        int pivot = -1;
        for (int i = rank; i < t.n; ++i)
            if (rows[static_cast<size_t>(i)][static_cast<size_t>(w)] & bit) {
                pivot = i;
                break;
            }
        if (pivot < 0) continue;
        std::swap(rows[static_cast<size_t>(pivot)], rows[static_cast<size_t>(rank)]);
        std::swap(combo[static_cast<size_t>(pivot)], combo[static_cast<size_t>(rank)]);
        for (int i = 0; i < t.n; ++i) {
            if (i == rank) continue;
            if (rows[static_cast<size_t>(i)][static_cast<size_t>(w)] & bit) {
                for (int k = 0; k < 2 * words; ++k)
                    rows[static_cast<size_t>(i)][static_cast<size_t>(k)] ^= rows[static_cast<size_t>(rank)][static_cast<size_t>(k)];
                for (int k = 0; k < cwords; ++k)
                    combo[static_cast<size_t>(i)][static_cast<size_t>(k)] ^= combo[static_cast<size_t>(rank)][static_cast<size_t>(k)];
            }
        }
        if (target[static_cast<size_t>(w)] & bit) {
            for (int k = 0; k < 2 * words; ++k)
                target[static_cast<size_t>(k)] ^= rows[static_cast<size_t>(rank)][static_cast<size_t>(k)];
            for (int k = 0; k < cwords; ++k)
                tcombo[static_cast<size_t>(k)] ^= combo[static_cast<size_t>(rank)][static_cast<size_t>(k)];
        }
        ++rank;
    }
    for (const auto w : target)
        if (w) return 0.0;  // not in the span (cannot happen for commuting P, kept as a guard)
    // multiply out the selected generators and compare signs
    PauliAccum acc((t.n + 63) / 64);
    for (int i = 0; i < t.n; ++i)
        if ((tcombo[static_cast<size_t>(i / 64)] >> (i % 64)) & 1) acc.multiply_row(t, i);
    // acc.phase is 0 or 2 here; 0 means +P
    const double sgn = acc.phase == 0 ? 1.0 : -1.0;
    return sgn * p.coeff;
}

double exact_expectation(const Circuit& circuit, const PauliString& obs) {
    bool clifford = true;
    for (const auto& l : circuit.layers) clifford = clifford && l.is_clifford_compatible();
    if (clifford) {
        StabilizerTableau t = stab_apply_circuit(circuit);
        return stab_expectation(t, obs);
    }
    check_dense_cap(circuit.n, "exact_expectation");
    Circuit noiseless = circuit;
    noiseless.noise.clear();
    DenseState s = dense_evolve(noiseless, {});
    long idx = 0;
    for (int m = 0; m < circuit.n; ++m) idx = idx * 4 + obs.axes[static_cast<size_t>(m)];
    return obs.coeff * std::pow(2.0, 0.5 * circuit.n) * s.ptm[idx];
}

namespace {

// Uniform sampler over the affine subspace of all-qubit z-measurement
// outcomes of a stabilizer state.
struct ZBasisSampler {
    int n = 0, words = 0;
    std::vector<std::uint64_t> base;
    std::vector<std::vector<std::uint64_t>> homog;

    static ZBasisSampler build(const StabilizerTableau& t) {
        ZBasisSampler s;
        s.n = t.n;
        s.words = t.words;
        // left-nullspace of the X-bit matrix: row combinations with zero x-part
        std::vector<std::vector<std::uint64_t>> xrows(static_cast<size_t>(t.n));
        std::vector<std::vector<std::uint64_t>> combo(static_cast<size_t>(t.n));
        const int cwords = (t.n + 63) / 64;
        for (int i = 0; i < t.n; ++i) {
            xrows[static_cast<size_t>(i)].assign(static_cast<size_t>(t.words), 0);
            for (int w = 0; w < t.words; ++w)
                xrows[static_cast<size_t>(i)][static_cast<size_t>(w)] = t.x[static_cast<size_t>(i) * t.words + w];
            combo[static_cast<size_t>(i)].assign(static_cast<size_t>(cwords), 0);
            combo[static_cast<size_t>(i)][static_cast<size_t>(i / 64)] |= 1ull << (i % 64);
        }
        int rank = 0;
        for (int col = 0; col < t.n && rank < t.n; ++col) {
            const int w = col / 64;
            const std::uint64_t bit = 1ull << (col % 64);
            int pivot = -1;
            for (int i = rank; i < t.n; ++i)
                if (xrows[static_cast<size_t>(i)][static_cast<size_t>(w)] & bit) {
                    pivot = i;
                    break;
                }
            if (pivot < 0) continue;
            std::swap(xrows[static_cast<size_t>(pivot)], xrows[static_cast<size_t>(rank)]);
            std::swap(combo[static_cast<size_t>(pivot)], combo[static_cast<size_t>(rank)]);
            for (int i = 0; i < t.n; ++i) {
                if (i == rank || !(xrows[static_cast<size_t>(i)][static_cast<size_t>(w)] & bit)) continue;
                for (int k = 0; k < t.words; ++k)
                    xrows[static_cast<size_t>(i)][static_cast<size_t>(k)] ^= xrows[static_cast<size_t>(rank)][static_cast<size_t>(k)];
                for (int k = 0; k < cwords; ++k)
                    combo[static_cast<size_t>(i)][static_cast<size_t>(k)] ^= combo[static_cast<size_t>(rank)][static_cast<size_t>(k)];
            }
            ++rank;
        }
        // rows rank..n-1 now have zero x-part: each yields a parity constraint
        std::vector<std::vector<std::uint64_t>> cons;  // z-support | rhs in the last slot
        std::vector<int> rhs;
        for (int i = rank; i < t.n; ++i) {
            PauliAccum acc(t.words);
            for (int g = 0; g < t.n; ++g)
                if ((combo[static_cast<size_t>(i)][static_cast<size_t>(g / 64)] >> (g % 64)) & 1) acc.multiply_row(t, g);
            cons.push_back(acc.z);
            rhs.push_back(acc.phase == 2 ? 1 : 0);  // -1 sign means odd parity of ones
        }
        // echelon-solve the parity system over outcome bits
        const int k = static_cast<int>(cons.size());
        std::vector<int> pivot_col(static_cast<size_t>(k), -1);
        int rrank = 0;
        for (int col = 0; col < t.n && rrank < k; ++col) {
            const int w = col / 64;
            const std::uint64_t bit = 1ull << (col % 64);
            int pivot = -1;
            for (int i = rrank; i < k; ++i)
                if (cons[static_cast<size_t>(i)][static_cast<size_t>(w)] & bit) {
                    pivot = i;
                    break;
                }
            if (pivot < 0) continue;
            std::swap(cons[static_cast<size_t>(pivot)], cons[static_cast<size_t>(rrank)]);
            std::swap(rhs[static_cast<size_t>(pivot)], rhs[static_cast<size_t>(rrank)]);
            for (int i = 0; i < k; ++i) {
                if (i == rrank || !(cons[static_cast<size_t>(i)][static_cast<size_t>(w)] & bit)) continue;
                for (int kk = 0; kk < t.words; ++kk)
                    cons[static_cast<size_t>(i)][static_cast<size_t>(kk)] ^= cons[static_cast<size_t>(rrank)][static_cast<size_t>(kk)];
                rhs[static_cast<size_t>(i)] ^= rhs[static_cast<size_t>(rrank)];
            }
            pivot_col[static_cast<size_t>(rrank)] = col;
            ++rrank;
        }
        // particular solution: free bits zero, pivots take the rhs
        s.base.assign(static_cast<size_t>(t.words), 0);
        std::vector<char> is_pivot(static_cast<size_t>(t.n), 0);
        for (int i = 0; i < rrank; ++i) {
            is_pivot[static_cast<size_t>(pivot_col[static_cast<size_t>(i)])] = 1;
            if (rhs[static_cast<size_t>(i)])
                s.base[static_cast<size_t>(pivot_col[static_cast<size_t>(i)] / 64)] ^=
                    1ull << (pivot_col[static_cast<size_t>(i)] % 64);
        }
        // homogeneous directions: one per free coordinate
        for (int f = 0; f < t.n; ++f) {
            if (is_pivot[static_cast<size_t>(f)]) continue;
            std::vector<std::uint64_t> h(static_cast<size_t>(t.words), 0);
            h[static_cast<size_t>(f / 64)] |= 1ull << (f % 64);
            for (int i = 0; i < rrank; ++i)
                if ((cons[static_cast<size_t>(i)][static_cast<size_t>(f / 64)] >> (f % 64)) & 1)
                    h[static_cast<size_t>(pivot_col[static_cast<size_t>(i)] / 64)] ^=
                        1ull << (pivot_col[static_cast<size_t>(i)] % 64);
            s.homog.push_back(std::move(h));
        }
        return s;
    }

    void sample(RngStream& rng, std::uint64_t* out) const {
        for (int w = 0; w < words; ++w) out[w] = base[static_cast<size_t>(w)];
        for (const auto& h : homog)
            if (rng.uniform() < 0.5)
                for (int w = 0; w < words; ++w) out[w] ^= h[static_cast<size_t>(w)];
    }
};

struct FrameBits {
    std::vector<std::uint64_t> x, z;
    explicit FrameBits(int words) : x(static_cast<size_t>(words), 0), z(static_cast<size_t>(words), 0) {}
};

void frame_apply_layer(FrameBits& f, const CircuitLayer& layer, int n) {
    if (layer.kind == LayerKind::Clifford) {
        for (int q = 0; q < n; ++q) {
            const int w = q / 64;
            const std::uint64_t bit = 1ull << (q % 64);
            const bool bx = f.x[static_cast<size_t>(w)] & bit, bz = f.z[static_cast<size_t>(w)] & bit;
            if (!bx && !bz) continue;
            const CliffordAction& act = clifford_actions()[static_cast<size_t>(layer.clifford_ids[static_cast<size_t>(q)])];
            const int code = bx ? (bz ? 2 : 1) : 3;
            const int img = act.img[static_cast<size_t>(code)];
            const bool nx = img == 1 || img == 2, nz = img == 2 || img == 3;
            f.x[static_cast<size_t>(w)] = nx ? (f.x[static_cast<size_t>(w)] | bit) : (f.x[static_cast<size_t>(w)] & ~bit);
            f.z[static_cast<size_t>(w)] = nz ? (f.z[static_cast<size_t>(w)] | bit) : (f.z[static_cast<size_t>(w)] & ~bit);
        }
    } else if (layer.kind == LayerKind::Cnot) {
        for (auto [c, t] : layer.pairs) {
            const bool bxc = (f.x[static_cast<size_t>(c / 64)] >> (c % 64)) & 1;
            const bool bzt = (f.z[static_cast<size_t>(t / 64)] >> (t % 64)) & 1;
            if (bxc) f.x[static_cast<size_t>(t / 64)] ^= 1ull << (t % 64);
            if (bzt) f.z[static_cast<size_t>(c / 64)] ^= 1ull << (c % 64);
        }
    } else {
        throw std::invalid_argument("frame_apply_layer: non-Clifford layer");
    }
}

}  // namespace

OutcomeSet stab_sample_outcomes(const Circuit& circuit, const NoiseModelMap& noise,
                                const std::vector<std::uint8_t>& basis_axes, int Q, int M,
                                std::uint64_t seed) {
    circuit.validate();
    const int n = circuit.n;
    if (static_cast<int>(basis_axes.size()) != n)
        throw std::invalid_argument("stab_sample_outcomes: basis size mismatch");
    if (Q < 1 || M < 1) throw std::invalid_argument("stab_sample_outcomes: need Q*M >= 1");

    Circuit rotated = circuit;
    std::vector<int> rot_ids(static_cast<size_t>(n));
    for (int q = 0; q < n; ++q) rot_ids[static_cast<size_t>(q)] = basis_rotation_clifford_id(basis_axes[static_cast<size_t>(q)]);
    rotated.layers.push_back(CircuitLayer::clifford(rot_ids));

    StabilizerTableau tab = stab_apply_circuit(rotated);
    ZBasisSampler sampler = ZBasisSampler::build(tab);

    std::vector<std::pair<int, const NoiseModel*>> attach;
    for (const auto& a : circuit.noise) {
        auto it = noise.find(a.model_id);
        if (it == noise.end())
            throw std::invalid_argument("stab_sample_outcomes: unattached noise id '" + a.model_id + "'");
        attach.emplace_back(a.after_layer, &it->second);
    }
    std::sort(attach.begin(), attach.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    OutcomeSet out;
    out.n = n;
    out.Q = Q;
    out.M = M;
    out.seed = seed;
    out.backend = "stabilizer";
    out.basis_probs = {0, 0, 0};
    out.allocate();
    for (int q = 0; q < Q; ++q)
        for (int m = 0; m < n; ++m) out.axes[static_cast<size_t>(q) * n + m] = basis_axes[static_cast<size_t>(m)];

    const int words = tab.words;
    std::vector<std::uint64_t> bits(static_cast<size_t>(words));
    for (int q = 0; q < Q; ++q) {
        RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(q));
        for (int shot = 0; shot < M; ++shot) {
            FrameBits frame(words);
            size_t next_attach = 0;
            for (int l = 0; l < rotated.depth(); ++l) {
                frame_apply_layer(frame, rotated.layers[static_cast<size_t>(l)], n);
                while (next_attach < attach.size() && attach[next_attach].first == l) {
                    PauliString err = sample_noise_error(*attach[next_attach].second, n, rng);
                    for (int m = 0; m < n; ++m) {
                        const int a = err.axes[static_cast<size_t>(m)];
                        if (a == 1 || a == 2) frame.x[static_cast<size_t>(m / 64)] ^= 1ull << (m % 64);
                        if (a == 2 || a == 3) frame.z[static_cast<size_t>(m / 64)] ^= 1ull << (m % 64);
                    }
                    ++next_attach;
                }
            }
            sampler.sample(rng, bits.data());
            for (int m = 0; m < n; ++m) {
                const bool flip = (frame.x[static_cast<size_t>(m / 64)] >> (m % 64)) & 1;
                const bool bit = (bits[static_cast<size_t>(m / 64)] >> (m % 64)) & 1;
                out.set_sign(q, shot, m, bit ^ flip);
            }
        }
    }
    return out;
}

TrajectoryResult sample_trajectories(const Circuit& circuit, const NoiseModelMap& noise,
                                     const std::vector<std::pair<int, PauliString>>& insertions,
                                     const std::vector<int>& snapshot_depths, int shots,
                                     RngStream& rng) {
    circuit.validate();
    const int n = circuit.n;
    check_dense_cap(n, "sample_trajectories");
    const long dim = 1l << n;

    std::vector<std::vector<const NoiseModel*>> attach(static_cast<size_t>(circuit.depth()));
    for (const auto& a : circuit.noise) {
        auto it = noise.find(a.model_id);
        if (it == noise.end())
            throw std::invalid_argument("sample_trajectories: unattached noise id '" + a.model_id + "'");
        attach[static_cast<size_t>(a.after_layer)].push_back(&it->second);
    }
    std::vector<std::vector<const PauliString*>> insert(static_cast<size_t>(circuit.depth()));
    for (const auto& [layer, p] : insertions) insert[static_cast<size_t>(layer)].push_back(&p);

    auto apply_1q = [&](Eigen::VectorXcd& psi, int q, const Eigen::Matrix2cd& u) {
        const long stride = 1l << (n - 1 - q);
        for (long base = 0; base < dim; ++base) {
            if (base & stride) continue;
            const std::complex<double> a0 = psi[base], a1 = psi[base | stride];
            psi[base] = u(0, 0) * a0 + u(0, 1) * a1;
            psi[base | stride] = u(1, 0) * a0 + u(1, 1) * a1;
        }
    };
    auto apply_pauli = [&](Eigen::VectorXcd& psi, const PauliString& p) {
        for (int q = 0; q < n; ++q)
            if (p.axes[static_cast<size_t>(q)])
                apply_1q(psi, q, Eigen::Matrix2cd(pauli_matrix(p.axes[static_cast<size_t>(q)])));
    };

    TrajectoryResult result;
    result.outcomes.assign(snapshot_depths.size(), std::vector<std::uint64_t>(static_cast<size_t>(shots), 0));

    for (int shot = 0; shot < shots; ++shot) {
        Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
        psi[0] = 1.0;
        size_t snap = 0;
        for (int l = 0; l <= circuit.depth(); ++l) {
            while (snap < snapshot_depths.size() && snapshot_depths[snap] == l) {
                // draw one computational-basis outcome from |psi|^2
                double u = rng.uniform();
                long idx = dim - 1;
                double acc = 0;
                for (long i = 0; i < dim; ++i) {
                    acc += std::norm(psi[i]);
                    if (u < acc) {
                        idx = i;
                        break;
                    }
                }
                std::uint64_t packed = 0;
                for (int m = 0; m < n; ++m)
                    if ((idx >> (n - 1 - m)) & 1) packed |= 1ull << m;
                result.outcomes[snap][static_cast<size_t>(shot)] = packed;
                ++snap;
            }
            if (l == circuit.depth()) break;
            const CircuitLayer& layer = circuit.layers[static_cast<size_t>(l)];
            switch (layer.kind) {
                case LayerKind::SingleQubit:
                    for (int q = 0; q < n; ++q) apply_1q(psi, q, layer.unitaries[static_cast<size_t>(q)]);
                    break;
                case LayerKind::Clifford:
                    for (int q = 0; q < n; ++q)
                        apply_1q(psi, q, clifford_unitaries()[static_cast<size_t>(layer.clifford_ids[static_cast<size_t>(q)])]);
                    break;
                case LayerKind::Cnot:
                    for (auto [c, t] : layer.pairs) {
                        const long sc = 1l << (n - 1 - c), st = 1l << (n - 1 - t);
                        for (long i = 0; i < dim; ++i)
                            if ((i & sc) && !(i & st)) std::swap(psi[i], psi[i | st]);
                    }
                    break;
                case LayerKind::TwoLocal:
                    throw std::invalid_argument("sample_trajectories: two-local channels unsupported");
            }
            for (const NoiseModel* model : attach[static_cast<size_t>(l)])
                apply_pauli(psi, sample_noise_error(*model, n, rng));
            for (const PauliString* p : insert[static_cast<size_t>(l)]) apply_pauli(psi, *p);
        }
    }
    return result;
}

}  // namespace tem
