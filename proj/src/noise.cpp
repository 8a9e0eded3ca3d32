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

#include "tem/noise.hpp"

#include <cmath>

namespace tem {

namespace {

inline bool anti1(int a, int b) { return a != 0 && b != 0 && a != b; }

// kappa exponent helpers: one fidelity per Pauli of the subsystem
Eigen::Vector4d single_kappas(const std::array<double, 3>& lam) {
    Eigen::Vector4d f;
    for (int b = 0; b < 4; ++b) {
        double acc = 0.0;
        for (int a = 1; a <= 3; ++a)
            if (anti1(a, b)) acc += lam[static_cast<size_t>(a - 1)];
        f[b] = std::exp(-2.0 * acc);
    }
    return f;
}

Eigen::VectorXd pair_kappas(const std::array<double, 9>& lam) {
    Eigen::VectorXd f(16);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (int k = 1; k <= 3; ++k)
                for (int l = 1; l <= 3; ++l)
                    if (anti1(k, i) ^ anti1(l, j)) acc += lam[static_cast<size_t>((k - 1) * 3 + (l - 1))];
            f[i * 4 + j] = std::exp(-2.0 * acc);
        }
    return f;
}

// Shared construction for the forward / inverse sparse Pauli-Lindblad MPO:
// per-pair inverse maps split to bond 4, single-qubit factors absorbed.
SuperopMPO spl_mpo(const SparsePauliLindblad& m, bool inverse) {
    m.validate();
    SplKappas k = spl_kappa(m);
    auto fid = [&](double v) { return inverse ? 1.0 / v : v; };
    if (m.n == 1) {
        SiteTensor st(1, 4, 4, 1);
        for (int o = 0; o < 4; ++o) st.at(0, o, o, 0) = fid(k.single[0].fidelities[o]);
        return SuperopMPO({st});
    }
    std::vector<SiteTensor> sites;
    sites.reserve(static_cast<size_t>(m.n));
    for (int q = 0; q < m.n; ++q) {
        const Eigen::Vector4d s = k.single[static_cast<size_t>(q)].fidelities;
        const int chi_l = q == 0 ? 1 : 4;
        const int chi_r = q == m.n - 1 ? 1 : 4;
        SiteTensor st(chi_l, 4, 4, chi_r);
        for (int al = 0; al < chi_l; ++al)
            for (int ar = 0; ar < chi_r; ++ar)
                for (int o = 0; o < 4; ++o) {
                    if (q < m.n - 1 && o != ar) continue;  // right selector delta
                    double v = fid(s[o]);
                    if (q > 0) v *= fid(k.pair[static_cast<size_t>(q - 1)].fidelities[al * 4 + o]);
                    st.at(al, o, o, ar) = v;
                }
        sites.push_back(std::move(st));
    }
    return SuperopMPO(std::move(sites));
}

SuperopMPO embed_two_site(const SuperopMPO& core, int q, int n) {
    std::vector<SiteTensor> sites;
    for (int m = 0; m < n; ++m) {
        if (m == q) {
            sites.push_back(core.site(0));
        } else if (m == q + 1) {
            sites.push_back(core.site(1));
        } else {
            SiteTensor st(1, 4, 4, 1);
            for (int p = 0; p < 4; ++p) st.at(0, p, p, 0) = 1.0;
            sites.push_back(std::move(st));
        }
    }
    return SuperopMPO(std::move(sites));
}

// rho -> c * rho + w * tr[rho] I / 2^N as a bond-2 MPO (GHZ-like virtual
// structure, sign of w carried on site 0).
SuperopMPO identity_plus_trace_mpo(double c, double w, int n) {
    if (n == 1) {
        SiteTensor st(1, 4, 4, 1);
        for (int p = 0; p < 4; ++p) st.at(0, p, p, 0) = c;
        st.at(0, 0, 0, 0) += w;
        return SuperopMPO({st});
    }
    const double cs = std::pow(c, 1.0 / n);
    const double ws = std::pow(std::abs(w), 1.0 / n);
    const double sign = w < 0 ? -1.0 : 1.0;
    std::vector<SiteTensor> sites;
    for (int q = 0; q < n; ++q) {
        const int chi_l = q == 0 ? 1 : 2;
        const int chi_r = q == n - 1 ? 1 : 2;
        SiteTensor st(chi_l, 4, 4, chi_r);
        const int id_l = 0, tr_l = chi_l - 1;
        const int id_r = 0, tr_r = chi_r - 1;
        for (int p = 0; p < 4; ++p) st.at(id_l, p, p, id_r) = cs;
        // trace map T: PTM diag(1,0,0,0)
        st.at(tr_l, 0, 0, tr_r) = (q == 0 ? sign : 1.0) * ws;
        sites.push_back(std::move(st));
    }
    return SuperopMPO(std::move(sites));
}

}  // namespace

SparsePauliLindblad SparsePauliLindblad::zero(int n) {
    SparsePauliLindblad m;
    m.n = n;
    m.single.assign(static_cast<size_t>(n), {0.0, 0.0, 0.0});
    if (n > 1) m.pair.assign(static_cast<size_t>(n - 1), {});
    for (auto& p : m.pair) p.fill(0.0);
    return m;
}

void SparsePauliLindblad::validate() const {
    if (n < 1) throw std::invalid_argument("SparsePauliLindblad: n must be >= 1");
    if (static_cast<int>(single.size()) != n || static_cast<int>(pair.size()) != std::max(0, n - 1))
        throw std::invalid_argument("SparsePauliLindblad: rate table size mismatch");
    for (const auto& s : single)
        for (double v : s)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("SparsePauliLindblad: negative or non-finite rate");
    for (const auto& p : pair)
        for (double v : p)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("SparsePauliLindblad: negative or non-finite rate");
}

SparsePauliLindblad SparsePauliLindblad::scaled(double gain) const {
    SparsePauliLindblad out = *this;
    for (auto& s : out.single)
        for (auto& v : s) v *= gain;
    for (auto& p : out.pair)
        for (auto& v : p) v *= gain;
    return out;
}

double SparsePauliLindblad::total_rate() const {
    double acc = 0.0;
    for (const auto& s : single)
        for (double v : s) acc += v;
    for (const auto& p : pair)
        for (double v : p) acc += v;
    return acc;
}

SplKappas spl_kappa(const SparsePauliLindblad& m) {
    m.validate();
    SplKappas out;
    for (int q = 0; q < m.n; ++q)
        out.single.push_back({1, single_kappas(m.single[static_cast<size_t>(q)])});
    for (int q = 0; q + 1 < m.n; ++q)
        out.pair.push_back({2, pair_kappas(m.pair[static_cast<size_t>(q)])});
    return out;
}

SuperopMPO spl_inverse_mpo(const SparsePauliLindblad& m) { return spl_mpo(m, true); }
SuperopMPO spl_forward_mpo(const SparsePauliLindblad& m) { return spl_mpo(m, false); }

SuperopMPO depolarizing2_inverse_mpo(double eps) {
    if (eps < 0.0 || eps >= 1.0)
        throw std::invalid_argument("depolarizing2_inverse_mpo: need 0 <= eps < 1");
    const double a = 1.0 / std::sqrt(1.0 - eps);
    const double b = std::sqrt(eps / (1.0 - eps));
    SiteTensor s0(1, 4, 4, 2), s1(2, 4, 4, 1);
    for (int p = 0; p < 4; ++p) {
        s0.at(0, p, p, 0) = a;
        s1.at(0, p, p, 0) = a;
    }
    s0.at(0, 0, 0, 1) = b;
    s1.at(1, 0, 0, 0) = -b;
    return SuperopMPO({s0, s1});
}

SuperopMPO depolarizing2_forward_mpo(double eps) {
    if (eps < 0.0 || eps > 1.0)
        throw std::invalid_argument("depolarizing2_forward_mpo: need 0 <= eps <= 1");
    const double a = std::sqrt(1.0 - eps);
    const double b = std::sqrt(eps);
    SiteTensor s0(1, 4, 4, 2), s1(2, 4, 4, 1);
    for (int p = 0; p < 4; ++p) {
        s0.at(0, p, p, 0) = a;
        s1.at(0, p, p, 0) = a;
    }
    s0.at(0, 0, 0, 1) = b;
    s1.at(1, 0, 0, 0) = b;
    return SuperopMPO({s0, s1});
}

std::array<double, 2> depolarizing2_inverse_singular_values(double eps) {
    if (eps < 0.0 || eps >= 1.0)
        throw std::invalid_argument("depolarizing2_inverse_singular_values: need 0 <= eps < 1");
    const double root = std::sqrt(16.0 + 4.0 * eps + eps * eps);
    const double common = 16.0 - 2.0 * eps + eps * eps;
    const double denom = std::sqrt(2.0) * (1.0 - eps);
    return {std::sqrt(common + (4.0 - eps) * root) / denom,
            std::sqrt(std::max(0.0, common - (4.0 - eps) * root)) / denom};
}

SuperopMPO global_depolarizing_inverse(double eps, int n, int l) {
    if (eps < 0.0 || eps >= 1.0)
        throw std::invalid_argument("global_depolarizing_inverse: need 0 <= eps < 1");
    if (l == 0 || eps == 0.0) return SuperopMPO::identity(n);
    const double c = std::pow(1.0 - eps, -l);
    return identity_plus_trace_mpo(c, 1.0 - c, n);
}

SuperopMPO noise_forward_mpo(const NoiseModel& m, int n) {
    if (const auto* spl = std::get_if<SparsePauliLindblad>(&m)) {
        if (spl->n != n) throw std::invalid_argument("noise_forward_mpo: register size mismatch");
        return spl_forward_mpo(*spl);
    }
    if (const auto* dep = std::get_if<TwoQubitDepolarizing>(&m)) {
        if (dep->q < 0 || dep->q + 1 >= n)
            throw std::invalid_argument("noise_forward_mpo: depolarizing pair out of range");
        return embed_two_site(depolarizing2_forward_mpo(dep->eps), dep->q, n);
    }
    const auto& g = std::get<GlobalDepolarizing>(m);
    if (g.eps == 0.0) return SuperopMPO::identity(n);
    return identity_plus_trace_mpo(1.0 - g.eps, g.eps, n);
}

SuperopMPO noise_inverse_mpo(const NoiseModel& m, int n) {
    if (const auto* spl = std::get_if<SparsePauliLindblad>(&m)) {
        if (spl->n != n) throw std::invalid_argument("noise_inverse_mpo: register size mismatch");
        return spl_inverse_mpo(*spl);
    }
    if (const auto* dep = std::get_if<TwoQubitDepolarizing>(&m)) {
        if (dep->q < 0 || dep->q + 1 >= n)
            throw std::invalid_argument("noise_inverse_mpo: depolarizing pair out of range");
        return embed_two_site(depolarizing2_inverse_mpo(dep->eps), dep->q, n);
    }
    const auto& g = std::get<GlobalDepolarizing>(m);
    return global_depolarizing_inverse(g.eps, n, 1);
}

double gamma_pec(const NoiseModel& m, int n) {
    if (const auto* spl = std::get_if<SparsePauliLindblad>(&m)) {
        return std::exp(2.0 * spl->total_rate());
    }
    if (const auto* dep = std::get_if<TwoQubitDepolarizing>(&m)) {
        const double d = 1.0 / (1.0 - dep->eps);
        return (15.0 * d - 7.0) / 8.0;
    }
    const auto& g = std::get<GlobalDepolarizing>(m);
    const double d = 1.0 / (1.0 - g.eps);
    const double dim = std::pow(4.0, n);
    return (1.0 + (dim - 1.0) * (2.0 * d - 1.0)) / dim;
}

double gamma_pec(const std::vector<NoiseModel>& layers, int n) {
    double acc = 1.0;
    for (const auto& m : layers) acc *= gamma_pec(m, n);
    return acc;
}

double gamma_tem(const NoiseModel& m, const PauliString& obs) {
    if (const auto* spl = std::get_if<SparsePauliLindblad>(&m)) {
        if (spl->n != obs.size()) throw std::invalid_argument("gamma_tem: length mismatch");
        double acc = 0.0;
        for (int q = 0; q < spl->n; ++q)
            for (int a = 1; a <= 3; ++a)
                if (anti1(a, obs.axes[static_cast<size_t>(q)]))
                    acc += spl->single[static_cast<size_t>(q)][static_cast<size_t>(a - 1)];
        for (int q = 0; q + 1 < spl->n; ++q)
            for (int i = 1; i <= 3; ++i)
                for (int j = 1; j <= 3; ++j)
                    if (anti1(i, obs.axes[static_cast<size_t>(q)]) ^
                        anti1(j, obs.axes[static_cast<size_t>(q + 1)]))
                        acc += spl->pair[static_cast<size_t>(q)][static_cast<size_t>((i - 1) * 3 + (j - 1))];
        return std::exp(2.0 * acc);
    }
    if (const auto* dep = std::get_if<TwoQubitDepolarizing>(&m)) {
        const bool trivial = obs.axes[static_cast<size_t>(dep->q)] == 0 &&
                             obs.axes[static_cast<size_t>(dep->q + 1)] == 0;
        return trivial ? 1.0 : 1.0 / (1.0 - dep->eps);
    }
    const auto& g = std::get<GlobalDepolarizing>(m);
    return obs.weight() == 0 ? 1.0 : 1.0 / (1.0 - g.eps);
}

double gamma_tem(const std::vector<NoiseModel>& layers, const PauliString& obs) {
    double acc = 1.0;
    for (const auto& m : layers) acc *= gamma_tem(m, obs);
    return acc;
}

SparsePauliLindblad sample_spl_rates(int n, double single_mean, double single_std,
                                     double pair_mean, double pair_std, std::uint64_t seed) {
    if (single_std < 0 || pair_std < 0)
        throw std::invalid_argument("sample_spl_rates: standard deviations must be >= 0");
    RngStream rng(seed);
    SparsePauliLindblad m = SparsePauliLindblad::zero(n);
    for (int q = 0; q < n; ++q)
        for (int a = 0; a < 3; ++a)
            m.single[static_cast<size_t>(q)][static_cast<size_t>(a)] =
                std::max(0.0, rng.normal(single_mean, single_std));
    for (int q = 0; q + 1 < n; ++q)
        for (int ij = 0; ij < 9; ++ij)
            m.pair[static_cast<size_t>(q)][static_cast<size_t>(ij)] =
                std::max(0.0, rng.normal(pair_mean, pair_std));
    return m;
}

namespace {

inline void multiply_axis(std::uint8_t& into, int axis) {
    if (axis == 0) return;
    if (into == 0) {
        into = static_cast<std::uint8_t>(axis);
    } else if (into == axis) {
        into = 0;
    } else {
        into = static_cast<std::uint8_t>(6 - into - axis);  // the remaining non-identity axis
    }
}

}  // namespace

PauliString sample_noise_error(const NoiseModel& m, int n, RngStream& rng) {
    PauliString err = PauliString::identity(n);
    if (const auto* spl = std::get_if<SparsePauliLindblad>(&m)) {
        if (spl->n != n) throw std::invalid_argument("sample_noise_error: register size mismatch");
        auto fire = [&](double lam) {
            if (lam <= 0.0) return false;
            return rng.uniform() < 0.5 * (1.0 - std::exp(-2.0 * lam));
        };
        for (int q = 0; q < n; ++q)
            for (int a = 1; a <= 3; ++a)
                if (fire(spl->single[static_cast<size_t>(q)][static_cast<size_t>(a - 1)]))
                    multiply_axis(err.axes[static_cast<size_t>(q)], a);
        for (int q = 0; q + 1 < n; ++q)
            for (int i = 1; i <= 3; ++i)
                for (int j = 1; j <= 3; ++j)
                    if (fire(spl->pair[static_cast<size_t>(q)][static_cast<size_t>((i - 1) * 3 + (j - 1))])) {
                        multiply_axis(err.axes[static_cast<size_t>(q)], i);
                        multiply_axis(err.axes[static_cast<size_t>(q + 1)], j);
                    }
        return err;
    }
    if (const auto* dep = std::get_if<TwoQubitDepolarizing>(&m)) {
        if (rng.uniform() < dep->eps) {
            err.axes[static_cast<size_t>(dep->q)] = static_cast<std::uint8_t>(rng.integer(4));
            err.axes[static_cast<size_t>(dep->q + 1)] = static_cast<std::uint8_t>(rng.integer(4));
        }
        return err;
    }
    const auto& g = std::get<GlobalDepolarizing>(m);
    if (rng.uniform() < g.eps)
        for (int q = 0; q < n; ++q) err.axes[static_cast<size_t>(q)] = static_cast<std::uint8_t>(rng.integer(4));
    return err;
}

std::vector<PecGenerator> pec_generators(const NoiseModel& m, int n) {
    std::vector<PecGenerator> out;
    if (const auto* spl = std::get_if<SparsePauliLindblad>(&m)) {
        if (spl->n != n) throw std::invalid_argument("pec_generators: register size mismatch");
        auto add = [&](PauliString p, double lam) {
            if (lam <= 0.0) return;
            PecGenerator g;
            g.pauli = std::move(p);
            g.insert_prob = 0.5 * (1.0 - std::exp(-2.0 * lam));
            g.weight = std::exp(2.0 * lam);
            out.push_back(std::move(g));
        };
        for (int q = 0; q < n; ++q)
            for (int a = 1; a <= 3; ++a) {
                PauliString p = PauliString::identity(n);
                p.axes[static_cast<size_t>(q)] = static_cast<std::uint8_t>(a);
                add(std::move(p), spl->single[static_cast<size_t>(q)][static_cast<size_t>(a - 1)]);
            }
        for (int q = 0; q + 1 < n; ++q)
            for (int i = 1; i <= 3; ++i)
                for (int j = 1; j <= 3; ++j) {
                    PauliString p = PauliString::identity(n);
                    p.axes[static_cast<size_t>(q)] = static_cast<std::uint8_t>(i);
                    p.axes[static_cast<size_t>(q + 1)] = static_cast<std::uint8_t>(j);
                    add(std::move(p), spl->pair[static_cast<size_t>(q)][static_cast<size_t>((i - 1) * 3 + (j - 1))]);
                }
        return out;
    }
    throw std::invalid_argument("pec_generators: unsupported noise type (Pauli-Lindblad only)");
}

}  // namespace tem
