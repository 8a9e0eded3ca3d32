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

#include "tem/estimator.hpp"

#include <cmath>
#include <unordered_map>

namespace tem {

void ObservableSpec::validate() const {
    if (n < 1) throw std::invalid_argument("ObservableSpec: register size must be >= 1");
    if (terms.empty() && !mpo.has_value())
        throw std::invalid_argument("ObservableSpec: no terms and no MPO");
    for (const auto& t : terms) {
        if (t.size() != n) throw std::invalid_argument("ObservableSpec: string length mismatch");
        if (!std::isfinite(t.coeff)) throw std::invalid_argument("ObservableSpec: non-finite coefficient");
    }
    if (mpo.has_value() && mpo->size() != n)
        throw std::invalid_argument("ObservableSpec: MPO site count mismatch");
}

double ObservableSpec::coefficient_mass() const {
    if (terms.empty()) return 1.0;
    double acc = 0.0;
    for (const auto& t : terms) acc += std::abs(t.coeff);
    return acc;
}

SuperopMPO observable_mps(const ObservableSpec& obs) {
    obs.validate();
    if (obs.mpo.has_value()) return *obs.mpo;
    // direct sum of the bond-1 string states, block-diagonal virtual bonds
    const int n = obs.n;
    const int k = static_cast<int>(obs.terms.size());
    if (k == 1) return SuperopMPO::pauli_string_state(obs.terms[0]);
    const double s2 = std::sqrt(2.0);
    std::vector<SiteTensor> sites;
    for (int m = 0; m < n; ++m) {
        const int chi_l = m == 0 ? 1 : k;
        const int chi_r = m == n - 1 ? 1 : k;
        SiteTensor st(chi_l, 4, 1, chi_r);
        for (int t = 0; t < k; ++t) {
            const int l = m == 0 ? 0 : t;
            const int r = m == n - 1 ? 0 : t;
            const double w = (m == 0 ? obs.terms[static_cast<size_t>(t)].coeff : 1.0) * s2;
            st.at(l, obs.terms[static_cast<size_t>(t)].axes[static_cast<size_t>(m)], 0, r) += w;
        }
        sites.push_back(std::move(st));
    }
    auto [compressed, rec] = mpo_compress(SuperopMPO(std::move(sites)),
                                          {.chi_max = k, .tol_rel = 1e-14}, false);
    return compressed;
}

SuperopMPO evolve_observable(const SuperopMPO* map, const ObservableSpec& obs,
                             const CompressLimit& limit) {
    SuperopMPO o = observable_mps(obs);
    if (map == nullptr) return o;
    if (map->size() != o.size())
        throw std::invalid_argument("evolve_observable: register size mismatch");
    // o' = M^T o = apply_compress(M^T, o); transpose keeps the cheap operand
    // order (the observable is the narrow factor).
    ApplyOptions opts;
    opts.limit = limit;
    auto [evolved, rec] = apply_compress(transpose_mpo(*map), o, opts);
    return evolved;
}

namespace {

// Per-site transfer matrices for the two outcomes of the circuit's basis
// axis: T(+-) = C +- D with C from the trace row and D from the axis row.
struct SiteTransfer {
    RowMat c, d;
};

std::vector<SiteTransfer> build_transfers(const SuperopMPO& evolved, int circuit,
                                          const OutcomeSet& outcomes,
                                          const std::vector<Eigen::Matrix<double, 6, 4>>& duals) {
    const int n = evolved.size();
    std::vector<SiteTransfer> ts;
    ts.reserve(static_cast<size_t>(n));
    for (int m = 0; m < n; ++m) {
        const SiteTensor& st = evolved.site(m);
        const int axis = outcomes.axis(circuit, m);
        const auto& dm = duals[static_cast<size_t>(m)];
        Eigen::Vector4d dplus = dm.row(2 * axis).transpose();
        Eigen::Vector4d dminus = dm.row(2 * axis + 1).transpose();
        Eigen::Vector4d c = 0.5 * (dplus + dminus);
        Eigen::Vector4d d = 0.5 * (dplus - dminus);
        SiteTransfer t;
        t.c = RowMat::Zero(st.chi_l, st.chi_r);
        t.d = RowMat::Zero(st.chi_l, st.chi_r);
        for (int p = 0; p < 4; ++p) {
            if (c[p] == 0.0 && d[p] == 0.0) continue;
            for (int l = 0; l < st.chi_l; ++l)
                for (int r = 0; r < st.chi_r; ++r) {
                    const double v = st.at(l, p, 0, r);
                    t.c(l, r) += c[p] * v;
                    t.d(l, r) += d[p] * v;
                }
        }
        ts.push_back(std::move(t));
    }
    return ts;
}

}  // namespace

std::vector<double> xi_values(const OutcomeSet& outcomes, const SuperopMPO& evolved,
                              const std::vector<Eigen::Matrix<double, 6, 4>>& duals) {
    if (evolved.size() != outcomes.n) throw std::invalid_argument("xi_values: register size mismatch");
    if (!evolved.is_state()) throw std::invalid_argument("xi_values: evolved observable must be a PTM state");
    if (static_cast<int>(duals.size()) != outcomes.n)
        throw std::invalid_argument("xi_values: dual table size mismatch");

    const int n = outcomes.n;
    std::vector<double> xi(static_cast<size_t>(outcomes.shots()));
    const int stride = outcomes.stride();

    for (int q = 0; q < outcomes.Q; ++q) {
        std::vector<SiteTransfer> ts = build_transfers(evolved, q, outcomes, duals);
        // deduplicate identical outcome patterns within the circuit
        std::unordered_map<std::uint64_t, std::vector<int>> groups;
        const bool packable = n <= 64;
        std::vector<std::uint64_t> keys(static_cast<size_t>(outcomes.M));
        if (packable) {
            for (int s = 0; s < outcomes.M; ++s) {
                std::uint64_t key = 0;
                for (int b = 0; b < stride; ++b)
                    key |= static_cast<std::uint64_t>(
                               outcomes.signs[(static_cast<size_t>(q) * outcomes.M + s) * stride + b])
                           << (8 * b);
                keys[static_cast<size_t>(s)] = key;
                groups[key].push_back(s);
            }
        } else {
            for (int s = 0; s < outcomes.M; ++s) groups[static_cast<std::uint64_t>(s)].push_back(s);
        }
        // batched sweep over the unique patterns
        const int B = static_cast<int>(groups.size());
        std::vector<const std::vector<int>*> members;
        members.reserve(static_cast<size_t>(B));
        RowMat v = RowMat::Zero(B, 1);
        {
            int row = 0;
            for (auto& [key, idxs] : groups) {
                members.push_back(&idxs);
                v(row++, 0) = 1.0;
            }
        }
        for (int m = 0; m < n; ++m) {
            RowMat u1 = v * ts[static_cast<size_t>(m)].c;
            RowMat u2 = v * ts[static_cast<size_t>(m)].d;
            for (int row = 0; row < B; ++row) {
                const int shot0 = members[static_cast<size_t>(row)]->front();
                const double sgn = outcomes.sign(q, shot0, m) ? -1.0 : 1.0;
                u1.row(row) += sgn * u2.row(row);
            }
            v = std::move(u1);
        }
        for (int row = 0; row < B; ++row)
            for (int s : *members[static_cast<size_t>(row)])
                xi[static_cast<size_t>(q) * outcomes.M + s] = v(row, 0);
    }
    return xi;
}

std::vector<double> xi_values(const OutcomeSet& outcomes, const SuperopMPO& evolved,
                              const Eigen::Matrix<double, 6, 4>& duals) {
    return xi_values(outcomes, evolved,
                     std::vector<Eigen::Matrix<double, 6, 4>>(static_cast<size_t>(outcomes.n), duals));
}

namespace {

// deterministic pairwise summation
double pairwise_sum(const double* data, size_t len) {
    if (len <= 8) {
        double acc = 0.0;
        for (size_t i = 0; i < len; ++i) acc += data[i];
        return acc;
    }
    const size_t half = len / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, len - half);
}

}  // namespace

EstimateReport estimate(const std::vector<double>& xi, int Q, int M) {
    if (Q < 1 || M < 1 || static_cast<long>(xi.size()) != static_cast<long>(Q) * M)
        throw std::invalid_argument("estimate: layout does not match the sample count");
    if (xi.size() < 2) throw std::invalid_argument("estimate: need at least two samples");
    EstimateReport rep;
    rep.Q = Q;
    rep.M = M;
    rep.S = static_cast<long>(Q) * M;
    rep.mean = pairwise_sum(xi.data(), xi.size()) / static_cast<double>(rep.S);
    rep.circuit_means.resize(static_cast<size_t>(Q));
    for (int q = 0; q < Q; ++q)
        rep.circuit_means[static_cast<size_t>(q)] =
            pairwise_sum(xi.data() + static_cast<size_t>(q) * M, static_cast<size_t>(M)) / M;
    if (Q > 1) {
        std::vector<double> within(xi.size());
        for (int q = 0; q < Q; ++q)
            for (int m = 0; m < M; ++m) {
                const double d = xi[static_cast<size_t>(q) * M + m] - rep.circuit_means[static_cast<size_t>(q)];
                within[static_cast<size_t>(q) * M + m] = d * d;
            }
        std::vector<double> between(static_cast<size_t>(Q));
        for (int q = 0; q < Q; ++q) {
            const double d = rep.circuit_means[static_cast<size_t>(q)] - rep.mean;
            between[static_cast<size_t>(q)] = d * d;
        }
        const double s1 = pairwise_sum(within.data(), within.size()) /
                          (static_cast<double>(rep.S) * static_cast<double>(rep.S));
        const double s2 = pairwise_sum(between.data(), between.size()) /
                          (static_cast<double>(Q) * static_cast<double>(Q));
        rep.stderror = std::sqrt(s1 + s2);
    } else {
        std::vector<double> dev(xi.size());
        for (size_t i = 0; i < xi.size(); ++i) {
            const double d = xi[i] - rep.mean;
            dev[i] = d * d;
        }
        rep.stderror = std::sqrt(pairwise_sum(dev.data(), dev.size())) / static_cast<double>(rep.S);
    }
    return rep;
}

double measured_overhead(const EstimateReport& mitigated, const EstimateReport& noisy) {
    if (noisy.stderror <= 0.0) throw std::invalid_argument("measured_overhead: zero noisy error");
    return mitigated.stderror / noisy.stderror;
}

}  // namespace tem
