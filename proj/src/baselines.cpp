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

#include "tem/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace tem {

namespace {

bool is_clifford_circuit(const Circuit& c) {
    for (const auto& l : c.layers)
        if (!l.is_clifford_compatible()) return false;
    return true;
}

std::vector<std::uint8_t> observable_basis(const PauliString& obs) {
    std::vector<std::uint8_t> axes(static_cast<size_t>(obs.size()));
    for (int m = 0; m < obs.size(); ++m) {
        const int a = obs.axes[static_cast<size_t>(m)];
        axes[static_cast<size_t>(m)] = a == 0 ? 2 : static_cast<std::uint8_t>(a - 1);
    }
    return axes;
}

std::vector<Eigen::Matrix<double, 6, 4>> aligned_duals(const std::vector<std::uint8_t>& axes) {
    std::vector<Eigen::Matrix<double, 6, 4>> duals;
    duals.reserve(axes.size());
    for (auto a : axes) duals.push_back(make_aligned_povm(a).duals);
    return duals;
}

}  // namespace

NoiseModelMap scale_noise(const NoiseModelMap& noise, double gain) {
    NoiseModelMap out;
    for (const auto& [id, model] : noise) {
        if (const auto* spl = std::get_if<SparsePauliLindblad>(&model)) {
            out.emplace(id, spl->scaled(gain));
        } else if (const auto* dep = std::get_if<TwoQubitDepolarizing>(&model)) {
            out.emplace(id, TwoQubitDepolarizing{1.0 - std::pow(1.0 - dep->eps, gain), dep->q});
        } else {
            const auto& g = std::get<GlobalDepolarizing>(model);
            out.emplace(id, GlobalDepolarizing{1.0 - std::pow(1.0 - g.eps, gain)});
        }
    }
    return out;
}

std::vector<PecSample> pec_sample_circuits(const Circuit& circuit, const NoiseModelMap& noise,
                                           int Q, std::uint64_t seed) {
    circuit.validate();
    if (Q < 1) throw std::invalid_argument("pec_sample_circuits: need Q >= 1");
    // per attachment: the generator decomposition of the inverse channel
    struct Attachment {
        int layer;
        std::vector<PecGenerator> gens;
    };
    std::vector<Attachment> plan;
    double gamma = 1.0;
    for (const auto& a : circuit.noise) {
        auto it = noise.find(a.model_id);
        if (it == noise.end())
            throw std::invalid_argument("pec_sample_circuits: unattached noise id '" + a.model_id + "'");
        Attachment att;
        att.layer = a.after_layer;
        att.gens = pec_generators(it->second, circuit.n);
        for (const auto& g : att.gens) gamma *= g.weight;
        plan.push_back(std::move(att));
    }
    std::vector<PecSample> samples(static_cast<size_t>(Q));
    for (int q = 0; q < Q; ++q) {
        RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(q));
        PecSample& s = samples[static_cast<size_t>(q)];
        s.gamma = gamma;
        for (const auto& att : plan)
            for (const auto& g : att.gens)
                if (rng.uniform() < g.insert_prob) {
                    s.insertions.emplace_back(att.layer, g.pauli);
                    s.sign = -s.sign;
                }
    }
    return samples;
}

EstimateReport pec_estimate(const Circuit& circuit, const NoiseModelMap& noise,
                            const std::vector<PecSample>& samples, const PauliString& obs, int M,
                            std::uint64_t seed) {
    if (obs.size() != circuit.n) throw std::invalid_argument("pec_estimate: observable size mismatch");
    for (auto a : obs.axes)
        if (a == 1 || a == 2)
            throw std::invalid_argument(
                "pec_estimate: observable must be diagonal in the computational basis");
    const int Q = static_cast<int>(samples.size());
    std::vector<double> xi(static_cast<size_t>(Q) * M);
    std::uint64_t support = 0;
    for (int m = 0; m < circuit.n; ++m)
        if (obs.axes[static_cast<size_t>(m)] == 3) support |= 1ull << m;
    for (int q = 0; q < Q; ++q) {
        RngStream rng = RngStream::substream(seed ^ 0x50ecull, static_cast<std::uint64_t>(q));
        TrajectoryResult res = sample_trajectories(circuit, noise, samples[static_cast<size_t>(q)].insertions,
                                                   {circuit.depth()}, M, rng);
        const double w = samples[static_cast<size_t>(q)].sign * samples[static_cast<size_t>(q)].gamma * obs.coeff;
        for (int m = 0; m < M; ++m) {
            const int parity = __builtin_parityll(res.outcomes[0][static_cast<size_t>(m)] & support);
            xi[static_cast<size_t>(q) * M + m] = w * (parity ? -1.0 : 1.0);
        }
    }
    return estimate(xi, Q, M);
}

ZneSeries zne_run(const Circuit& circuit, const NoiseModelMap& noise, const PauliString& obs,
                  const std::vector<double>& gains, int shots, std::uint64_t seed) {
    if (gains.empty() || gains.front() < 1.0)
        throw std::invalid_argument("zne_run: gains must start at >= 1.0");
    for (size_t i = 1; i < gains.size(); ++i)
        if (gains[i] <= gains[i - 1])
            throw std::invalid_argument("zne_run: gains must increase strictly");
    ZneSeries series;
    series.gains = gains;
    const std::vector<std::uint8_t> basis = observable_basis(obs);
    const bool clifford = is_clifford_circuit(circuit);
    SuperopMPO obs_mps = SuperopMPO::pauli_string_state(obs);
    auto duals = aligned_duals(basis);
    for (size_t gi = 0; gi < gains.size(); ++gi) {
        NoiseModelMap amplified = scale_noise(noise, gains[gi]);
        std::vector<double> xi;
        if (clifford) {
            OutcomeSet out = stab_sample_outcomes(circuit, amplified, basis, 1, shots,
                                                  RngStream::splitmix(seed + gi));
            xi = xi_values(out, obs_mps, duals);
        } else {
            RngStream rng = RngStream::substream(seed, 0x2e0eull + gi);
            std::uint64_t support = 0;
            for (int m = 0; m < circuit.n; ++m)
                if (obs.axes[static_cast<size_t>(m)] != 0) support |= 1ull << m;
            // rotate the measurement into the observable's eigenbasis
            Circuit rotated = circuit;
            std::vector<Eigen::Matrix2cd> rot;
            for (int m = 0; m < circuit.n; ++m)
                rot.push_back(basis_rotation_unitary(basis[static_cast<size_t>(m)]));
            rotated.layers.push_back(CircuitLayer::single_qubit(rot));
            TrajectoryResult res =
                sample_trajectories(rotated, amplified, {}, {rotated.depth()}, shots, rng);
            xi.resize(static_cast<size_t>(shots));
            for (int s = 0; s < shots; ++s) {
                const int parity = __builtin_parityll(res.outcomes[0][static_cast<size_t>(s)] & support);
                xi[static_cast<size_t>(s)] = obs.coeff * (parity ? -1.0 : 1.0);
            }
        }
        EstimateReport est = estimate(xi, 1, shots);
        series.means.push_back(est.mean);
        series.stderrors.push_back(est.stderror);
        series.per_gain_xi.push_back(std::move(xi));
    }
    return series;
}

std::optional<double> zne_extrapolate(const std::vector<double>& gains,
                                      const std::vector<double>& means) {
    if (gains.size() != means.size() || gains.size() < 2) return std::nullopt;
    double sign = means[0] > 0 ? 1.0 : -1.0;
    for (double m : means)
        if (m * sign <= 0.0) return std::nullopt;  // mixed signs or zeros break the fit
    // log-linear least squares: ln|y| = ln A + G ln B
    const size_t k = gains.size();
    double sg = 0, sy = 0, sgg = 0, sgy = 0;
    for (size_t i = 0; i < k; ++i) {
        const double y = std::log(std::abs(means[i]));
        sg += gains[i];
        sy += y;
        sgg += gains[i] * gains[i];
        sgy += gains[i] * y;
    }
    const double denom = k * sgg - sg * sg;
    if (std::abs(denom) < 1e-30) return std::nullopt;
    const double slope = (k * sgy - sg * sy) / denom;
    const double intercept = (sy - slope * sg) / k;
    return sign * std::exp(intercept);
}

ZneBootstrap zne_extrapolate_bootstrap(const ZneSeries& series, int resamples, std::uint64_t seed) {
    if (resamples < 1) throw std::invalid_argument("zne_extrapolate_bootstrap: need resamples >= 1");
    ZneBootstrap out;
    std::vector<double> values;
    for (int r = 0; r < resamples; ++r) {
        RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(r));
        std::vector<double> means;
        for (const auto& xi : series.per_gain_xi) {
            double acc = 0.0;
            for (size_t i = 0; i < xi.size(); ++i) acc += xi[rng.integer(xi.size())];
            means.push_back(acc / static_cast<double>(xi.size()));
        }
        std::optional<double> v = zne_extrapolate(series.gains, means);
        if (v.has_value())
            values.push_back(*v);
        else
            ++out.failures;
    }
    if (values.empty()) {
        out.value = std::numeric_limits<double>::quiet_NaN();
        out.lower = out.upper = out.value;
        return out;
    }
    std::sort(values.begin(), values.end());
    out.value = values[values.size() / 2];
    const int trim = static_cast<int>(std::floor(0.16 * resamples));
    const int lo = std::min<int>(trim, static_cast<int>(values.size()) - 1);
    const int hi = std::max(lo, static_cast<int>(values.size()) - 1 - trim);
    out.lower = values[static_cast<size_t>(lo)];
    out.upper = values[static_cast<size_t>(hi)];
    return out;
}

}  // namespace tem
