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
#include <map>

#include "oracles.hpp"
#include "tem/baselines.hpp"
#include "tem/ptm.hpp"

using namespace tem;

TEST_CASE("pec sampling: zero rates leave the circuit untouched") {
    Circuit c = trotter_circuit(3, 1, 1.0, 0.5236, 0.5);
    NoiseModelMap noise;
    noise.emplace("layer1", SparsePauliLindblad::zero(3));
    noise.emplace("layer2", SparsePauliLindblad::zero(3));
    auto samples = pec_sample_circuits(c, noise, 20, 7);
    for (const auto& s : samples) {
        CHECK(s.insertions.empty());
        CHECK(s.sign == 1);
        CHECK(s.gamma == doctest::Approx(1.0));
    }
}

TEST_CASE("pec insertion frequencies follow the quasiprobability") {
    // single-qubit depolarizing eps as the equal-rate Lindblad model:
    // each generator inserts with probability (1 - e^{-2 lambda})/2 = eps/4
    // to first order, matching the (1+3eps/4, -eps/4 x3)/gamma distribution
    const double eps = 0.05;
    const double lam = -std::log(1.0 - eps) / 4.0;
    Circuit c;
    c.n = 1;
    c.layers.push_back(CircuitLayer::clifford({0}));
    c.noise.push_back({0, "m"});
    SparsePauliLindblad m = SparsePauliLindblad::zero(1);
    m.single[0] = {lam, lam, lam};
    NoiseModelMap noise;
    noise.emplace("m", m);
    const int Q = 100000;
    auto samples = pec_sample_circuits(c, noise, Q, 3);
    std::map<std::string, int> counts;
    int minus = 0;
    for (const auto& s : samples) {
        minus += s.sign < 0;
        std::uint8_t net = 0;
        for (const auto& [layer, p] : s.insertions) {
            const int a = p.axes[0];
            net = net == 0 ? a : (net == a ? 0 : static_cast<std::uint8_t>(6 - net - a));
        }
        counts[std::string(1, "IXYZ"[net])]++;
    }
    const double p_each = 0.5 * (1.0 - std::exp(-2.0 * lam));
    // net X insertion: the X generator alone fires, or Y and Z both fire
    const double want_net_x = p_each * (1 - p_each) * (1 - p_each) + (1 - p_each) * p_each * p_each;
    const double sigma = std::sqrt(want_net_x * (1 - want_net_x) / Q);
    CHECK(std::abs(static_cast<double>(counts["X"]) / Q - want_net_x) < 4 * sigma);
    // sign parity equals parity of the number of fired generators
    const double p_minus = 3 * p_each * (1 - p_each) * (1 - p_each) + p_each * p_each * p_each;
    const double sig2 = std::sqrt(p_minus * (1 - p_minus) / Q);
    CHECK(std::abs(static_cast<double>(minus) / Q - p_minus) < 4 * sig2);
}

TEST_CASE("per-generator sampling matches the joint quasiprobability on a pair") {
    // the net inserted Pauli distribution from independent generators equals
    // the joint distribution |q|/gamma of the composed inverse channel
    SparsePauliLindblad m = SparsePauliLindblad::zero(2);
    RngStream rates(3);
    for (auto& v : m.pair[0]) v = rates.uniform() * 0.02;
    NoiseModelMap noise;
    noise.emplace("m", m);
    Circuit c;
    c.n = 2;
    c.layers.push_back(CircuitLayer::clifford({0, 0}));
    c.noise.push_back({0, "m"});

    const int Q = 200000;
    auto samples = pec_sample_circuits(c, noise, Q, 11);
    std::map<int, double> signed_freq;
    for (const auto& s : samples) {
        std::array<std::uint8_t, 2> net = {0, 0};
        for (const auto& [layer, p] : s.insertions)
            for (int q = 0; q < 2; ++q) {
                const int a = p.axes[static_cast<size_t>(q)];
                auto& cur = net[static_cast<size_t>(q)];
                cur = cur == 0 ? static_cast<std::uint8_t>(a)
                               : (a == 0 ? cur : (cur == a ? 0 : static_cast<std::uint8_t>(6 - cur - a)));
            }
        signed_freq[net[0] * 4 + net[1]] += s.sign;
    }
    // oracle: joint quasiprobabilities of the inverse channel
    Eigen::VectorXd fid = spl_kappa(m).pair[0].fidelities.cwiseInverse();
    Eigen::VectorXd q = quasiprob_of_fidelities(fid, 2);
    const double gamma = q.cwiseAbs().sum();
    CHECK(samples[0].gamma == doctest::Approx(gamma).epsilon(1e-10));
    for (int idx = 0; idx < 16; ++idx) {
        const double want = q[idx] / gamma;  // signed frequency
        const double got = signed_freq[idx] / Q;
        CHECK(std::abs(got - want) < 4.0 / std::sqrt(static_cast<double>(Q)));
    }
}

TEST_CASE("pec estimate is unbiased on a dense-verifiable instance") {
    const int n = 4;
    Circuit c = brickwork_clifford_circuit(n, 2, 17);
    NoiseModelMap noise;
    noise.emplace("even", sample_spl_rates(n, 8e-3, 4e-3, 4e-3, 2e-3, 3));
    noise.emplace("odd", sample_spl_rates(n, 8e-3, 4e-3, 4e-3, 2e-3, 4));
    // a Z-string observable measured in the computational basis
    PauliString obs = PauliString::from_label("ZZZZ");
    const double want = exact_expectation(c, obs);

    auto samples = pec_sample_circuits(c, noise, 600, 5);
    EstimateReport rep = pec_estimate(c, noise, samples, obs, 200, 5);
    CHECK(std::abs(rep.mean - want) < 4.0 * rep.stderror);

    // identity-observable bookkeeping: mean of sign * gamma = 1
    EstimateReport id_rep = pec_estimate(c, noise, samples, PauliString::identity(n), 50, 6);
    CHECK(std::abs(id_rep.mean - 1.0) < 4.0 * id_rep.stderror + 1e-12);

    CHECK_THROWS_AS(pec_estimate(c, noise, samples, PauliString::from_label("XZZZ"), 10, 7),
                    std::invalid_argument);
}

TEST_CASE("pec stderr inflates by roughly gamma at matched budgets") {
    const int n = 3;
    Circuit c = brickwork_clifford_circuit(n, 2, 23);
    NoiseModelMap noise;
    noise.emplace("even", sample_spl_rates(n, 2e-2, 1e-2, 1e-2, 5e-3, 13));
    noise.emplace("odd", sample_spl_rates(n, 2e-2, 1e-2, 1e-2, 5e-3, 14));
    PauliString obs = PauliString::from_label("ZZZ");
    auto samples = pec_sample_circuits(c, noise, 400, 31);
    EstimateReport pec = pec_estimate(c, noise, samples, obs, 100, 31);

    // unmitigated estimate at the same budget
    std::vector<PecSample> plain(400);
    for (auto& s : plain) s = PecSample{};
    EstimateReport noisy = pec_estimate(c, noise, plain, obs, 100, 32);
    const double gamma = samples[0].gamma;
    const double ratio = pec.stderror / noisy.stderror;
    CHECK(ratio > gamma * 0.7);
    CHECK(ratio < gamma * 1.3);
}

TEST_CASE("zne: exact recovery on synthetic exponential data") {
    ZneSeries series;
    series.gains = {1.0, 1.2, 1.6};
    for (double g : series.gains) series.means.push_back(0.8 * std::pow(0.5, g));
    auto v = zne_extrapolate(series.gains, series.means);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(0.8).epsilon(1e-12));

    // negative-branch data extrapolate too
    std::vector<double> neg;
    for (double g : series.gains) neg.push_back(-0.3 * std::pow(0.7, g));
    auto vn = zne_extrapolate(series.gains, neg);
    REQUIRE(vn.has_value());
    CHECK(*vn == doctest::Approx(-0.3).epsilon(1e-12));

    // mixed signs break the exponential fit
    CHECK_FALSE(zne_extrapolate(series.gains, {0.5, -0.1, 0.05}).has_value());
}

TEST_CASE("zne on a noiseless circuit recovers the exact value") {
    const int n = 4;
    Circuit c = brickwork_clifford_circuit(n, 2, 5);
    NoiseModelMap zero;
    zero.emplace("even", SparsePauliLindblad::zero(n));
    zero.emplace("odd", SparsePauliLindblad::zero(n));
    PauliString obs = conjugate_through_circuit(c, PauliString::from_label("ZZZZ"));
    ZneSeries series = zne_run(c, zero, obs, {1.0, 1.2, 1.6}, 4000, 9);
    for (double m : series.means) CHECK(m == doctest::Approx(1.0));
    ZneBootstrap boot = zne_extrapolate_bootstrap(series, 100, 10);
    CHECK(boot.value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(boot.upper - boot.lower < 1e-9);
}

TEST_CASE("zne with amplified noise stays consistent with theory") {
    // kappa(G) = kappa^G for Pauli channels: the noisy mean of a stabilizer
    // decays as its fidelity product to the G-th power
    const int n = 5;
    Circuit c = brickwork_clifford_circuit(n, 3, 77);
    NoiseModelMap noise;
    noise.emplace("even", sample_spl_rates(n, 2e-2, 1e-2, 8e-3, 4e-3, 21));
    noise.emplace("odd", sample_spl_rates(n, 2e-2, 1e-2, 8e-3, 4e-3, 22));
    PauliString obs = conjugate_through_circuit(c, PauliString::from_label("ZZZZZ"));
    ZneSeries series = zne_run(c, noise, obs, {1.0, 2.0}, 300000, 13);
    // oracle means from dense evolution at each gain
    for (size_t gi = 0; gi < series.gains.size(); ++gi) {
        NoiseModelMap amplified = scale_noise(noise, series.gains[gi]);
        DenseState rho = dense_evolve(c, amplified);
        long idx = 0;
        for (int m = 0; m < n; ++m) idx = idx * 4 + obs.axes[static_cast<size_t>(m)];
        const double want = obs.coeff * std::pow(2.0, 0.5 * n) * rho.ptm[idx];
        CHECK(std::abs(series.means[gi] - want) < 4.0 * series.stderrors[gi] + 1e-12);
    }
    // rate scaling and fidelity powering agree exactly at the kappa level
    const auto& spl = std::get<SparsePauliLindblad>(noise.at("even"));
    SplKappas k1 = spl_kappa(spl);
    SplKappas k2 = spl_kappa(spl.scaled(2.0));
    for (int q = 0; q < n; ++q)
        for (int a = 0; a < 4; ++a)
            CHECK(k2.single[static_cast<size_t>(q)].fidelities[a] ==
                  doctest::Approx(std::pow(k1.single[static_cast<size_t>(q)].fidelities[a], 2.0)).epsilon(1e-12));
}

TEST_CASE("zne bootstrap flags instability when means cluster near zero") {
    ZneSeries series;
    series.gains = {1.0, 1.2, 1.6};
    // per-gain xi with means at the shot-noise floor
    RngStream rng(5);
    for (int g = 0; g < 3; ++g) {
        std::vector<double> xi(3000);
        for (auto& v : xi) v = rng.uniform() < 0.5 + 0.002 * (3 - g) ? 1.0 : -1.0;
        series.per_gain_xi.push_back(xi);
        double mean = 0;
        for (double v : xi) mean += v;
        series.means.push_back(mean / static_cast<double>(xi.size()));
        series.stderrors.push_back(1.0 / std::sqrt(3000.0));
    }
    ZneBootstrap boot = zne_extrapolate_bootstrap(series, 100, 3);
    // wide interval or outright fit failures
    CHECK((boot.failures > 0 || boot.upper - boot.lower > 0.1));
}
