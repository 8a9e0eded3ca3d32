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

#include "oracles.hpp"
#include "tem/engine.hpp"
#include "tem/io.hpp"
#include "tem/ptm.hpp"

using namespace tem;

namespace {

// Dense oracle of the full mitigation map: (prod_l U_l) (prod_l U_l^{-1} N_l^{-1}).
Eigen::MatrixXd dense_mitigation_map(const Circuit& circuit, const NoiseModelMap& noise) {
    const int n = circuit.n;
    const long dim = 1l << (2 * n);
    Eigen::MatrixXd unitary_part = Eigen::MatrixXd::Identity(dim, dim);
    Eigen::MatrixXd inverse_part = Eigen::MatrixXd::Identity(dim, dim);
    std::map<int, std::vector<std::string>> attach;
    for (const auto& a : circuit.noise) attach[a.after_layer].push_back(a.model_id);
    for (int l = 0; l < circuit.depth(); ++l) {
        Eigen::MatrixXd u = mpo_to_dense(layer_mpo(circuit.layers[static_cast<size_t>(l)], n));
        unitary_part = u * unitary_part;
        Eigen::MatrixXd w = u.transpose();  // unitary PTMs are orthogonal
        for (const auto& id : attach[l])
            w = w * mpo_to_dense(noise_inverse_mpo(noise.at(id), n));
        inverse_part = inverse_part * w;
    }
    return unitary_part * inverse_part;
}

}  // namespace

TEST_CASE("noiseless circuits mitigate to the identity") {
    Circuit c = trotter_circuit(4, 2, 1.0, 0.5236, 0.5);
    c.noise.clear();
    EngineOptions opts;
    opts.chi_max = 256;
    opts.tol_rel = 1e-12;
    MitigationMap map = build_mitigation_map(c, {}, opts);
    CHECK(frobenius_distance(map.mpo, SuperopMPO::identity(4)) < 1e-8 * std::pow(2.0, 4));
    CHECK(map.relative_error_sum() < 1e-9);
    CHECK(static_cast<int>(map.ledger.size()) == c.depth());
}

TEST_CASE("exact regime equals the dense composition") {
    const int n = 3;
    Circuit c = trotter_circuit(n, 1, 1.0, 0.5236, 0.5);
    NoiseModelMap noise;
    // strong rates so ordering mistakes cannot hide below the tolerance
    noise.emplace("layer1", sample_spl_rates(n, 2e-2, 1e-2, 1e-2, 5e-3, 3));
    noise.emplace("layer2", sample_spl_rates(n, 2e-2, 1e-2, 1e-2, 5e-3, 4));
    EngineOptions opts;
    opts.chi_max = 1 << 12;
    opts.tol_rel = 1e-13;
    MitigationMap map = build_mitigation_map(c, noise, opts);
    Eigen::MatrixXd want = dense_mitigation_map(c, noise);
    Eigen::MatrixXd got = mpo_to_dense(map.mpo);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-9 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("global depolarizing noise is mitigated exactly at chi = 2") {
    const int n = 3, depth = 3;
    Circuit c = trotter_circuit(n, depth, 1.0, 0.5236, 0.5);
    c.noise.clear();
    const double eps = 0.05;
    NoiseModelMap noise;
    noise.emplace("g", GlobalDepolarizing{eps});
    int layers_with_noise = 0;
    for (int l = 0; l < c.depth(); ++l)
        if (c.layers[static_cast<size_t>(l)].kind == LayerKind::Cnot) {
            c.noise.push_back({l, "g"});
            ++layers_with_noise;
        }

    EngineOptions opts;
    opts.chi_max = 2;
    opts.tol_rel = 1e-12;
    MitigationMap map = build_mitigation_map(c, noise, opts);
    CHECK(map.mpo.max_bond() <= 2);
    CHECK(map.relative_error_sum() < 1e-9);
    SuperopMPO want = global_depolarizing_inverse(eps, n, layers_with_noise);
    CHECK((mpo_to_dense(map.mpo) - mpo_to_dense(want)).cwiseAbs().maxCoeff() <
          1e-8 * mpo_to_dense(want).cwiseAbs().maxCoeff());
}

TEST_CASE("bond growth law of the raw multiplication") {
    // chi after one uncompressed iteration factor set: 16 * chi_n * chi_prev
    RngStream rng(5);
    SuperopMPO m = tem::testing::random_mpo(4, 3, rng);
    SuperopMPO u = cnot_layer_mpo({{0, 1}, {2, 3}}, 4);
    SuperopMPO ninv = spl_inverse_mpo(sample_spl_rates(4, 1e-3, 5e-4, 5e-4, 2e-4, 9));
    SuperopMPO product = mpo_multiply(mpo_multiply(u, m), mpo_multiply(u, ninv));
    const auto bonds = product.bond_dims();
    // links crossed by a CNOT: 16 (U and U^inv) * chi_n (4) * chi_prev (3)
    CHECK(bonds[0] == 16 * 4 * 3);
    CHECK(bonds[2] == 16 * 4 * 3);
    // the middle link is not crossed by this brickwork layer
    CHECK(bonds[1] == 4 * 3);
}

TEST_CASE("memory guard aborts before allocation") {
    Circuit c = trotter_circuit(4, 1, 1.0, 0.5236, 0.5);
    NoiseModelMap noise;
    noise.emplace("layer1", sample_spl_rates(4, 1e-3, 5e-4, 5e-4, 2e-4, 1));
    noise.emplace("layer2", sample_spl_rates(4, 1e-3, 5e-4, 5e-4, 2e-4, 2));
    EngineOptions opts;
    opts.chi_max = 4096;
    opts.tol_rel = 0.0;
    opts.memory_budget_bytes = 1e6;
    CHECK_THROWS_AS(build_mitigation_map(c, noise, opts), MemoryGuardError);
}

TEST_CASE("ledger entries track truncation pressure") {
    const int n = 4;
    Circuit c = trotter_circuit(n, 2, 1.0, 0.5236, 0.5);
    NoiseModelMap noise;
    noise.emplace("layer1", sample_spl_rates(n, 5e-3, 2e-3, 2e-3, 1e-3, 21));
    noise.emplace("layer2", sample_spl_rates(n, 5e-3, 2e-3, 2e-3, 1e-3, 22));
    EngineOptions tight;
    tight.chi_max = 4;
    tight.tol_rel = 0.0;
    MitigationMap squeezed = build_mitigation_map(c, noise, tight);
    EngineOptions loose;
    loose.chi_max = 1 << 12;
    loose.tol_rel = 1e-13;
    MitigationMap free_map = build_mitigation_map(c, noise, loose);
    CHECK(squeezed.relative_error_sum() > free_map.relative_error_sum());
    CHECK(squeezed.relative_error_sum() > 0.0);
    // heuristic bias is monotone in the ledger and zero without truncation
    CHECK(heuristic_bias(squeezed, 1.0) == doctest::Approx(squeezed.relative_error_sum()));
    CHECK(heuristic_bias(free_map, 4.0) == doctest::Approx(2.0 * free_map.relative_error_sum()));
    CHECK(heuristic_bias(free_map, 1.0) < 1e-9);
}

TEST_CASE("single-layer truncation error matches the dense distance") {
    const int n = 3;
    Circuit c;
    c.n = n;
    c.layers.push_back(CircuitLayer::cnot({{0, 1}}));
    c.noise.push_back({0, "m"});
    NoiseModelMap noise;
    noise.emplace("m", sample_spl_rates(n, 2e-2, 1e-2, 1e-2, 8e-3, 51));
    EngineOptions opts;
    opts.chi_max = 2;
    opts.tol_rel = 0.0;
    MitigationMap map = build_mitigation_map(c, noise, opts);
    Eigen::MatrixXd exact = dense_mitigation_map(c, noise);
    const double true_err = (mpo_to_dense(map.mpo) - exact).norm() / exact.norm();
    // the ledger bound must cover the measured relative error
    CHECK(map.ledger[0].relative_error >= true_err * 0.99);
    CHECK(map.ledger[0].relative_error < 40.0 * true_err + 1e-12);
}

TEST_CASE("snapshots build prefix maps incrementally") {
    const int n = 3;
    Circuit c = trotter_circuit(n, 2, 1.0, 0.5236, 0.5);
    NoiseModelMap noise;
    noise.emplace("layer1", sample_spl_rates(n, 3e-3, 1e-3, 1e-3, 5e-4, 31));
    noise.emplace("layer2", sample_spl_rates(n, 3e-3, 1e-3, 1e-3, 5e-4, 32));
    EngineOptions opts;
    opts.chi_max = 1 << 12;
    opts.tol_rel = 1e-13;
    std::vector<int> depths = {7, 14};
    std::vector<Eigen::MatrixXd> got;
    build_mitigation_map_snapshots(c, noise, opts, depths, [&](int, const MitigationMap& m) {
        got.push_back(mpo_to_dense(m.mpo));
    });
    REQUIRE(got.size() == 2);
    for (size_t i = 0; i < depths.size(); ++i) {
        Circuit prefix = c;
        prefix.layers.resize(static_cast<size_t>(depths[i]));
        prefix.noise.clear();
        for (const auto& a : c.noise)
            if (a.after_layer < depths[i]) prefix.noise.push_back(a);
        Eigen::MatrixXd want = dense_mitigation_map(prefix, noise);
        CHECK((got[i] - want).cwiseAbs().maxCoeff() < 1e-9 * want.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("second singular value of the map scales linearly in the noise") {
    const int n = 4;
    std::vector<double> eps = {1e-3, 1e-2};
    std::vector<double> ratios;
    for (double e : eps) {
        Circuit c = trotter_circuit(n, 1, 1.0, 0.5236, 0.5);
        // depolarizing pair noise of strength e on every CNOT layer
        NoiseModelMap noise;
        noise.emplace("layer1", TwoQubitDepolarizing{e, 0});
        noise.emplace("layer2", TwoQubitDepolarizing{e, 1});
        EngineOptions opts;
        opts.chi_max = 1 << 10;
        opts.tol_rel = 1e-13;
        MitigationMap map = build_mitigation_map(c, noise, opts);
        auto spec = bond_spectrum(map.mpo, n / 2 - 1);
        REQUIRE(spec.size() >= 2);
        ratios.push_back(spec[1] / spec[0]);
    }
    const double slope = std::log(ratios[1] / ratios[0]) / std::log(eps[1] / eps[0]);
    CHECK(slope > 0.7);
    CHECK(slope < 1.3);
}

TEST_CASE("order estimate closed form and fixed-point oracle") {
    OrderEstimate e0 = order_estimate(1, 10, 4);
    CHECK(e0.l2 == doctest::Approx(0.0));
    CHECK_FALSE(e0.first_order_guaranteed);

    OrderEstimate big = order_estimate(16 * 9 * 4 + 1, 10, 4);
    CHECK(big.first_order_guaranteed);
    CHECK(big.first_order_threshold == doctest::Approx(16.0 * 9 * 4));

    OrderEstimate e = order_estimate(700, 10, 4);
    // fixed point of the same Stirling iteration
    const double base = 16.0 * 9 * 4;
    double l = std::log(700.0) / std::log(base);
    for (int it = 0; it < 200; ++it)
        l = (std::log(700.0) + 0.5 * std::log(2.0 * 3.14159265358979 * l)) /
            (std::log(base) + 1.0 - std::log(l));
    CHECK(std::abs(e.l2 - l) < 5e-3);
    CHECK_THROWS_AS(order_estimate(0, 10, 4), std::invalid_argument);
}

TEST_CASE("convergence scan on a noiseless instance converges immediately") {
    const int n = 3;
    Circuit c = trotter_circuit(n, 1, 1.0, 0.5236, 0.5);
    c.noise.clear();
    DenseState rho = dense_evolve(c, {});
    OutcomeSet out = sample_ic_outcomes(rho, {0.2, 0.2, 0.6}, 2, 4000, 3);
    ObservableSpec obs = ObservableSpec::single(PauliString::from_label("ZZZ"));
    std::vector<Eigen::Matrix<double, 6, 4>> duals(3, dual_operators(0.2, 0.2, 0.6));
    EngineOptions opts;
    opts.tol_rel = 1e-12;
    ConvergenceReport rep = convergence_scan(c, {}, out, obs, {2, 4, 8}, duals, opts);
    CHECK(rep.converged);
    for (double d : rep.deltas) CHECK(d < 1e-8);

    ConvergenceReport single = convergence_scan(c, {}, out, obs, {4}, duals, opts);
    CHECK_FALSE(single.converged);
    CHECK(single.means.size() == 1);
    CHECK_THROWS_AS(convergence_scan(c, {}, out, obs, {}, duals, opts), std::invalid_argument);
    CHECK_THROWS_AS(convergence_scan(c, {}, out, obs, {4, 4}, duals, opts), std::invalid_argument);
}
