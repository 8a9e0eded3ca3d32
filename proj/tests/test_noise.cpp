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

#include <unsupported/Eigen/MatrixFunctions>

#include "oracles.hpp"
#include "tem/layers.hpp"
#include "tem/noise.hpp"
#include "tem/ptm.hpp"

using namespace tem;

namespace {

SparsePauliLindblad random_model(int n, double scale, std::uint64_t seed) {
    return sample_spl_rates(n, scale, scale * 0.8, 0.4 * scale, 0.5 * scale, seed);
}

// Matrix-exponential oracle: exp(sum_alpha lambda_alpha (PTM(sigma . sigma) - Id)).
Eigen::MatrixXd expm_channel(const SparsePauliLindblad& m) {
    const int n = m.n;
    const long dim = 1l << (2 * n);
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(dim, dim);
    auto add = [&](const PauliString& p, double lam) {
        if (lam == 0.0) return;
        Eigen::MatrixXd conj = ptm_of_kraus({pauli_string_matrix(p)}, n);
        gen += lam * (conj - Eigen::MatrixXd::Identity(dim, dim));
    };
    for (int q = 0; q < n; ++q)
        for (int a = 1; a <= 3; ++a) {
            PauliString p = PauliString::identity(n);
            p.axes[static_cast<size_t>(q)] = static_cast<std::uint8_t>(a);
            add(p, m.single[static_cast<size_t>(q)][static_cast<size_t>(a - 1)]);
        }
    for (int q = 0; q + 1 < n; ++q)
        for (int i = 1; i <= 3; ++i)
            for (int j = 1; j <= 3; ++j) {
                PauliString p = PauliString::identity(n);
                p.axes[static_cast<size_t>(q)] = static_cast<std::uint8_t>(i);
                p.axes[static_cast<size_t>(q + 1)] = static_cast<std::uint8_t>(j);
                add(p, m.pair[static_cast<size_t>(q)][static_cast<size_t>((i - 1) * 3 + (j - 1))]);
            }
    return gen.exp();
}

}  // namespace

TEST_CASE("spl kappas: zero rates, symmetric rates, expm oracle") {
    SparsePauliLindblad zero = SparsePauliLindblad::zero(3);
    SplKappas kz = spl_kappa(zero);
    for (const auto& s : kz.single) CHECK((s.fidelities.array() == 1.0).all());
    for (const auto& p : kz.pair) CHECK((p.fidelities.array() == 1.0).all());

    // lambda_X = lambda_Y = lambda_Z = lambda: depolarizing-like e^{-4 lambda}
    SparsePauliLindblad sym = SparsePauliLindblad::zero(1);
    sym.single[0] = {0.01, 0.01, 0.01};
    SplKappas ks = spl_kappa(sym);
    for (int a = 1; a < 4; ++a)
        CHECK(ks.single[0].fidelities[a] == doctest::Approx(std::exp(-0.04)).epsilon(1e-14));

    // random two-qubit model vs dense matrix exponential
    SparsePauliLindblad m = random_model(2, 1e-3, 5);
    Eigen::MatrixXd oracle = expm_channel(m);
    SplKappas k = spl_kappa(m);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double want = oracle(i * 4 + j, i * 4 + j);
            const double got = k.single[0].fidelities[i] * k.single[1].fidelities[j] *
                               k.pair[0].fidelities[i * 4 + j];
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
        }
    // off-diagonal entries of a Pauli channel vanish
    for (long r = 0; r < 16; ++r)
        for (long c = 0; c < 16; ++c)
            if (r != c) CHECK(std::abs(oracle(r, c)) < 1e-12);
}

TEST_CASE("pair kappa closed forms, all fifteen") {
    SparsePauliLindblad m = SparsePauliLindblad::zero(2);
    RngStream rng(17);
    for (auto& v : m.pair[0]) v = rng.uniform() * 2e-3;
    auto lam = [&](int i, int j) { return m.pair[0][static_cast<size_t>((i - 1) * 3 + (j - 1))]; };
    auto e = [](double x) { return std::exp(-2.0 * x); };
    const Eigen::VectorXd f = spl_kappa(m).pair[0].fidelities;
    CHECK(f[0 * 4 + 1] == doctest::Approx(e(lam(1,2)+lam(1,3)+lam(2,2)+lam(2,3)+lam(3,2)+lam(3,3))).epsilon(1e-14));
    CHECK(f[0 * 4 + 2] == doctest::Approx(e(lam(1,1)+lam(1,3)+lam(2,1)+lam(2,3)+lam(3,1)+lam(3,3))).epsilon(1e-14));
    CHECK(f[0 * 4 + 3] == doctest::Approx(e(lam(1,1)+lam(1,2)+lam(2,1)+lam(2,2)+lam(3,1)+lam(3,2))).epsilon(1e-14));
    CHECK(f[1 * 4 + 0] == doctest::Approx(e(lam(2,1)+lam(2,2)+lam(2,3)+lam(3,1)+lam(3,2)+lam(3,3))).epsilon(1e-14));
    CHECK(f[1 * 4 + 1] == doctest::Approx(e(lam(1,2)+lam(1,3)+lam(2,1)+lam(3,1))).epsilon(1e-14));
    CHECK(f[1 * 4 + 2] == doctest::Approx(e(lam(1,1)+lam(1,3)+lam(2,2)+lam(3,2))).epsilon(1e-14));
    CHECK(f[1 * 4 + 3] == doctest::Approx(e(lam(1,1)+lam(1,2)+lam(2,3)+lam(3,3))).epsilon(1e-14));
    CHECK(f[2 * 4 + 0] == doctest::Approx(e(lam(1,1)+lam(1,2)+lam(1,3)+lam(3,1)+lam(3,2)+lam(3,3))).epsilon(1e-14));
    CHECK(f[2 * 4 + 1] == doctest::Approx(e(lam(1,1)+lam(2,2)+lam(2,3)+lam(3,1))).epsilon(1e-14));
    CHECK(f[2 * 4 + 2] == doctest::Approx(e(lam(1,2)+lam(2,1)+lam(2,3)+lam(3,2))).epsilon(1e-14));
    CHECK(f[2 * 4 + 3] == doctest::Approx(e(lam(1,3)+lam(2,1)+lam(2,2)+lam(3,3))).epsilon(1e-14));
    CHECK(f[3 * 4 + 0] == doctest::Approx(e(lam(1,1)+lam(1,2)+lam(1,3)+lam(2,1)+lam(2,2)+lam(2,3))).epsilon(1e-14));
    CHECK(f[3 * 4 + 1] == doctest::Approx(e(lam(1,1)+lam(2,1)+lam(3,2)+lam(3,3))).epsilon(1e-14));
    CHECK(f[3 * 4 + 2] == doctest::Approx(e(lam(1,2)+lam(2,2)+lam(3,1)+lam(3,3))).epsilon(1e-14));
    CHECK(f[3 * 4 + 3] == doctest::Approx(e(lam(1,3)+lam(2,3)+lam(3,1)+lam(3,2))).epsilon(1e-14));
}

TEST_CASE("spl mpos: identity at zero rates, dense inverse, forward-inverse cancellation") {
    SparsePauliLindblad zero = SparsePauliLindblad::zero(4);
    CHECK(frobenius_distance(spl_inverse_mpo(zero), SuperopMPO::identity(4)) < 1e-12 * 16.0);
    CHECK(frobenius_distance(spl_forward_mpo(zero), SuperopMPO::identity(4)) < 1e-12 * 16.0);

    // N=2, pair rates only: diagonal PTM with entries 1/kappa
    SparsePauliLindblad m2 = SparsePauliLindblad::zero(2);
    RngStream rng(7);
    for (auto& v : m2.pair[0]) v = rng.uniform() * 2e-3;
    Eigen::MatrixXd inv = mpo_to_dense(spl_inverse_mpo(m2));
    Eigen::MatrixXd want = expm_channel(m2).inverse();
    CHECK((inv - want).cwiseAbs().maxCoeff() < 1e-10);

    // forward * inverse = identity, dense check
    for (int n : {2, 4}) {
        SparsePauliLindblad m = random_model(n, 2e-3, 11 + static_cast<std::uint64_t>(n));
        SuperopMPO prod = mpo_multiply(spl_forward_mpo(m), spl_inverse_mpo(m));
        CHECK((mpo_to_dense(prod) - Eigen::MatrixXd::Identity(1l << (2 * n), 1l << (2 * n)))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
        // forward channel matches the matrix exponential
        CHECK((mpo_to_dense(spl_forward_mpo(m)) - expm_channel(m)).cwiseAbs().maxCoeff() < 1e-10);
    }

    // MPO-level cancellation at N = 10 without densifying
    SparsePauliLindblad big = random_model(10, 1e-3, 13);
    SuperopMPO prod = mpo_multiply(spl_forward_mpo(big), spl_inverse_mpo(big));
    const double dist = frobenius_distance(prod, SuperopMPO::identity(10));
    CHECK(dist < 1e-8 * frobenius_norm(SuperopMPO::identity(10)));
}

TEST_CASE("two-qubit depolarizing inverse: spectrum and closed forms") {
    // eps = 0: identity, single singular value 4
    SuperopMPO id2 = depolarizing2_inverse_mpo(0.0);
    CHECK(frobenius_distance(id2, SuperopMPO::identity(2)) < 1e-14);
    auto s0 = bond_spectrum(id2, 0);
    CHECK(s0[0] == doctest::Approx(4.0).epsilon(1e-12));
    for (size_t i = 1; i < s0.size(); ++i) CHECK(s0[i] < 1e-12);

    for (double eps : {1e-3, 1e-2, 0.1}) {
        SuperopMPO inv = depolarizing2_inverse_mpo(eps);
        auto want = depolarizing2_inverse_singular_values(eps);
        auto got = bond_spectrum(inv, 0);
        REQUIRE(got.size() >= 2);
        CHECK(got[0] == doctest::Approx(want[0]).epsilon(1e-12));
        CHECK(got[1] == doctest::Approx(want[1]).epsilon(1e-12));

        // dense inverse map oracle
        Eigen::MatrixXd dense = mpo_to_dense(inv);
        Eigen::VectorXd f(16);
        f.setConstant(1.0 / (1.0 - eps));
        f[0] = 1.0;
        CHECK((dense - Eigen::MatrixXd(f.asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);

        // forward composes to the identity
        SuperopMPO prod = mpo_multiply(depolarizing2_forward_mpo(eps), inv);
        CHECK(frobenius_distance(prod, SuperopMPO::identity(2)) < 1e-12 * 4.0);
    }

    // first-order approximations within 5% at eps = 0.01
    auto sv = depolarizing2_inverse_singular_values(0.01);
    CHECK(std::abs(sv[0] - 4.0 * (1 + 15.0 * 0.01 / 16)) / sv[0] < 0.05);
    CHECK(std::abs(sv[1] - 3.0 * 0.01 / 4) / sv[1] < 0.05);
    // at eps = 0.1 the leading value sits within 1% of 4(1 + 15 eps/16) = 4.375
    auto sv01 = depolarizing2_inverse_singular_values(0.1);
    CHECK(std::abs(sv01[0] - 4.375) / sv01[0] < 1e-2);
    CHECK_THROWS_AS(depolarizing2_inverse_mpo(1.0), std::invalid_argument);
}

TEST_CASE("global depolarizing inverse") {
    CHECK(frobenius_distance(global_depolarizing_inverse(0.05, 3, 0), SuperopMPO::identity(3)) <
          1e-14);

    const double eps = 0.05;
    const int n = 3, l = 2;
    SuperopMPO m = global_depolarizing_inverse(eps, n, l);
    CHECK(m.max_bond() <= 2);
    const double c = std::pow(1.0 - eps, -l);
    const long dim = 1l << (2 * n);
    // rho -> c rho + (1 - c) tr[rho] I / 2^n in PTM form: diagonal, trace row pinned
    Eigen::VectorXd f = Eigen::VectorXd::Constant(dim, c);
    f[0] = 1.0;
    CHECK((mpo_to_dense(m) - Eigen::MatrixXd(f.asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);

    // commutes with any unitary layer (dense, N = 3)
    RngStream rng(23);
    std::vector<Eigen::Matrix2cd> us;
    for (int q = 0; q < 3; ++q) us.push_back(Eigen::Matrix2cd(tem::testing::random_unitary(2, rng)));
    SuperopMPO u = single_qubit_layer_mpo(us);
    Eigen::MatrixXd lhs = mpo_to_dense(mpo_multiply(m, u));
    Eigen::MatrixXd rhs = mpo_to_dense(mpo_multiply(u, m));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gamma pec") {
    // single-qubit depolarizing eps as an equal-rate Lindblad model
    const double eps = 0.01;
    SparsePauliLindblad dep1 = SparsePauliLindblad::zero(1);
    const double lam = -std::log(1.0 - eps) / 4.0;
    dep1.single[0] = {lam, lam, lam};
    CHECK(gamma_pec(NoiseModel(dep1), 1) == doctest::Approx(1.0 + 1.5 * eps).epsilon(2e-4));

    // two-qubit depolarizing, exact joint quasiprobability norm
    NoiseModel dep2 = TwoQubitDepolarizing{eps, 0};
    CHECK(gamma_pec(dep2, 2) == doctest::Approx(1.0 + 15.0 * eps / 8).epsilon(3e-4));
    // oracle: sum |quasiprob| of the exact inverse channel
    Eigen::VectorXd f(16);
    f.setConstant(1.0 / (1.0 - eps));
    f[0] = 1.0;
    CHECK(gamma_pec(dep2, 2) ==
          doctest::Approx(quasiprob_of_fidelities(f, 2).cwiseAbs().sum()).epsilon(1e-12));

    // layers multiply
    std::vector<NoiseModel> layers = {dep2, dep2};
    CHECK(gamma_pec(layers, 2) == doctest::Approx(gamma_pec(dep2, 2) * gamma_pec(dep2, 2)));
}

TEST_CASE("gamma tem") {
    const double eps = 0.01;
    SparsePauliLindblad dep1 = SparsePauliLindblad::zero(1);
    const double lam = -std::log(1.0 - eps) / 4.0;
    dep1.single[0] = {lam, lam, lam};
    CHECK(gamma_tem(NoiseModel(dep1), PauliString::identity(1)) == doctest::Approx(1.0));
    CHECK(gamma_tem(NoiseModel(dep1), PauliString::from_label("Z")) ==
          doctest::Approx(1.0 / (1.0 - eps)).epsilon(1e-12));

    // flat average over the 15 two-qubit Paulis under depolarizing noise:
    // about 1 + 15 eps/16, roughly sqrt(gamma_pec)
    NoiseModel dep2 = TwoQubitDepolarizing{eps, 0};
    double avg = 0.0;
    int count = 0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            if (a == 0 && b == 0) continue;
            PauliString p = PauliString::identity(2);
            p.axes[0] = static_cast<std::uint8_t>(a);
            p.axes[1] = static_cast<std::uint8_t>(b);
            avg += gamma_tem(dep2, p);
            ++count;
        }
    avg = (avg + 1.0) / 16.0;  // include the identity string
    CHECK(avg == doctest::Approx(1.0 + 15.0 * eps / 16).epsilon(2e-4));
    CHECK(avg == doctest::Approx(std::sqrt(gamma_pec(dep2, 2))).epsilon(5e-4));

    // gamma_tem <= gamma_pec for every string, exhaustively at N = 4
    SparsePauliLindblad m = random_model(4, 2e-3, 31);
    const double gp = gamma_pec(NoiseModel(m), 4);
    for (long idx = 0; idx < 256; ++idx) {
        PauliString p = PauliString::identity(4);
        long rem = idx;
        for (int q = 0; q < 4; ++q) {
            p.axes[static_cast<size_t>(q)] = static_cast<std::uint8_t>(rem % 4);
            rem /= 4;
        }
        const double gt = gamma_tem(NoiseModel(m), p);
        CHECK(gt >= 1.0 - 1e-12);
        CHECK(gt <= gp + 1e-12);
    }
}

TEST_CASE("rate sampling recipe") {
    SparsePauliLindblad a = sample_spl_rates(5, 1e-3, 0.0, 4e-4, 0.0, 1);
    for (const auto& s : a.single)
        for (double v : s) CHECK(v == doctest::Approx(1e-3));
    for (const auto& p : a.pair)
        for (double v : p) CHECK(v == doctest::Approx(4e-4));

    SparsePauliLindblad b1 = sample_spl_rates(5, 1e-3, 9e-4, 4e-4, 6e-4, 77);
    SparsePauliLindblad b2 = sample_spl_rates(5, 1e-3, 9e-4, 4e-4, 6e-4, 77);
    CHECK(b1.single == b2.single);
    CHECK(b1.pair == b2.pair);
    b1.validate();  // no negatives after clamping

    // paper Trotter recipe: per-layer gamma_pec lands in [1.1, 1.3]
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SparsePauliLindblad m = sample_spl_rates(10, 1e-3, 9e-4, 4e-4, 6e-4, seed);
        const double g = gamma_pec(NoiseModel(m), 10);
        CHECK(g > 1.1);
        CHECK(g < 1.3);
    }

    // stabilizer-circuit recipe at N=100: per-layer per-qubit overhead near 9.1e-4
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SparsePauliLindblad m = sample_spl_rates(100, 6.67e-5, 6.67e-5, 2.22e-5, 2.22e-5, seed);
        const double gbar = std::pow(gamma_pec(NoiseModel(m), 100), 1.0 / 100);
        CHECK(gbar - 1.0 > 9.1e-4 / 1.5);
        CHECK(gbar - 1.0 < 9.1e-4 * 1.5);
    }
}

TEST_CASE("pauli error sampler statistics") {
    RngStream rng(101);
    SparsePauliLindblad zero = SparsePauliLindblad::zero(2);
    for (int i = 0; i < 100; ++i)
        CHECK(sample_noise_error(NoiseModel(zero), 2, rng).weight() == 0);

    // single Z generator: P(Z) = (1 - e^{-2 lambda})/2
    SparsePauliLindblad mz = SparsePauliLindblad::zero(1);
    mz.single[0] = {0.0, 0.0, 0.01};
    const double pz = 0.5 * (1.0 - std::exp(-0.02));
    int hits = 0;
    const int shots = 200000;
    for (int i = 0; i < shots; ++i)
        hits += sample_noise_error(NoiseModel(mz), 1, rng).axes[0] == 3;
    const double sigma = std::sqrt(pz * (1 - pz) / shots);
    CHECK(std::abs(static_cast<double>(hits) / shots - pz) < 4 * sigma);

    // empirical channel fidelities match spl_kappa within 3 standard errors
    SparsePauliLindblad m = random_model(2, 5e-3, 991);
    SplKappas k = spl_kappa(m);
    const int samples = 300000;
    for (const char* label : {"ZI", "XY", "ZZ", "IY"}) {
        PauliString obs = PauliString::from_label(label);
        double acc = 0.0;
        RngStream r2(55);
        for (int i = 0; i < samples; ++i) {
            PauliString err = sample_noise_error(NoiseModel(m), 2, r2);
            acc += symplectic_form(err, obs) ? -1.0 : 1.0;
        }
        const double got = acc / samples;
        const double want = k.single[0].fidelities[obs.axes[0]] * k.single[1].fidelities[obs.axes[1]] *
                            k.pair[0].fidelities[obs.axes[0] * 4 + obs.axes[1]];
        const double se = std::sqrt((1 - want * want) / samples) + 1e-9;
        CHECK(std::abs(got - want) < 3 * se);
    }
}

TEST_CASE("pec generators normalize to gamma") {
    SparsePauliLindblad m = random_model(3, 2e-3, 7);
    auto gens = pec_generators(NoiseModel(m), 3);
    double gamma = 1.0;
    for (const auto& g : gens) {
        gamma *= g.weight;
        CHECK(g.insert_prob >= 0.0);
        CHECK(g.insert_prob <= 0.5);
    }
    CHECK(gamma == doctest::Approx(gamma_pec(NoiseModel(m), 3)).epsilon(1e-12));
    CHECK_THROWS_AS(pec_generators(NoiseModel(GlobalDepolarizing{0.1}), 3), std::invalid_argument);
}
