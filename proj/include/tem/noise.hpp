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

#pragma once

#include <array>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tem/mpo.hpp"
#include "tem/pauli.hpp"
#include "tem/rng.hpp"

namespace tem {

/// Sparse Pauli-Lindblad model on a linear chain: three single-qubit rates
/// per qubit (X, Y, Z jumps) and nine rates per adjacent pair, 12N-9
/// parameters in total. All rates are dimensionless and non-negative.
struct SparsePauliLindblad {
    int n = 0;
    std::vector<std::array<double, 3>> single;  // [qubit][axis-1]
    std::vector<std::array<double, 9>> pair;    // [left qubit][(i-1)*3 + (j-1)]

    static SparsePauliLindblad zero(int n);
    void validate() const;
    SparsePauliLindblad scaled(double gain) const;
    double total_rate() const;
    int rate_count() const { return 3 * n + 9 * (n - 1); }
};

/// Two-qubit depolarizing channel of intensity eps on the adjacent pair
/// (q, q+1).
struct TwoQubitDepolarizing {
    double eps = 0.0;
    int q = 0;
};

/// N-qubit global depolarizing channel of intensity eps.
struct GlobalDepolarizing {
    double eps = 0.0;
};

using NoiseModel = std::variant<SparsePauliLindblad, TwoQubitDepolarizing, GlobalDepolarizing>;
using NoiseModelMap = std::map<std::string, NoiseModel>;

/// Diagonal-PTM Pauli channel on 1 or 2 sites: fidelities[0] == 1 and
/// |fidelities| <= 1 for a physical channel.
struct PauliChannelDiag {
    int sites = 1;
    Eigen::VectorXd fidelities;  // length 4 or 16
};

struct SplKappas {
    std::vector<PauliChannelDiag> single;  // length n
    std::vector<PauliChannelDiag> pair;    // length n-1
};

/// Closed-form channel fidelities kappa of the sparse Pauli-Lindblad factors,
/// kappa_beta = exp(-2 sum_{alpha anticommuting with beta} lambda_alpha).
SplKappas spl_kappa(const SparsePauliLindblad& m);

/// Bond-4 MPO of the inverse (sign-flipped rates) and forward channel.
SuperopMPO spl_inverse_mpo(const SparsePauliLindblad& m);
SuperopMPO spl_forward_mpo(const SparsePauliLindblad& m);

/// Two-site MPO of the inverse / forward two-qubit depolarizing channel
/// (bond 2).
SuperopMPO depolarizing2_inverse_mpo(double eps);
SuperopMPO depolarizing2_forward_mpo(double eps);

/// Exact non-zero singular values {Sigma_0, Sigma_1} of the two-site inverse
/// depolarizing MPO across its link.
std::array<double, 2> depolarizing2_inverse_singular_values(double eps);

/// Bond-2 MPO implementing the inverse of L layers of global depolarizing
/// noise: rho -> (1-eps)^{-L} rho + (1 - (1-eps)^{-L}) tr[rho] I / 2^N.
SuperopMPO global_depolarizing_inverse(double eps, int n, int l);

/// MPOs of an attached noise model embedded in an n-qubit register.
SuperopMPO noise_forward_mpo(const NoiseModel& m, int n);
SuperopMPO noise_inverse_mpo(const NoiseModel& m, int n);

/// PEC sampling overhead gamma = sum of |quasiprobabilities| of the inverse.
/// For the sparse Pauli-Lindblad model this is the per-generator product
/// exp(2 sum_alpha lambda_alpha).
double gamma_pec(const NoiseModel& m, int n);
double gamma_pec(const std::vector<NoiseModel>& layers, int n);

/// TEM amplification of a Pauli-string observable: the factor by which the
/// inverse noise scales the string, 1 <= gamma_tem <= gamma_pec.
double gamma_tem(const NoiseModel& m, const PauliString& obs);
double gamma_tem(const std::vector<NoiseModel>& layers, const PauliString& obs);

/// Rate-sampling recipe: normal draws (negatives clamped to zero),
/// deterministic in the seed. Draw order: single-qubit rates by (qubit,
/// axis), then pair rates by (left qubit, i, j).
SparsePauliLindblad sample_spl_rates(int n, double single_mean, double single_std,
                                     double pair_mean, double pair_std, std::uint64_t seed);

/// One sampled Pauli error of an attached noise model (Pauli-frame
/// unraveling): each Lindblad generator fires independently with probability
/// (1 - exp(-2 lambda)) / 2.
PauliString sample_noise_error(const NoiseModel& m, int n, RngStream& rng);

/// Per-generator PEC decomposition entry of the inverse channel: insert
/// `pauli` with probability `insert_prob`, flipping the sample sign;
/// `weight` multiplies into gamma.
struct PecGenerator {
    PauliString pauli;
    double insert_prob;
    double weight;
};
std::vector<PecGenerator> pec_generators(const NoiseModel& m, int n);

}  // namespace tem
