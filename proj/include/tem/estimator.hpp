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

#include <optional>
#include <string>
#include <vector>

#include "tem/backends.hpp"
#include "tem/mpo.hpp"
#include "tem/pauli.hpp"

namespace tem {

/// Observable as a weighted Pauli-string sum or directly as a PTM-form MPS.
struct ObservableSpec {
    int n = 0;
    std::vector<PauliString> terms;
    std::optional<SuperopMPO> mpo;

    static ObservableSpec single(PauliString p) {
        ObservableSpec o;
        o.n = p.size();
        o.terms.push_back(std::move(p));
        return o;
    }
    void validate() const;
    /// Sum of |c_beta| over the term list (1 for an MPO-specified observable),
    /// the coefficient mass entering the truncation-bias heuristic.
    double coefficient_mass() const;
};

/// Exact PTM-MPS of the observable (direct sum over terms, then compressed
/// at numerical tolerance).
SuperopMPO observable_mps(const ObservableSpec& obs);

struct EstimateReport {
    double mean = 0.0;
    double stderror = 0.0;
    std::vector<double> circuit_means;  // xi(q)
    double bias_bound = 0.0;            // truncation-bias heuristic, if known
    double overhead = -1.0;             // filled by measured_overhead
    int Q = 0, M = 0;
    long S = 0;
    std::string fingerprint;
};

/// Heisenberg-evolved observable M^T(O), compressed to `limit`.
/// `map_fingerprint` (when non-empty) is recorded so mismatched outcome sets
/// are rejected later.
SuperopMPO evolve_observable(const SuperopMPO* map, const ObservableSpec& obs,
                             const CompressLimit& limit);

/// Per-shot contraction values xi(q, m) = tr[D_k M^T(O)] via left-to-right
/// transfer sweeps over the evolved observable. `duals` holds one 6x4 dual
/// row matrix per qubit (rows indexed by outcome k = 2*axis + sign).
std::vector<double> xi_values(const OutcomeSet& outcomes, const SuperopMPO& evolved,
                              const std::vector<Eigen::Matrix<double, 6, 4>>& duals);

/// Convenience: the same dual matrix on every qubit.
std::vector<double> xi_values(const OutcomeSet& outcomes, const SuperopMPO& evolved,
                              const Eigen::Matrix<double, 6, 4>& duals);

/// Mean and statistical error. Uses the grouped (per-circuit) error formula
/// whenever Q > 1, the plain sample formula otherwise; the two coincide at
/// Q = 1 or M = 1.
EstimateReport estimate(const std::vector<double>& xi, int Q, int M);

/// Ratio of mitigated to unmitigated statistical errors at matched budgets.
double measured_overhead(const EstimateReport& mitigated, const EstimateReport& noisy);

}  // namespace tem
