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

#include <functional>
#include <string>
#include <vector>

#include "tem/backends.hpp"
#include "tem/estimator.hpp"
#include "tem/layers.hpp"
#include "tem/mpo.hpp"
#include "tem/noise.hpp"

namespace tem {

/// The noise-mitigation map with its per-iteration truncation ledger.
struct MitigationMap {
    SuperopMPO mpo;
    std::vector<TruncationRecord> ledger;  // one record per circuit layer
    int chi_max = 0;
    std::string fingerprint;

    /// Sum of per-iteration relative truncation errors (the quantity entering
    /// the bias heuristic).
    double relative_error_sum() const;
};

struct EngineOptions {
    int chi_max = 64;
    double tol_rel = 1e-10;
    bool randomized_svd = false;
    std::uint64_t svd_seed = 0;
    double memory_budget_bytes = 4.0e9;
    std::string fingerprint;
};

/// Thrown by the pre-allocation memory guard; the CLI maps it to its
/// resource-guard exit code.
struct MemoryGuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Middle-out construction of the mitigation map: starting from the identity,
/// each circuit layer l updates M <- U_l M U_l^{-1} N_l^{-1} with one
/// compression per multiplied factor and a per-layer ledger entry.
MitigationMap build_mitigation_map(const Circuit& circuit, const NoiseModelMap& noise,
                                   const EngineOptions& opts);

/// Same construction, invoking `snapshot` after the listed layer counts
/// (ascending, 1-based: a value d snapshots the map of the first d layers).
void build_mitigation_map_snapshots(const Circuit& circuit, const NoiseModelMap& noise,
                                    const EngineOptions& opts,
                                    const std::vector<int>& snapshot_depths,
                                    const std::function<void(int, const MitigationMap&)>& snapshot);

/// Truncation-bias heuristic: sqrt(coefficient mass) times the summed
/// per-iteration relative compression errors.
double heuristic_bias(const MitigationMap& map, double coefficient_mass);

/// Perturbation-order estimate for a bond-dimension budget against k-local
/// Pauli noise with n_noisy = (N-1) L two-local maps.
struct OrderEstimate {
    double l1 = 0.0;              // first Stirling iterate
    double l2 = 0.0;              // second iterate (the reported order)
    double first_order_threshold = 0.0;  // 4^k (N-1) L
    bool first_order_guaranteed = false;
};
OrderEstimate order_estimate(int chi, int n, int l, int k = 2);

struct ConvergenceReport {
    std::vector<int> chis;
    std::vector<double> means;
    std::vector<double> stderrors;
    std::vector<double> deltas;  // |mean_{i+1} - mean_i|, size chis-1
    bool converged = false;
};

/// Convergence-in-chi protocol: rebuild the map at each bond dimension,
/// re-estimate the observable on the same fixed outcome set, and flag
/// convergence when the final consecutive change drops below twice the
/// statistical error.
ConvergenceReport convergence_scan(const Circuit& circuit, const NoiseModelMap& noise,
                                   const OutcomeSet& outcomes, const ObservableSpec& obs,
                                   const std::vector<int>& chi_list,
                                   const std::vector<Eigen::Matrix<double, 6, 4>>& duals,
                                   const EngineOptions& base_opts);

}  // namespace tem
