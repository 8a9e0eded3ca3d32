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

#include "tem/engine.hpp"

#include <cmath>

namespace tem {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Peak transient storage of one zip-up apply: the boundary-times-product-site
// intermediates plus the matricized SVD input, from the actual bond
// dimensions involved.
double predicted_apply_bytes(int factor_bond, int map_bond, int chi_max, double zip_slack) {
    const double product = static_cast<double>(factor_bond) * map_bond;
    const double zip = std::min(zip_slack * chi_max + 8, product * 16);
    return 8.0 * 4.0 * zip * 16.0 * product;
}

// Multiply in a factor of bond 1 exactly (bond dimensions are unchanged, no
// truncation): used for single-qubit layers.
SuperopMPO multiply_bond1(const SuperopMPO& factor, const SuperopMPO& map, bool factor_left) {
    return factor_left ? mpo_multiply(factor, map) : mpo_multiply(map, factor);
}

struct StageResult {
    SuperopMPO mpo;
    double discarded_weight = 0.0;
    double relative_error = 0.0;
};

StageResult apply_stage(const SuperopMPO& factor, const SuperopMPO& map, bool factor_left,
                        const EngineOptions& opts, std::uint64_t stage_id) {
    StageResult out;
    if (factor.max_bond() == 1) {
        out.mpo = multiply_bond1(factor, map, factor_left);
        return out;
    }
    ApplyOptions aopts;
    aopts.limit = {.chi_max = opts.chi_max, .tol_rel = opts.tol_rel};
    aopts.randomized = opts.randomized_svd;
    aopts.rsvd_seed = RngStream::splitmix(opts.svd_seed ^ stage_id);
    if (predicted_apply_bytes(factor.max_bond(), map.max_bond(), opts.chi_max, aopts.zip_slack) >
        opts.memory_budget_bytes)
        throw MemoryGuardError(
            "mitigation map build would exceed the memory budget at chi_max=" +
            std::to_string(opts.chi_max) + "; lower chi or raise the budget");
    if (factor_left) {
        auto [mpo, rec] = apply_compress(factor, map, aopts);
        out.mpo = std::move(mpo);
        out.discarded_weight = rec.discarded_weight;
        out.relative_error = rec.relative_error;
    } else {
        // map * factor computed as (factor^T * map^T)^T to keep the narrow
        // operand on the cheap side of the zip-up contraction
        auto [mpo, rec] = apply_compress(transpose_mpo(factor), transpose_mpo(map), aopts);
        out.mpo = transpose_mpo(mpo);
        out.discarded_weight = rec.discarded_weight;
        out.relative_error = rec.relative_error;
    }
    return out;
}

}  // namespace

double MitigationMap::relative_error_sum() const {
    double acc = 0.0;
    for (const auto& rec : ledger) acc += rec.relative_error;
    return acc;
}

void build_mitigation_map_snapshots(const Circuit& circuit, const NoiseModelMap& noise,
                                    const EngineOptions& opts,
                                    const std::vector<int>& snapshot_depths,
                                    const std::function<void(int, const MitigationMap&)>& snapshot) {
    circuit.validate();
    if (opts.chi_max < 1) throw std::invalid_argument("build_mitigation_map: chi_max must be >= 1");
    const int n = circuit.n;

    std::vector<std::vector<const NoiseModel*>> attach(static_cast<size_t>(circuit.depth()));
    for (const auto& a : circuit.noise) {
        auto it = noise.find(a.model_id);
        if (it == noise.end())
            throw std::invalid_argument("build_mitigation_map: unattached noise id '" + a.model_id + "'");
        attach[static_cast<size_t>(a.after_layer)].push_back(&it->second);
    }

    MitigationMap map;
    map.mpo = SuperopMPO::identity(n);
    map.chi_max = opts.chi_max;
    map.fingerprint = opts.fingerprint;

    size_t next_snapshot = 0;
    auto maybe_snapshot = [&](int depth_done) {
        while (next_snapshot < snapshot_depths.size() &&
               snapshot_depths[next_snapshot] == depth_done) {
            snapshot(depth_done, map);
            ++next_snapshot;
        }
    };
    maybe_snapshot(0);

    for (int l = 0; l < circuit.depth(); ++l) {
        const CircuitLayer& layer = circuit.layers[static_cast<size_t>(l)];
        SuperopMPO u = layer_mpo(layer, n);
        SuperopMPO uinv = inverse_layer_mpo(layer, n);
        // W_l = U_l^{-1} * N_l^{-1}, a narrow fixed factor per layer
        SuperopMPO w = std::move(uinv);
        for (const NoiseModel* m : attach[static_cast<size_t>(l)]) {
            w = mpo_multiply(w, noise_inverse_mpo(*m, n));
            auto [wc, wrec] = mpo_compress(w, {.chi_max = 1 << 20, .tol_rel = 1e-14}, false);
            w = std::move(wc);
        }

        TruncationRecord rec;
        const std::uint64_t base_id = static_cast<std::uint64_t>(l) * 4;
        StageResult s1 = apply_stage(u, map.mpo, true, opts, base_id);
        StageResult s2 = apply_stage(w, s1.mpo, false, opts, base_id + 1);
        rec.discarded_weight = s1.discarded_weight + s2.discarded_weight;
        rec.relative_error = s1.relative_error + s2.relative_error;
        map.mpo = std::move(s2.mpo);
        map.ledger.push_back(std::move(rec));
        maybe_snapshot(l + 1);
    }
    maybe_snapshot(circuit.depth());
}

MitigationMap build_mitigation_map(const Circuit& circuit, const NoiseModelMap& noise,
                                   const EngineOptions& opts) {
    MitigationMap out;
    build_mitigation_map_snapshots(circuit, noise, opts, {circuit.depth()},
                                   [&](int, const MitigationMap& m) { out = m; });
    return out;
}

double heuristic_bias(const MitigationMap& map, double coefficient_mass) {
    return std::sqrt(coefficient_mass) * map.relative_error_sum();
}

OrderEstimate order_estimate(int chi, int n, int l, int k) {
    if (chi < 1) throw std::invalid_argument("order_estimate: chi must be >= 1");
    OrderEstimate out;
    const double n_noisy = static_cast<double>(n - 1) * l;
    const double base = std::pow(4.0, k) * n_noisy;
    out.first_order_threshold = base;
    out.first_order_guaranteed = chi > base;
    if (chi <= 1 || base <= 1.0) {
        out.l1 = 0.0;
        out.l2 = 0.0;
        return out;
    }
    const double lchi = std::log(static_cast<double>(chi));
    out.l1 = lchi / std::log(base);
    if (out.l1 <= 0.0) {
        out.l2 = 0.0;
        return out;
    }
    out.l2 = (lchi + 0.5 * std::log(2.0 * kPi * out.l1)) / (std::log(base) + 1.0 - std::log(out.l1));
    return out;
}

ConvergenceReport convergence_scan(const Circuit& circuit, const NoiseModelMap& noise,
                                   const OutcomeSet& outcomes, const ObservableSpec& obs,
                                   const std::vector<int>& chi_list,
                                   const std::vector<Eigen::Matrix<double, 6, 4>>& duals,
                                   const EngineOptions& base_opts) {
    if (chi_list.empty()) throw std::invalid_argument("convergence_scan: empty chi list");
    for (size_t i = 1; i < chi_list.size(); ++i)
        if (chi_list[i] <= chi_list[i - 1])
            throw std::invalid_argument("convergence_scan: chi list must ascend");
    ConvergenceReport rep;
    rep.chis = chi_list;
    for (int chi : chi_list) {
        EngineOptions opts = base_opts;
        opts.chi_max = chi;
        MitigationMap map = build_mitigation_map(circuit, noise, opts);
        SuperopMPO evolved =
            evolve_observable(&map.mpo, obs, {.chi_max = chi, .tol_rel = opts.tol_rel});
        std::vector<double> xi = xi_values(outcomes, evolved, duals);
        EstimateReport est = estimate(xi, outcomes.Q, outcomes.M);
        rep.means.push_back(est.mean);
        rep.stderrors.push_back(est.stderror);
    }
    for (size_t i = 0; i + 1 < rep.means.size(); ++i)
        rep.deltas.push_back(std::abs(rep.means[i + 1] - rep.means[i]));
    rep.converged = !rep.deltas.empty() &&
                    rep.deltas.back() < 2.0 * rep.stderrors[rep.stderrors.size() - 2];
    return rep;
}

}  // namespace tem
