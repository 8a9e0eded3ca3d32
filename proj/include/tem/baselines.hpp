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
#include <vector>

#include "tem/backends.hpp"
#include "tem/estimator.hpp"
#include "tem/layers.hpp"
#include "tem/noise.hpp"

namespace tem {

/// One circuit drawn from the quasiprobability decomposition of the inverse
/// noise: Pauli gates inserted after noisy layers, a global sign, and the
/// sampling weight gamma shared by every sample of the same model.
struct PecSample {
    std::vector<std::pair<int, PauliString>> insertions;  // (layer index, gate)
    int sign = 1;
    double gamma = 1.0;
};

/// Draw Q circuits: per noise attachment, every Lindblad generator of the
/// inverse decomposition independently inserts its Pauli with its
/// quasiprobability weight, flipping the sample sign.
std::vector<PecSample> pec_sample_circuits(const Circuit& circuit, const NoiseModelMap& noise,
                                           int Q, std::uint64_t seed);

/// Run the sampled circuits on the noisy trajectory backend with M
/// computational-basis shots each and average sign * gamma * O over the
/// budget. O must be diagonal in the computational basis (Z/I strings only).
EstimateReport pec_estimate(const Circuit& circuit, const NoiseModelMap& noise,
                            const std::vector<PecSample>& samples, const PauliString& obs, int M,
                            std::uint64_t seed);

struct ZneSeries {
    std::vector<double> gains;
    std::vector<double> means;
    std::vector<double> stderrors;
    std::vector<std::vector<double>> per_gain_xi;  // retained for bootstrapping
};

/// Noisy estimates of `obs` at amplified noise (all rates scaled by each
/// gain), measured in the eigenbasis of the observable string. Uses the
/// stabilizer backend for Clifford circuits, trajectories otherwise.
ZneSeries zne_run(const Circuit& circuit, const NoiseModelMap& noise, const PauliString& obs,
                  const std::vector<double>& gains, int shots, std::uint64_t seed);

/// Exponential fit O(G) = A * B^G through the series (log-linear least
/// squares; exact on exactly exponential data). Returns nothing when
/// non-positive means break the fit.
std::optional<double> zne_extrapolate(const std::vector<double>& gains,
                                      const std::vector<double>& means);

struct ZneBootstrap {
    double value = 0.0;        // median of the resampled extrapolations
    double lower = 0.0;        // central range after trimming 16% per tail
    double upper = 0.0;
    int failures = 0;          // resamples whose exponential fit broke
};

/// Bootstrap the extrapolation: resample outcomes per gain, refit, take the
/// median, and trim floor(0.16 * resamples) from each tail for the interval.
ZneBootstrap zne_extrapolate_bootstrap(const ZneSeries& series, int resamples, std::uint64_t seed);

/// Per-sample scaling of all rates in every model of the map.
NoiseModelMap scale_noise(const NoiseModelMap& noise, double gain);

}  // namespace tem
