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

#include <filesystem>
#include <string>

#include "tem/backends.hpp"
#include "tem/engine.hpp"
#include "tem/estimator.hpp"
#include "tem/layers.hpp"
#include "tem/mpo.hpp"
#include "tem/noise.hpp"

namespace tem {

/// Rate-file ingestion: text records `<jump operator> <rate>` with 1-indexed
/// qubits (X1, Y7Z8, ...). Validates weight <= 2, adjacency, duplicates.
/// Blank lines and '#' comments are skipped; an empty file is the zero model.
SparsePauliLindblad parse_rate_table(const std::string& text, int n);
SparsePauliLindblad load_rate_table(const std::filesystem::path& path, int n);
std::string serialize_rate_table(const SparsePauliLindblad& m);

/// Versioned binary MPO format: magic + endianness tag + per-site dimensions
/// followed by row-major float64 site tensors. Round-trips bit-exactly.
void save_mpo(const SuperopMPO& mpo, const std::filesystem::path& path);
SuperopMPO load_mpo(const std::filesystem::path& path);

/// Outcome file: JSON header (layout, seed, backend, basis probabilities)
/// followed by the binary columnar payload (per-circuit axis bytes, packed
/// sign bits per shot). Round-trips bit-exactly.
void save_outcomes(const OutcomeSet& outcomes, const std::filesystem::path& path);
OutcomeSet load_outcomes(const std::filesystem::path& path);

/// Circuit description as versioned JSON.
std::string circuit_to_json(const Circuit& circuit);
Circuit circuit_from_json(const std::string& text);

/// Estimate report as JSON (mean, stderr, bias bound, layout, fingerprint).
std::string report_to_json(const EstimateReport& report);

/// Mitigation-map ledger sidecar as JSON.
std::string ledger_to_json(const MitigationMap& map);

/// FNV-1a content hash, the fingerprint primitive used to bind maps to the
/// circuit and noise they were built for.
std::uint64_t fnv1a(const void* data, size_t len, std::uint64_t basis = 0xcbf29ce484222325ull);
std::string fnv1a_hex(const std::string& payload);

}  // namespace tem
