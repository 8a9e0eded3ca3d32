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

#include <cstdint>
#include <random>

namespace tem {

/// Seeded random stream with cheap, collision-resistant substream derivation.
/// Substreams are derived by mixing the master seed with a stream id, so
/// per-circuit / per-worker streams are reproducible regardless of the order
/// in which they are consumed.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : gen_(splitmix(seed)) {}

    /// Independent substream; same (seed, id) always gives the same stream.
    static RngStream substream(std::uint64_t seed, std::uint64_t id) {
        return RngStream(splitmix(seed ^ (0x9e3779b97f4a7c15ull + splitmix(id))));
    }

    std::mt19937_64& gen() { return gen_; }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
    double normal(double mean, double stddev) {
        return std::normal_distribution<double>(mean, stddev)(gen_);
    }
    std::uint64_t integer(std::uint64_t upper_exclusive) {
        return std::uniform_int_distribution<std::uint64_t>(0, upper_exclusive - 1)(gen_);
    }
    bool bernoulli(double p) { return uniform() < p; }

    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace tem
