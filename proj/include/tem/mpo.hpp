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
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tem/pauli.hpp"

namespace tem {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One MPO site tensor of shape (chi_l, po, pi, chi_r), stored row-major in
/// exactly that index order. Physical legs follow the (out, in) wire
/// convention: `po` indexes the PTM output leg, `pi` the input leg. The PTM
/// is real, so the channel adjoint is the sitewise swap of (out, in).
struct SiteTensor {
    int chi_l = 1, po = 4, pi = 4, chi_r = 1;
    Eigen::VectorXd data;

    SiteTensor() = default;
    SiteTensor(int l, int o, int i, int r)
        : chi_l(l), po(o), pi(i), chi_r(r),
          data(Eigen::VectorXd::Zero(static_cast<long>(l) * o * i * r)) {}

    long size() const { return static_cast<long>(chi_l) * po * pi * chi_r; }
    int phys() const { return po * pi; }

    double& at(int l, int o, int i, int r) {
        return data[((static_cast<long>(l) * po + o) * pi + i) * chi_r + r];
    }
    double at(int l, int o, int i, int r) const {
        return data[((static_cast<long>(l) * po + o) * pi + i) * chi_r + r];
    }

    /// (chi_l * po * pi) x chi_r view; contiguous by construction.
    Eigen::Map<const RowMat> left_matrix() const {
        return {data.data(), static_cast<long>(chi_l) * phys(), chi_r};
    }
    /// chi_l x (po * pi * chi_r) view.
    Eigen::Map<const RowMat> right_matrix() const {
        return {data.data(), chi_l, static_cast<long>(phys()) * chi_r};
    }
};

/// Matrix-product operator over an N-site chain of PTM legs. Superoperators
/// have (po, pi) = (4, 4); operators / states in PTM form reuse the same type
/// with pi = 1 (an unnormalized matrix product state).
class SuperopMPO {
  public:
    SuperopMPO() = default;
    explicit SuperopMPO(std::vector<SiteTensor> sites);

    /// Identity channel: every bond is 1 and each site a 4x4 identity.
    static SuperopMPO identity(int n);

    /// Bond-1 product of per-site 4x4 PTMs.
    static SuperopMPO from_site_ptms(const std::vector<Eigen::Matrix4d>& ptms);

    /// Pauli string as a bond-1 MPS in PTM form (pi = 1); the coefficient is
    /// absorbed into site 0.
    static SuperopMPO pauli_string_state(const PauliString& p);

    int size() const { return static_cast<int>(sites_.size()); }
    const SiteTensor& site(int m) const { return sites_[static_cast<size_t>(m)]; }
    SiteTensor& site(int m) { return sites_[static_cast<size_t>(m)]; }

    /// Bond dimensions at the N-1 internal links.
    std::vector<int> bond_dims() const;
    int max_bond() const;
    bool is_state() const { return !sites_.empty() && sites_[0].pi == 1; }
    bool finite() const;

  private:
    std::vector<SiteTensor> sites_;
};

/// Per-compression bookkeeping. `discarded_weight` is the sum over bonds of
/// the squared discarded singular values, so the result B obeys
/// ||A - B||_2^2 <= 2 * discarded_weight. `local_error` is the measured
/// Frobenius distance when it was computed (negative if not).
struct TruncationRecord {
    std::vector<std::vector<double>> kept;       // singular values per bond
    std::vector<std::vector<double>> discarded;  // singular values per bond
    double discarded_weight = 0.0;
    double local_error = -1.0;
    double relative_error = 0.0;

    double error_bound() const;  // sqrt(2 * discarded_weight)
};

struct CompressLimit {
    int chi_max = std::numeric_limits<int>::max();
    double tol_rel = 0.0;  // drop singular values below tol_rel * lambda_max(bond)
};

/// Exact MPO product C = A * B (C applies B first): bond dimensions multiply.
SuperopMPO mpo_multiply(const SuperopMPO& a, const SuperopMPO& b);

/// Two-sweep compression: left-to-right canonicalization, then a
/// right-to-left SVD truncation sweep. Records exact per-bond spectra and the
/// measured Frobenius distance to the input (record.local_error).
std::pair<SuperopMPO, TruncationRecord> mpo_compress(const SuperopMPO& a,
                                                     const CompressLimit& limit,
                                                     bool measure_error = true);

/// Frobenius (Hilbert-Schmidt) geometry via transfer-matrix contraction;
/// operators are never densified.
double frobenius_inner(const SuperopMPO& a, const SuperopMPO& b);
double frobenius_norm(const SuperopMPO& a);
double frobenius_distance(const SuperopMPO& a, const SuperopMPO& b);

/// Singular values across internal link `bond` (0-based, counting links
/// between sites m and m+1), computed in canonical form; gauge invariant.
std::vector<double> bond_spectrum(const SuperopMPO& a, int bond);

/// Heisenberg application o' = M^T o for an observable MPS `o` in PTM form.
/// Bond dimensions multiply; the caller compresses.
SuperopMPO apply_transpose_to_mpo(const SuperopMPO& map, const SuperopMPO& obs);

/// Sitewise swap of the physical (out, in) legs; for a real PTM this is the
/// channel adjoint. (A * B)^T = B^T * A^T lets callers pick the cheaper
/// operand order in apply_compress.
SuperopMPO transpose_mpo(const SuperopMPO& a);

/// Options for the fused multiply-and-compress fast path.
struct ApplyOptions {
    CompressLimit limit;
    bool randomized = false;    // randomized SVD inside the zip-up sweep
    int rsvd_oversample = 16;
    int rsvd_power_iters = 1;
    std::uint64_t rsvd_seed = 0;
    double zip_slack = 1.3;     // zip-up keeps up to slack * chi_max before the back sweep
};

/// C ~= A * B compressed to the requested limit without materializing the
/// full product: a zip-up sweep (truncating as it goes) followed by an exact
/// SVD back sweep. The record's discarded_weight combines the measured back
/// sweep tails with the zip-stage tails, so error_bound() is an estimate
/// rather than a certificate when the zip stage truncates.
std::pair<SuperopMPO, TruncationRecord> apply_compress(const SuperopMPO& a, const SuperopMPO& b,
                                                       const ApplyOptions& opts);

/// Dense 4^n x 4^n PTM (or 4^n vector for MPS inputs, returned as a single
/// column). Oracle-grade; capped at kDensePtmMaxQubits sites.
Eigen::MatrixXd mpo_to_dense(const SuperopMPO& a);

/// Exact MPS/MPO of a dense PTM via successive SVD splits, pruning singular
/// values below `tol`. Test and construction utility.
SuperopMPO mpo_from_dense(const Eigen::MatrixXd& ptm, int n, double tol = 1e-14);

}  // namespace tem
