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

#include "tem/mpo.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "tem/ptm.hpp"
#include "tem/rng.hpp"

namespace tem {

namespace {

using Map = Eigen::Map<RowMat>;
using CMap = Eigen::Map<const RowMat>;

void check_same_size(const SuperopMPO& a, const SuperopMPO& b, const char* where) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(where) + ": site-count mismatch");
}

struct SvdResult {
    RowMat u;               // rows x k
    Eigen::VectorXd s;      // k
    RowMat vt;              // k x cols
    std::vector<double> discarded;
    double unseen_tail = 0.0;  // squared weight not resolved by a randomized pass
};

int kept_rank(const Eigen::VectorXd& s, const CompressLimit& limit) {
    int k = static_cast<int>(s.size());
    k = std::min(k, limit.chi_max);
    if (limit.tol_rel > 0.0 && s.size() > 0) {
        const double cut = limit.tol_rel * s[0];
        while (k > 1 && s[k - 1] <= cut) --k;
    }
    return std::max(k, 1);
}

SvdResult exact_svd_truncated(const RowMat& m, const CompressLimit& limit) {
    Eigen::BDCSVD<RowMat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const int k = kept_rank(s, limit);
    SvdResult out;
    out.u = svd.matrixU().leftCols(k);
    out.s = s.head(k);
    out.vt = svd.matrixV().leftCols(k).transpose();
    for (long i = k; i < s.size(); ++i) out.discarded.push_back(s[i]);
    return out;
}

// SVD through the Gram matrix on the short side. Much faster than bidiagonal
// SVD for the tall/wide matrices the zip-up produces, at the cost of losing
// resolution on singular values below ~1e-8 * sigma_0; directions that weak
// are dropped outright (they are far below any tolerance this path is
// used with).
SvdResult gram_svd_truncated(const RowMat& m, const CompressLimit& limit) {
    const bool rows_short = m.rows() <= m.cols();
    Eigen::MatrixXd gram = rows_short ? Eigen::MatrixXd(m * m.transpose())
                                      : Eigen::MatrixXd(m.transpose() * m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const long dim = gram.rows();
    Eigen::VectorXd s(dim);
    Eigen::MatrixXd basis(dim, dim);
    for (long i = 0; i < dim; ++i) {  // eigenvalues come back ascending
        s[i] = std::sqrt(std::max(0.0, eig.eigenvalues()[dim - 1 - i]));
        basis.col(i) = eig.eigenvectors().col(dim - 1 - i);
    }
    long rank = dim;
    while (rank > 1 && s[rank - 1] <= 1e-14 * s[0]) --rank;
    CompressLimit lim = limit;
    lim.chi_max = std::min<long>(lim.chi_max, rank);
    const int k = kept_rank(s.head(rank), lim);
    SvdResult out;
    out.s = s.head(k);
    Eigen::VectorXd inv = out.s.cwiseMax(1e-300).cwiseInverse();
    if (rows_short) {
        out.u = basis.leftCols(k);
        out.vt = inv.asDiagonal() * RowMat(basis.leftCols(k).transpose() * m);
    } else {
        out.vt = basis.leftCols(k).transpose();
        out.u = m * basis.leftCols(k) * inv.asDiagonal();
    }
    for (long i = k; i < rank; ++i) out.discarded.push_back(s[i]);
    out.unseen_tail = std::max(0.0, m.squaredNorm() - s.head(rank).squaredNorm());
    return out;
}

// CholeskyQR2 orthonormalization; falls back to Householder on breakdown.
RowMat orthonormalize(const RowMat& y) {
    RowMat q = y;
    for (int pass = 0; pass < 2; ++pass) {
        Eigen::MatrixXd g = q.transpose() * q;
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() != Eigen::Success) {
            Eigen::HouseholderQR<RowMat> qr(q);
            return qr.householderQ() * RowMat::Identity(q.rows(), std::min(q.rows(), q.cols()));
        }
        llt.matrixU().solveInPlace<Eigen::OnTheRight>(q);
    }
    return q;
}

// Halko-style randomized SVD. Resolves at most `rank` singular triplets; the
// residual spectrum is unseen and reported only through unseen_tail (computed
// from the norm difference).
SvdResult randomized_svd_truncated(const RowMat& m, const CompressLimit& limit,
                                   const ApplyOptions& opts, std::uint64_t call_id) {
    const long rows = m.rows(), cols = m.cols();
    const int want = std::min<long>({rows, cols, limit.chi_max});
    const int probe = std::min<long>({rows, cols, want + opts.rsvd_oversample});
    if (probe * 5 >= std::min(rows, cols) * 4)  // no savings; do it exactly
        return exact_svd_truncated(m, limit);

    RngStream rng = RngStream::substream(opts.rsvd_seed, call_id);
    RowMat omega(cols, probe);
    for (long i = 0; i < omega.size(); ++i) omega.data()[i] = rng.normal(0.0, 1.0);

    RowMat q = orthonormalize(m * omega);
    for (int it = 0; it < opts.rsvd_power_iters; ++it) {
        q = orthonormalize(m.transpose() * q);
        q = orthonormalize(m * q);
    }
    RowMat b = q.transpose() * m;  // probe x cols
    Eigen::BDCSVD<RowMat> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    CompressLimit lim = limit;
    const int k = kept_rank(s, lim);

    SvdResult out;
    out.u = q * svd.matrixU().leftCols(k);
    out.s = s.head(k);
    out.vt = svd.matrixV().leftCols(k).transpose();
    for (long i = k; i < s.size(); ++i) out.discarded.push_back(s[i]);
    const double total = m.squaredNorm();
    const double seen = s.squaredNorm();
    out.unseen_tail = std::max(0.0, total - seen);
    return out;
}

SvdResult svd_truncated(const RowMat& m, const CompressLimit& limit, const ApplyOptions* ropts,
                        std::uint64_t call_id) {
    if (ropts != nullptr && ropts->randomized) return randomized_svd_truncated(m, limit, *ropts, call_id);
    if (ropts != nullptr && m.rows() * m.cols() > 512 * 512) return gram_svd_truncated(m, limit);
    return exact_svd_truncated(m, limit);
}

// Right-to-left SVD truncation sweep on a left-canonical MPO. Appends the
// per-bond spectra and discarded weight to `rec`. `fast` switches the large
// sites to the Gram-matrix SVD.
void right_truncation_sweep(std::vector<SiteTensor>& sites, const CompressLimit& limit,
                            TruncationRecord& rec, bool fast = false) {
    const int n = static_cast<int>(sites.size());
    rec.kept.assign(static_cast<size_t>(std::max(0, n - 1)), {});
    rec.discarded.assign(static_cast<size_t>(std::max(0, n - 1)), {});
    for (int m = n - 1; m >= 1; --m) {
        SiteTensor& st = sites[static_cast<size_t>(m)];
        CMap mat(st.data.data(), st.chi_l, static_cast<long>(st.phys()) * st.chi_r);
        SvdResult r = (fast && mat.rows() * mat.cols() > 512 * 512)
                          ? gram_svd_truncated(mat, limit)
                          : exact_svd_truncated(mat, limit);
        const int k = static_cast<int>(r.s.size());
        SiteTensor ns(k, st.po, st.pi, st.chi_r);
        Eigen::Map<RowMat>(ns.data.data(), k, static_cast<long>(st.phys()) * st.chi_r) = r.vt;
        // carry U * S into the left neighbour
        RowMat carry = r.u * r.s.asDiagonal();  // chi_l x k
        SiteTensor& left = sites[static_cast<size_t>(m - 1)];
        SiteTensor nl(left.chi_l, left.po, left.pi, k);
        CMap lm(left.data.data(), static_cast<long>(left.chi_l) * left.phys(), left.chi_r);
        Eigen::Map<RowMat>(nl.data.data(), static_cast<long>(left.chi_l) * left.phys(), k) =
            lm * carry;
        rec.kept[static_cast<size_t>(m - 1)].assign(r.s.data(), r.s.data() + r.s.size());
        rec.discarded[static_cast<size_t>(m - 1)] = r.discarded;
        for (double d : r.discarded) rec.discarded_weight += d * d;
        rec.discarded_weight += r.unseen_tail;
        sites[static_cast<size_t>(m)] = std::move(ns);
        sites[static_cast<size_t>(m - 1)] = std::move(nl);
    }
}

// Left-to-right QR canonicalization (no truncation).
void left_qr_sweep(std::vector<SiteTensor>& sites) {
    const int n = static_cast<int>(sites.size());
    for (int m = 0; m + 1 < n; ++m) {
        SiteTensor& st = sites[static_cast<size_t>(m)];
        const long rows = static_cast<long>(st.chi_l) * st.phys();
        CMap mat(st.data.data(), rows, st.chi_r);
        Eigen::HouseholderQR<RowMat> qr(mat);
        const long k = std::min(rows, static_cast<long>(st.chi_r));
        RowMat q = qr.householderQ() * RowMat::Identity(rows, k);
        RowMat r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
        SiteTensor ns(st.chi_l, st.po, st.pi, static_cast<int>(k));
        Eigen::Map<RowMat>(ns.data.data(), rows, k) = q;
        SiteTensor& right = sites[static_cast<size_t>(m + 1)];
        SiteTensor nr(static_cast<int>(k), right.po, right.pi, right.chi_r);
        CMap rm(right.data.data(), right.chi_l, static_cast<long>(right.phys()) * right.chi_r);
        Eigen::Map<RowMat>(nr.data.data(), k, static_cast<long>(right.phys()) * right.chi_r) =
            r * rm;
        sites[static_cast<size_t>(m)] = std::move(ns);
        sites[static_cast<size_t>(m + 1)] = std::move(nr);
    }
}

}  // namespace

SuperopMPO::SuperopMPO(std::vector<SiteTensor> sites) : sites_(std::move(sites)) {
    if (sites_.empty()) throw std::invalid_argument("SuperopMPO: empty chain");
    if (sites_.front().chi_l != 1 || sites_.back().chi_r != 1)
        throw std::invalid_argument("SuperopMPO: boundary bonds must have dimension 1");
    for (size_t m = 0; m + 1 < sites_.size(); ++m)
        if (sites_[m].chi_r != sites_[m + 1].chi_l)
            throw std::invalid_argument("SuperopMPO: adjacent bond dimensions do not match");
}

SuperopMPO SuperopMPO::identity(int n) {
    if (n < 1) throw std::invalid_argument("identity: n must be >= 1");
    std::vector<SiteTensor> sites;
    sites.reserve(static_cast<size_t>(n));
    for (int m = 0; m < n; ++m) {
        SiteTensor st(1, 4, 4, 1);
        for (int p = 0; p < 4; ++p) st.at(0, p, p, 0) = 1.0;
        sites.push_back(std::move(st));
    }
    return SuperopMPO(std::move(sites));
}

SuperopMPO SuperopMPO::from_site_ptms(const std::vector<Eigen::Matrix4d>& ptms) {
    std::vector<SiteTensor> sites;
    sites.reserve(ptms.size());
    for (const auto& p : ptms) {
        SiteTensor st(1, 4, 4, 1);
        for (int o = 0; o < 4; ++o)
            for (int i = 0; i < 4; ++i) st.at(0, o, i, 0) = p(o, i);
        sites.push_back(std::move(st));
    }
    return SuperopMPO(std::move(sites));
}

SuperopMPO SuperopMPO::pauli_string_state(const PauliString& p) {
    std::vector<SiteTensor> sites;
    sites.reserve(p.axes.size());
    const double s2 = std::sqrt(2.0);
    for (size_t m = 0; m < p.axes.size(); ++m) {
        SiteTensor st(1, 4, 1, 1);
        st.at(0, p.axes[m], 0, 0) = s2;
        if (m == 0) st.data *= p.coeff;
        sites.push_back(std::move(st));
    }
    return SuperopMPO(std::move(sites));
}

std::vector<int> SuperopMPO::bond_dims() const {
    std::vector<int> out;
    for (size_t m = 0; m + 1 < sites_.size(); ++m) out.push_back(sites_[m].chi_r);
    return out;
}

int SuperopMPO::max_bond() const {
    int b = 1;
    for (const auto& s : sites_) b = std::max(b, std::max(s.chi_l, s.chi_r));
    return b;
}

bool SuperopMPO::finite() const {
    for (const auto& s : sites_)
        if (!s.data.allFinite()) return false;
    return true;
}

double TruncationRecord::error_bound() const { return std::sqrt(2.0 * discarded_weight); }

SuperopMPO mpo_multiply(const SuperopMPO& a, const SuperopMPO& b) {
    check_same_size(a, b, "mpo_multiply");
    std::vector<SiteTensor> sites;
    sites.reserve(static_cast<size_t>(a.size()));
    for (int m = 0; m < a.size(); ++m) {
        const SiteTensor& sa = a.site(m);
        const SiteTensor& sb = b.site(m);
        if (sa.pi != sb.po)
            throw std::invalid_argument("mpo_multiply: physical dimensions do not match");
        SiteTensor sc(sa.chi_l * sb.chi_l, sa.po, sb.pi, sa.chi_r * sb.chi_r);
        for (int la = 0; la < sa.chi_l; ++la)
            for (int ra = 0; ra < sa.chi_r; ++ra)
                for (int lb = 0; lb < sb.chi_l; ++lb)
                    for (int rb = 0; rb < sb.chi_r; ++rb)
                        for (int o = 0; o < sa.po; ++o)
                            for (int i = 0; i < sb.pi; ++i) {
                                double acc = 0.0;
                                for (int k = 0; k < sa.pi; ++k)
                                    acc += sa.at(la, o, k, ra) * sb.at(lb, k, i, rb);
                                sc.at(la * sb.chi_l + lb, o, i, ra * sb.chi_r + rb) = acc;
                            }
        sites.push_back(std::move(sc));
    }
    return SuperopMPO(std::move(sites));
}

double frobenius_inner(const SuperopMPO& a, const SuperopMPO& b) {
    check_same_size(a, b, "frobenius_inner");
    RowMat e = RowMat::Ones(1, 1);
    for (int m = 0; m < a.size(); ++m) {
        const SiteTensor& sa = a.site(m);
        const SiteTensor& sb = b.site(m);
        if (sa.phys() != sb.phys())
            throw std::invalid_argument("frobenius_inner: physical dimensions do not match");
        // g[(p, ra), lb] = sum_la sa[la, p, ra] e[la, lb]
        CMap am(sa.data.data(), sa.chi_l, static_cast<long>(sa.phys()) * sa.chi_r);
        RowMat g = am.transpose() * e;  // (p*ra) x lb
        CMap bm(sb.data.data(), sb.chi_l, static_cast<long>(sb.phys()) * sb.chi_r);
        RowMat enew = RowMat::Zero(sa.chi_r, sb.chi_r);
        for (int p = 0; p < sa.phys(); ++p)
            enew.noalias() += g.middleRows(static_cast<long>(p) * sa.chi_r, sa.chi_r) *
                              bm.middleCols(static_cast<long>(p) * sb.chi_r, sb.chi_r);
        e = std::move(enew);
    }
    const double v = e(0, 0);
    if (!std::isfinite(v)) throw std::runtime_error("frobenius_inner: overflow");
    return v;
}

double frobenius_norm(const SuperopMPO& a) { return std::sqrt(std::max(0.0, frobenius_inner(a, a))); }

double frobenius_distance(const SuperopMPO& a, const SuperopMPO& b) {
    const double d2 = frobenius_inner(a, a) + frobenius_inner(b, b) - 2.0 * frobenius_inner(a, b);
    return std::sqrt(std::max(0.0, d2));
}

std::pair<SuperopMPO, TruncationRecord> mpo_compress(const SuperopMPO& a,
                                                     const CompressLimit& limit,
                                                     bool measure_error) {
    if (limit.chi_max < 1) throw std::invalid_argument("mpo_compress: chi_max must be >= 1");
    if (!a.finite()) throw std::invalid_argument("mpo_compress: non-finite tensor entries");
    std::vector<SiteTensor> sites;
    sites.reserve(static_cast<size_t>(a.size()));
    for (int m = 0; m < a.size(); ++m) sites.push_back(a.site(m));
    left_qr_sweep(sites);
    TruncationRecord rec;
    right_truncation_sweep(sites, limit, rec);
    SuperopMPO out(std::move(sites));
    if (measure_error) {
        const double norm_a = frobenius_norm(a);
        rec.local_error = frobenius_distance(a, out);
        rec.relative_error = norm_a > 0 ? rec.local_error / norm_a : 0.0;
    } else {
        const double bound = rec.error_bound();
        const double norm_b = frobenius_norm(out);
        rec.relative_error = norm_b > 0 ? bound / norm_b : 0.0;
    }
    return {std::move(out), std::move(rec)};
}

std::vector<double> bond_spectrum(const SuperopMPO& a, int bond) {
    if (bond < 0 || bond >= a.size() - 1)
        throw std::invalid_argument("bond_spectrum: bond index out of range");
    std::vector<SiteTensor> sites;
    for (int m = 0; m < a.size(); ++m) sites.push_back(a.site(m));
    // Left QR up to `bond`, carrying R.
    RowMat rl = RowMat::Ones(1, 1);
    for (int m = 0; m <= bond; ++m) {
        const SiteTensor& st = sites[static_cast<size_t>(m)];
        CMap rm(st.data.data(), st.chi_l, static_cast<long>(st.phys()) * st.chi_r);
        RowMat absorbed = rl * rm;  // (k_prev) x (phys*chi_r)
        const long rows = absorbed.rows() * st.phys();
        Eigen::Map<RowMat> asmat(absorbed.data(), rows, st.chi_r);
        Eigen::HouseholderQR<RowMat> qr(asmat);
        const long k = std::min(rows, static_cast<long>(st.chi_r));
        rl = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    }
    // Right LQ down to bond+1, carrying L.
    RowMat lr = RowMat::Ones(1, 1);
    for (int m = a.size() - 1; m > bond; --m) {
        const SiteTensor& st = sites[static_cast<size_t>(m)];
        CMap lm(st.data.data(), static_cast<long>(st.chi_l) * st.phys(), st.chi_r);
        RowMat absorbed = lm * lr;  // (chi_l*phys) x k_prev
        Eigen::Map<RowMat> asmat(absorbed.data(), st.chi_l,
                                 absorbed.rows() / st.chi_l * absorbed.cols());
        // LQ via QR of the transpose.
        RowMat t = asmat.transpose();
        Eigen::HouseholderQR<RowMat> qr(t);
        const long k = std::min(t.rows(), t.cols());
        RowMat l = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
        lr = l.transpose();  // chi_l x k
    }
    Eigen::BDCSVD<RowMat> svd(RowMat(rl * lr));
    const auto& s = svd.singularValues();
    std::vector<double> out(s.data(), s.data() + s.size());
    return out;
}

SuperopMPO apply_transpose_to_mpo(const SuperopMPO& map, const SuperopMPO& obs) {
    check_same_size(map, obs, "apply_transpose_to_mpo");
    std::vector<SiteTensor> sites;
    sites.reserve(static_cast<size_t>(map.size()));
    for (int m = 0; m < map.size(); ++m) {
        const SiteTensor& sm = map.site(m);
        const SiteTensor& so = obs.site(m);
        if (so.pi != 1 || sm.po != so.po)
            throw std::invalid_argument("apply_transpose_to_mpo: observable must be a PTM state");
        SiteTensor sc(sm.chi_l * so.chi_l, sm.pi, 1, sm.chi_r * so.chi_r);
        for (int lm = 0; lm < sm.chi_l; ++lm)
            for (int rm = 0; rm < sm.chi_r; ++rm)
                for (int lo = 0; lo < so.chi_l; ++lo)
                    for (int ro = 0; ro < so.chi_r; ++ro)
                        for (int i = 0; i < sm.pi; ++i) {
                            double acc = 0.0;
                            for (int o = 0; o < sm.po; ++o)
                                acc += sm.at(lm, o, i, rm) * so.at(lo, o, 0, ro);
                            sc.at(lm * so.chi_l + lo, i, 0, rm * so.chi_r + ro) = acc;
                        }
        sites.push_back(std::move(sc));
    }
    return SuperopMPO(std::move(sites));
}

std::pair<SuperopMPO, TruncationRecord> apply_compress(const SuperopMPO& a, const SuperopMPO& b,
                                                       const ApplyOptions& opts) {
    check_same_size(a, b, "apply_compress");
    if (opts.limit.chi_max < 1) throw std::invalid_argument("apply_compress: chi_max must be >= 1");
    const int n = a.size();
    CompressLimit zip_limit;
    zip_limit.chi_max = opts.limit.chi_max == std::numeric_limits<int>::max()
                            ? opts.limit.chi_max
                            : static_cast<int>(std::ceil(opts.zip_slack * opts.limit.chi_max)) + 8;
    zip_limit.tol_rel = opts.limit.tol_rel;

    TruncationRecord rec;
    double zip_weight = 0.0;
    std::vector<SiteTensor> sites(static_cast<size_t>(n));
    RowMat g = RowMat::Ones(1, 1);  // kappa x (la*lb)
    int kappa = 1;
    for (int m = 0; m < n; ++m) {
        const SiteTensor& sa = a.site(m);
        const SiteTensor& sb = b.site(m);
        if (sa.pi != sb.po)
            throw std::invalid_argument("apply_compress: physical dimensions do not match");
        const int la = sa.chi_l, ra = sa.chi_r, lb = sb.chi_l, rb = sb.chi_r;
        const int po = sa.po, pk = sa.pi, pi = sb.pi;
        // h[(kappa, la), (k, i, rb)] = sum_lb g[kappa, (la, lb)] b[lb, k, i, rb]
        Eigen::Map<RowMat> g2(g.data(), static_cast<long>(kappa) * la, lb);
        CMap bm(sb.data.data(), lb, static_cast<long>(pk) * pi * rb);
        RowMat h = g2 * bm;
        // permute to h2[(kappa, i, rb), (la, k)]; inner loop writes contiguously
        RowMat h2(static_cast<long>(kappa) * pi * rb, static_cast<long>(la) * pk);
        for (long kp = 0; kp < kappa; ++kp)
            for (int i = 0; i < pi; ++i)
                for (int r = 0; r < rb; ++r) {
                    double* dst = h2.data() + ((kp * pi + i) * rb + r) * h2.cols();
                    const double* src = h.data() + kp * la * h.cols();
                    for (int al = 0; al < la; ++al)
                        for (int k = 0; k < pk; ++k)
                            dst[static_cast<long>(al) * pk + k] =
                                src[static_cast<long>(al) * h.cols() +
                                    (static_cast<long>(k) * pi + i) * rb + r];
                }
        // a2[(la, k), (o, ra)]
        RowMat a2(static_cast<long>(la) * pk, static_cast<long>(po) * ra);
        for (int al = 0; al < la; ++al)
            for (int o = 0; o < po; ++o)
                for (int k = 0; k < pk; ++k)
                    for (int r = 0; r < ra; ++r)
                        a2(static_cast<long>(al) * pk + k, static_cast<long>(o) * ra + r) =
                            sa.at(al, o, k, r);
        RowMat t = h2 * a2;  // (kappa, i, rb) x (o, ra)
        // permute to mat[(kappa, o, i), (ra, rb)]
        RowMat mat(static_cast<long>(kappa) * po * pi, static_cast<long>(ra) * rb);
        for (long kp = 0; kp < kappa; ++kp)
            for (int o = 0; o < po; ++o)
                for (int i = 0; i < pi; ++i) {
                    double* dst = mat.data() + ((kp * po + o) * pi + i) * mat.cols();
                    for (int q = 0; q < ra; ++q)
                        for (int r = 0; r < rb; ++r)
                            dst[static_cast<long>(q) * rb + r] =
                                t((kp * pi + i) * rb + r, static_cast<long>(o) * ra + q);
                }
        if (m == n - 1) {
            // right boundary: ra*rb == 1, the remaining matrix is the final site
            SiteTensor st(kappa, po, pi, 1);
            Eigen::Map<RowMat>(st.data.data(), static_cast<long>(kappa) * po * pi, 1) = mat;
            sites[static_cast<size_t>(m)] = std::move(st);
            break;
        }
        SvdResult r = svd_truncated(mat, zip_limit, opts.randomized ? &opts : nullptr,
                                    static_cast<std::uint64_t>(m) + 1);
        const int k = static_cast<int>(r.s.size());
        SiteTensor st(kappa, po, pi, k);
        Eigen::Map<RowMat>(st.data.data(), static_cast<long>(kappa) * po * pi, k) = r.u;
        sites[static_cast<size_t>(m)] = std::move(st);
        for (double d : r.discarded) zip_weight += d * d;
        zip_weight += r.unseen_tail;
        g = r.s.asDiagonal() * r.vt;  // k x (ra*rb)
        kappa = k;
    }
    right_truncation_sweep(sites, opts.limit, rec, /*fast=*/true);
    rec.discarded_weight += zip_weight;
    SuperopMPO out(std::move(sites));
    const double norm_b = frobenius_norm(out);
    rec.relative_error = norm_b > 0 ? rec.error_bound() / norm_b : 0.0;
    return {std::move(out), std::move(rec)};
}

SuperopMPO transpose_mpo(const SuperopMPO& a) {
    std::vector<SiteTensor> sites;
    sites.reserve(static_cast<size_t>(a.size()));
    for (int m = 0; m < a.size(); ++m) {
        const SiteTensor& st = a.site(m);
        SiteTensor tt(st.chi_l, st.pi, st.po, st.chi_r);
        for (int l = 0; l < st.chi_l; ++l)
            for (int o = 0; o < st.po; ++o)
                for (int i = 0; i < st.pi; ++i)
                    for (int r = 0; r < st.chi_r; ++r) tt.at(l, i, o, r) = st.at(l, o, i, r);
        sites.push_back(std::move(tt));
    }
    return SuperopMPO(std::move(sites));
}

Eigen::MatrixXd mpo_to_dense(const SuperopMPO& a) {
    const int n = a.size();
    if (n > kDensePtmMaxQubits)
        throw std::invalid_argument("mpo_to_dense: capped at " +
                                    std::to_string(kDensePtmMaxQubits) + " sites");
    RowMat acc = RowMat::Ones(1, 1);  // (phys-multi) x chi
    long ptotal = 1;
    for (int m = 0; m < n; ++m) {
        const SiteTensor& st = a.site(m);
        CMap rm(st.data.data(), st.chi_l, static_cast<long>(st.phys()) * st.chi_r);
        RowMat next = acc * rm;  // ptotal x (phys*chi_r)
        ptotal *= st.phys();
        acc = Eigen::Map<RowMat>(next.data(), ptotal, st.chi_r);
    }
    // Split the interleaved per-site (o, i) digits into row/column indices.
    long rows = 1, cols = 1;
    for (int m = 0; m < n; ++m) {
        rows *= a.site(m).po;
        cols *= a.site(m).pi;
    }
    Eigen::MatrixXd out(rows, cols);
    for (long f = 0; f < ptotal; ++f) {
        long row = 0, col = 0, rem = f;
        for (int m = 0; m < n; ++m) {
            const SiteTensor& st = a.site(m);
            long digits = 1;
            for (int mm = m + 1; mm < n; ++mm) digits *= a.site(mm).phys();
            const long d = rem / digits;
            rem %= digits;
            row = row * st.po + d / st.pi;
            col = col * st.pi + d % st.pi;
        }
        out(row, col) = acc(f, 0);
    }
    return out;
}

SuperopMPO mpo_from_dense(const Eigen::MatrixXd& ptm, int n, double tol) {
    if (n > kDensePtmMaxQubits)
        throw std::invalid_argument("mpo_from_dense: capped at " +
                                    std::to_string(kDensePtmMaxQubits) + " sites");
    const bool state = ptm.cols() == 1;
    const int po = 4, pi = state ? 1 : 4;
    const long phys = po * pi;
    long total = 1;
    for (int m = 0; m < n; ++m) total *= phys;
    if (ptm.rows() * ptm.cols() != total)
        throw std::invalid_argument("mpo_from_dense: dimension mismatch");
    // Interleave row/column digits into per-site (o, i) order.
    Eigen::VectorXd flat(total);
    for (long r = 0; r < ptm.rows(); ++r)
        for (long c = 0; c < ptm.cols(); ++c) {
            long f = 0, rr = r, cc = c;
            std::vector<long> od(static_cast<size_t>(n)), id(static_cast<size_t>(n));
            for (int m = n - 1; m >= 0; --m) {
                od[static_cast<size_t>(m)] = rr % po;
                rr /= po;
                id[static_cast<size_t>(m)] = cc % pi;
                cc /= pi;
            }
            for (int m = 0; m < n; ++m) f = f * phys + od[static_cast<size_t>(m)] * pi + id[static_cast<size_t>(m)];
            flat[f] = ptm(r, c);
        }
    std::vector<SiteTensor> sites;
    long chi = 1;
    Eigen::VectorXd rest = flat;
    for (int m = 0; m + 1 < n; ++m) {
        long cols = rest.size() / (chi * phys);
        Eigen::Map<RowMat> mat(rest.data(), chi * phys, cols);
        Eigen::BDCSVD<RowMat> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& s = svd.singularValues();
        int k = 1;
        for (long i = 0; i < s.size(); ++i)
            if (s[i] > tol * s[0]) k = static_cast<int>(i) + 1;
        SiteTensor st(static_cast<int>(chi), po, pi, k);
        Eigen::Map<RowMat>(st.data.data(), chi * phys, k) = svd.matrixU().leftCols(k);
        sites.push_back(std::move(st));
        RowMat carry = svd.singularValues().head(k).asDiagonal() *
                       RowMat(svd.matrixV().leftCols(k).transpose());
        rest = Eigen::Map<Eigen::VectorXd>(carry.data(), carry.size());
        chi = k;
    }
    SiteTensor last(static_cast<int>(chi), po, pi, 1);
    last.data = rest;
    sites.push_back(std::move(last));
    return SuperopMPO(std::move(sites));
}

}  // namespace tem
