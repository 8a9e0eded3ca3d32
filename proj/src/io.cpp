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

#include "tem/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tem {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

int axis_of(char c) {
    switch (c) {
        case 'X': case 'x': return 1;
        case 'Y': case 'y': return 2;
        case 'Z': case 'z': return 3;
        default: return -1;
    }
}

}  // namespace

SparsePauliLindblad parse_rate_table(const std::string& text, int n) {
    SparsePauliLindblad m = SparsePauliLindblad::zero(n);
    std::vector<char> seen_single(static_cast<size_t>(n) * 3, 0);
    std::vector<char> seen_pair(static_cast<size_t>(std::max(0, n - 1)) * 9, 0);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string op;
        double rate;
        if (!(ls >> op)) continue;
        if (!(ls >> rate))
            throw std::invalid_argument("rate table line " + std::to_string(lineno) + ": missing rate");
        // parse the jump operator: one or two (pauli, qubit) factors
        std::vector<std::pair<int, int>> factors;  // (axis, 0-based qubit)
        size_t pos = 0;
        while (pos < op.size()) {
            const int axis = axis_of(op[pos]);
            if (axis < 0)
                throw std::invalid_argument("rate table line " + std::to_string(lineno) +
                                            ": malformed operator '" + op + "'");
            ++pos;
            size_t start = pos;
            while (pos < op.size() && std::isdigit(static_cast<unsigned char>(op[pos]))) ++pos;
            if (start == pos)
                throw std::invalid_argument("rate table line " + std::to_string(lineno) +
                                            ": malformed operator '" + op + "'");
            const int qubit = std::stoi(op.substr(start, pos - start)) - 1;  // 1-indexed in files
            if (qubit < 0 || qubit >= n)
                throw std::invalid_argument("rate table line " + std::to_string(lineno) +
                                            ": qubit out of range in '" + op + "'");
            factors.emplace_back(axis, qubit);
        }
        if (factors.empty() || factors.size() > 2)
            throw std::invalid_argument("rate table line " + std::to_string(lineno) +
                                        ": jump operators must have weight 1 or 2");
        if (!(rate >= 0.0) || !std::isfinite(rate))
            throw std::invalid_argument("rate table line " + std::to_string(lineno) + ": bad rate");
        if (factors.size() == 1) {
            const auto [axis, q] = factors[0];
            auto& flag = seen_single[static_cast<size_t>(q) * 3 + axis - 1];
            if (flag)
                throw std::invalid_argument("rate table line " + std::to_string(lineno) +
                                            ": duplicate entry '" + op + "'");
            flag = 1;
            m.single[static_cast<size_t>(q)][static_cast<size_t>(axis - 1)] = rate;
        } else {
            auto [a1, q1] = factors[0];
            auto [a2, q2] = factors[1];
            if (q2 == q1 + 1) {
                // in order
            } else if (q1 == q2 + 1) {
                std::swap(a1, a2);
                std::swap(q1, q2);
            } else {
                throw std::invalid_argument("rate table line " + std::to_string(lineno) +
                                            ": non-adjacent pair '" + op + "'");
            }
            const size_t idx = static_cast<size_t>(q1) * 9 + (a1 - 1) * 3 + (a2 - 1);
            if (seen_pair[idx])
                throw std::invalid_argument("rate table line " + std::to_string(lineno) +
                                            ": duplicate entry '" + op + "'");
            seen_pair[idx] = 1;
            m.pair[static_cast<size_t>(q1)][static_cast<size_t>((a1 - 1) * 3 + (a2 - 1))] = rate;
        }
    }
    m.validate();
    return m;
}

SparsePauliLindblad load_rate_table(const std::filesystem::path& path, int n) {
    return parse_rate_table(read_file(path), n);
}

std::string serialize_rate_table(const SparsePauliLindblad& m) {
    static const char* kAxis = "?XYZ";
    std::ostringstream out;
    out.precision(17);
    for (int q = 0; q < m.n; ++q)
        for (int a = 1; a <= 3; ++a)
            out << kAxis[a] << (q + 1) << ' ' << m.single[static_cast<size_t>(q)][static_cast<size_t>(a - 1)] << '\n';
    for (int q = 0; q + 1 < m.n; ++q)
        for (int i = 1; i <= 3; ++i)
            for (int j = 1; j <= 3; ++j)
                out << kAxis[i] << (q + 1) << kAxis[j] << (q + 2) << ' '
                    << m.pair[static_cast<size_t>(q)][static_cast<size_t>((i - 1) * 3 + (j - 1))] << '\n';
    return out.str();
}

namespace {

constexpr char kMpoMagic[8] = {'T', 'E', 'M', 'M', 'P', 'O', '0', '1'};
constexpr std::uint32_t kEndianTag = 0x01020304u;

template <typename T>
void put(std::string& out, const T& v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(const std::string& in, size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw std::runtime_error("truncated binary payload");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace

void save_mpo(const SuperopMPO& mpo, const std::filesystem::path& path) {
    std::string out;
    out.append(kMpoMagic, sizeof(kMpoMagic));
    put<std::uint32_t>(out, kEndianTag);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(mpo.size()));
    for (int m = 0; m < mpo.size(); ++m) {
        const SiteTensor& st = mpo.site(m);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(st.chi_l));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(st.po));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(st.pi));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(st.chi_r));
    }
    for (int m = 0; m < mpo.size(); ++m) {
        const SiteTensor& st = mpo.site(m);
        out.append(reinterpret_cast<const char*>(st.data.data()), static_cast<size_t>(st.size()) * 8);
    }
    write_file(path, out);
}

SuperopMPO load_mpo(const std::filesystem::path& path) {
    const std::string in = read_file(path);
    size_t pos = 0;
    if (in.size() < sizeof(kMpoMagic) || std::memcmp(in.data(), kMpoMagic, sizeof(kMpoMagic)) != 0)
        throw std::runtime_error("not an MPO file: " + path.string());
    pos = sizeof(kMpoMagic);
    if (take<std::uint32_t>(in, pos) != kEndianTag)
        throw std::runtime_error("MPO file endianness mismatch: " + path.string());
    const auto n = take<std::uint32_t>(in, pos);
    std::vector<SiteTensor> sites;
    sites.reserve(n);
    for (std::uint32_t m = 0; m < n; ++m) {
        const auto l = take<std::uint32_t>(in, pos);
        const auto po = take<std::uint32_t>(in, pos);
        const auto pi = take<std::uint32_t>(in, pos);
        const auto r = take<std::uint32_t>(in, pos);
        sites.emplace_back(static_cast<int>(l), static_cast<int>(po), static_cast<int>(pi),
                           static_cast<int>(r));
    }
    for (auto& st : sites) {
        const size_t bytes = static_cast<size_t>(st.size()) * 8;
        if (pos + bytes > in.size()) throw std::runtime_error("truncated MPO file");
        std::memcpy(st.data.data(), in.data() + pos, bytes);
        pos += bytes;
    }
    return SuperopMPO(std::move(sites));
}

void save_outcomes(const OutcomeSet& outcomes, const std::filesystem::path& path) {
    json header;
    header["version"] = 1;
    header["n"] = outcomes.n;
    header["Q"] = outcomes.Q;
    header["M"] = outcomes.M;
    header["seed"] = outcomes.seed;
    header["backend"] = outcomes.backend;
    header["basis_probs"] = outcomes.basis_probs;
    header["fingerprint"] = outcomes.fingerprint;
    const std::string h = header.dump();
    std::string out;
    out.append("TEMOUT01", 8);
    put<std::uint32_t>(out, kEndianTag);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(h.size()));
    out.append(h);
    out.append(reinterpret_cast<const char*>(outcomes.axes.data()), outcomes.axes.size());
    out.append(reinterpret_cast<const char*>(outcomes.signs.data()), outcomes.signs.size());
    write_file(path, out);
}

OutcomeSet load_outcomes(const std::filesystem::path& path) {
    const std::string in = read_file(path);
    if (in.size() < 8 || std::memcmp(in.data(), "TEMOUT01", 8) != 0)
        throw std::runtime_error("not an outcome file: " + path.string());
    size_t pos = 8;
    if (take<std::uint32_t>(in, pos) != kEndianTag)
        throw std::runtime_error("outcome file endianness mismatch");
    const auto hlen = take<std::uint32_t>(in, pos);
    if (pos + hlen > in.size()) throw std::runtime_error("truncated outcome file");
    const json header = json::parse(in.substr(pos, hlen));
    pos += hlen;
    OutcomeSet out;
    out.n = header.at("n").get<int>();
    out.Q = header.at("Q").get<int>();
    out.M = header.at("M").get<int>();
    out.seed = header.at("seed").get<std::uint64_t>();
    out.backend = header.at("backend").get<std::string>();
    out.basis_probs = header.at("basis_probs").get<std::array<double, 3>>();
    out.fingerprint = header.value("fingerprint", "");
    out.allocate();
    const size_t abytes = out.axes.size(), sbytes = out.signs.size();
    if (pos + abytes + sbytes > in.size()) throw std::runtime_error("truncated outcome file");
    std::memcpy(out.axes.data(), in.data() + pos, abytes);
    pos += abytes;
    std::memcpy(out.signs.data(), in.data() + pos, sbytes);
    return out;
}

std::string circuit_to_json(const Circuit& circuit) {
    json j;
    j["version"] = 1;
    j["n"] = circuit.n;
    json layers = json::array();
    for (const auto& l : circuit.layers) {
        json layer;
        switch (l.kind) {
            case LayerKind::SingleQubit: {
                layer["kind"] = "single_qubit";
                json us = json::array();
                for (const auto& u : l.unitaries) {
                    json mat = json::array();
                    for (int r = 0; r < 2; ++r)
                        for (int c = 0; c < 2; ++c)
                            mat.push_back({u(r, c).real(), u(r, c).imag()});
                    us.push_back(mat);
                }
                layer["unitaries"] = us;
                break;
            }
            case LayerKind::Clifford:
                layer["kind"] = "clifford";
                layer["ids"] = l.clifford_ids;
                break;
            case LayerKind::Cnot: {
                layer["kind"] = "cnot";
                json pairs = json::array();
                for (auto [c, t] : l.pairs) pairs.push_back({c, t});
                layer["pairs"] = pairs;
                break;
            }
            case LayerKind::TwoLocal: {
                layer["kind"] = "two_local";
                layer["q1"] = l.q1;
                layer["q2"] = l.q2;
                json rows = json::array();
                for (int r = 0; r < 16; ++r) {
                    json row = json::array();
                    for (int c = 0; c < 16; ++c) row.push_back(l.two_local_ptm(r, c));
                    rows.push_back(row);
                }
                layer["ptm"] = rows;
                break;
            }
        }
        layers.push_back(layer);
    }
    j["layers"] = layers;
    json noise = json::array();
    for (const auto& a : circuit.noise) noise.push_back({{"after_layer", a.after_layer}, {"model", a.model_id}});
    j["noise"] = noise;
    return j.dump(2);
}

Circuit circuit_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported circuit version");
    Circuit c;
    c.n = j.at("n").get<int>();
    for (const auto& layer : j.at("layers")) {
        const std::string kind = layer.at("kind").get<std::string>();
        if (kind == "single_qubit") {
            std::vector<Eigen::Matrix2cd> us;
            for (const auto& mat : layer.at("unitaries")) {
                Eigen::Matrix2cd u;
                int idx = 0;
                for (int r = 0; r < 2; ++r)
                    for (int col = 0; col < 2; ++col) {
                        u(r, col) = std::complex<double>(mat[idx][0].get<double>(), mat[idx][1].get<double>());
                        ++idx;
                    }
                us.push_back(u);
            }
            c.layers.push_back(CircuitLayer::single_qubit(std::move(us)));
        } else if (kind == "clifford") {
            c.layers.push_back(CircuitLayer::clifford(layer.at("ids").get<std::vector<int>>()));
        } else if (kind == "cnot") {
            std::vector<std::pair<int, int>> pairs;
            for (const auto& p : layer.at("pairs")) pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
            c.layers.push_back(CircuitLayer::cnot(std::move(pairs)));
        } else if (kind == "two_local") {
            Eigen::MatrixXd ptm(16, 16);
            const auto& rows = layer.at("ptm");
            for (int r = 0; r < 16; ++r)
                for (int col = 0; col < 16; ++col) ptm(r, col) = rows[r][col].get<double>();
            c.layers.push_back(CircuitLayer::two_local(std::move(ptm), layer.at("q1").get<int>(),
                                                       layer.at("q2").get<int>()));
        } else {
            throw std::runtime_error("unknown layer kind '" + kind + "'");
        }
    }
    for (const auto& a : j.at("noise"))
        c.noise.push_back({a.at("after_layer").get<int>(), a.at("model").get<std::string>()});
    c.validate();
    return c;
}

std::string report_to_json(const EstimateReport& report) {
    json j;
    j["mean"] = report.mean;
    j["stderr"] = report.stderror;
    j["bias_bound"] = report.bias_bound;
    if (report.overhead >= 0.0) j["overhead"] = report.overhead;
    j["Q"] = report.Q;
    j["M"] = report.M;
    j["S"] = report.S;
    j["fingerprint"] = report.fingerprint;
    return j.dump(2);
}

std::string ledger_to_json(const MitigationMap& map) {
    json j;
    j["chi_max"] = map.chi_max;
    j["fingerprint"] = map.fingerprint;
    json entries = json::array();
    for (const auto& rec : map.ledger) {
        json e;
        e["discarded_weight"] = rec.discarded_weight;
        e["relative_error"] = rec.relative_error;
        e["error_bound"] = rec.error_bound();
        entries.push_back(e);
    }
    j["iterations"] = entries;
    j["relative_error_sum"] = map.relative_error_sum();
    return j.dump(2);
}

std::uint64_t fnv1a(const void* data, size_t len, std::uint64_t basis) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = basis;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string fnv1a_hex(const std::string& payload) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(payload.data(), payload.size())));
    return std::string(buf);
}

}  // namespace tem
