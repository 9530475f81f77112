// Copyright 2026 The extsqd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "extsqd/hamiltonian.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "extsqd/error.hpp"
#include "extsqd/parallel.hpp"

namespace extsqd {

Hamiltonian::Hamiltonian(int n_orbitals) : n_orbitals_(n_orbitals) {
    if (n_orbitals < 0 || static_cast<std::size_t>(n_orbitals) > kMaxOrbitals)
        throw InputError("unsupported orbital count " + std::to_string(n_orbitals));
    const auto m = static_cast<std::size_t>(n_orbitals);
    h_.assign(m * m, 0.0);
    pair_.resize(m * m);
    for (std::size_t p = 0; p < m; ++p)
        for (std::size_t r = 0; r < m; ++r) pair_[p * m + r] = p >= r ? p * (p + 1) / 2 + r : r * (r + 1) / 2 + p;
    const std::size_t npair = m * (m + 1) / 2;
    eri_.assign(npair * (npair + 1) / 2, 0.0);
    coulomb_.assign(m * m, 0.0);
    exchange_.assign(m * m, 0.0);
}

void Hamiltonian::set_one_body(int p, int r, double v) {
    h_[static_cast<std::size_t>(p * n_orbitals_ + r)] = v;
    h_[static_cast<std::size_t>(r * n_orbitals_ + p)] = v;
}

void Hamiltonian::set_eri(int p, int r, int q, int s, double v) {
    eri_[eri_index(p, r, q, s)] = v;
    refresh_cache(p, r, q, s);
}

void Hamiltonian::refresh_cache(int p, int r, int q, int s) {
    const int m = n_orbitals_;
    auto at = [m](int a, int b) { return static_cast<std::size_t>(a * m + b); };
    if (p == r && q == s) coulomb_[at(p, q)] = coulomb_[at(q, p)] = eri(p, p, q, q);
    if ((p == q && r == s) || (p == s && r == q)) exchange_[at(p, r)] = exchange_[at(r, p)] = eri(p, r, r, p);
}

void Hamiltonian::validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!std::isfinite(core_energy_) || !std::all_of(h_.begin(), h_.end(), finite) ||
        !std::all_of(eri_.begin(), eri_.end(), finite))
        throw InputError("Hamiltonian contains non-finite integrals");
}

// ---------------------------------------------------------------------------
// FCIDUMP

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

double parse_real(std::string token) {
    for (auto& c : token)
        if (c == 'D' || c == 'd') c = 'E';
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size())
        throw InputError("FCIDUMP: non-numeric value '" + token + "'");
    return v;
}

long parse_int(const std::string& token, const char* what) {
    char* end = nullptr;
    const long v = std::strtol(token.c_str(), &end, 10);
    if (token.empty() || end != token.c_str() + token.size())
        throw InputError(std::string("FCIDUMP: invalid ") + what + " '" + token + "'");
    return v;
}

}  // namespace

FcidumpData parse_fcidump(std::string_view text) {
    const std::string up = upper(text);
    const auto start = up.find("&FCI");
    if (start == std::string::npos) throw InputError("FCIDUMP: missing &FCI header");
    std::size_t body = std::string::npos;
    std::size_t header_end = std::string::npos;
    for (std::size_t i = start + 4; i < up.size(); ++i) {
        if (up[i] == '/') {
            header_end = i;
            body = i + 1;
            break;
        }
        if (up.compare(i, 4, "&END") == 0) {
            header_end = i;
            body = i + 4;
            break;
        }
    }
    if (header_end == std::string::npos) throw InputError("FCIDUMP: header not terminated by '/' or '&END'");

    // Namelist: KEY=value[,value...] separated by commas/whitespace.
    std::map<std::string, std::string> keys;
    {
        std::string header = up.substr(start + 4, header_end - start - 4);
        for (auto& c : header)
            if (c == '\n' || c == '\r' || c == '\t') c = ' ';
        std::size_t pos = 0;
        while ((pos = header.find('=', pos)) != std::string::npos) {
            std::size_t k1 = pos;
            while (k1 > 0 && header[k1 - 1] == ' ') --k1;
            std::size_t k0 = k1;
            while (k0 > 0 && (std::isalnum(static_cast<unsigned char>(header[k0 - 1])) || header[k0 - 1] == '_')) --k0;
            const std::string key = header.substr(k0, k1 - k0);
            std::size_t v0 = pos + 1;
            while (v0 < header.size() && header[v0] == ' ') ++v0;
            std::size_t v1 = v0;
            while (v1 < header.size() && header[v1] != ',' && header[v1] != ' ') ++v1;
            keys[key] = header.substr(v0, v1 - v0);
            pos = v1;
        }
    }
    auto need = [&](const char* key) -> long {
        auto it = keys.find(key);
        if (it == keys.end()) throw InputError(std::string("FCIDUMP: header lacks ") + key);
        return parse_int(it->second, key);
    };
    const long norb = need("NORB");
    const long nelec = need("NELEC");
    const long ms2 = keys.count("MS2") ? need("MS2") : 0;
    if (norb <= 0 || static_cast<std::size_t>(norb) > kMaxOrbitals)
        throw InputError("FCIDUMP: NORB=" + std::to_string(norb) + " unsupported");
    if (nelec < 0 || ((nelec + ms2) % 2 + 2) % 2 != 0)
        throw InputError("FCIDUMP: NELEC+MS2 must be even and NELEC nonnegative");

    FcidumpData out{Hamiltonian(static_cast<int>(norb)), {}};
    out.report.sector_hint = {static_cast<int>(norb), static_cast<int>((nelec + ms2) / 2),
                              static_cast<int>((nelec - ms2) / 2)};
    out.report.sector_hint.validate();

    std::istringstream records{std::string(text.substr(body))};
    std::string tok[5];
    std::set<std::size_t> seen_eri;
    std::set<std::pair<long, long>> seen_h;
    bool seen_core = false;
    while (records >> tok[0]) {
        for (int i = 1; i < 5; ++i)
            if (!(records >> tok[i])) throw InputError("FCIDUMP: truncated record after '" + tok[0] + "'");
        const double v = parse_real(tok[0]);
        long idx[4];
        for (int i = 0; i < 4; ++i) {
            idx[i] = parse_int(tok[i + 1], "index");
            if (idx[i] < 0 || idx[i] > norb)
                throw InputError("FCIDUMP: index " + std::to_string(idx[i]) + " out of range 0.." + std::to_string(norb));
        }
        const auto [i, j, k, l] = std::tuple{idx[0], idx[1], idx[2], idx[3]};
        auto& ham = out.hamiltonian;
        if (i && j && k && l) {
            const auto key = ham.eri_index(int(i - 1), int(j - 1), int(k - 1), int(l - 1));
            if (!seen_eri.insert(key).second) ++out.report.duplicate_records;
            ham.set_eri(int(i - 1), int(j - 1), int(k - 1), int(l - 1), v);
        } else if (i && j && !k && !l) {
            if (!seen_h.insert({std::max(i, j), std::min(i, j)}).second) ++out.report.duplicate_records;
            ham.set_one_body(int(i - 1), int(j - 1), v);
        } else if (!i && !j && !k && !l) {
            if (seen_core) ++out.report.duplicate_records;
            seen_core = true;
            ham.set_core_energy(v);
        } else if (i && !j && !k && !l) {
            ++out.report.ignored_records;
        } else {
            throw InputError("FCIDUMP: unrecognised index pattern " + tok[1] + " " + tok[2] + " " + tok[3] + " " + tok[4]);
        }
    }
    out.hamiltonian.validate();
    return out;
}

FcidumpData read_fcidump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open FCIDUMP '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_fcidump(ss.str());
}

void write_fcidump(std::ostream& out, const Hamiltonian& h, const Sector& sector) {
    const int m = h.n_orbitals();
    out << " &FCI NORB=" << m << ",NELEC=" << sector.n_alpha + sector.n_beta
        << ",MS2=" << sector.n_alpha - sector.n_beta << ",\n  ORBSYM=";
    for (int p = 0; p < m; ++p) out << "1,";
    out << "\n  ISYM=1,\n &END\n";
    char buf[64];
    auto line = [&](double v, int i, int j, int k, int l) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ' ' << buf << ' ' << i << ' ' << j << ' ' << k << ' ' << l << '\n';
    };
    for (int p = 0; p < m; ++p)
        for (int r = 0; r <= p; ++r)
            for (int q = 0; q <= p; ++q)
                for (int s = 0; s <= (q == p ? r : q); ++s) {
                    const double v = h.eri(p, r, q, s);
                    if (v != 0.0) line(v, p + 1, r + 1, q + 1, s + 1);
                }
    for (int p = 0; p < m; ++p)
        for (int r = 0; r <= p; ++r)
            if (h.one_body(p, r) != 0.0) line(h.one_body(p, r), p + 1, r + 1, 0, 0);
    line(h.core_energy(), 0, 0, 0, 0);
}

std::string to_fcidump(const Hamiltonian& h, const Sector& sector) {
    std::ostringstream ss;
    write_fcidump(ss, h, sector);
    return ss.str();
}

Hamiltonian hubbard_chain(int sites, double t, double u, bool periodic) {
    if (sites < 1) throw InputError("Hubbard chain needs at least one site");
    if (sites == 1 && periodic) throw InputError("a periodic Hubbard chain needs at least two sites");
    Hamiltonian h(sites);
    const int bonds = periodic ? sites : sites - 1;
    for (int b = 0; b < bonds; ++b) {
        const int p = b, r = (b + 1) % sites;
        h.set_one_body(p, r, h.one_body(p, r) - t);
    }
    for (int p = 0; p < sites; ++p) h.set_eri(p, p, p, p, u);
    return h;
}

Hamiltonian rotate_orbitals(const Hamiltonian& h, const Eigen::MatrixXd& c) {
    const int m = h.n_orbitals();
    if (c.rows() != m || c.cols() != m) throw InputError("orbital rotation must be M x M");
    const auto n = static_cast<std::size_t>(m);
    Eigen::MatrixXd one(m, m);
    for (int p = 0; p < m; ++p)
        for (int r = 0; r < m; ++r) one(p, r) = h.one_body(p, r);
    const Eigen::MatrixXd one_t = c.transpose() * one * c;

    // Four quarter transformations over a dense M^4 tensor, index order (p q r s).
    std::vector<double> t(n * n * n * n), u(t.size());
    auto at = [n](std::size_t p, std::size_t q, std::size_t r, std::size_t s) { return ((p * n + q) * n + r) * n + s; };
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q)
            for (int r = 0; r < m; ++r)
                for (int s = 0; s < m; ++s)
                    t[at(static_cast<std::size_t>(p), static_cast<std::size_t>(q), static_cast<std::size_t>(r),
                         static_cast<std::size_t>(s))] = h.eri(p, q, r, s);
    for (int pass = 0; pass < 4; ++pass) {
        // Transform the last index and rotate it to the front.
        std::fill(u.begin(), u.end(), 0.0);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t d = 0; d < n; ++d)
                    for (std::size_t s = 0; s < n; ++s) {
                        const double v = t[at(a, b, d, s)];
                        if (v == 0.0) continue;
                        for (std::size_t k = 0; k < n; ++k)
                            u[at(k, a, b, d)] += c(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) * v;
                    }
        std::swap(t, u);
    }
    Hamiltonian out(m);
    out.set_core_energy(h.core_energy());
    for (int p = 0; p < m; ++p)
        for (int r = 0; r <= p; ++r) out.set_one_body(p, r, 0.5 * (one_t(p, r) + one_t(r, p)));
    for (int p = 0; p < m; ++p)
        for (int r = 0; r <= p; ++r)
            for (int q = 0; q < m; ++q)
                for (int s = 0; s <= q; ++s)
                    out.set_eri(p, r, q, s, t[at(static_cast<std::size_t>(p), static_cast<std::size_t>(r),
                                                 static_cast<std::size_t>(q), static_cast<std::size_t>(s))]);
    return out;
}

Hamiltonian one_body_eigenbasis(const Hamiltonian& h) {
    const int m = h.n_orbitals();
    Eigen::MatrixXd one(m, m);
    for (int p = 0; p < m; ++p)
        for (int r = 0; r < m; ++r) one(p, r) = h.one_body(p, r);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(one);
    Eigen::MatrixXd c = es.eigenvectors();
    for (Eigen::Index k = 0; k < c.cols(); ++k) {
        Eigen::Index big = 0;
        c.col(k).cwiseAbs().maxCoeff(&big);
        if (c(big, k) < 0) c.col(k) *= -1.0;
    }
    return rotate_orbitals(h, c);
}

// ---------------------------------------------------------------------------
// Slater-Condon rules

namespace {

// Generalized Fock-like element for a single excitation i -> a in spin s, with
// occupations taken from the ket.
double single_value(const Hamiltonian& h, const std::vector<int>& occ_same, const std::vector<int>& occ_other,
                    int i, int a) {
    double v = h.one_body(a, i);
    for (int j : occ_same) v += h.eri(a, i, j, j) - h.eri(a, j, j, i);
    for (int j : occ_other) v += h.eri(a, i, j, j);
    return v;
}

}  // namespace

double diagonal_element(const Hamiltonian& h, const Configuration& y) {
    const auto oa = y.alpha.ones();
    const auto ob = y.beta.ones();
    double e = h.core_energy();
    for (int i : oa) e += h.one_body(i, i);
    for (int i : ob) e += h.one_body(i, i);
    auto same = [&](const std::vector<int>& occ) {
        double s = 0.0;
        for (std::size_t x = 0; x < occ.size(); ++x)
            for (std::size_t y2 = 0; y2 < x; ++y2) s += h.coulomb(occ[x], occ[y2]) - h.exchange(occ[x], occ[y2]);
        return s;
    };
    e += same(oa) + same(ob);
    for (int i : oa)
        for (int j : ob) e += h.coulomb(i, j);
    return e;
}

double matrix_element(const Hamiltonian& h, const Configuration& x, const Configuration& y) {
    if (hamming_weights(x) != hamming_weights(y))
        throw InputError("matrix_element: configurations belong to different sectors");
    const Bitmask da = x.alpha ^ y.alpha;
    const Bitmask db = x.beta ^ y.beta;
    const int degree = (da.count() + db.count()) / 2;
    if (degree == 0) return diagonal_element(h, y);
    if (degree > 2) return 0.0;

    // Holes: occupied in y, empty in x. Particles: occupied in x, empty in y.
    std::vector<SpinOrbital> holes, parts;
    for (Spin s : {Spin::Alpha, Spin::Beta}) {
        const Bitmask& d = s == Spin::Alpha ? da : db;
        for (int p : (d & y.mask(s)).ones()) holes.push_back({p, s});
        for (int p : (d & x.mask(s)).ones()) parts.push_back({p, s});
    }
    Configuration work = y;
    if (degree == 1) {
        const auto [i, si] = holes[0];
        const auto [a, sa] = parts[0];
        int sign = ladder(work, holes[0], false);
        sign *= ladder(work, parts[0], true);
        const auto& same = si == Spin::Alpha ? y.alpha : y.beta;
        const auto& other = si == Spin::Alpha ? y.beta : y.alpha;
        (void)sa;
        return sign * single_value(h, same.ones(), other.ones(), i, a);
    }
    // a+_a a+_b a_j a_i with i = holes[0], j = holes[1], a = parts[0], b = parts[1].
    const SpinOrbital i = holes[0], j = holes[1], a = parts[0], b = parts[1];
    int sign = ladder(work, i, false);
    sign *= ladder(work, j, false);
    sign *= ladder(work, b, true);
    sign *= ladder(work, a, true);
    double v = 0.0;
    if (a.spin == i.spin && b.spin == j.spin) v += h.eri(a.orbital, i.orbital, b.orbital, j.orbital);
    if (a.spin == j.spin && b.spin == i.spin) v -= h.eri(a.orbital, j.orbital, b.orbital, i.orbital);
    return sign * v;
}

std::vector<std::pair<Configuration, double>> connected_configurations(const Hamiltonian& h, const Configuration& y) {
    const int m = h.n_orbitals();
    std::vector<std::pair<Configuration, double>> out;
    out.emplace_back(y, diagonal_element(h, y));

    const std::vector<int> occ[2] = {y.alpha.ones(), y.beta.ones()};
    const std::vector<int> vir[2] = {y.alpha.zeros(static_cast<std::size_t>(m)), y.beta.zeros(static_cast<std::size_t>(m))};
    constexpr Spin spins[2] = {Spin::Alpha, Spin::Beta};

    for (int s = 0; s < 2; ++s) {
        const Spin sp = spins[s];
        for (int i : occ[s])
            for (int a : vir[s]) {
                const double v = single_value(h, occ[s], occ[1 - s], i, a);
                if (v == 0.0) continue;
                Configuration z = y;
                int sign = ladder(z, {i, sp}, false);
                sign *= ladder(z, {a, sp}, true);
                out.emplace_back(z, sign * v);
            }
    }
    // Same-spin doubles.
    for (int s = 0; s < 2; ++s) {
        const Spin sp = spins[s];
        const auto& o = occ[s];
        const auto& w = vir[s];
        for (std::size_t x1 = 0; x1 < o.size(); ++x1)
            for (std::size_t x2 = x1 + 1; x2 < o.size(); ++x2)
                for (std::size_t y1 = 0; y1 < w.size(); ++y1)
                    for (std::size_t y2 = y1 + 1; y2 < w.size(); ++y2) {
                        const int i = o[x1], j = o[x2], a = w[y1], b = w[y2];
                        const double v = h.eri(a, i, b, j) - h.eri(a, j, b, i);
                        if (v == 0.0) continue;
                        Configuration z = y;
                        int sign = ladder(z, {i, sp}, false);
                        sign *= ladder(z, {j, sp}, false);
                        sign *= ladder(z, {b, sp}, true);
                        sign *= ladder(z, {a, sp}, true);
                        out.emplace_back(z, sign * v);
                    }
    }
    // Opposite-spin doubles.
    for (int i : occ[0])
        for (int a : vir[0])
            for (int j : occ[1])
                for (int b : vir[1]) {
                    const double v = h.eri(a, i, b, j);
                    if (v == 0.0) continue;
                    Configuration z = y;
                    int sign = ladder(z, {i, Spin::Alpha}, false);
                    sign *= ladder(z, {j, Spin::Beta}, false);
                    sign *= ladder(z, {b, Spin::Beta}, true);
                    sign *= ladder(z, {a, Spin::Alpha}, true);
                    out.emplace_back(z, sign * v);
                }
    return out;
}

// ---------------------------------------------------------------------------
// Sparse states and operator application

SparseState::SparseState(Sector sector, std::vector<Entry> entries) : sector_(sector) {
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.first < b.first; });
    for (auto& e : entries) {
        if (!entries_.empty() && entries_.back().first == e.first)
            entries_.back().second += e.second;
        else
            entries_.push_back(std::move(e));
    }
    std::erase_if(entries_, [](const Entry& e) { return std::abs(e.second) <= kPrune; });
}

SparseState SparseState::from_column(const Sector& sector, const SubspaceBasis& basis, std::span<const double> column) {
    if (column.size() != basis.size()) throw InputError("coefficient column does not match basis size");
    std::vector<Entry> e;
    e.reserve(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) e.emplace_back(basis[i], column[i]);
    return SparseState(sector, std::move(e));
}

double SparseState::norm() const {
    double s = 0.0;
    for (const auto& [c, a] : entries_) s += a * a;
    return std::sqrt(s);
}

double SparseState::amplitude(const Configuration& x) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), x,
                               [](const Entry& e, const Configuration& c) { return e.first < c; });
    return (it != entries_.end() && it->first == x) ? it->second : 0.0;
}

double SparseState::dot(const SparseState& other) const {
    double s = 0.0;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() && b != other.entries_.end()) {
        if (a->first < b->first)
            ++a;
        else if (b->first < a->first)
            ++b;
        else {
            s += a->second * b->second;
            ++a;
            ++b;
        }
    }
    return s;
}

SparseState apply_operator(const FermionOperator& op, const SparseState& v) {
    const Sector& in = v.sector();
    std::pair<int, int> shift{0, 0};
    for (std::size_t t = 0; t < op.size(); ++t) {
        const auto s = op[t].op.spin_shift();
        if (t == 0)
            shift = s;
        else if (s != shift)
            throw InputError("apply_operator: terms change the spin populations inconsistently");
        if (op[t].op.max_orbital() >= in.n_orbitals)
            throw InputError("apply_operator: term references an orbital outside the state");
    }
    Sector out{in.n_orbitals, in.n_alpha + shift.first, in.n_beta + shift.second};
    std::unordered_map<Configuration, double, ConfigurationHash> acc;
    for (const auto& term : op) {
        if (term.weight == 0.0) continue;
        for (const auto& [c, a] : v.entries()) {
            const auto r = apply_excitation(term.op, c, in.n_orbitals);
            if (r) acc[r.config] += term.weight * r.sign * a;
        }
    }
    if (out.n_alpha < 0 || out.n_beta < 0 || out.n_alpha > out.n_orbitals || out.n_beta > out.n_orbitals) {
        // Every term annihilates every configuration; keep a well-formed sector.
        out = in;
        acc.clear();
    }
    return SparseState(out, {acc.begin(), acc.end()});
}

FermionOperator hamiltonian_terms(const Hamiltonian& h) {
    const int m = h.n_orbitals();
    FermionOperator terms;
    if (h.core_energy() != 0.0) terms.push_back({h.core_energy(), ExcitationOperator::identity()});
    constexpr Spin spins[2] = {Spin::Alpha, Spin::Beta};
    for (Spin s : spins)
        for (int p = 0; p < m; ++p)
            for (int r = 0; r < m; ++r)
                if (h.one_body(p, r) != 0.0) terms.push_back({h.one_body(p, r), ExcitationOperator::single({p, s}, {r, s})});
    for (Spin s : spins)
        for (Spin t : spins)
            for (int p = 0; p < m; ++p)
                for (int r = 0; r < m; ++r)
                    for (int q = 0; q < m; ++q)
                        for (int u = 0; u < m; ++u) {
                            const double v = h.eri(p, r, q, u);
                            if (v == 0.0) continue;
                            const SpinOrbital cp{p, s}, cq{q, t}, au{u, t}, ar{r, s};
                            if (cp == cq || au == ar) continue;
                            terms.push_back({0.5 * v, ExcitationOperator({cp, cq}, {au, ar})});
                        }
    return terms;
}

SparseState apply_hamiltonian(const Hamiltonian& h, const SparseState& v) {
    std::unordered_map<Configuration, double, ConfigurationHash> acc;
    for (const auto& [c, a] : v.entries())
        for (const auto& [z, hv] : connected_configurations(h, c)) acc[z] += hv * a;
    return SparseState(v.sector(), {acc.begin(), acc.end()});
}

// ---------------------------------------------------------------------------
// Subspace operator

SubspaceOperator::SubspaceOperator(std::shared_ptr<const Hamiltonian> h, std::shared_ptr<const SubspaceBasis> basis,
                                   SubspaceOperatorOptions options)
    : h_(std::move(h)), basis_(std::move(basis)), options_(options) {
    const std::size_t n = basis_->size();
    options_.chunk = std::max<std::size_t>(options_.chunk, 1);
    diagonal_.resize(n);
    const std::size_t n_chunks = (n + options_.chunk - 1) / options_.chunk;
    if (n < options_.explicit_threshold) {
        std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
        parallel_for(n_chunks, options_.workers, [&](std::size_t c) {
            const std::size_t lo = c * options_.chunk, hi = std::min(n, lo + options_.chunk);
            for (std::size_t k = lo; k < hi; ++k) row(k, rows[k]);
        });
        row_ptr_.assign(n + 1, 0);
        for (std::size_t k = 0; k < n; ++k) row_ptr_[k + 1] = row_ptr_[k] + rows[k].size();
        cols_.reserve(row_ptr_[n]);
        vals_.reserve(row_ptr_[n]);
        for (std::size_t k = 0; k < n; ++k) {
            for (const auto& [c, v] : rows[k]) {
                cols_.push_back(c);
                vals_.push_back(v);
                if (c == k) diagonal_[k] = v;
            }
        }
    } else {
        parallel_for(n_chunks, options_.workers, [&](std::size_t c) {
            const std::size_t lo = c * options_.chunk, hi = std::min(n, lo + options_.chunk);
            for (std::size_t k = lo; k < hi; ++k) diagonal_[k] = diagonal_element(*h_, (*basis_)[k]);
        });
    }
}

void SubspaceOperator::row(std::size_t k, std::vector<std::pair<std::size_t, double>>& out) const {
    out.clear();
    for (const auto& [z, v] : connected_configurations(*h_, (*basis_)[k])) {
        const auto j = basis_->index_of(z);
        if (j >= 0) out.emplace_back(static_cast<std::size_t>(j), v);
    }
    std::sort(out.begin(), out.end());
}

void SubspaceOperator::apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = basis_->size();
    if (x.size() != n || y.size() != n) throw InputError("SubspaceOperator::apply: dimension mismatch");
    const std::size_t n_chunks = (n + options_.chunk - 1) / options_.chunk;
    if (is_explicit()) {
        parallel_for(n_chunks, options_.workers, [&](std::size_t c) {
            const std::size_t lo = c * options_.chunk, hi = std::min(n, lo + options_.chunk);
            for (std::size_t k = lo; k < hi; ++k) {
                double s = 0.0;
                for (std::size_t e = row_ptr_[k]; e < row_ptr_[k + 1]; ++e) s += vals_[e] * x[cols_[e]];
                y[k] = s;
            }
        });
        return;
    }
    parallel_for(n_chunks, options_.workers, [&](std::size_t c) {
        std::vector<std::pair<std::size_t, double>> r;
        const std::size_t lo = c * options_.chunk, hi = std::min(n, lo + options_.chunk);
        for (std::size_t k = lo; k < hi; ++k) {
            row(k, r);
            double s = 0.0;
            for (const auto& [j, v] : r) s += v * x[j];
            y[k] = s;
        }
    });
}

void SubspaceOperator::dense(std::span<double> out) const {
    const std::size_t n = basis_->size();
    if (out.size() != n * n) throw InputError("SubspaceOperator::dense: output size mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t n_chunks = (n + options_.chunk - 1) / options_.chunk;
    parallel_for(n_chunks, options_.workers, [&](std::size_t c) {
        std::vector<std::pair<std::size_t, double>> r;
        const std::size_t lo = c * options_.chunk, hi = std::min(n, lo + options_.chunk);
        for (std::size_t k = lo; k < hi; ++k) {
            if (is_explicit()) {
                for (std::size_t e = row_ptr_[k]; e < row_ptr_[k + 1]; ++e) out[cols_[e] * n + k] = vals_[e];
                continue;
            }
            row(k, r);
            for (const auto& [j, v] : r) out[j * n + k] = v;
        }
    });
}

std::unique_ptr<SubspaceOperator> build_subspace_operator(std::shared_ptr<const Hamiltonian> h,
                                                          std::shared_ptr<const SubspaceBasis> basis,
                                                          SubspaceOperatorOptions options) {
    if (!basis || basis->empty()) throw InputError("cannot build an operator on an empty basis");
    const auto [na, nb] = hamming_weights((*basis)[0]);
    for (const auto& c : *basis)
        if (hamming_weights(c) != std::pair{na, nb}) throw InputError("subspace basis mixes particle-number sectors");
    return std::make_unique<SubspaceOperator>(std::move(h), std::move(basis), options);
}

}  // namespace extsqd
