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

#include "extsqd/state_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "extsqd/error.hpp"

namespace extsqd {

namespace {

constexpr char kMagic[8] = {'E', 'X', 'T', 'S', 'Q', 'D', 'S', 'T'};

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

class Writer {
   public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    std::vector<std::uint8_t> out;
};

class Reader {
   public:
    Reader(const std::uint8_t* data, std::size_t n) : data_(data), n_(n) {}
    void need(std::size_t k) const {
        if (pos_ + k > n_) throw InputError("state file is truncated");
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::string str(std::size_t k) {
        need(k);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), k);
        pos_ += k;
        return s;
    }
    std::size_t pos() const { return pos_; }

   private:
    const std::uint8_t* data_;
    std::size_t n_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_state(const CIState& state) {
    if (!state.basis) throw InputError("cannot persist a state without a basis");
    const std::size_t dim = state.basis->size(), roots = state.n_roots();
    if (static_cast<std::size_t>(state.coefficients.rows()) != dim ||
        static_cast<std::size_t>(state.coefficients.cols()) != roots)
        throw InputError("state coefficients do not match the basis and root count");
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kStateFileVersion);
    w.i32(state.sector.n_orbitals);
    w.i32(state.sector.n_alpha);
    w.i32(state.sector.n_beta);
    w.u64(roots);
    w.u64(dim);
    w.u32(kMaskWords);
    w.u32(static_cast<std::uint32_t>(state.method.size()));
    w.bytes(state.method.data(), state.method.size());
    for (const auto& c : *state.basis) {
        for (auto word : c.alpha.words()) w.u64(word);
        for (auto word : c.beta.words()) w.u64(word);
    }
    for (Eigen::Index j = 0; j < state.coefficients.cols(); ++j)
        for (Eigen::Index i = 0; i < state.coefficients.rows(); ++i) w.f64(state.coefficients(i, j));
    for (Eigen::Index j = 0; j < state.energies.size(); ++j) w.f64(state.energies(j));
    for (std::size_t j = 0; j < roots; ++j) w.out.push_back(j < state.converged.size() && state.converged[j] ? 1 : 0);
    w.u64(fnv1a(w.out.data(), w.out.size()));
    return std::move(w.out);
}

CIState deserialize_state(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < sizeof kMagic + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw InputError("not a state file (bad magic)");
    const std::size_t body = bytes.size() - 8;
    Reader tail(bytes.data() + body, 8);
    if (tail.u64() != fnv1a(bytes.data(), body)) throw InputError("state file checksum mismatch");

    Reader r(bytes.data(), body);
    r.str(sizeof kMagic);
    const auto version = r.u32();
    if (version != kStateFileVersion)
        throw InputError("state file version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kStateFileVersion) + ")");
    CIState st;
    st.sector.n_orbitals = r.i32();
    st.sector.n_alpha = r.i32();
    st.sector.n_beta = r.i32();
    st.sector.validate();
    const auto roots = r.u64(), dim = r.u64();
    if (r.u32() != kMaskWords) throw InputError("state file mask width does not match this build");
    st.method = r.str(r.u32());
    // Reject sizes that cannot fit before allocating.
    const std::size_t per_config = 2 * kMaskWords * 8;
    if (dim > body / per_config || roots > body / 8) throw InputError("state file sizes are inconsistent");
    std::vector<Configuration> configs(dim);
    for (auto& c : configs) {
        for (auto& word : c.alpha.words()) word = r.u64();
        for (auto& word : c.beta.words()) word = r.u64();
        if (!in_sector(c, st.sector)) throw InputError("state file basis entry outside its sector");
    }
    st.basis = std::make_shared<const SubspaceBasis>(configs);
    if (st.basis->size() != dim || !std::equal(configs.begin(), configs.end(), st.basis->begin()))
        throw InputError("state file basis is not in canonical order");
    st.coefficients.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(roots));
    for (Eigen::Index j = 0; j < st.coefficients.cols(); ++j)
        for (Eigen::Index i = 0; i < st.coefficients.rows(); ++i) st.coefficients(i, j) = r.f64();
    st.energies.resize(static_cast<Eigen::Index>(roots));
    for (Eigen::Index j = 0; j < st.energies.size(); ++j) st.energies(j) = r.f64();
    for (std::size_t j = 0; j < roots; ++j) st.converged.push_back(r.u8() != 0);
    if (r.pos() != body) throw InputError("state file has trailing bytes");
    return st;
}

void persist_state(const std::string& path, const CIState& state) {
    const auto bytes = serialize_state(state);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write state file '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("failed writing state file '" + path + "'");
}

CIState load_state(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open state file '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_state(bytes);
}

}  // namespace extsqd
