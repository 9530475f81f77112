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

#include <cmath>
#include <random>

#include "doctest.h"
#include "extsqd/error.hpp"
#include "extsqd/fock_oracle.hpp"
#include "extsqd/observables.hpp"
#include "extsqd/pipelines.hpp"
#include "test_support.hpp"

using namespace extsqd;
using extsqd::testing::config;

namespace {

SparseState random_state(const Sector& s, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::vector<SparseState::Entry> e;
    double n = 0.0;
    for (const auto& c : enumerate_sector(s)) {
        e.emplace_back(c, g(rng));
        n += e.back().second * e.back().second;
    }
    for (auto& [c, a] : e) a /= std::sqrt(n);
    return SparseState(s, e);
}

SparseState det(const Sector& s, const char* bits) { return SparseState(s, {{config(bits), 1.0}}); }

CIState hubbard_pair(double u, std::size_t n_roots) {
    const Sector s{2, 1, 1};
    SolveOptions o;
    o.n_roots = n_roots;
    return diagonalize(std::make_shared<const Hamiltonian>(hubbard_chain(2, 1.0, u, false)),
                       std::make_shared<const SubspaceBasis>(enumerate_sector(s)), s, o, "fci");
}

}  // namespace

TEST_CASE("observables agree with the dense Fock oracle") {
    std::mt19937_64 rng(17);
    for (int m = 1; m <= 3; ++m) {
        const oracle::DenseFock fock(m);
        const Eigen::MatrixXd s2 = fock.s_squared();
        for (int na = 0; na <= m; ++na)
            for (int nb = 0; nb <= m; ++nb) {
                const Sector s{m, na, nb};
                const auto v = random_state(s, rng);
                const Eigen::VectorXd d = fock.to_dense(v);
                CHECK(std::abs(total_s_squared(v) - oracle::dense_expectation(s2, d)) < 1e-12);

                const OrbitalGroup g1{"a", {0}};
                const OrbitalGroup g2{"b", m > 1 ? std::vector<int>{m - 1} : std::vector<int>{0}};
                for (const auto& g : {g1, g2}) {
                    Eigen::MatrixXd nu = Eigen::MatrixXd::Zero(fock.dimension(), fock.dimension()), nd = nu;
                    for (int p : g.orbitals) {
                        nu += fock.number({p, Spin::Alpha});
                        nd += fock.number({p, Spin::Beta});
                    }
                    const auto [up, down] = group_charges(v, g);
                    CHECK(std::abs(up - oracle::dense_expectation(nu, d)) < 1e-12);
                    CHECK(std::abs(down - oracle::dense_expectation(nd, d)) < 1e-12);
                    const auto sv = local_spin(v, g);
                    CHECK(std::abs(sv[0] - oracle::dense_expectation(fock.s_x(g.orbitals), d)) < 1e-12);
                    CHECK(std::abs(sv[1]) < 1e-12);
                    CHECK(std::abs(sv[2] - oracle::dense_expectation(fock.s_z(g.orbitals), d)) < 1e-12);
                }
                const Eigen::MatrixXd dotted = fock.s_x(g1.orbitals) * fock.s_x(g2.orbitals) -
                                               fock.i_s_y(g1.orbitals) * fock.i_s_y(g2.orbitals) +
                                               fock.s_z(g1.orbitals) * fock.s_z(g2.orbitals);
                const auto c = spin_correlation(v, g1, g2);
                const double raw = oracle::dense_expectation(dotted, d);
                CHECK(std::abs(c.raw - raw) < 1e-12);
                const double mx = oracle::dense_expectation(fock.s_x(g1.orbitals), d) *
                                  oracle::dense_expectation(fock.s_x(g2.orbitals), d);
                const double mz = oracle::dense_expectation(fock.s_z(g1.orbitals), d) *
                                  oracle::dense_expectation(fock.s_z(g2.orbitals), d);
                CHECK(std::abs(c.connected - (raw - mx - mz)) < 1e-12);

                const auto prof = occupancy_profile(v);
                for (int p = 0; p < m; ++p) {
                    const auto q = static_cast<std::size_t>(p);
                    CHECK(std::abs(prof.alpha[q] - oracle::dense_expectation(fock.number({p, Spin::Alpha}), d)) < 1e-12);
                    CHECK(std::abs(prof.beta[q] - oracle::dense_expectation(fock.number({p, Spin::Beta}), d)) < 1e-12);
                }
            }
    }
}

TEST_CASE("spin observables on small examples") {
    CHECK(total_s_squared(det({2, 1, 1}, "10" "01")) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(total_s_squared(det({3, 2, 2}, "110" "110"))) < 1e-14);
    CHECK(total_s_squared(det({3, 2, 0}, "110" "000")) == doctest::Approx(2.0).epsilon(1e-14));

    const auto aa = det({2, 2, 0}, "11" "00");
    const auto c = spin_correlation(aa, {"a", {0}}, {"b", {1}});
    CHECK(c.raw == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(std::abs(c.connected) < 1e-14);

    // A doubly occupied orbital carries no spin.
    const auto pair = det({2, 1, 1}, "10" "10");
    CHECK(std::abs(spin_correlation(pair, {"a", {0}}, {"a", {0}}).raw) < 1e-14);
    const auto closed = local_spin(pair, {"a", {0, 1}});
    for (double x : closed) CHECK(std::abs(x) < 1e-14);
    const auto open = local_spin(det({3, 2, 1}, "110" "100"), {"g", {1}});
    CHECK(open[0] == 0.0);
    CHECK(open[1] == 0.0);
    CHECK(open[2] == 0.5);

    const auto v = det({4, 2, 1}, "0110" "0001");
    CHECK(group_charges(v, {"all", {0, 1, 2, 3}}) == std::pair<double, double>{2.0, 1.0});
    CHECK(group_charges(v, {"g", {2, 3}}) == std::pair<double, double>{1.0, 1.0});

    CHECK_THROWS_AS(validate_group({"e", {}}, 4), InputError);
    CHECK_THROWS_AS(validate_group({"r", {1, 1}}, 4), InputError);
    CHECK_THROWS_AS(validate_group({"o", {4}}, 4), InputError);
    CHECK_NOTHROW(validate_group({"ok", {0, 3}}, 4));
}

TEST_CASE("two-site Hubbard spin structure") {
    const double u = 4.0;
    const auto st = hubbard_pair(u, 4);
    CHECK(std::abs(st.energies(0) - (u - std::sqrt(u * u + 16.0)) / 2.0) < 1e-10);
    CHECK(std::abs(st.energies(1)) < 1e-10);
    CHECK(std::abs(total_s_squared(st.root(0))) < 1e-8);
    CHECK(std::abs(total_s_squared(st.root(1)) - 2.0) < 1e-8);

    std::vector<double> s2;
    for (std::size_t k = 0; k < st.n_roots(); ++k) s2.push_back(total_s_squared(st.root(k)));
    const auto labels = classify_roots(s2);
    CHECK(labels[0].label == "S0");
    CHECK(labels[1].label == "T1");
    CHECK(labels[2].label == "S1");
    CHECK(labels[3].label == "S2");

    const auto strong = hubbard_pair(50.0, 1);
    const auto c = spin_correlation(strong.root(0), {"left", {0}}, {"right", {1}});
    CHECK(std::abs(c.raw + 0.75) < 0.02);
    CHECK(std::abs(c.connected - c.raw) < 1e-12);
}

TEST_CASE("root classification") {
    const auto l = classify_roots({0.0, 2.0001, 1.0, 0.3, 2.0, 5.9});
    REQUIRE(l.size() == 6);
    CHECK(l[0].label == "S0");
    CHECK(l[0].kind == "singlet");
    CHECK(l[1].label == "T1");
    CHECK(l[1].kind == "triplet");
    CHECK(l[2].label == "M1");
    CHECK(l[2].kind == "mixed(1.0000)");
    CHECK(l[3].label == "S1");
    CHECK(l[4].label == "T2");
    CHECK(l[5].label == "M2");
    CHECK(classify_roots({}).empty());
}

TEST_CASE("occupancy profile matches the recovery model") {
    std::mt19937_64 rng(3);
    for (const Sector s : {Sector{5, 3, 2}, Sector{4, 2, 2}, Sector{6, 1, 4}}) {
        const auto v = random_state(s, rng);
        const auto prof = occupancy_profile(v);
        const auto model = update_model(v);
        double sa = 0.0, sb = 0.0;
        for (std::size_t p = 0; p < prof.alpha.size(); ++p) {
            CHECK(std::abs(prof.alpha[p] - model.occ_alpha[p]) < 1e-12);
            CHECK(std::abs(prof.beta[p] - model.occ_beta[p]) < 1e-12);
            CHECK(prof.total[p] == prof.alpha[p] + prof.beta[p]);
            sa += prof.alpha[p];
            sb += prof.beta[p];
        }
        CHECK(std::abs(sa - s.n_alpha) < 1e-10);
        CHECK(std::abs(sb - s.n_beta) < 1e-10);
    }
}

TEST_CASE("observable invariants on random states") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 3 + trial % 3;
        std::uniform_int_distribution<int> pick(0, m);
        int na = pick(rng), nb = pick(rng);
        if (na < nb) std::swap(na, nb);
        const Sector s{m, na, nb};
        const auto v = random_state(s, rng);
        const double sz = 0.5 * (na - nb);
        CHECK(total_s_squared(v) >= sz * (sz + 1.0) - 1e-10);

        const OrbitalGroup a{"a", {0}}, b{"b", {1, 2}}, ab{"ab", {0, 1, 2}};
        const auto ca = group_charges(v, a), cb = group_charges(v, b), cab = group_charges(v, ab);
        CHECK(std::abs(cab.first - ca.first - cb.first) < 1e-12);
        CHECK(std::abs(cab.second - ca.second - cb.second) < 1e-12);
        CHECK(cab.first + cab.second <= 6.0 + 1e-12);
    }

    // Connected correlation of a product over disjoint orbital blocks vanishes.
    // Left block {0, 1} holds one alpha electron, right block {2, 3} one beta.
    const Sector s{4, 1, 1};
    const double c1 = 0.6, s1 = 0.8, c2 = std::sqrt(0.3), s2 = std::sqrt(0.7);
    const SparseState prod(s, {{config("1000" "0010"), c1 * c2},
                               {config("1000" "0001"), c1 * s2},
                               {config("0100" "0010"), s1 * c2},
                               {config("0100" "0001"), s1 * s2}});
    const auto corr = spin_correlation(prod, {"L", {0, 1}}, {"R", {2, 3}});
    CHECK(std::abs(corr.connected) < 1e-10);
    CHECK(corr.raw == doctest::Approx(-0.25).epsilon(1e-12));
}
