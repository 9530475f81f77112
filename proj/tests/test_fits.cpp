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
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "extsqd/error.hpp"
#include "extsqd/fits.hpp"

using namespace extsqd;

namespace {

constexpr double kMuN2 = 7.001537;

std::vector<double> grid(double lo, double step, int n) {
    std::vector<double> r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = lo + step * i;
    return r;
}

std::vector<double> morse_curve(const std::vector<double>& r, double e_min, double de, double a, double re) {
    std::vector<double> e;
    for (double x : r) {
        const double q = 1.0 - std::exp(-a * (x - re));
        e.push_back(e_min + de * q * q);
    }
    return e;
}

std::vector<double> tail_curve(const std::vector<double>& r, double e_inf, double amp, double b) {
    std::vector<double> e;
    for (double x : r) e.push_back(e_inf - amp * std::pow(x, -b));
    return e;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("Morse fit recovers synthetic parameters") {
    const auto r = grid(0.8, 0.1, 13);
    const auto e = morse_curve(r, -109.1, 0.35, 2.6, 1.1);
    const auto f = fit_morse(r, e, {}, kMuN2);
    CHECK(rel(f.e_min, -109.1) < 1e-6);
    CHECK(rel(f.de, 0.35) < 1e-6);
    CHECK(rel(f.a, 2.6) < 1e-6);
    CHECK(rel(f.re, 1.1) < 1e-6);
    CHECK(f.rms < 1e-12);
    CHECK(f.n_points == 13);
    CHECK(f.mu == kMuN2);
    CHECK(f(1.1) == doctest::Approx(-109.1).epsilon(1e-12));

    // Harmonic frequency from a finite-difference curvature at Re.
    const double h = 1e-4;
    const double k = (f(f.re + h) - 2.0 * f(f.re) + f(f.re - h)) / (h * h);  // Ha / A^2
    const double si = k * 4.3597447222071e-18 / 1e-20 / (kMuN2 * 1.66053906660e-27);
    const double omega_fd = std::sqrt(si) / (2.0 * std::numbers::pi * 2.99792458e10);
    CHECK(rel(f.omega, omega_fd) < 0.01);
    CHECK(f.omega == doctest::Approx(morse_wavenumber(0.35, 2.6, kMuN2)).epsilon(1e-6));

    const auto windowed = fit_morse(r, e, {0.9, 1.5}, kMuN2);
    CHECK(windowed.n_points == 7);
    CHECK(rel(windowed.re, 1.1) < 1e-6);
}

TEST_CASE("Morse fit errors") {
    const auto r = grid(0.8, 0.1, 13);
    const auto e = morse_curve(r, -109.1, 0.35, 2.6, 1.1);
    CHECK_THROWS_AS(fit_morse(r, e, {0.9, 1.1}, kMuN2), InputError);
    CHECK_THROWS_AS(fit_morse(r, e, {}, 0.0), InputError);
    CHECK_THROWS_AS(fit_morse(r, std::vector<double>(e.begin(), e.end() - 1), {}, kMuN2), InputError);
    FitSettings tight;
    tight.max_evaluations = 2;
    CHECK_THROWS_AS(fit_morse(r, morse_curve(r, -109.1, 0.35, 2.6, 1.3), {}, kMuN2, tight), ConvergenceError);
    // A monotonically decreasing curve has no well.
    std::vector<double> down;
    for (double x : r) down.push_back(-x);
    CHECK_THROWS_AS(fit_morse(r, down, {}, kMuN2), ConvergenceError);
}

TEST_CASE("power-law fit recovers synthetic parameters") {
    const auto r = grid(2.0, 0.25, 9);
    const auto e = tail_curve(r, -108.9, 0.5, 6.0);
    const auto f = fit_powerlaw(r, e, {2.0, 1e9});
    CHECK(rel(f.e_inf, -108.9) < 1e-6);
    CHECK(rel(f.amplitude, 0.5) < 1e-6);
    CHECK(rel(f.exponent, 6.0) < 1e-6);
    CHECK(f.rms < 1e-10);
    CHECK(f.monotone_tail);

    const auto g = fit_powerlaw(r, tail_curve(r, -75.2, 2.0, 3.5), {});
    CHECK(rel(g.e_inf, -75.2) < 1e-6);
    CHECK(rel(g.amplitude, 2.0) < 1e-6);
    CHECK(rel(g.exponent, 3.5) < 1e-6);

    auto bumpy = e;
    bumpy[4] = bumpy[5] + 1e-3;
    CHECK_FALSE(fit_powerlaw(r, bumpy, {}).monotone_tail);
    CHECK_THROWS_AS(fit_powerlaw({1.0, 2.0, 3.0}, {-1.0, -0.5, -0.4}, {}), InputError);
}

TEST_CASE("asymptote uncertainty shrinks with more tail points") {
    double previous = std::numeric_limits<double>::infinity();
    for (int n = 4; n <= 12; ++n) {
        const auto r = grid(2.0, 0.25, n);
        const auto f = fit_powerlaw(r, tail_curve(r, -108.9, 0.5, 6.0), {});
        CHECK(f.sigma_e_inf > 0.0);
        CHECK(f.sigma_e_inf <= previous);
        previous = f.sigma_e_inf;
    }
}

TEST_CASE("fits are invariant under an energy shift") {
    const auto rm = grid(0.8, 0.1, 13);
    const auto rt = grid(2.0, 0.25, 9);
    const auto em = morse_curve(rm, -109.1, 0.35, 2.6, 1.1);
    const auto et = tail_curve(rt, -108.75, 0.5, 6.0);
    const auto m0 = fit_morse(rm, em, {}, kMuN2);
    const auto t0 = fit_powerlaw(rt, et, {});
    for (double c : {-3.0, 0.5, 250.0}) {
        auto em2 = em, et2 = et;
        for (double& x : em2) x += c;
        for (double& x : et2) x += c;
        const auto m = fit_morse(rm, em2, {}, kMuN2);
        const auto t = fit_powerlaw(rt, et2, {});
        CHECK(std::abs(m.re - m0.re) < 1e-9);
        CHECK(std::abs(m.a - m0.a) < 1e-9);
        CHECK(std::abs(m.de - m0.de) < 1e-9);
        CHECK(std::abs(m.omega - m0.omega) < 1e-9 * m0.omega);
        CHECK(std::abs(m.e_min - (m0.e_min + c)) < 1e-9);
        CHECK(std::abs(t.e_inf - (t0.e_inf + c)) < 1e-9);
        CHECK(std::abs(dissociation_energy(m, t).d0 - dissociation_energy(m0, t0).d0) < 1e-9 * 1e3);
    }
}

TEST_CASE("analytic Jacobians match central differences") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Vector4d x(-100.0 + 10.0 * u(rng), 0.1 + u(rng), 1.0 + 2.0 * u(rng), 0.9 + 0.5 * u(rng));
        const double r = 0.7 + 2.0 * u(rng);
        const Eigen::Vector4d g = morse_gradient(x, r);
        for (int k = 0; k < 4; ++k) {
            Eigen::Vector4d p = x, m = x;
            p(k) += h;
            m(k) -= h;
            const double fd = (morse_value(p, r) - morse_value(m, r)) / (2.0 * h);
            CHECK(std::abs(fd - g(k)) <= 1e-5 * std::max(1.0, std::abs(g(k))));
        }
        const Eigen::Vector3d y(-100.0 + 10.0 * u(rng), std::log(0.1 + u(rng)), std::log(2.0 + 6.0 * u(rng)));
        const double rr = 1.5 + 3.0 * u(rng);
        const Eigen::Vector3d gy = powerlaw_gradient(y, rr);
        for (int k = 0; k < 3; ++k) {
            Eigen::Vector3d p = y, m = y;
            p(k) += h;
            m(k) -= h;
            const double fd = (powerlaw_value(p, rr) - powerlaw_value(m, rr)) / (2.0 * h);
            CHECK(std::abs(fd - gy(k)) <= 1e-5 * std::max(1.0, std::abs(gy(k))));
        }
    }
}

TEST_CASE("dissociation energy") {
    MorseFit m;
    PowerLawFit t;
    m.e_min = -109.2;
    t.e_inf = -109.1;
    CHECK(dissociation_energy(m, t).d0 == doctest::Approx(262.54996).epsilon(1e-12));
    t.e_inf = m.e_min;
    CHECK(dissociation_energy(m, t).d0 == 0.0);
    m.sigma_e_min = 3e-4;
    t.sigma_e_inf = 4e-4;
    CHECK(dissociation_energy(m, t).sigma == doctest::Approx(5e-4 * kHartreeToKJPerMol).epsilon(1e-12));
}

TEST_CASE("curve parsing and fit table") {
    const auto c = parse_curve("# comment\nR,GS,T1\n1.0, -1.0, -0.5\n1.1\t-1.1\t-0.6\n\n1.2 -1.05 -0.55\n");
    CHECK(c.r == std::vector<double>{1.0, 1.1, 1.2});
    CHECK(c.labels == std::vector<std::string>{"GS", "T1"});
    CHECK(c.energies[1] == std::vector<double>{-0.5, -0.6, -0.55});
    const auto bare = parse_curve("1.0 2.0\n2.0 3.0\n");
    CHECK(bare.labels == std::vector<std::string>{"state0"});
    CHECK(bare.r.size() == 2);

    CHECK_THROWS_AS(parse_curve(""), InputError);
    CHECK_THROWS_AS(parse_curve("1.0\n"), InputError);
    CHECK_THROWS_AS(parse_curve("1.0 2.0\n1.1 x\n"), InputError);
    CHECK_THROWS_AS(parse_curve("1.0 2.0\n1.1 3.0 4.0\n"), InputError);
    CHECK_THROWS_AS(parse_curve("1.0 2.0\n0.9 3.0\n"), InputError);

    const auto r = grid(0.8, 0.1, 13);
    Curve curve{r, {"GS"}, {morse_curve(r, -109.1, 0.35, 2.6, 1.1)}};
    const auto m = fit_morse(curve.r, curve.energies[0], {}, kMuN2);
    const auto t = fit_powerlaw(curve.r, curve.energies[0], {1.6, 2.0});
    std::ostringstream out;
    write_fit_table(out, curve, {m}, {t});
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "R\tGS\tGS_morse\tGS_powerlaw");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 13);
    CHECK_THROWS_AS(write_fit_table(out, curve, {}, {t}), InputError);
}
