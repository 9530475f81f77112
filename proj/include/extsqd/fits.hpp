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

#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace extsqd {

/// Hartree to kJ/mol.
inline constexpr double kHartreeToKJPerMol = 2625.4996;

/// Potential energy curves sharing one bondlength grid (Angstrom, Hartree).
struct Curve {
    std::vector<double> r;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> energies;  // one vector per state

    /// Throws InputError unless r is strictly increasing and every state has |r| values.
    void validate() const;
};

/// Delimited text (whitespace, comma or tab): R then one column per state.
/// Lines starting with '#' are comments; a non-numeric first row is a header.
Curve parse_curve(std::string_view text);
Curve read_curve(const std::string& path);

/// Inclusive bondlength range.
struct FitWindow {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool contains(double r) const { return r >= lo && r <= hi; }
};

struct FitSettings {
    /// Lower bound on the residual standard deviation used to scale the
    /// covariance, so noiseless data still yields finite uncertainties.
    double sigma_floor = 1e-8;
    int max_evaluations = 500;
};

/// V(R) = E_min + De (1 - exp(-a (R - Re)))^2.
struct MorseFit {
    double e_min = 0.0, de = 0.0, a = 0.0, re = 0.0;
    double sigma_e_min = 0.0, sigma_de = 0.0, sigma_a = 0.0, sigma_re = 0.0;
    double omega = 0.0, sigma_omega = 0.0;  // cm^-1
    double mu = 0.0;                        // amu
    double rms = 0.0;
    FitWindow window;
    std::size_t n_points = 0;
    int evaluations = 0;
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  // (E_min, De, a, Re)

    double operator()(double r) const;
};

/// E(R) = E_inf - A R^-b, fitted in log A and log b so both stay positive.
struct PowerLawFit {
    double e_inf = 0.0, amplitude = 0.0, exponent = 0.0;
    double sigma_e_inf = 0.0, sigma_amplitude = 0.0, sigma_exponent = 0.0;
    double rms = 0.0;
    FitWindow window;
    std::size_t n_points = 0;
    int evaluations = 0;
    /// False when the windowed energies are not nondecreasing in R.
    bool monotone_tail = true;

    double operator()(double r) const;
};

inline constexpr double kPowerLawInitialExponent = 6.0;

/// Model values and analytic parameter gradients used by the fitters.
/// Morse parameters are (E_min, De, a, Re); power-law parameters are
/// (E_inf, log A, log b).
double morse_value(const Eigen::Vector4d& x, double r);
Eigen::Vector4d morse_gradient(const Eigen::Vector4d& x, double r);
double powerlaw_value(const Eigen::Vector3d& x, double r);
Eigen::Vector3d powerlaw_gradient(const Eigen::Vector3d& x, double r);

/// Levenberg-Marquardt Morse fit. Initial guess from the discrete minimum
/// and a three-point quadratic. Throws InputError for < 4 points or mu <= 0
/// and ConvergenceError on non-convergence or a fitted a <= 0.
MorseFit fit_morse(const std::vector<double>& r, const std::vector<double>& e, FitWindow window, double mu,
                   FitSettings settings = {});

/// Throws InputError for < 4 points, ConvergenceError on non-convergence.
PowerLawFit fit_powerlaw(const std::vector<double>& r, const std::vector<double>& e, FitWindow window,
                         FitSettings settings = {});

/// Harmonic wavenumber (cm^-1) of a Morse well: (a / 2 pi c) sqrt(2 De / mu).
double morse_wavenumber(double de_hartree, double a_per_angstrom, double mu_amu);

struct Dissociation {
    double d0 = 0.0;     // kJ/mol
    double sigma = 0.0;  // kJ/mol
};

/// (E_inf - E_min) in kJ/mol, uncertainties added in quadrature.
Dissociation dissociation_energy(const MorseFit& morse, const PowerLawFit& tail);

/// Plot table: R then, per state, the data, the Morse model and the power-law model.
void write_fit_table(std::ostream& out, const Curve& curve, const std::vector<MorseFit>& morse,
                     const std::vector<PowerLawFit>& tails);

}  // namespace extsqd
