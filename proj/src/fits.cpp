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

#include "extsqd/fits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unsupported/Eigen/NonLinearOptimization>

#include "extsqd/error.hpp"

namespace extsqd {

namespace {

// CODATA 2018.
constexpr double kHartreeJoule = 4.3597447222071e-18;
constexpr double kAmuKg = 1.66053906660e-27;
constexpr double kLightCmPerS = 2.99792458e10;

std::vector<std::string> split_fields(const std::string& line) {
    std::string s = line;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::replace(s.begin(), s.end(), '\t', ' ');
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string f; in >> f;) out.push_back(f);
    return out;
}

bool parse_double(const std::string& s, double& v) {
    try {
        std::size_t used = 0;
        v = std::stod(s, &used);
        return used == s.size() && std::isfinite(v);
    } catch (const std::exception&) {
        return false;
    }
}

struct Windowed {
    Eigen::VectorXd r, e;
};

Windowed select(const std::vector<double>& r, const std::vector<double>& e, FitWindow w, const char* what) {
    if (r.size() != e.size()) throw InputError(std::string(what) + ": R and E lengths differ");
    std::vector<double> rr, ee;
    for (std::size_t i = 0; i < r.size(); ++i)
        if (w.contains(r[i])) {
            rr.push_back(r[i]);
            ee.push_back(e[i]);
        }
    if (rr.size() < 4)
        throw InputError(std::string(what) + ": fit window holds " + std::to_string(rr.size()) + " points, need at least 4");
    for (std::size_t i = 1; i < rr.size(); ++i)
        if (!(rr[i] > rr[i - 1])) throw InputError(std::string(what) + ": bondlengths must be strictly increasing");
    Windowed out{Eigen::Map<Eigen::VectorXd>(rr.data(), static_cast<Eigen::Index>(rr.size())),
                 Eigen::Map<Eigen::VectorXd>(ee.data(), static_cast<Eigen::Index>(ee.size()))};
    return out;
}

// Scaled covariance sigma^2 (J^T J)^+ with sigma^2 = max(SSR / (n - p), floor^2).
Eigen::MatrixXd covariance(const Eigen::MatrixXd& jac, const Eigen::VectorXd& res, double floor) {
    const auto n = jac.rows(), p = jac.cols();
    const double s2 = std::max(res.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, n - p)), floor * floor);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    return s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
}

template <class Model>
struct LeastSquares {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const Windowed& data;
    int inputs() const { return Model::kParams; }
    int values() const { return static_cast<int>(data.r.size()); }
    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
        for (Eigen::Index i = 0; i < data.r.size(); ++i) f(i) = Model::value(x, data.r(i)) - data.e(i);
        return 0;
    }
    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& j) const {
        for (Eigen::Index i = 0; i < data.r.size(); ++i) j.row(i) = Model::gradient(x, data.r(i));
        return 0;
    }
};

struct MorseModel {
    static constexpr int kParams = 4;
    static double value(const Eigen::VectorXd& x, double r) { return morse_value(x.head<4>(), r); }
    static Eigen::RowVectorXd gradient(const Eigen::VectorXd& x, double r) {
        return morse_gradient(x.head<4>(), r).transpose();
    }
};

struct PowerLawModel {
    static constexpr int kParams = 3;
    static double value(const Eigen::VectorXd& x, double r) { return powerlaw_value(x.head<3>(), r); }
    static Eigen::RowVectorXd gradient(const Eigen::VectorXd& x, double r) {
        return powerlaw_gradient(x.head<3>(), r).transpose();
    }
};

template <class Model>
int minimize(const Windowed& data, Eigen::VectorXd& x, const FitSettings& settings, const char* what) {
    LeastSquares<Model> functor{data};
    Eigen::LevenbergMarquardt<LeastSquares<Model>> lm(functor);
    lm.parameters.maxfev = settings.max_evaluations;
    lm.parameters.xtol = 1e-15;
    lm.parameters.ftol = 1e-15;
    const auto status = lm.minimize(x);
    using namespace Eigen::LevenbergMarquardtSpace;
    if (status == ImproperInputParameters) throw InputError(std::string(what) + ": improper fit input");
    if (status == TooManyFunctionEvaluation)
        throw ConvergenceError(std::string(what) + ": no convergence within " + std::to_string(settings.max_evaluations) +
                               " evaluations");
    if (!x.allFinite()) throw ConvergenceError(std::string(what) + ": fit diverged");
    return static_cast<int>(lm.nfev);
}

template <class Model>
std::pair<Eigen::MatrixXd, Eigen::VectorXd> jacobian_and_residual(const Windowed& data, const Eigen::VectorXd& x) {
    LeastSquares<Model> functor{data};
    Eigen::MatrixXd j(data.r.size(), Model::kParams);
    Eigen::VectorXd f(data.r.size());
    functor.df(x, j);
    functor(x, f);
    return {j, f};
}

}  // namespace

double morse_value(const Eigen::Vector4d& x, double r) {
    const double q = 1.0 - std::exp(-x(2) * (r - x(3)));
    return x(0) + x(1) * q * q;
}

Eigen::Vector4d morse_gradient(const Eigen::Vector4d& x, double r) {
    const double ex = std::exp(-x(2) * (r - x(3)));
    const double q = 1.0 - ex;
    return {1.0, q * q, 2.0 * x(1) * q * ex * (r - x(3)), -2.0 * x(1) * q * ex * x(2)};
}

double powerlaw_value(const Eigen::Vector3d& x, double r) {
    return x(0) - std::exp(x(1)) * std::pow(r, -std::exp(x(2)));
}

Eigen::Vector3d powerlaw_gradient(const Eigen::Vector3d& x, double r) {
    const double b = std::exp(x(2));
    const double t = std::exp(x(1)) * std::pow(r, -b);
    return {1.0, -t, t * b * std::log(r)};
}

void Curve::validate() const {
    if (r.empty()) throw InputError("curve has no points");
    for (std::size_t i = 1; i < r.size(); ++i)
        if (!(r[i] > r[i - 1])) throw InputError("curve bondlengths must be strictly increasing");
    if (labels.size() != energies.size()) throw InputError("curve labels and states disagree");
    for (const auto& e : energies)
        if (e.size() != r.size()) throw InputError("curve state has the wrong number of points");
}

Curve parse_curve(std::string_view text) {
    Curve c;
    std::istringstream in{std::string(text)};
    std::string line;
    bool first = true;
    int lineno = 0;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        const auto fields = split_fields(line);
        std::vector<double> vals(fields.size());
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size(); ++i) numeric = numeric && parse_double(fields[i], vals[i]);
        if (first) {
            first = false;
            if (fields.size() < 2) throw InputError("curve needs an R column and at least one state");
            columns = fields.size();
            c.energies.assign(columns - 1, {});
            for (std::size_t k = 1; k < columns; ++k) c.labels.push_back(numeric ? "state" + std::to_string(k - 1) : fields[k]);
            if (!numeric) continue;
        }
        if (!numeric) throw InputError("non-numeric value on curve line " + std::to_string(lineno));
        if (fields.size() != columns) throw InputError("wrong column count on curve line " + std::to_string(lineno));
        c.r.push_back(vals[0]);
        for (std::size_t k = 1; k < columns; ++k) c.energies[k - 1].push_back(vals[k]);
    }
    c.validate();
    return c;
}

Curve read_curve(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open curve file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_curve(ss.str());
}

double MorseFit::operator()(double r) const { return morse_value({e_min, de, a, re}, r); }

double PowerLawFit::operator()(double r) const { return e_inf - amplitude * std::pow(r, -exponent); }

double morse_wavenumber(double de_hartree, double a_per_angstrom, double mu_amu) {
    const double angular = a_per_angstrom * 1e10 * std::sqrt(2.0 * de_hartree * kHartreeJoule / (mu_amu * kAmuKg));
    return angular / (2.0 * std::numbers::pi * kLightCmPerS);
}

MorseFit fit_morse(const std::vector<double>& r, const std::vector<double>& e, FitWindow window, double mu,
                   FitSettings settings) {
    if (!(mu > 0.0)) throw InputError("Morse fit: reduced mass must be positive");
    const Windowed d = select(r, e, window, "Morse fit");
    const Eigen::Index n = d.r.size();

    Eigen::Index imin = 0;
    d.e.minCoeff(&imin);
    const Eigen::Index c = std::clamp<Eigen::Index>(imin, 1, n - 2);
    // Quadratic through the three points around the discrete minimum.
    Eigen::Matrix3d vand;
    Eigen::Vector3d rhs;
    for (int k = 0; k < 3; ++k) {
        const double x = d.r(c - 1 + k);
        vand.row(k) << 1.0, x, x * x;
        rhs(k) = d.e(c - 1 + k);
    }
    const Eigen::Vector3d q = vand.colPivHouseholderQr().solve(rhs);
    double re0 = d.r(imin);
    double k0 = 2.0 * q(2);
    if (q(2) > 0.0) re0 = std::clamp(-q(1) / (2.0 * q(2)), d.r(0), d.r(n - 1));
    const double e0 = d.e(imin);
    const double de0 = std::max(d.e.maxCoeff() - e0, 1e-3);
    if (!(k0 > 0.0)) k0 = 2.0 * de0;
    Eigen::VectorXd x(4);
    x << e0, de0, std::sqrt(k0 / (2.0 * de0)), re0;

    MorseFit fit;
    fit.evaluations = minimize<MorseModel>(d, x, settings, "Morse fit");
    if (!(x(2) > 0.0) || !(x(1) > 0.0))
        throw ConvergenceError("Morse fit converged to a non-physical well (a or De not positive)");
    const auto [jac, res] = jacobian_and_residual<MorseModel>(d, x);
    const Eigen::MatrixXd cov = covariance(jac, res, settings.sigma_floor);
    fit.e_min = x(0);
    fit.de = x(1);
    fit.a = x(2);
    fit.re = x(3);
    fit.covariance = cov;
    fit.sigma_e_min = std::sqrt(cov(0, 0));
    fit.sigma_de = std::sqrt(cov(1, 1));
    fit.sigma_a = std::sqrt(cov(2, 2));
    fit.sigma_re = std::sqrt(cov(3, 3));
    fit.mu = mu;
    fit.omega = morse_wavenumber(fit.de, fit.a, mu);
    // omega ~ a sqrt(De): gradient (d/dDe, d/da) = (omega / 2De, omega / a).
    const Eigen::Vector2d g(fit.omega / (2.0 * fit.de), fit.omega / fit.a);
    const Eigen::Matrix2d sub = cov.block<2, 2>(1, 1);
    fit.sigma_omega = std::sqrt(std::max(0.0, g.dot(sub * g)));
    fit.rms = std::sqrt(res.squaredNorm() / static_cast<double>(n));
    fit.window = window;
    fit.n_points = static_cast<std::size_t>(n);
    return fit;
}

PowerLawFit fit_powerlaw(const std::vector<double>& r, const std::vector<double>& e, FitWindow window,
                         FitSettings settings) {
    const Windowed d = select(r, e, window, "power-law fit");
    const Eigen::Index n = d.r.size();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(d.r(i) > 0.0)) throw InputError("power-law fit: bondlengths must be positive");

    // With b fixed at its initial value the model is linear in (E_inf, A).
    const double b0 = kPowerLawInitialExponent;
    Eigen::MatrixXd design(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) design.row(i) << 1.0, -std::pow(d.r(i), -b0);
    const Eigen::Vector2d lin = design.colPivHouseholderQr().solve(d.e);
    const double a0 = lin(1) > 0.0 ? lin(1) : std::max(1e-6, std::abs(d.e(n - 1) - d.e(0)) * std::pow(d.r(0), b0));
    Eigen::VectorXd x(3);
    x << lin(0), std::log(a0), std::log(b0);

    PowerLawFit fit;
    fit.evaluations = minimize<PowerLawModel>(d, x, settings, "power-law fit");
    const auto [jac, res] = jacobian_and_residual<PowerLawModel>(d, x);
    const Eigen::MatrixXd cov = covariance(jac, res, settings.sigma_floor);
    fit.e_inf = x(0);
    fit.amplitude = std::exp(x(1));
    fit.exponent = std::exp(x(2));
    fit.sigma_e_inf = std::sqrt(cov(0, 0));
    fit.sigma_amplitude = fit.amplitude * std::sqrt(cov(1, 1));
    fit.sigma_exponent = fit.exponent * std::sqrt(cov(2, 2));
    fit.rms = std::sqrt(res.squaredNorm() / static_cast<double>(n));
    fit.window = window;
    fit.n_points = static_cast<std::size_t>(n);
    for (Eigen::Index i = 1; i < n; ++i)
        if (d.e(i) < d.e(i - 1)) fit.monotone_tail = false;
    return fit;
}

Dissociation dissociation_energy(const MorseFit& morse, const PowerLawFit& tail) {
    return {(tail.e_inf - morse.e_min) * kHartreeToKJPerMol,
            kHartreeToKJPerMol * std::hypot(tail.sigma_e_inf, morse.sigma_e_min)};
}

void write_fit_table(std::ostream& out, const Curve& curve, const std::vector<MorseFit>& morse,
                     const std::vector<PowerLawFit>& tails) {
    curve.validate();
    if (morse.size() != curve.energies.size() || tails.size() != curve.energies.size())
        throw InputError("fit table needs one Morse and one power-law fit per state");
    out << "R";
    for (const auto& l : curve.labels) out << '\t' << l << "\t" << l << "_morse\t" << l << "_powerlaw";
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < curve.r.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6f", curve.r[i]);
        out << buf;
        for (std::size_t k = 0; k < curve.energies.size(); ++k) {
            for (double v : {curve.energies[k][i], morse[k](curve.r[i]), tails[k](curve.r[i])}) {
                std::snprintf(buf, sizeof buf, "\t%.12f", v);
                out << buf;
            }
        }
        out << '\n';
    }
}

}  // namespace extsqd
