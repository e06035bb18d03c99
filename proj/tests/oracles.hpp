#pragma once

// Independent reference computations shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Dense>

#include "papr/emtgm.hpp"
#include "papr/gamp.hpp"
#include "papr/linops.hpp"

namespace papr::oracle {

struct Moments {
    double mean, second;
};

// Moments of the density proportional to exp(q(x)) on [-v, v], for a concave quadratic q,
// by adaptive Gauss-Kronrod on a window of +-12 widths around the maximum, split at the maximum.
template <class LogDensity>
Moments quadrature_moments(LogDensity q, double v) {
    // q is quadratic, so the central difference over [-v, v] is its exact curvature
    const double curvature = (q(v) + q(-v) - 2.0 * q(0.0)) / (v * v);
    const double slope = (q(v) - q(-v)) / (2.0 * v);
    double peak_x = curvature < 0.0 ? std::clamp(-slope / curvature, -v, v) : (slope > 0.0 ? v : -v);
    const double width = curvature < 0.0 ? 1.0 / std::sqrt(-curvature) : 2.0 * v;
    const double lo = std::max(-v, peak_x - 12.0 * width);
    const double hi = std::min(v, peak_x + 12.0 * width);
    const double peak = q(peak_x);
    using gk = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto integrate = [&](auto f) {
        double total = 0.0;
        if (peak_x > lo) total += gk::integrate(f, lo, peak_x, 12, 1e-14);
        if (peak_x < hi) total += gk::integrate(f, peak_x, hi, 12, 1e-14);
        return total;
    };
    const double z = integrate([&](double x) { return std::exp(q(x) - peak); });
    const double m1 = integrate([&](double x) { return x * std::exp(q(x) - peak); });
    const double m2 = integrate([&](double x) { return x * x * std::exp(q(x) - peak); });
    return {m1 / z, m2 / z};
}

// Posterior of x_i under the mixture prior and the Gaussian likelihood N(x | r, tau_r).
inline Moments posterior_moments(double r, double tau_r, double kappa, double a1, double a2, double v) {
    return quadrature_moments(
        [=](double x) {
            return -0.5 * (x - r) * (x - r) / tau_r - 0.5 * kappa * a1 * (x - v) * (x - v) -
                   0.5 * (1.0 - kappa) * a2 * (x + v) * (x + v);
        },
        v);
}

// Mass of N(., centre, 1/alpha) on [-v, v].
inline double gaussian_mass(double centre, double alpha, double v) {
    using gk = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double s = 1.0 / std::sqrt(alpha);
    auto pdf = [&](double x) { return std::exp(-0.5 * (x - centre) * (x - centre) / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi)); };
    const double lo = std::max(-v, centre - 40.0 * s);
    const double hi = std::min(v, centre + 40.0 * s);
    if (lo >= hi) return 0.0;
    return gk::integrate(pdf, lo, hi, 12, 1e-14);
}

// Recurrence up to x >= 12, then the asymptotic expansion.
inline double digamma_series(double x) {
    double acc = 0.0;
    while (x < 12.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double x2 = 1.0 / (x * x);
    const double tail =
        x2 * (1.0 / 12 - x2 * (1.0 / 120 - x2 * (1.0 / 252 - x2 * (1.0 / 240 - x2 * (1.0 / 132 - x2 * 691.0 / 32760)))));
    return acc + std::log(x) - 0.5 / x - tail;
}

// 16-QAM symbol error probability on AWGN for the transmitted point s, levels {+-d, +-3d},
// noise variance n0 (complex). Inner levels err on both sides, outer levels on one.
inline double qam16_ser(cplx s, double d, double n0) {
    const double q = 0.5 * std::erfc(d / std::sqrt(n0 / 2.0) / std::numbers::sqrt2);
    auto axis = [&](double level) { return std::abs(level) < 2.0 * d ? 2.0 * q : q; };
    return 1.0 - (1.0 - axis(s.real())) * (1.0 - axis(s.imag()));
}

struct BypassResult {
    Eigen::VectorXd x;
    int iterations;
    double rel_error;
};

// GAMP with the prior replaced by N(0, prior_var); returns the first iterate within tol of the
// closed-form posterior mean (beta A^T A + I / prior_var)^{-1} beta A^T y.
inline BypassResult gaussian_bypass(const ConstraintOperator& op, const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                    double beta, double prior_var, int max_iters, double tol) {
    const Eigen::MatrixXd h = beta * a.transpose() * a +
                              Eigen::MatrixXd::Identity(a.cols(), a.cols()) / prior_var;
    const Eigen::VectorXd exact = h.ldlt().solve(beta * a.transpose() * y);
    GampState state = GampState::initial(op.rows());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(op.cols());
    Eigen::VectorXd tau = Eigen::VectorXd::Constant(op.cols(), prior_var);
    double err = 1.0;
    for (int it = 1; it <= max_iters; ++it) {
        state = gamp_pass(op, x, tau, y, beta, state);
        const Eigen::ArrayXd tr = state.tau_r.array();
        x = (prior_var * state.r_hat.array() / (prior_var + tr)).matrix();
        tau = (prior_var * tr / (prior_var + tr)).matrix();
        err = (x - exact).norm() / exact.norm();
        if (err <= tol) return {x, it, err};
    }
    return {x, max_iters, err};
}

}  // namespace papr::oracle
