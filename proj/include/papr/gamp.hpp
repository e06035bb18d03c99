#pragma once

#include <Eigen/Dense>

#include "papr/linops.hpp"

namespace papr {

/// State of the single-pass GAMP likelihood approximation. s_hat carries the
/// Onsager term between EM iterations and starts at zero.
struct GampState {
    Eigen::VectorXd s_hat;  // J
    Eigen::VectorXd p_hat, tau_p, tau_s;  // J, diagnostics
    Eigen::VectorXd u_hat, tau_u;         // J, posterior of u = Ax
    Eigen::VectorXd r_hat, tau_r;         // I, approximate likelihoods N(x_i | r_i, tau_r_i)
    long clamped = 0;                     // variance-floor events so far

    static GampState initial(Eigen::Index rows);
};

inline constexpr double kGampVarianceFloor = 1e-12;

/// Steps 1-3 of the GAMP recursion with a Gaussian output channel of precision beta.
GampState gamp_pass(const ConstraintOperator& op, const Eigen::VectorXd& x_hat, const Eigen::VectorXd& tau_x,
                    const Eigen::VectorXd& y, double beta, const GampState& state);

}  // namespace papr
