#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "papr/baselines.hpp"
#include "papr/gamp.hpp"
#include "papr/linops.hpp"

namespace papr {

// Special functions.
double normal_pdf(double x);
/// Standard normal cdf via erfc, accurate in both tails.
double normal_cdf(double x);
double log_gamma(double a);
double digamma(double a);

/// Moments of N(mu, sigma2) truncated to [-v, v].
struct TruncatedMoments {
    double phi;     // normalizing mass
    double mean;    // <x>
    double second;  // <x^2>
};

/// Falls back to the nearest boundary point when the mass underflows (phi < 1e-300).
TruncatedMoments truncated_moments(double mu, double sigma2, double v);

/// Hyperparameters and initial values for the EM solver.
struct Hyperparams {
    double a = 1e-6;
    double b = 1e-6;
    double pi = 0.5;
    double beta0 = 1e3;
    std::optional<double> v0;  // default ||y||_inf / ||A||_inf
    int t_max = 200;
    double beta_max = 1e12;
    double v_min = 1e-8;
    /// Stop early once ||y - Ax||/||y|| drops below this (disabled when unset).
    std::optional<double> residual_tol;
    /// Keep the <alpha> factors on the quadratic terms of the kappa update.
    bool precision_weighted_kappa = true;
    /// Iterate on c y with c chosen so the RMS estimate ||y|| / ||A||_F of x maps to
    /// this value; the estimate and v are divided by c on return. The Gamma rate,
    /// beta0 and the unit initial variance are not scale free. Zero disables.
    double working_rms = 0.04;

    void validate() const;
};

/// Factorized posteriors: truncated Gaussian q(x_i), Gamma q(alpha_i1), q(alpha_i2), Bernoulli q(kappa_i).
struct Posteriors {
    Eigen::ArrayXd mu, sigma2, phi;
    Eigen::ArrayXd Ex, Ex2;
    Eigen::ArrayXd a1, b1, a2, b2;
    Eigen::ArrayXd Ealpha1, Ealpha2, Elnalpha1, Elnalpha2;
    Eigen::ArrayXd Ekappa;

    /// <x> = 0, var(x) = 1, <alpha> = 1, <ln alpha> = 0, <kappa> = 1/2.
    static Posteriors initial(Eigen::Index size);

    Eigen::Index size() const { return Ex.size(); }
    /// <x^2> - <x>^2, floored at a tiny positive value.
    Eigen::VectorXd variance() const;
};

void update_qx(Posteriors& post, const GampState& gamp, double v);
void update_qalpha(Posteriors& post, double v, double a, double b);
void update_qkappa(Posteriors& post, double v, double pi, bool precision_weighted = true);

/// The Bernoulli log-odds c_i of q(kappa_i = 1).
double kappa_log_odds(const Posteriors& post, Eigen::Index i, double v, double pi, bool precision_weighted = true);

/// beta = J / sum_j [(y_j - u_j)^2 + tau_u_j], capped at beta_max.
double update_beta(const Eigen::VectorXd& y, const GampState& gamp, double beta_max = 1e12);

struct BoundaryUpdate {
    double v;
    double delta;
    double residual_norm;  // ||y - A x_hat|| before the update
    bool skipped;          // ||A gamma|| == 0
};

/// v <- max(v + dv, v_min) with dv the scalar least-squares step along gamma = sign(x_hat).
BoundaryUpdate update_v(const Eigen::VectorXd& y, const ConstraintOperator& op, const Eigen::VectorXd& x_hat,
                        double v, double v_min = 1e-8);

struct IterationRecord {
    int iteration;
    double residual;           // ||y - A x_hat||_2
    double v;                  // boundary used to truncate this iteration's posterior
    double beta;               // after the M-step, working scale
    double boundary_fraction;  // share of |x_i| within 1e-3 v of v
    long clamped;              // cumulative GAMP variance-floor events
};

struct SolveResult {
    Eigen::VectorXd x_hat;
    double v = 0.0;
    double beta = 0.0;  // in the working scale
    double scale = 1.0;  // c, with y scaled to c y during the iterations
    int iterations = 0;
    bool precision_weighted_kappa = true;
    std::vector<IterationRecord> diagnostics;
};

class SolverAbort : public std::runtime_error {
public:
    SolverAbort(int iteration, const std::string& quantity)
        : std::runtime_error("solver aborted at iteration " + std::to_string(iteration) + ": non-finite " + quantity),
          iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

double boundary_fraction(const Eigen::VectorXd& x, double v, double rel_tol = 1e-3);

double working_scale(const Eigen::VectorXd& y, const ConstraintOperator& op, double working_rms);

/// Variational EM with the truncated Gaussian mixture prior and the GAMP likelihood approximation.
SolveResult solve(const Eigen::VectorXd& y, const ConstraintOperator& op, const Hyperparams& hp,
                  const IterationObserver& observer = {});

}  // namespace papr
