#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "papr/channel.hpp"
#include "papr/linops.hpp"
#include "papr/model.hpp"

namespace papr {

/// Called after each solver iteration with the 1-based iteration index and the current x.
using IterationObserver = std::function<void(int iteration, const Eigen::VectorXd& x)>;

/// Least-norm zero-forcing: w_n = H_n^H (H_n H_n^H)^{-1} s_n on data tones, 0 on guard tones.
/// Throws std::runtime_error naming the tone when a Gram matrix is singular.
PrecodedFrame zf_precode(const FreqChannel& channel, const SystemConfig& config,
                         const SymbolFrame& symbols);

/// Hard-limits real and imaginary parts of every antenna signal to +-(ratio * rms), where rms is
/// that antenna's root-mean-square over the samples of the same (real or imaginary) dimension.
TimeFrame clip(const TimeFrame& frame, double ratio);

/// Euclidean projection onto {u : ||u||_1 <= radius}.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& z, double radius);

/// prox of tau * ||.||_inf, via Moreau decomposition through the l1-ball projection.
Eigen::VectorXd prox_linf(const Eigen::VectorXd& z, double tau);

struct FitraConfig {
    double lambda = 0.25;
    int max_iters = 2000;
    int power_iters = 2000;
    double power_tol = 1e-6;
    /// Multiplies the power-iteration Lipschitz estimate.
    double lipschitz_margin = 1.01;
    /// Restart momentum when the objective increases.
    bool adaptive_restart = true;

    void validate() const;
};

struct FitraResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double lipschitz = 0.0;
    /// Objective lambda ||x||_inf + ||y - Ax||^2 per iteration and its running minimum.
    std::vector<double> objective;
    std::vector<double> best_objective;
};

/// Largest singular value squared of A, by power iteration on A^T A.
/// Throws std::runtime_error when the iteration cap is reached before the tolerance.
double spectral_norm_sq(const ConstraintOperator& op, int max_iters, double tol);

double fitra_objective(const Eigen::VectorXd& y, const ConstraintOperator& op, const Eigen::VectorXd& x,
                       double lambda);

/// Accelerated proximal gradient on lambda ||x||_inf + ||y - Ax||_2^2.
FitraResult fitra(const Eigen::VectorXd& y, const ConstraintOperator& op, const FitraConfig& cfg,
                  const IterationObserver& observer = {});

}  // namespace papr
