#include "papr/gamp.hpp"

#include <cmath>
#include <stdexcept>

namespace papr {

GampState GampState::initial(Eigen::Index rows) {
    GampState s;
    s.s_hat = Eigen::VectorXd::Zero(rows);
    return s;
}

GampState gamp_pass(const ConstraintOperator& op, const Eigen::VectorXd& x_hat, const Eigen::VectorXd& tau_x,
                    const Eigen::VectorXd& y, double beta, const GampState& state) {
    if (!std::isfinite(beta) || !(beta > 0.0)) throw std::invalid_argument("gamp_pass: beta must be positive and finite");
    if (x_hat.size() != op.cols() || tau_x.size() != op.cols())
        throw std::invalid_argument("gamp_pass: x_hat/tau_x length must equal I");
    if (y.size() != op.rows() || state.s_hat.size() != op.rows())
        throw std::invalid_argument("gamp_pass: y/s_hat length must equal J");
    if ((tau_x.array() <= 0.0).any()) throw std::invalid_argument("gamp_pass: tau_x must be positive");

    GampState next;
    next.clamped = state.clamped;

    // Step 1: output linear step
    next.tau_p = op.apply_squared(tau_x, Direction::forward).values;
    for (Eigen::Index j = 0; j < next.tau_p.size(); ++j) {
        if (!std::isfinite(next.tau_p[j]))
            throw std::runtime_error("gamp_pass: invalid tau_p at row " + std::to_string(j));
        if (next.tau_p[j] < kGampVarianceFloor) {
            next.tau_p[j] = kGampVarianceFloor;
            ++next.clamped;
        }
    }
    next.p_hat = op.apply(x_hat) - next.tau_p.cwiseProduct(state.s_hat);

    // Step 2: Gaussian output channel
    const Eigen::ArrayXd tp = next.tau_p.array();
    next.tau_u = (tp / (tp * beta + 1.0)).matrix();
    next.u_hat = (next.tau_u.array() * (y.array() * beta + next.p_hat.array() / tp)).matrix();
    next.s_hat = ((next.u_hat - next.p_hat).array() / tp).matrix();
    next.tau_s = ((1.0 - next.tau_u.array() / tp) / tp).matrix();
    if (!(next.tau_s.array() > 0.0).all())
        throw std::runtime_error("gamp_pass: nonpositive tau_s");

    // Step 3: input linear step
    const Eigen::VectorXd inv_tau_r = op.apply_squared(next.tau_s, Direction::adjoint).values;
    next.tau_r.resize(inv_tau_r.size());
    for (Eigen::Index i = 0; i < inv_tau_r.size(); ++i) {
        double tr = 1.0 / inv_tau_r[i];
        if (!(tr >= kGampVarianceFloor)) {  // also catches NaN and negative sums
            if (std::isnan(tr)) throw std::runtime_error("gamp_pass: NaN tau_r at column " + std::to_string(i));
            tr = kGampVarianceFloor;
            ++next.clamped;
        }
        next.tau_r[i] = tr;
    }
    next.r_hat = x_hat + next.tau_r.cwiseProduct(op.apply_adjoint(next.s_hat));
    return next;
}

}  // namespace papr
