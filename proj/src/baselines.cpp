#include "papr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace papr {

PrecodedFrame zf_precode(const FreqChannel& channel, const SystemConfig& config,
                         const SymbolFrame& symbols) {
    if (static_cast<int>(channel.tones.size()) != config.tones ||
        static_cast<int>(symbols.tones.size()) != config.tones)
        throw std::invalid_argument("zf_precode: tone count mismatch");
    PrecodedFrame w{config.tones, config.antennas,
                    Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(config.tones) * config.antennas)};
    for (int n : config.data_tones) {
        const Eigen::MatrixXcd& h = channel.tones[n];
        const Eigen::MatrixXcd gram = h * h.adjoint();
        Eigen::LLT<Eigen::MatrixXcd> llt(gram);
        const Eigen::VectorXd pivots = Eigen::MatrixXcd(llt.matrixL()).diagonal().real();
        if (llt.info() != Eigen::Success || pivots.minCoeff() <= 1e-12 * pivots.maxCoeff())
            throw std::runtime_error("zf_precode: singular Gram matrix at tone " + std::to_string(n));
        w.tone(n) = h.adjoint() * llt.solve(symbols.tones[n]);
    }
    return w;
}

TimeFrame clip(const TimeFrame& frame, double ratio) {
    if (!(ratio > 0.0)) throw std::invalid_argument("clip ratio must be positive");
    TimeFrame out = frame;
    for (int m = 0; m < frame.antennas; ++m) {
        auto sig = out.antenna(m);
        const Eigen::VectorXd re = sig.real();
        const Eigen::VectorXd im = sig.imag();
        const double thr_re = ratio * std::sqrt(re.squaredNorm() / static_cast<double>(re.size()));
        const double thr_im = ratio * std::sqrt(im.squaredNorm() / static_cast<double>(im.size()));
        for (Eigen::Index t = 0; t < sig.size(); ++t)
            sig[t] = {std::clamp(re[t], -thr_re, thr_re), std::clamp(im[t], -thr_im, thr_im)};
    }
    return out;
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& z, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("l1-ball radius must be positive");
    if (z.lpNorm<1>() <= radius) return z;

    std::vector<double> mags(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) mags[i] = std::abs(z[i]);
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < mags.size(); ++k) {
        cumsum += mags[k];
        const double candidate = (cumsum - radius) / static_cast<double>(k + 1);
        if (mags[k] > candidate) theta = candidate;
        else break;
    }
    Eigen::VectorXd out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        out[i] = std::copysign(std::max(std::abs(z[i]) - theta, 0.0), z[i]);
    return out;
}

Eigen::VectorXd prox_linf(const Eigen::VectorXd& z, double tau) {
    if (tau <= 0.0) return z;
    return z - tau * project_l1_ball(z / tau, 1.0);
}

void FitraConfig::validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("FITRA lambda must be positive");
    if (max_iters < 1) throw std::invalid_argument("FITRA max_iters must be >= 1");
    if (power_iters < 1) throw std::invalid_argument("power iteration count must be >= 1");
    if (!(lipschitz_margin >= 1.0)) throw std::invalid_argument("Lipschitz margin must be >= 1");
}

double spectral_norm_sq(const ConstraintOperator& op, int max_iters, double tol) {
    // deterministic, non-degenerate start
    Eigen::VectorXd v(op.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3);
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd w = op.apply_adjoint(op.apply(v));
        const double next = v.dot(w);
        const double norm = w.norm();
        if (!std::isfinite(norm) || norm == 0.0)
            throw std::runtime_error("power iteration: degenerate operator");
        v = w / norm;
        if (it > 0 && std::abs(next - estimate) <= tol * next) return next;
        estimate = next;
    }
    throw std::runtime_error("power iteration did not converge within " + std::to_string(max_iters) +
                             " iterations");
}

double fitra_objective(const Eigen::VectorXd& y, const ConstraintOperator& op, const Eigen::VectorXd& x,
                       double lambda) {
    return lambda * x.lpNorm<Eigen::Infinity>() + (y - op.apply(x)).squaredNorm();
}

FitraResult fitra(const Eigen::VectorXd& y, const ConstraintOperator& op, const FitraConfig& cfg,
                  const IterationObserver& observer) {
    cfg.validate();
    if (y.size() != op.rows()) throw std::invalid_argument("fitra: y length must equal J");

    FitraResult result;
    result.lipschitz = 2.0 * cfg.lipschitz_margin * spectral_norm_sq(op, cfg.power_iters, cfg.power_tol);
    const double step = 1.0 / result.lipschitz;
    const double tau = cfg.lambda * step;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(op.cols());
    Eigen::VectorXd ax = Eigen::VectorXd::Zero(op.rows());
    Eigen::VectorXd w = x;    // momentum point
    Eigen::VectorXd aw = ax;  // A w, kept by linearity
    double t = 1.0;
    double prev_obj = y.squaredNorm();
    double best = prev_obj;

    for (int it = 1; it <= cfg.max_iters; ++it) {
        const Eigen::VectorXd grad = 2.0 * op.apply_adjoint(aw - y);
        Eigen::VectorXd x_next = prox_linf(w - step * grad, tau);
        Eigen::VectorXd ax_next = op.apply(x_next);
        const double obj = cfg.lambda * x_next.lpNorm<Eigen::Infinity>() + (y - ax_next).squaredNorm();
        if (!std::isfinite(obj)) throw std::runtime_error("fitra: non-finite objective at iteration " + std::to_string(it));

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (cfg.adaptive_restart && obj > prev_obj) {
            t = 1.0;
            w = x_next;
            aw = ax_next;
        } else {
            const double momentum = (t - 1.0) / t_next;
            w = x_next + momentum * (x_next - x);
            aw = ax_next + momentum * (ax_next - ax);
            t = t_next;
        }
        x = std::move(x_next);
        ax = std::move(ax_next);
        prev_obj = obj;
        best = std::min(best, obj);
        result.objective.push_back(obj);
        result.best_objective.push_back(best);
        result.iterations = it;
        if (observer) observer(it, x);
    }
    result.x = std::move(x);
    return result;
}

}  // namespace papr
