#include "papr/emtgm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace papr {
namespace {

constexpr double kLnEtaFloor = -700.0;
constexpr double kMassFloor = 1e-300;

// Phi(z) - 1/2 for z >= 0, without cancellation near zero.
double half_centered_cdf(double z) { return 0.5 * std::erf(z / std::numbers::sqrt2); }

// Moments of x = v s with density ~ exp(-g s - q s^2) on s in [-1, 1]. Used when the interval is
// narrow against sigma, where the closed-form second moment cancels.
std::pair<double, double> narrow_moments(double g, double q, double v) {
    using rule = boost::math::quadrature::gauss<double, 40>;
    auto w = [=](double s) { return std::exp(-g * s - q * s * s); };
    const double z = rule::integrate(w, -1.0, 1.0);
    const double m = rule::integrate([&](double s) { return s * w(s); }, -1.0, 1.0) / z;
    const double var = rule::integrate([&](double s) { return (s - m) * (s - m) * w(s); }, -1.0, 1.0) / z;
    return {v * m, v * v * var};
}

double logistic(double c) {
    if (c >= 0.0) return 1.0 / (1.0 + std::exp(-c));
    const double e = std::exp(c);
    return e / (1.0 + e);
}

}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_gamma(double a) {
    if (!(a > 0.0)) throw std::domain_error("log_gamma: argument must be positive");
    return boost::math::lgamma(a);
}

double digamma(double a) {
    if (!(a > 0.0)) throw std::domain_error("digamma: argument must be positive");
    return boost::math::digamma(a);
}

TruncatedMoments truncated_moments(double mu, double sigma2, double v) {
    const double sigma = std::sqrt(sigma2);
    const double lo = (-v - mu) / sigma;
    const double hi = (v - mu) / sigma;
    // Evaluate the mass in whichever tail keeps it accurate.
    double phi;
    if (lo > 0.0)
        phi = normal_cdf(-lo) - normal_cdf(-hi);
    else
        phi = normal_cdf(hi) - normal_cdf(lo);

    if (!(phi >= kMassFloor)) {
        const double edge = mu >= 0.0 ? v : -v;
        return {phi, edge, v * v};
    }
    const double half = 0.5 * (hi - lo);
    const double tilt = 0.5 * (lo + hi) * half;
    if (hi - lo < 0.5 && std::abs(tilt) <= 40.0) {
        const auto [mean, var] = narrow_moments(tilt, 0.5 * half * half, v);
        const double m = std::clamp(mean, -v, v);
        return {phi, m, m * m + var};
    }
    const double pdf_lo = normal_pdf(lo);
    const double pdf_hi = normal_pdf(hi);
    // N(v | mu, s2) = pdf_hi / sigma and N(-v | mu, s2) = pdf_lo / sigma
    double mean = mu - sigma * (pdf_hi - pdf_lo) / phi;
    mean = std::clamp(mean, -v, v);
    double second = mu * mean + sigma2 - sigma * v * (pdf_hi + pdf_lo) / phi;
    // truncation never inflates the variance
    const double var = std::clamp(second - mean * mean, 0.0, sigma2);
    second = mean * mean + var;
    return {phi, mean, second};
}

void Hyperparams::validate() const {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("Gamma hyperparameters must be positive");
    if (!(pi >= 0.0 && pi <= 1.0)) throw std::invalid_argument("mixing coefficient must lie in [0,1]");
    if (!(beta0 > 0.0)) throw std::invalid_argument("initial beta must be positive");
    if (v0 && !(*v0 > 0.0)) throw std::invalid_argument("initial boundary must be positive");
    if (!(working_rms >= 0.0)) throw std::invalid_argument("working_rms must be nonnegative");
    if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
}

Posteriors Posteriors::initial(Eigen::Index size) {
    Posteriors p;
    p.mu = Eigen::ArrayXd::Zero(size);
    p.sigma2 = Eigen::ArrayXd::Ones(size);
    p.phi = Eigen::ArrayXd::Ones(size);
    p.Ex = Eigen::ArrayXd::Zero(size);
    p.Ex2 = Eigen::ArrayXd::Ones(size);
    p.a1 = p.b1 = p.a2 = p.b2 = Eigen::ArrayXd::Ones(size);
    p.Ealpha1 = p.Ealpha2 = Eigen::ArrayXd::Ones(size);
    p.Elnalpha1 = p.Elnalpha2 = Eigen::ArrayXd::Zero(size);
    p.Ekappa = Eigen::ArrayXd::Constant(size, 0.5);
    return p;
}

Eigen::VectorXd Posteriors::variance() const {
    return (Ex2 - Ex.square()).max(1e-300).matrix();
}

void update_qx(Posteriors& post, const GampState& gamp, double v) {
    if (!(v > 0.0)) throw std::invalid_argument("update_qx: boundary must be positive");
    if (gamp.r_hat.size() != post.size() || gamp.tau_r.size() != post.size())
        throw std::invalid_argument("update_qx: GAMP state does not match the posterior size");
    for (Eigen::Index i = 0; i < post.size(); ++i) {
        const double k = post.Ekappa[i];
        const double a1 = post.Ealpha1[i];
        const double a2 = post.Ealpha2[i];
        const double inv_tr = 1.0 / gamp.tau_r[i];
        const double s2 = 1.0 / (k * a1 - k * a2 + a2 + inv_tr);
        const double mu = ((k * a1 + k * a2 - a2) * v + gamp.r_hat[i] * inv_tr) * s2;
        const auto m = truncated_moments(mu, s2, v);
        post.sigma2[i] = s2;
        post.mu[i] = mu;
        post.phi[i] = m.phi;
        post.Ex[i] = m.mean;
        post.Ex2[i] = m.second;
    }
}

void update_qalpha(Posteriors& post, double v, double a, double b) {
    const Eigen::ArrayXd d1 = (post.Ex2 - 2.0 * v * post.Ex + v * v).max(0.0);  // <(x - v)^2>
    const Eigen::ArrayXd d2 = (post.Ex2 + 2.0 * v * post.Ex + v * v).max(0.0);  // <(x + v)^2>
    post.a1 = a + 0.5 * post.Ekappa;
    post.b1 = b + 0.5 * post.Ekappa * d1;
    post.a2 = a + 0.5 * (1.0 - post.Ekappa);
    post.b2 = b + 0.5 * (1.0 - post.Ekappa) * d2;
    post.Ealpha1 = post.a1 / post.b1;
    post.Ealpha2 = post.a2 / post.b2;
    for (Eigen::Index i = 0; i < post.size(); ++i) {
        post.Elnalpha1[i] = digamma(post.a1[i]) - std::log(post.b1[i]);
        post.Elnalpha2[i] = digamma(post.a2[i]) - std::log(post.b2[i]);
    }
}

double kappa_log_odds(const Posteriors& post, Eigen::Index i, double v, double pi, bool precision_weighted) {
    const double ex = post.Ex[i];
    const double ex2 = post.Ex2[i];
    const double d1 = std::max(ex2 - 2.0 * v * ex + v * v, 0.0);
    const double d2 = std::max(ex2 + 2.0 * v * ex + v * v, 0.0);
    const double w1 = precision_weighted ? post.Ealpha1[i] : 1.0;
    const double w2 = precision_weighted ? post.Ealpha2[i] : 1.0;
    // eta_1 = 1/2 - Phi(-2 v sqrt(a1)) = Phi(2 v sqrt(a1)) - 1/2, likewise eta_2
    const double ln_eta1 = std::max(std::log(half_centered_cdf(2.0 * v * std::sqrt(post.Ealpha1[i]))), kLnEtaFloor);
    const double ln_eta2 = std::max(std::log(half_centered_cdf(2.0 * v * std::sqrt(post.Ealpha2[i]))), kLnEtaFloor);
    return 0.5 * (post.Elnalpha1[i] - post.Elnalpha2[i] - w1 * d1 + w2 * d2) + ln_eta2 - ln_eta1 +
           std::log(pi / (1.0 - pi));
}

void update_qkappa(Posteriors& post, double v, double pi, bool precision_weighted) {
    if (pi <= 0.0 || pi >= 1.0) {
        post.Ekappa.setConstant(pi >= 1.0 ? 1.0 : 0.0);
        return;
    }
    for (Eigen::Index i = 0; i < post.size(); ++i)
        post.Ekappa[i] = logistic(kappa_log_odds(post, i, v, pi, precision_weighted));
}

double update_beta(const Eigen::VectorXd& y, const GampState& gamp, double beta_max) {
    if (y.size() != gamp.u_hat.size()) throw std::invalid_argument("update_beta: length mismatch");
    const double denom = (y - gamp.u_hat).squaredNorm() + gamp.tau_u.sum();
    const double J = static_cast<double>(y.size());
    if (!(denom > 0.0) || J / denom > beta_max) return beta_max;
    return J / denom;
}

BoundaryUpdate update_v(const Eigen::VectorXd& y, const ConstraintOperator& op, const Eigen::VectorXd& x_hat,
                        double v, double v_min) {
    Eigen::VectorXd gamma(x_hat.size());
    for (Eigen::Index i = 0; i < x_hat.size(); ++i) gamma[i] = x_hat[i] >= 0.0 ? 1.0 : -1.0;
    const Eigen::VectorXd residual = y - op.apply(x_hat);
    const Eigen::VectorXd a_gamma = op.apply(gamma);
    const double norm_sq = a_gamma.squaredNorm();
    const double res_norm = residual.norm();
    if (!(norm_sq > 0.0)) return {v, 0.0, res_norm, true};
    const double delta = residual.dot(a_gamma) / norm_sq;
    return {std::max(v + delta, v_min), delta, res_norm, false};
}

double boundary_fraction(const Eigen::VectorXd& x, double v, double rel_tol) {
    if (x.size() == 0) return 0.0;
    const double tol = rel_tol * v;
    const auto hits = (x.array().abs() >= v - tol).count();
    return static_cast<double>(hits) / static_cast<double>(x.size());
}

double working_scale(const Eigen::VectorXd& y, const ConstraintOperator& op, double working_rms) {
    const double y_norm = y.norm();
    if (!(working_rms > 0.0) || !(y_norm > 0.0)) return 1.0;
    return working_rms * std::sqrt(op.frob_sq()) / y_norm;
}

SolveResult solve(const Eigen::VectorXd& y_in, const ConstraintOperator& op, const Hyperparams& hp,
                  const IterationObserver& observer) {
    hp.validate();
    if (y_in.size() != op.rows()) throw std::invalid_argument("solve: y length must equal J");
    if (!y_in.allFinite()) throw std::invalid_argument("solve: y must be finite");
    const double c = working_scale(y_in, op, hp.working_rms);
    const Eigen::VectorXd y = c * y_in;

    Posteriors post = Posteriors::initial(op.cols());
    GampState gamp = GampState::initial(op.rows());
    double beta = hp.beta0;
    double v = hp.v0 ? c * *hp.v0 : y.lpNorm<Eigen::Infinity>() / op.inf_norm();
    if (!(v > 0.0)) v = hp.v_min;
    const double y_norm = y.norm();

    SolveResult result;
    result.precision_weighted_kappa = hp.precision_weighted_kappa;
    Eigen::VectorXd tau_x = Eigen::VectorXd::Ones(op.cols());
    for (int t = 1; t <= hp.t_max; ++t) {
        gamp = gamp_pass(op, post.Ex.matrix(), tau_x, y, beta, gamp);
        if (!gamp.r_hat.allFinite()) throw SolverAbort(t, "r_hat");

        update_qx(post, gamp, v);
        update_qalpha(post, v, hp.a, hp.b);
        update_qkappa(post, v, hp.pi, hp.precision_weighted_kappa);
        if (!post.Ex.allFinite()) throw SolverAbort(t, "posterior mean");
        if (!post.Ekappa.allFinite()) throw SolverAbort(t, "kappa");

        const Eigen::VectorXd x_hat = post.Ex.matrix();
        const double frac = boundary_fraction(x_hat, v);
        const double v_used = v;

        beta = update_beta(y, gamp, hp.beta_max);
        if (!std::isfinite(beta)) throw SolverAbort(t, "beta");
        const BoundaryUpdate bu = update_v(y, op, x_hat, v, hp.v_min);
        if (!std::isfinite(bu.v)) throw SolverAbort(t, "boundary");
        v = bu.v;

        tau_x = post.variance();
        result.diagnostics.push_back({t, bu.residual_norm / c, v_used / c, beta, frac, gamp.clamped});
        result.iterations = t;
        if (observer) observer(t, x_hat / c);
        if (hp.residual_tol && bu.residual_norm < *hp.residual_tol * y_norm) break;
    }
    result.x_hat = post.Ex.matrix() / c;
    result.v = v / c;
    result.scale = c;
    result.beta = beta;
    return result;
}

}  // namespace papr
