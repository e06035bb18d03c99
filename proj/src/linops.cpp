#include "papr/linops.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fft.hpp"

namespace papr {
namespace {

void check_dimensions(const FreqChannel& channel, const SystemConfig& config) {
    config.validate();
    if (static_cast<int>(channel.tones.size()) != config.tones)
        throw std::invalid_argument("channel has " + std::to_string(channel.tones.size()) +
                                    " tones, config expects " + std::to_string(config.tones));
    for (const auto& h : channel.tones)
        if (h.rows() != config.users || h.cols() != config.antennas)
            throw std::invalid_argument("channel matrix must be K x M");
}

// exp(-j 2 pi k / N) for k = 0..N-1
std::vector<cplx> twiddles(int n) {
    std::vector<cplx> tw(n);
    for (int k = 0; k < n; ++k) tw[k] = std::polar(1.0, -2.0 * std::numbers::pi * k / n);
    return tw;
}

}  // namespace

Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> assemble_dense(
    const FreqChannel& channel, const SystemConfig& config) {
    check_dimensions(channel, config);
    const ConstraintLayout layout(config);
    const int M = config.antennas;
    const int N = config.tones;
    const Eigen::Index J = config.rows();
    const Eigen::Index I = config.cols();
    const Eigen::Index Jh = J / 2;
    const Eigen::Index Ih = I / 2;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    const auto tw = twiddles(N);

    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> A =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(J, I);
    auto put = [&](Eigen::Index row, Eigen::Index col, cplx c) {
        A(row, col) = c.real();
        A(row, Ih + col) = -c.imag();
        A(Jh + row, col) = c.imag();
        A(Jh + row, Ih + col) = c.real();
    };
    for (int n = 0; n < N; ++n) {
        const Eigen::Index off = layout.offset[n];
        if (layout.data[n]) {
            for (int k = 0; k < config.users; ++k)
                for (int m = 0; m < M; ++m)
                    for (int t = 0; t < N; ++t)
                        put(off + k, static_cast<Eigen::Index>(m) * N + t,
                            channel.tones[n](k, m) * tw[(static_cast<long long>(n) * t) % N] * inv_sqrt_n);
        } else {
            for (int m = 0; m < M; ++m)
                for (int t = 0; t < N; ++t)
                    put(off + m, static_cast<Eigen::Index>(m) * N + t,
                        tw[(static_cast<long long>(n) * t) % N] * inv_sqrt_n);
        }
    }
    return A;
}

ConstraintOperator ConstraintOperator::build(const FreqChannel& channel, const SystemConfig& config,
                                             const OperatorOptions& options) {
    check_dimensions(channel, config);
    ConstraintOperator op;
    op.mode_ = options.mode;
    op.fast_squares_ = options.fast_squares;
    op.config_ = std::make_shared<const SystemConfig>(config);
    op.layout_ = std::make_shared<const ConstraintLayout>(config);
    op.rows_ = config.rows();
    op.cols_ = config.cols();

    const int M = config.antennas;
    const int N = config.tones;
    std::vector<Eigen::MatrixXd> abs2(N);
    std::vector<Eigen::MatrixXcd> sq(N);
    for (int n = 0; n < N; ++n) {
        abs2[n] = channel.tones[n].cwiseAbs2();
        sq[n] = channel.tones[n].array().square().matrix();
    }
    op.h_ = std::make_shared<const std::vector<Eigen::MatrixXcd>>(channel.tones);
    op.h_abs2_ = std::make_shared<const std::vector<Eigen::MatrixXd>>(std::move(abs2));
    op.h_sq_ = std::make_shared<const std::vector<Eigen::MatrixXcd>>(std::move(sq));

    // ||A||_F^2 = 2 sum |C_ji|^2; each DFT row has unit energy.
    double frob = 0.0;
    for (int n : config.data_tones) frob += channel.tones[n].squaredNorm();
    frob += static_cast<double>(config.guard_tones.size()) * M;
    op.frob_sq_ = 2.0 * frob;

    // Re-rows and Im-rows of the same complex row share the absolute row sum
    // sum_i |Re c_i| + |Im c_i|.
    const auto tw = twiddles(N);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    double inf_norm = 0.0;
    for (int n = 0; n < N; ++n) {
        if (op.layout_->data[n]) {
            for (int k = 0; k < config.users; ++k) {
                double sum = 0.0;
                for (int m = 0; m < M; ++m) {
                    const cplx h = channel.tones[n](k, m) * inv_sqrt_n;
                    for (int t = 0; t < N; ++t) {
                        const cplx c = h * tw[(static_cast<long long>(n) * t) % N];
                        sum += std::abs(c.real()) + std::abs(c.imag());
                    }
                }
                inf_norm = std::max(inf_norm, sum);
            }
        } else {
            double sum = 0.0;
            for (int t = 0; t < N; ++t) {
                const cplx c = tw[(static_cast<long long>(n) * t) % N] * inv_sqrt_n;
                sum += std::abs(c.real()) + std::abs(c.imag());
            }
            inf_norm = std::max(inf_norm, sum);
        }
    }
    op.inf_norm_ = inf_norm;

    if (options.mode == OperatorMode::dense) {
        const double bytes = static_cast<double>(op.rows_) * static_cast<double>(op.cols_) * sizeof(double);
        if (bytes > static_cast<double>(options.dense_budget_bytes))
            throw std::invalid_argument("dense operator needs " + std::to_string(bytes / (1 << 20)) +
                                        " MiB, above the configured budget");
        op.dense_ = std::make_shared<const RowMatrix>(assemble_dense(channel, config));
    }
    return op;
}

SquaredRule ConstraintOperator::squared_rule() const {
    return mode_ == OperatorMode::dense ? SquaredRule::exact_dense : fast_squares_;
}

Eigen::VectorXd ConstraintOperator::apply(const Eigen::VectorXd& x) const {
    if (x.size() != cols_) throw std::invalid_argument("apply: input length must equal I");
    if (dense_) return (*dense_) * x;
    return fast_apply(x);
}

Eigen::VectorXd ConstraintOperator::apply_adjoint(const Eigen::VectorXd& r) const {
    if (r.size() != rows_) throw std::invalid_argument("apply_adjoint: input length must equal J");
    if (dense_) return dense_->transpose() * r;
    return fast_adjoint(r);
}

SquaredProduct ConstraintOperator::apply_squared(const Eigen::VectorXd& v, Direction direction) const {
    const Eigen::Index expected = direction == Direction::forward ? cols_ : rows_;
    if (v.size() != expected) throw std::invalid_argument("apply_squared: length mismatch");
    if ((v.array() < 0.0).any()) throw std::invalid_argument("apply_squared: negative variance");

    const SquaredRule rule = squared_rule();
    switch (rule) {
        case SquaredRule::exact_dense: {
            const RowMatrix& A = *dense_;
            if (direction == Direction::forward) {
                Eigen::VectorXd out(rows_);
                for (Eigen::Index j = 0; j < rows_; ++j) out[j] = A.row(j).cwiseAbs2().dot(v.transpose());
                return {out, rule};
            }
            Eigen::VectorXd out = Eigen::VectorXd::Zero(cols_);
            for (Eigen::Index j = 0; j < rows_; ++j)
                if (v[j] != 0.0) out.noalias() += v[j] * A.row(j).cwiseAbs2().transpose();
            return {out, rule};
        }
        case SquaredRule::structured:
            return {direction == Direction::forward ? fast_squared_forward(v) : fast_squared_adjoint(v), rule};
        case SquaredRule::scalar: {
            const double mean = v.mean();
            if (direction == Direction::forward)
                return {Eigen::VectorXd::Constant(rows_, frob_sq_ / static_cast<double>(rows_) * mean), rule};
            return {Eigen::VectorXd::Constant(cols_, frob_sq_ / static_cast<double>(cols_) * mean), rule};
        }
    }
    throw std::logic_error("unhandled squared rule");
}

Eigen::VectorXd ConstraintOperator::fast_apply(const Eigen::VectorXd& x) const {
    const SystemConfig& cfg = *config_;
    const int M = cfg.antennas;
    const int N = cfg.tones;
    const Eigen::Index Ih = cols_ / 2;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));

    Eigen::MatrixXcd spectrum(N, M);
    Eigen::VectorXcd a_hat(N);
    for (int m = 0; m < M; ++m) {
        const Eigen::Index base = static_cast<Eigen::Index>(m) * N;
        a_hat.real() = x.segment(base, N);
        a_hat.imag() = x.segment(Ih + base, N);
        spectrum.col(m) = detail::fft(a_hat) * inv_sqrt_n;
    }
    Eigen::VectorXcd s(layout_->complex_rows());
    for (int n = 0; n < N; ++n) {
        const Eigen::Index off = layout_->offset[n];
        if (layout_->data[n])
            s.segment(off, cfg.users).noalias() = (*h_)[n] * spectrum.row(n).transpose();
        else
            s.segment(off, M) = spectrum.row(n).transpose();
    }
    return stack_real(s);
}

Eigen::VectorXd ConstraintOperator::fast_adjoint(const Eigen::VectorXd& r) const {
    const SystemConfig& cfg = *config_;
    const int M = cfg.antennas;
    const int N = cfg.tones;
    const Eigen::Index Jh = rows_ / 2;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));

    Eigen::MatrixXcd spectrum(N, M);
    for (int n = 0; n < N; ++n) {
        const Eigen::Index off = layout_->offset[n];
        const Eigen::Index len = layout_->block_size(n);
        Eigen::VectorXcd block(len);
        block.real() = r.segment(off, len);
        block.imag() = r.segment(Jh + off, len);
        if (layout_->data[n])
            spectrum.row(n) = ((*h_)[n].adjoint() * block).transpose();
        else
            spectrum.row(n) = block.transpose();
    }
    Eigen::VectorXd out(cols_);
    const Eigen::Index Ih = cols_ / 2;
    for (int m = 0; m < M; ++m) {
        const Eigen::VectorXcd a_hat = detail::ifft(spectrum.col(m)) * inv_sqrt_n;
        const Eigen::Index base = static_cast<Eigen::Index>(m) * N;
        out.segment(base, N) = a_hat.real();
        out.segment(Ih + base, N) = a_hat.imag();
    }
    return out;
}

// Row (n,k) of C has entries c = H_n[k,m] e^{-j 2 pi n t / N} / sqrt(N). With
// (Re c)^2 = (|c|^2 + Re c^2)/2 and (Im c)^2 = (|c|^2 - Re c^2)/2:
//   Re-row = 1/2 sum |c|^2 (vR + vI) + 1/2 Re sum c^2 (vR - vI)
//   Im-row = 1/2 sum |c|^2 (vR + vI) - 1/2 Re sum c^2 (vR - vI)
// and sum_t c^2 d_t reduces to H^2 * DFT(d)[2n mod N] / N.
Eigen::VectorXd ConstraintOperator::fast_squared_forward(const Eigen::VectorXd& v) const {
    const SystemConfig& cfg = *config_;
    const int M = cfg.antennas;
    const int N = cfg.tones;
    const Eigen::Index Ih = cols_ / 2;
    const Eigen::Index Jh = rows_ / 2;
    const double inv_n = 1.0 / static_cast<double>(N);

    Eigen::VectorXd mean_sum(M);
    Eigen::MatrixXcd diff_spec(N, M);
    for (int m = 0; m < M; ++m) {
        const Eigen::Index base = static_cast<Eigen::Index>(m) * N;
        const auto vr = v.segment(base, N);
        const auto vi = v.segment(Ih + base, N);
        mean_sum[m] = (vr.sum() + vi.sum()) * inv_n;
        diff_spec.col(m) = detail::fft((vr - vi).cast<cplx>()) * inv_n;
    }
    Eigen::VectorXd out(rows_);
    for (int n = 0; n < N; ++n) {
        const Eigen::Index off = layout_->offset[n];
        const int n2 = static_cast<int>((2LL * n) % N);
        if (layout_->data[n]) {
            const Eigen::VectorXd p = (*h_abs2_)[n] * mean_sum;
            const Eigen::VectorXd q = ((*h_sq_)[n] * diff_spec.row(n2).transpose()).real();
            out.segment(off, cfg.users) = 0.5 * (p + q);
            out.segment(Jh + off, cfg.users) = 0.5 * (p - q);
        } else {
            const Eigen::VectorXd q = diff_spec.row(n2).transpose().real();
            out.segment(off, M) = 0.5 * (mean_sum + q);
            out.segment(Jh + off, M) = 0.5 * (mean_sum - q);
        }
    }
    return out;
}

// Column (m,t): Re-col = 1/2 P_m + 1/2 Re Q_m[2t mod N], Im-col = 1/2 P_m - 1/2 Re Q_m[2t mod N]
// with P_m = sum_rows |c|^2 (rR + rI) (independent of t) and Q_m = DFT_n(G_m)/N,
// G_m[n] = sum_k H_n[k,m]^2 (rR - rI)_{n,k}.
Eigen::VectorXd ConstraintOperator::fast_squared_adjoint(const Eigen::VectorXd& r) const {
    const SystemConfig& cfg = *config_;
    const int M = cfg.antennas;
    const int N = cfg.tones;
    const Eigen::Index Ih = cols_ / 2;
    const Eigen::Index Jh = rows_ / 2;
    const double inv_n = 1.0 / static_cast<double>(N);

    Eigen::VectorXd p = Eigen::VectorXd::Zero(M);
    Eigen::MatrixXcd g(N, M);
    for (int n = 0; n < N; ++n) {
        const Eigen::Index off = layout_->offset[n];
        const Eigen::Index len = layout_->block_size(n);
        const Eigen::VectorXd sum = r.segment(off, len) + r.segment(Jh + off, len);
        const Eigen::VectorXd diff = r.segment(off, len) - r.segment(Jh + off, len);
        if (layout_->data[n]) {
            p.noalias() += (*h_abs2_)[n].transpose() * sum;
            g.row(n) = ((*h_sq_)[n].transpose() * diff.cast<cplx>()).transpose();
        } else {
            p += sum;
            g.row(n) = diff.cast<cplx>().transpose();
        }
    }
    p *= inv_n;
    Eigen::VectorXd out(cols_);
    for (int m = 0; m < M; ++m) {
        const Eigen::VectorXcd q = detail::fft(g.col(m)) * inv_n;
        const Eigen::Index base = static_cast<Eigen::Index>(m) * N;
        for (int t = 0; t < N; ++t) {
            const double qt = q[static_cast<Eigen::Index>((2LL * t) % N)].real();
            out[base + t] = 0.5 * (p[m] + qt);
            out[Ih + base + t] = 0.5 * (p[m] - qt);
        }
    }
    return out;
}

}  // namespace papr
