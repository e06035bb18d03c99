#pragma once

#include <cstddef>
#include <memory>

#include <Eigen/Dense>

#include "papr/channel.hpp"
#include "papr/model.hpp"

namespace papr {

enum class OperatorMode { dense, fast };

/// How the fast operator evaluates (A.*A) v.
///  structured: exact, via |c|^2 and c^2 = H^2 e^{-j 2 pi (2n) t / N} / N on doubled FFT bins.
///  scalar:     constant (||A||_F^2 / J) mean(v) per row, (||A||_F^2 / I) mean(v) per column.
enum class SquaredRule { exact_dense, structured, scalar };

enum class Direction { forward, adjoint };

struct OperatorOptions {
    OperatorMode mode = OperatorMode::fast;
    SquaredRule fast_squares = SquaredRule::structured;
    std::size_t dense_budget_bytes = std::size_t{2} << 30;
};

struct SquaredProduct {
    Eigen::VectorXd values;
    SquaredRule rule;
};

/// Real J x I constraint operator
///   A = [[Re C, -Im C], [Im C, Re C]],  C = Hbar T^T (I_M kron F_N),
/// mapping x = [Re a_hat; Im a_hat] (antenna-major) to y = [Re s_bar; Im s_bar] (tone-major).
/// Immutable after construction.
class ConstraintOperator {
public:
    static ConstraintOperator build(const FreqChannel& channel, const SystemConfig& config,
                                    const OperatorOptions& options = {});

    OperatorMode mode() const { return mode_; }
    SquaredRule squared_rule() const;
    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }
    double frob_sq() const { return frob_sq_; }
    /// Induced infinity norm: largest absolute row sum.
    double inf_norm() const { return inf_norm_; }
    const SystemConfig& config() const { return *config_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& r) const;
    SquaredProduct apply_squared(const Eigen::VectorXd& v, Direction direction) const;

    /// Dense matrix if built in dense mode, nullptr otherwise.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>* dense() const {
        return dense_.get();
    }

private:
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    ConstraintOperator() = default;

    Eigen::VectorXd fast_apply(const Eigen::VectorXd& x) const;
    Eigen::VectorXd fast_adjoint(const Eigen::VectorXd& r) const;
    Eigen::VectorXd fast_squared_forward(const Eigen::VectorXd& v) const;
    Eigen::VectorXd fast_squared_adjoint(const Eigen::VectorXd& r) const;

    OperatorMode mode_ = OperatorMode::fast;
    SquaredRule fast_squares_ = SquaredRule::structured;
    std::shared_ptr<const SystemConfig> config_;
    std::shared_ptr<const ConstraintLayout> layout_;
    std::shared_ptr<const std::vector<Eigen::MatrixXcd>> h_;       // H_n for every tone
    std::shared_ptr<const std::vector<Eigen::MatrixXd>> h_abs2_;   // |H_n|^2 entrywise
    std::shared_ptr<const std::vector<Eigen::MatrixXcd>> h_sq_;    // H_n^2 entrywise
    std::shared_ptr<const RowMatrix> dense_;
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    double frob_sq_ = 0.0;
    double inf_norm_ = 0.0;
};

/// Dense J x I matrix assembled entry by entry from the channel and DFT definitions.
Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> assemble_dense(
    const FreqChannel& channel, const SystemConfig& config);

}  // namespace papr
