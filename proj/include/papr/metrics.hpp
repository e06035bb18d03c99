#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "papr/channel.hpp"
#include "papr/model.hpp"

namespace papr {

/// Reported value for an exact-zero ratio.
inline constexpr double kDbFloor = -300.0;

double to_db(double ratio);

/// 2 L N ||a||^2_inf~ / ||a||_2^2 in dB, evaluated on the L-times oversampled signal.
double papr_db(const Eigen::VectorXcd& a_hat, int oversample = 1);
std::vector<double> papr_per_antenna_db(const TimeFrame& frame, int oversample = 1);

/// Band-limited L-times oversampled time signal (zero-padded LN-point IDFT).
Eigen::VectorXcd oversampled_signal(const Eigen::VectorXcd& a_hat, int oversample);

/// Linear-domain MUI and OBR ratios; the dB variants floor exact zeros at kDbFloor.
double mui_ratio(const SymbolFrame& symbols, const PrecodedFrame& w, const FreqChannel& channel,
                 const SystemConfig& config);
double obr_ratio(const PrecodedFrame& w, const SystemConfig& config);
double mui_db(const SymbolFrame& symbols, const PrecodedFrame& w, const FreqChannel& channel,
              const SystemConfig& config);
double obr_db(const PrecodedFrame& w, const SystemConfig& config);

/// Empirical P(sample > threshold) for each threshold.
std::vector<double> ccdf(const std::vector<double>& samples, const std::vector<double>& thresholds);

/// Smallest sample x with P(sample > x) <= probability.
double ccdf_quantile(std::vector<double> samples, double probability);

struct SerResult {
    std::uint64_t errors = 0;
    std::uint64_t symbols = 0;
    double noise_var = 0.0;  // N_o

    double rate() const { return symbols == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(symbols); }
};

/// Nearest-point detection over `noise_draws` receiver-noise realizations with
/// N_o = ||x||^2 / (M 10^{snr/10}).
SerResult ser_simulate(const Eigen::VectorXd& x, const SymbolFrame& symbols, const FreqChannel& channel,
                       const SystemConfig& config, double snr_db, int noise_draws, Rng& rng);

}  // namespace papr
