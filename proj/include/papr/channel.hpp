#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "papr/model.hpp"

namespace papr {

/// Time-domain taps \hat H_d, each K x M.
struct TapChannel {
    std::vector<Eigen::MatrixXcd> taps;
};

/// Per-tone K x M responses H_n, n = 0..N-1.
struct FreqChannel {
    std::vector<Eigen::MatrixXcd> tones;

    int users() const { return tones.empty() ? 0 : static_cast<int>(tones.front().rows()); }
    int antennas() const { return tones.empty() ? 0 : static_cast<int>(tones.front().cols()); }
};

/// Entries are circularly symmetric complex Gaussian with unit variance.
TapChannel draw_taps(int users, int antennas, int taps, Rng& rng);

/// H_n = sum_{d=1}^{D} \hat H_d exp(-j 2 pi d n / N). No tap normalization.
FreqChannel freq_response(const TapChannel& taps, int tones);

/// Channel dump as JSON: {"tones": [[[re, im], ...row-major...], ...], "users": K, "antennas": M}.
void save_channel(const FreqChannel& channel, std::ostream& out);
FreqChannel load_channel(std::istream& in);

}  // namespace papr
