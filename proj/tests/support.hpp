#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "papr/channel.hpp"
#include "papr/model.hpp"

namespace papr::test {

struct Instance {
    SystemConfig config;
    FreqChannel channel;
    SymbolFrame symbols;
};

inline Instance make_instance(int m, int k, int n, int data, int taps, std::uint64_t seed) {
    Instance inst{SystemConfig::make(m, k, n, data, taps), {}, {}};
    Rng rng(seed);
    inst.channel = freq_response(draw_taps(k, m, taps, rng), n);
    inst.symbols = generate_symbols(inst.config, rng);
    return inst;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

// Complex constraint matrix built from its factors: blockdiag(H_n or I_M) * P * (I_M kron F_N).
inline Eigen::MatrixXcd brute_force_c(const FreqChannel& ch, const SystemConfig& cfg) {
    const int M = cfg.antennas, N = cfg.tones, K = cfg.users;
    Eigen::MatrixXcd F(N, N);
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c)
            F(r, c) = std::polar(1.0 / std::sqrt(double(N)), -2.0 * std::numbers::pi * r * c / N);
    Eigen::MatrixXcd kron = Eigen::MatrixXcd::Zero(N * M, N * M);
    for (int m = 0; m < M; ++m) kron.block(m * N, m * N, N, N) = F;
    Eigen::MatrixXcd perm = Eigen::MatrixXcd::Zero(N * M, N * M);  // antenna-major -> tone-major
    for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m) perm(n * M + m, m * N + n) = 1.0;
    Eigen::Index rows = 0;
    for (int n = 0; n < N; ++n) rows += cfg.is_data_tone(n) ? K : M;
    Eigen::MatrixXcd hbar = Eigen::MatrixXcd::Zero(rows, N * M);
    Eigen::Index r = 0;
    for (int n = 0; n < N; ++n) {
        if (cfg.is_data_tone(n)) {
            hbar.block(r, n * M, K, M) = ch.tones[n];
            r += K;
        } else {
            hbar.block(r, n * M, M, M).setIdentity();
            r += M;
        }
    }
    return hbar * perm * kron;
}

inline Eigen::MatrixXd real_embedding(const Eigen::MatrixXcd& c) {
    Eigen::MatrixXd a(2 * c.rows(), 2 * c.cols());
    a << c.real(), -c.imag(), c.imag(), c.real();
    return a;
}

}  // namespace papr::test
