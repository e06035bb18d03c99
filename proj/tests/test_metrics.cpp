#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "papr/baselines.hpp"
#include "papr/metrics.hpp"
#include "support.hpp"

using namespace papr;

TEST_CASE("PAPR of reference signals") {
    const int n = 64;
    Eigen::VectorXcd flat = Eigen::VectorXcd::Constant(n, cplx(1.0, -1.0));
    CHECK(papr_db(flat) == doctest::Approx(0.0).epsilon(1e-12));
    Eigen::VectorXcd spike = Eigen::VectorXcd::Zero(n);
    spike[5] = {0.3, 0.0};
    CHECK(papr_db(spike) == doctest::Approx(10.0 * std::log10(2.0 * n)));
    // only the larger of the real and imaginary peaks counts
    spike[9] = {0.0, 0.6};
    CHECK(papr_db(spike) == doctest::Approx(10.0 * std::log10(2.0 * n * 0.36 / 0.45)));
    CHECK_THROWS_AS(papr_db(Eigen::VectorXcd::Zero(n)), std::invalid_argument);
    CHECK_THROWS_AS(papr_db(flat, 0), std::invalid_argument);
}

TEST_CASE("oversampling interpolates the band-limited signal") {
    Rng rng(91);
    const int n = 16, l = 4;
    Eigen::VectorXcd a(n);
    for (auto& s : a) s = {test::random_vector(1, rng)[0], test::random_vector(1, rng)[0]};
    const Eigen::VectorXcd up = oversampled_signal(a, l);
    REQUIRE(up.size() == n * l);
    for (int t = 0; t < n; ++t) CHECK(std::abs(up[t * l] - a[t]) < 1e-12);
    // between samples: direct trigonometric interpolation over the kept bins
    const Eigen::VectorXcd spec = unitary_dft(a);
    for (int j : {1, 6, 37}) {
        cplx acc = 0;
        for (int k = 0; k < n; ++k) {
            const int f = k < (n + 1) / 2 ? k : k - n;
            acc += spec[k] * std::polar(1.0, 2.0 * std::numbers::pi * f * j / double(n * l));
        }
        CHECK(std::abs(up[j] - acc / std::sqrt(double(n))) < 1e-12);
    }
    CHECK(papr_db(a, 1) == doctest::Approx(papr_db(oversampled_signal(a, 1))));
    // the oversampled grid contains the original samples and keeps the energy per sample
    CHECK(papr_db(a, l) >= papr_db(a, 1) - 1e-12);
}

TEST_CASE("MUI and OBR definitions") {
    const auto inst = test::make_instance(8, 2, 16, 12, 2, 92);
    const auto& cfg = inst.config;
    const auto zf = zf_precode(inst.channel, cfg, inst.symbols);
    CHECK(mui_ratio(inst.symbols, zf, inst.channel, cfg) < 1e-25);
    CHECK(mui_db(inst.symbols, PrecodedFrame{16, 8, Eigen::VectorXcd::Zero(128)}, inst.channel, cfg) ==
          doctest::Approx(0.0));

    // equal per-tone power everywhere -> 0 dB; guard power 1e-6 of in-band per tone -> -60 dB
    PrecodedFrame w{16, 8, Eigen::VectorXcd::Constant(128, cplx(0.5, 0.5))};
    CHECK(obr_db(w, cfg) == doctest::Approx(0.0));
    for (int n : cfg.guard_tones) w.tone(n) *= 1e-3;
    CHECK(obr_db(w, cfg) == doctest::Approx(-60.0));
    for (int n : cfg.guard_tones) w.tone(n).setZero();
    CHECK(obr_db(w, cfg) == kDbFloor);

    const auto no_guard = SystemConfig::make(8, 2, 16, 16, 2);
    CHECK_THROWS_AS(obr_ratio(w, no_guard), std::invalid_argument);
    CHECK_THROWS_AS(obr_ratio(PrecodedFrame{16, 8, Eigen::VectorXcd::Zero(128)}, cfg), std::invalid_argument);
    CHECK(to_db(0.0) == kDbFloor);
    CHECK(to_db(1e-40) == kDbFloor);
    CHECK(to_db(100.0) == doctest::Approx(20.0));
}

TEST_CASE("CCDF and its quantile") {
    const std::vector<double> s{1.0, 2.0, 2.0, 3.0, 4.0};
    const auto p = ccdf(s, {0.0, 1.0, 2.0, 2.5, 4.0, 5.0});
    const std::vector<double> expect{1.0, 0.8, 0.4, 0.4, 0.0, 0.0};
    CHECK(p == expect);
    CHECK_THROWS_AS(ccdf({}, {1.0}), std::invalid_argument);

    std::vector<double> big(1000);
    std::iota(big.begin(), big.end(), 1.0);
    const double q = ccdf_quantile(big, 0.01);
    CHECK(q == 990.0);
    CHECK(ccdf(big, {q})[0] <= 0.01);
    CHECK(ccdf(big, {q - 1.0})[0] > 0.01);
}

TEST_CASE("single-user flat channel follows the 16-QAM SER curve") {
    // K=1 with one tap: every tone sees the same gain, and ZF inverts it exactly.
    const auto inst = test::make_instance(2, 1, 64, 64, 1, 93);
    const auto& cfg = inst.config;
    const Eigen::VectorXd x = real_from_precoded(zf_precode(inst.channel, cfg, inst.symbols));
    const double d = constellation_scale(cfg.alphabet, cfg.users);
    Rng rng(94);
    for (double snr : {4.0, 8.0, 12.0}) {
        const auto r = ser_simulate(x, inst.symbols, inst.channel, cfg, snr, 3000, rng);
        CHECK(r.symbols == 3000u * 64u);
        CHECK(r.noise_var == doctest::Approx(x.squaredNorm() / (2 * std::pow(10.0, snr / 10.0))));
        double p = 0.0;
        for (int n : cfg.data_tones) p += oracle::qam16_ser(inst.symbols.tones[n][0], d, r.noise_var);
        p /= static_cast<double>(cfg.data_tones.size());
        const double sd = std::sqrt(p * (1 - p) / static_cast<double>(r.symbols));
        INFO("snr " << snr << " measured " << r.rate() << " predicted " << p);
        CHECK(std::abs(r.rate() - p) <= 2.0 * sd);
    }
    CHECK_THROWS_AS(ser_simulate(x, inst.symbols, inst.channel, cfg, 5.0, 0, rng), std::invalid_argument);
}
