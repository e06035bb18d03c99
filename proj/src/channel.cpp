#include "papr/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace papr {

TapChannel draw_taps(int users, int antennas, int taps, Rng& rng) {
    if (users < 1 || antennas < 1 || taps < 1)
        throw std::invalid_argument("K, M and D must be at least 1");
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    TapChannel channel;
    channel.taps.reserve(taps);
    for (int d = 0; d < taps; ++d) {
        Eigen::MatrixXcd h(users, antennas);
        for (int m = 0; m < antennas; ++m)
            for (int k = 0; k < users; ++k) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                h(k, m) = {re, im};
            }
        channel.taps.push_back(std::move(h));
    }
    return channel;
}

FreqChannel freq_response(const TapChannel& taps, int tones) {
    if (taps.taps.empty()) throw std::invalid_argument("channel has no taps");
    if (static_cast<int>(taps.taps.size()) > tones)
        throw std::invalid_argument("tap count must not exceed N");
    const auto rows = taps.taps.front().rows();
    const auto cols = taps.taps.front().cols();
    FreqChannel out;
    out.tones.reserve(tones);
    for (int n = 0; n < tones; ++n) {
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(rows, cols);
        for (std::size_t i = 0; i < taps.taps.size(); ++i) {
            // tap index d = i + 1; reduce d*n mod N before scaling the phase
            const long long dn = (static_cast<long long>(i + 1) * n) % tones;
            const double phase = -2.0 * std::numbers::pi * static_cast<double>(dn) / tones;
            h += taps.taps[i] * std::polar(1.0, phase);
        }
        out.tones.push_back(std::move(h));
    }
    return out;
}

void save_channel(const FreqChannel& channel, std::ostream& out) {
    nlohmann::json j;
    j["users"] = channel.users();
    j["antennas"] = channel.antennas();
    auto& tones = j["tones"] = nlohmann::json::array();
    for (const auto& h : channel.tones) {
        auto entries = nlohmann::json::array();
        for (Eigen::Index k = 0; k < h.rows(); ++k)
            for (Eigen::Index m = 0; m < h.cols(); ++m)
                entries.push_back({h(k, m).real(), h(k, m).imag()});
        tones.push_back(std::move(entries));
    }
    out << j.dump();
}

FreqChannel load_channel(std::istream& in) {
    const auto j = nlohmann::json::parse(in);
    const int users = j.at("users").get<int>();
    const int antennas = j.at("antennas").get<int>();
    FreqChannel channel;
    for (const auto& tone : j.at("tones")) {
        if (tone.size() != static_cast<std::size_t>(users) * antennas)
            throw std::invalid_argument("channel dump: tone matrix has wrong entry count");
        Eigen::MatrixXcd h(users, antennas);
        std::size_t idx = 0;
        for (int k = 0; k < users; ++k)
            for (int m = 0; m < antennas; ++m, ++idx)
                h(k, m) = {tone[idx].at(0).get<double>(), tone[idx].at(1).get<double>()};
        channel.tones.push_back(std::move(h));
    }
    return channel;
}

}  // namespace papr
