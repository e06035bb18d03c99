#include "papr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fft.hpp"

namespace papr {
namespace {

// Sorted distinct coordinates of the scaled constellation along one axis.
std::vector<double> axis_levels(Alphabet alphabet, int users) {
    const double scale = constellation_scale(alphabet, users);
    std::vector<double> levels;
    for (const auto& p : constellation_points(alphabet)) levels.push_back(p.real() * scale);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    return levels;
}

int slice(double value, const std::vector<double>& levels) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(levels.size()); ++i)
        if (value > 0.5 * (levels[i - 1] + levels[i])) best = i;
    return best;
}

}  // namespace

double to_db(double ratio) {
    if (ratio <= 0.0) return kDbFloor;
    return std::max(10.0 * std::log10(ratio), kDbFloor);
}

Eigen::VectorXcd oversampled_signal(const Eigen::VectorXcd& a_hat, int oversample) {
    if (oversample < 1) throw std::invalid_argument("oversampling factor must be >= 1");
    if (oversample == 1) return a_hat;
    const Eigen::Index n = a_hat.size();
    const Eigen::VectorXcd spectrum = detail::fft(a_hat);
    Eigen::VectorXcd padded = Eigen::VectorXcd::Zero(n * oversample);
    // keep positive frequencies at the start and negative ones at the end
    const Eigen::Index pos = (n + 1) / 2;
    padded.head(pos) = spectrum.head(pos);
    padded.tail(n - pos) = spectrum.tail(n - pos);
    return detail::ifft(padded) / static_cast<double>(n);
}

double papr_db(const Eigen::VectorXcd& a_hat, int oversample) {
    const Eigen::VectorXcd sig = oversampled_signal(a_hat, oversample);
    const double energy = sig.squaredNorm();
    if (!(energy > 0.0)) throw std::invalid_argument("papr of a zero vector is undefined");
    const double peak = std::max(sig.real().lpNorm<Eigen::Infinity>(), sig.imag().lpNorm<Eigen::Infinity>());
    return to_db(2.0 * static_cast<double>(sig.size()) * peak * peak / energy);
}

std::vector<double> papr_per_antenna_db(const TimeFrame& frame, int oversample) {
    std::vector<double> out;
    out.reserve(frame.antennas);
    for (int m = 0; m < frame.antennas; ++m) out.push_back(papr_db(frame.antenna(m), oversample));
    return out;
}

double mui_ratio(const SymbolFrame& symbols, const PrecodedFrame& w, const FreqChannel& channel,
                 const SystemConfig& config) {
    if (static_cast<int>(symbols.tones.size()) != config.tones || w.tones != config.tones ||
        w.antennas != config.antennas || static_cast<int>(channel.tones.size()) != config.tones)
        throw std::invalid_argument("mui: dimension mismatch");
    double num = 0.0;
    double den = 0.0;
    for (int n : config.data_tones) {
        num += (symbols.tones[n] - channel.tones[n] * w.tone(n)).squaredNorm();
        den += symbols.tones[n].squaredNorm();
    }
    if (!(den > 0.0)) throw std::invalid_argument("mui: zero symbol energy");
    return num / den;
}

double obr_ratio(const PrecodedFrame& w, const SystemConfig& config) {
    if (config.guard_tones.empty()) throw std::invalid_argument("obr: guard band is empty");
    if (w.tones != config.tones || w.antennas != config.antennas) throw std::invalid_argument("obr: dimension mismatch");
    double out_band = 0.0;
    double in_band = 0.0;
    for (int n : config.guard_tones) out_band += w.tone(n).squaredNorm();
    for (int n : config.data_tones) in_band += w.tone(n).squaredNorm();
    if (!(in_band > 0.0)) throw std::invalid_argument("obr: zero in-band power");
    return static_cast<double>(config.data_tones.size()) * out_band /
           (static_cast<double>(config.guard_tones.size()) * in_band);
}

double mui_db(const SymbolFrame& symbols, const PrecodedFrame& w, const FreqChannel& channel,
              const SystemConfig& config) {
    return to_db(mui_ratio(symbols, w, channel, config));
}

double obr_db(const PrecodedFrame& w, const SystemConfig& config) { return to_db(obr_ratio(w, config)); }

std::vector<double> ccdf(const std::vector<double>& samples, const std::vector<double>& thresholds) {
    if (samples.empty()) throw std::invalid_argument("ccdf: no samples");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(thresholds.size());
    const double total = static_cast<double>(sorted.size());
    for (double thr : thresholds) {
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), thr);
        out.push_back(static_cast<double>(above) / total);
    }
    return out;
}

double ccdf_quantile(std::vector<double> samples, double probability) {
    if (samples.empty()) throw std::invalid_argument("ccdf_quantile: no samples");
    if (!(probability >= 0.0 && probability < 1.0)) throw std::invalid_argument("ccdf_quantile: probability must lie in [0,1)");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    auto idx = static_cast<std::size_t>(std::ceil((1.0 - probability) * n - 1e-9));
    idx = std::clamp<std::size_t>(idx, 1, samples.size()) - 1;
    return samples[idx];
}

SerResult ser_simulate(const Eigen::VectorXd& x, const SymbolFrame& symbols, const FreqChannel& channel,
                       const SystemConfig& config, double snr_db, int noise_draws, Rng& rng) {
    if (noise_draws < 1) throw std::invalid_argument("ser_simulate: need at least one noise draw");
    const PrecodedFrame w = precoded_from_real(x, config.antennas, config.tones);
    const double noise_var = x.squaredNorm() / (config.antennas * std::pow(10.0, snr_db / 10.0));
    const auto levels = axis_levels(config.alphabet, config.users);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var / 2.0));

    std::vector<Eigen::VectorXcd> received;
    received.reserve(config.data_tones.size());
    for (int n : config.data_tones) received.push_back(channel.tones[n] * w.tone(n));

    SerResult result;
    result.noise_var = noise_var;
    for (int draw = 0; draw < noise_draws; ++draw) {
        for (std::size_t idx = 0; idx < config.data_tones.size(); ++idx) {
            const int n = config.data_tones[idx];
            for (int k = 0; k < config.users; ++k) {
                const double re = received[idx][k].real() + gauss(rng);
                const double im = received[idx][k].imag() + gauss(rng);
                const cplx s = symbols.tones[n][k];
                const bool ok = slice(re, levels) == slice(s.real(), levels) &&
                                slice(im, levels) == slice(s.imag(), levels);
                result.errors += ok ? 0 : 1;
                ++result.symbols;
            }
        }
    }
    return result;
}

}  // namespace papr
