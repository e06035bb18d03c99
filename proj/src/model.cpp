#include "papr/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fft.hpp"

namespace papr {

Alphabet parse_alphabet(const std::string& name) {
    if (name == "16qam" || name == "qam16" || name == "16-QAM") return Alphabet::qam16;
    throw std::invalid_argument("unknown alphabet '" + name + "'");
}

std::string to_string(Alphabet alphabet) {
    switch (alphabet) {
        case Alphabet::qam16: return "16qam";
    }
    throw std::invalid_argument("unknown alphabet id");
}

std::vector<cplx> constellation_points(Alphabet alphabet) {
    switch (alphabet) {
        case Alphabet::qam16: {
            std::vector<cplx> points;
            for (int re : {-3, -1, 1, 3})
                for (int im : {-3, -1, 1, 3}) points.emplace_back(re, im);
            return points;
        }
    }
    throw std::invalid_argument("unknown alphabet id");
}

double constellation_scale(Alphabet alphabet, int users) {
    const auto points = constellation_points(alphabet);
    double energy = 0.0;
    for (const auto& p : points) energy += std::norm(p);
    energy /= static_cast<double>(points.size());
    // per-symbol energy 1/K so that E||s_n||^2 = 1
    return 1.0 / std::sqrt(energy * users);
}

SystemConfig SystemConfig::make(int antennas, int users, int tones, int data_tone_count, int taps,
                                Alphabet alphabet, int oversample, std::uint64_t seed) {
    if (tones <= 0 || data_tone_count < 0 || data_tone_count > tones)
        throw std::invalid_argument("data tone count must lie in [0, N]");
    SystemConfig c;
    c.antennas = antennas;
    c.users = users;
    c.tones = tones;
    c.taps = taps;
    c.alphabet = alphabet;
    c.oversample = oversample;
    c.seed = seed;
    const int guards = tones - data_tone_count;
    const int low = guards - guards / 2;  // odd remainder goes low
    for (int n = 0; n < tones; ++n) {
        if (n >= low && n < low + data_tone_count)
            c.data_tones.push_back(n);
        else
            c.guard_tones.push_back(n);
    }
    c.validate();
    return c;
}

void SystemConfig::validate() const {
    if (antennas <= 0 || users <= 0 || tones <= 0 || taps <= 0)
        throw std::invalid_argument("M, K, N and D must be positive");
    if (users >= antennas) throw std::invalid_argument("requires K < M");
    if (oversample < 1) throw std::invalid_argument("oversampling factor must be >= 1");
    if (data_tones.size() + guard_tones.size() != static_cast<std::size_t>(tones))
        throw std::invalid_argument("|T| + |Tc| must equal N");
    std::vector<int> seen(tones, 0);
    for (int n : data_tones) {
        if (n < 0 || n >= tones) throw std::invalid_argument("data tone index out of range");
        ++seen[n];
    }
    for (int n : guard_tones) {
        if (n < 0 || n >= tones) throw std::invalid_argument("guard tone index out of range");
        ++seen[n];
    }
    if (std::any_of(seen.begin(), seen.end(), [](int s) { return s != 1; }))
        throw std::invalid_argument("data and guard tone sets must partition 0..N-1");
    if (rows() >= cols()) throw std::invalid_argument("constraint system must be underdetermined (J < I)");
}

bool SystemConfig::is_data_tone(int tone) const {
    return std::find(data_tones.begin(), data_tones.end(), tone) != data_tones.end();
}

Eigen::Index SystemConfig::rows() const {
    return 2 * (static_cast<Eigen::Index>(data_tones.size()) * users +
                static_cast<Eigen::Index>(guard_tones.size()) * antennas);
}

Eigen::Index SystemConfig::cols() const {
    return 2 * static_cast<Eigen::Index>(tones) * antennas;
}

ConstraintLayout::ConstraintLayout(const SystemConfig& config)
    : offset(config.tones + 1, 0), data(config.tones, 0) {
    for (int n : config.data_tones) data[n] = 1;
    for (int n = 0; n < config.tones; ++n)
        offset[n + 1] = offset[n] + (data[n] ? config.users : config.antennas);
}

SymbolFrame generate_symbols(const SystemConfig& config, Rng& rng) {
    const auto points = constellation_points(config.alphabet);
    const double scale = constellation_scale(config.alphabet, config.users);
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);

    SymbolFrame frame;
    frame.users = config.users;
    frame.tones.assign(config.tones, Eigen::VectorXcd::Zero(config.users));
    for (int n : config.data_tones)
        for (int k = 0; k < config.users; ++k) frame.tones[n][k] = scale * points[pick(rng)];
    return frame;
}

SpectrumFrame reorder(const PrecodedFrame& w) {
    if (w.data.size() != static_cast<Eigen::Index>(w.tones) * w.antennas)
        throw std::invalid_argument("precoded frame length must equal N*M");
    SpectrumFrame a{w.antennas, w.tones, Eigen::VectorXcd(w.data.size())};
    for (int n = 0; n < w.tones; ++n)
        for (int m = 0; m < w.antennas; ++m)
            a.data[static_cast<Eigen::Index>(m) * w.tones + n] =
                w.data[static_cast<Eigen::Index>(n) * w.antennas + m];
    return a;
}

PrecodedFrame inverse_reorder(const SpectrumFrame& a) {
    if (a.data.size() != static_cast<Eigen::Index>(a.antennas) * a.samples)
        throw std::invalid_argument("antenna frame length must equal N*M");
    PrecodedFrame w{a.samples, a.antennas, Eigen::VectorXcd(a.data.size())};
    for (int m = 0; m < a.antennas; ++m)
        for (int n = 0; n < a.samples; ++n)
            w.data[static_cast<Eigen::Index>(n) * a.antennas + m] =
                a.data[static_cast<Eigen::Index>(m) * a.samples + n];
    return w;
}

Eigen::VectorXcd unitary_dft(const Eigen::VectorXcd& x) {
    if (x.size() == 0) throw std::invalid_argument("empty vector");
    return detail::fft(x) / std::sqrt(static_cast<double>(x.size()));
}

Eigen::VectorXcd unitary_idft(const Eigen::VectorXcd& x) {
    if (x.size() == 0) throw std::invalid_argument("empty vector");
    return detail::ifft(x) / std::sqrt(static_cast<double>(x.size()));
}

TimeFrame idft_frame(const SpectrumFrame& a) {
    if (a.samples <= 0 || a.data.size() != static_cast<Eigen::Index>(a.antennas) * a.samples)
        throw std::invalid_argument("each antenna vector must have length N");
    TimeFrame out{a.antennas, a.samples, Eigen::VectorXcd(a.data.size())};
    for (int m = 0; m < a.antennas; ++m) out.antenna(m) = unitary_idft(a.antenna(m));
    return out;
}

SpectrumFrame dft_frame(const TimeFrame& a_hat) {
    if (a_hat.samples <= 0 ||
        a_hat.data.size() != static_cast<Eigen::Index>(a_hat.antennas) * a_hat.samples)
        throw std::invalid_argument("each antenna vector must have length N");
    SpectrumFrame out{a_hat.antennas, a_hat.samples, Eigen::VectorXcd(a_hat.data.size())};
    for (int m = 0; m < a_hat.antennas; ++m) out.antenna(m) = unitary_dft(a_hat.antenna(m));
    return out;
}

Eigen::VectorXd stack_real(const Eigen::VectorXcd& z) {
    Eigen::VectorXd y(2 * z.size());
    y.head(z.size()) = z.real();
    y.tail(z.size()) = z.imag();
    return y;
}

Eigen::VectorXcd unstack_real(const Eigen::VectorXd& x) {
    if (x.size() % 2 != 0) throw std::invalid_argument("real stack must have even length");
    const Eigen::Index h = x.size() / 2;
    Eigen::VectorXcd z(h);
    z.real() = x.head(h);
    z.imag() = x.tail(h);
    return z;
}

Eigen::VectorXd stack_symbols(const SystemConfig& config, const SymbolFrame& symbols) {
    if (static_cast<int>(symbols.tones.size()) != config.tones)
        throw std::invalid_argument("symbol frame tone count mismatch");
    const ConstraintLayout layout(config);
    Eigen::VectorXcd s_bar = Eigen::VectorXcd::Zero(layout.complex_rows());
    for (int n : config.data_tones) {
        if (symbols.tones[n].size() != config.users)
            throw std::invalid_argument("symbol vector length must equal K");
        s_bar.segment(layout.offset[n], config.users) = symbols.tones[n];
    }
    return stack_real(s_bar);
}

Eigen::VectorXd stack_time_frame(const TimeFrame& a_hat) { return stack_real(a_hat.data); }

TimeFrame unstack_time_frame(const Eigen::VectorXd& x, int antennas, int tones) {
    if (x.size() != 2 * static_cast<Eigen::Index>(antennas) * tones)
        throw std::invalid_argument("real stack length must equal 2NM");
    return TimeFrame{antennas, tones, unstack_real(x)};
}

PrecodedFrame precoded_from_real(const Eigen::VectorXd& x, int antennas, int tones) {
    return inverse_reorder(dft_frame(unstack_time_frame(x, antennas, tones)));
}

Eigen::VectorXd real_from_precoded(const PrecodedFrame& w) {
    return stack_time_frame(idft_frame(reorder(w)));
}

}  // namespace papr
