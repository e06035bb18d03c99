#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace papr {

using cplx = std::complex<double>;
using Rng = std::mt19937_64;

enum class Alphabet { qam16 };

Alphabet parse_alphabet(const std::string& name);
std::string to_string(Alphabet alphabet);

/// Unscaled constellation points of the alphabet, e.g. {+-1,+-3}+j{+-1,+-3} for 16-QAM.
std::vector<cplx> constellation_points(Alphabet alphabet);

/// Dimensions of the downlink and the tone partition.
///
/// Data tones form a contiguous centered block; the guard band is split between
/// both ends of the index range with any odd remainder at the low end.
struct SystemConfig {
    int antennas = 0;  // M
    int users = 0;     // K
    int tones = 0;     // N
    int taps = 1;      // D
    std::vector<int> data_tones;
    std::vector<int> guard_tones;
    Alphabet alphabet = Alphabet::qam16;
    int oversample = 1;
    std::uint64_t seed = 0;

    static SystemConfig make(int antennas, int users, int tones, int data_tone_count, int taps,
                             Alphabet alphabet = Alphabet::qam16, int oversample = 1,
                             std::uint64_t seed = 0);

    /// Throws std::invalid_argument if any structural invariant is broken.
    void validate() const;

    bool is_data_tone(int tone) const;

    /// Number of real constraint rows, 2(|T|K + |Tc|M).
    Eigen::Index rows() const;
    /// Number of real unknowns, 2NM.
    Eigen::Index cols() const;
};

/// Offsets of each tone's block inside the complex constraint vector (tone-major).
struct ConstraintLayout {
    std::vector<Eigen::Index> offset;  // size N + 1
    std::vector<char> data;            // 1 for data tones

    explicit ConstraintLayout(const SystemConfig& config);

    Eigen::Index block_size(int tone) const { return offset[tone + 1] - offset[tone]; }
    Eigen::Index complex_rows() const { return offset.back(); }
};

/// Per-tone user symbols s_n; guard tones hold exact zeros.
struct SymbolFrame {
    int users = 0;
    std::vector<Eigen::VectorXcd> tones;
};

/// Precoded vectors w_n stacked tone-major (tone outer, antenna inner).
struct PrecodedFrame {
    int tones = 0;
    int antennas = 0;
    Eigen::VectorXcd data;

    auto tone(int n) { return data.segment(static_cast<Eigen::Index>(n) * antennas, antennas); }
    auto tone(int n) const { return data.segment(static_cast<Eigen::Index>(n) * antennas, antennas); }
};

struct FrequencyDomain {};
struct TimeDomain {};

/// Antenna-major signal block: antenna m occupies [m*samples, (m+1)*samples).
template <class Domain>
struct AntennaFrame {
    int antennas = 0;
    int samples = 0;
    Eigen::VectorXcd data;

    auto antenna(int m) { return data.segment(static_cast<Eigen::Index>(m) * samples, samples); }
    auto antenna(int m) const { return data.segment(static_cast<Eigen::Index>(m) * samples, samples); }
};

using SpectrumFrame = AntennaFrame<FrequencyDomain>;  // a_m
using TimeFrame = AntennaFrame<TimeDomain>;           // \hat a_m

SymbolFrame generate_symbols(const SystemConfig& config, Rng& rng);

/// Scale applied to the unscaled constellation so each tone carries unit expected energy.
double constellation_scale(Alphabet alphabet, int users);

SpectrumFrame reorder(const PrecodedFrame& w);
PrecodedFrame inverse_reorder(const SpectrumFrame& a);

/// Unitary DFT / inverse DFT of a single vector (F_N x and F_N^H x).
Eigen::VectorXcd unitary_dft(const Eigen::VectorXcd& x);
Eigen::VectorXcd unitary_idft(const Eigen::VectorXcd& x);

TimeFrame idft_frame(const SpectrumFrame& a);
SpectrumFrame dft_frame(const TimeFrame& a_hat);

/// [Re z; Im z]
Eigen::VectorXd stack_real(const Eigen::VectorXcd& z);
/// Inverse of stack_real; the input length must be even.
Eigen::VectorXcd unstack_real(const Eigen::VectorXd& x);

/// Real stacks of the system: y from the symbols and x <-> time frame.
Eigen::VectorXd stack_symbols(const SystemConfig& config, const SymbolFrame& symbols);
Eigen::VectorXd stack_time_frame(const TimeFrame& a_hat);
TimeFrame unstack_time_frame(const Eigen::VectorXd& x, int antennas, int tones);

/// x -> w through unstack, per-antenna DFT and the inverse reordering.
PrecodedFrame precoded_from_real(const Eigen::VectorXd& x, int antennas, int tones);
/// w -> x through reordering, per-antenna IDFT and real stacking.
Eigen::VectorXd real_from_precoded(const PrecodedFrame& w);

}  // namespace papr
