#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mudet/rng.hpp"
#include "mudet/types.hpp"

namespace mudet {

enum class FadingModel { BlockFading, Jakes };

/// Time-indexed N_R x K flat-fading gains.
///
/// For BlockFading, gains[f] is the matrix of frame f. For Jakes, gains[i] is
/// the matrix at symbol index i.
struct ChannelRealization {
    std::vector<CMatrix> gains;
    FadingModel model = FadingModel::BlockFading;
    double fdt = 0.0;
    std::size_t n_rx = 0;
    std::size_t n_users = 0;

    const CMatrix& at(std::size_t index) const { return gains.at(index); }
    std::size_t length() const noexcept { return gains.size(); }
};

struct NoiseSpec {
    double sigma_v2 = 1.0;

    /// Zero variance is accepted and disables noise.
    explicit NoiseSpec(double variance);
};

/// One i.i.d. CN(0,1) matrix per frame.
ChannelRealization gen_block_fading(std::size_t n_users, std::size_t n_rx, std::size_t n_frames,
                                    std::uint64_t seed);

/// Sum-of-sinusoids Rayleigh process for one link. Dent's oscillator layout
/// (arrival angles pi(n - 1/2)/(2M), phase rotations pi n / M) with M
/// oscillators and independent uniform phases, giving unit power and
/// autocorrelation close to J0(2 pi f_dT lag).
class JakesLink {
public:
    static constexpr int kOscillators = 16;

    JakesLink(double fdt, Rng& rng);
    Complex at(double symbol_index) const;

private:
    double omega_ = 0.0;  // 2 pi f_dT, radians per symbol
    std::array<double, kOscillators> doppler_{};
    std::array<Complex, kOscillators> weight_{};
    std::array<double, kOscillators> phase_{};
};

/// Jakes fading over n_symbols consecutive symbols, independent across the
/// K*N_R links. Requires 0 < f_dT < 0.5.
ChannelRealization gen_jakes(std::size_t n_users, std::size_t n_rx, std::size_t n_symbols,
                             double fdt, std::uint64_t seed);

/// r = H s + v with v ~ CN(0, sigma_v2 I).
CVector transmit(const CMatrix& h, const CVector& s, const NoiseSpec& noise, Rng& rng);

/// Noise variance giving the requested SNR per information bit, with unit
/// per-user symbol energy: sigma_v2 = N_R / (R log2(C) 10^(EbN0/10)).
double sigma_v2_from_ebn0(double ebn0_db, std::size_t n_rx, double code_rate,
                          std::size_t constellation_size);

}  // namespace mudet
