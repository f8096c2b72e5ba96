#include "mudet/channel.hpp"

#include <cmath>
#include <numbers>

namespace mudet {

NoiseSpec::NoiseSpec(double variance) : sigma_v2(variance)
{
    if (!(variance >= 0.0) || !std::isfinite(variance)) {
        throw UsageError("NoiseSpec: noise variance must be finite and >= 0");
    }
}

ChannelRealization gen_block_fading(std::size_t n_users, std::size_t n_rx, std::size_t n_frames,
                                    std::uint64_t seed)
{
    if (n_users == 0 || n_rx == 0) throw ConfigError("channel: K and N_R must be positive");
    if (n_users > n_rx) throw ConfigError("channel: K must not exceed N_R");

    Rng rng(seed);
    ChannelRealization out;
    out.model = FadingModel::BlockFading;
    out.n_rx = n_rx;
    out.n_users = n_users;
    out.gains.reserve(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) {
        CMatrix h(n_rx, n_users);
        for (Eigen::Index c = 0; c < h.cols(); ++c)
            for (Eigen::Index r = 0; r < h.rows(); ++r) h(r, c) = complex_gaussian(rng);
        out.gains.push_back(std::move(h));
    }
    return out;
}

JakesLink::JakesLink(double fdt, Rng& rng) : omega_(2.0 * std::numbers::pi * fdt)
{
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    const double m = kOscillators;
    const double amp = std::sqrt(2.0 / m);
    for (int n = 1; n <= kOscillators; ++n) {
        const double alpha = std::numbers::pi * (n - 0.5) / (2.0 * m);
        const double beta = std::numbers::pi * n / m;
        doppler_[n - 1] = std::cos(alpha);
        weight_[n - 1] = amp * Complex(std::cos(beta), std::sin(beta));
        phase_[n - 1] = phase(rng);
    }
}

Complex JakesLink::at(double symbol_index) const
{
    Complex h{0.0, 0.0};
    for (int n = 0; n < kOscillators; ++n) {
        h += weight_[n] * std::cos(omega_ * symbol_index * doppler_[n] + phase_[n]);
    }
    return h;
}

ChannelRealization gen_jakes(std::size_t n_users, std::size_t n_rx, std::size_t n_symbols,
                             double fdt, std::uint64_t seed)
{
    if (n_users == 0 || n_rx == 0) throw ConfigError("channel: K and N_R must be positive");
    if (n_users > n_rx) throw ConfigError("channel: K must not exceed N_R");
    if (!(fdt > 0.0 && fdt < 0.5)) throw ConfigError("channel: f_dT must lie in (0, 0.5)");

    Rng rng(seed);
    std::vector<JakesLink> links;
    links.reserve(n_users * n_rx);
    for (std::size_t l = 0; l < n_users * n_rx; ++l) links.emplace_back(fdt, rng);

    ChannelRealization out;
    out.model = FadingModel::Jakes;
    out.fdt = fdt;
    out.n_rx = n_rx;
    out.n_users = n_users;
    out.gains.reserve(n_symbols);
    for (std::size_t i = 0; i < n_symbols; ++i) {
        CMatrix h(n_rx, n_users);
        for (std::size_t k = 0; k < n_users; ++k)
            for (std::size_t r = 0; r < n_rx; ++r)
                h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
                    links[k * n_rx + r].at(static_cast<double>(i));
        out.gains.push_back(std::move(h));
    }
    return out;
}

CVector transmit(const CMatrix& h, const CVector& s, const NoiseSpec& noise, Rng& rng)
{
    if (h.cols() != s.size()) {
        throw UsageError("transmit: H has " + std::to_string(h.cols()) + " columns but s has " +
                         std::to_string(s.size()) + " entries");
    }
    CVector r = h * s;
    if (noise.sigma_v2 > 0.0) {
        for (Eigen::Index n = 0; n < r.size(); ++n) r(n) += complex_gaussian(rng, noise.sigma_v2);
    }
    return r;
}

double sigma_v2_from_ebn0(double ebn0_db, std::size_t n_rx, double code_rate,
                          std::size_t constellation_size)
{
    if (!(code_rate > 0.0 && code_rate <= 1.0)) throw UsageError("sigma_v2_from_ebn0: R must lie in (0, 1]");
    if (constellation_size < 2) throw UsageError("sigma_v2_from_ebn0: C must be >= 2");
    const double bits = std::log2(static_cast<double>(constellation_size));
    return static_cast<double>(n_rx) / (code_rate * bits * std::pow(10.0, ebn0_db / 10.0));
}

}  // namespace mudet
