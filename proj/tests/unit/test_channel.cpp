#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mudet/channel.hpp"
#include "oracles.hpp"

using namespace mudet;

TEST_CASE("block fading gains are unit-power and frame-indexed")
{
    const auto ch = gen_block_fading(4, 6, 2000, 3);
    CHECK(ch.length() == 2000);
    CHECK(ch.at(0).rows() == 6);
    CHECK(ch.at(0).cols() == 4);
    double p = 0.0;
    for (std::size_t f = 0; f < ch.length(); ++f) p += ch.at(f).squaredNorm();
    CHECK(p / (2000.0 * 24.0) == doctest::Approx(1.0).epsilon(0.02));
    CHECK_THROWS_AS(gen_block_fading(5, 4, 1, 1), ConfigError);
}

TEST_CASE("same seed reproduces the same channel")
{
    CHECK(gen_block_fading(2, 2, 3, 9).at(2).isApprox(gen_block_fading(2, 2, 3, 9).at(2)));
    CHECK(gen_jakes(2, 2, 50, 1e-2, 9).at(49).isApprox(gen_jakes(2, 2, 50, 1e-2, 9).at(49)));
}

TEST_CASE("Jakes process has unit power and J0 autocorrelation")
{
    const double fdt = 0.01;
    const std::size_t n = 400;
    const auto ch = gen_jakes(8, 8, n, fdt, 21);  // 64 links
    double power = 0.0;
    for (std::size_t i = 0; i < n; ++i) power += ch.at(i).squaredNorm();
    CHECK(power / (64.0 * n) == doctest::Approx(1.0).epsilon(0.15));

    // Ensemble over many independent seeds and links.
    for (int lag : {0, 10, 25, 40}) {
        Complex acc{0.0, 0.0};
        std::size_t count = 0;
        for (std::uint64_t seed = 0; seed < 60; ++seed) {
            const auto c = gen_jakes(4, 4, static_cast<std::size_t>(lag) + 1, fdt, 1000 + seed);
            for (Eigen::Index a = 0; a < 4; ++a)
                for (Eigen::Index b = 0; b < 4; ++b) {
                    acc += c.at(0)(a, b) * std::conj(c.at(static_cast<std::size_t>(lag))(a, b));
                    ++count;
                }
        }
        const double expected = oracle::bessel_j0(2.0 * std::numbers::pi * fdt * lag);
        CHECK(std::abs(acc.real() / static_cast<double>(count) - expected) < 0.1);
    }
}

TEST_CASE("Jakes rejects Doppler outside (0, 0.5)")
{
    CHECK_THROWS_AS(gen_jakes(2, 2, 10, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(gen_jakes(2, 2, 10, 0.5, 1), ConfigError);
}

TEST_CASE("transmit is H s plus noise of the requested variance")
{
    Rng rng(4);
    CMatrix h = CMatrix::Random(3, 2);
    CVector s = CVector::Random(2);
    CHECK(transmit(h, s, NoiseSpec(0.0), rng).isApprox(h * s));
    double p = 0.0;
    for (int n = 0; n < 20000; ++n) p += (transmit(h, s, NoiseSpec(0.5), rng) - h * s).squaredNorm();
    CHECK(p / (20000.0 * 3.0) == doctest::Approx(0.5).epsilon(0.03));
    CHECK_THROWS_AS(transmit(h, CVector::Zero(3), NoiseSpec(0.1), rng), UsageError);
    CHECK_THROWS_AS(NoiseSpec(-1.0), UsageError);
}

TEST_CASE("noise variance from Eb/N0")
{
    // N_R / (R log2 C 10^(EbN0/10)); 4 rx, QPSK, 10 dB -> 4 / (2 * 10)
    CHECK(sigma_v2_from_ebn0(10.0, 4, 1.0, 4) == doctest::Approx(0.2));
    CHECK(sigma_v2_from_ebn0(10.0, 4, 0.5, 4) == doctest::Approx(0.4));
    CHECK(sigma_v2_from_ebn0(0.0, 8, 1.0, 16) == doctest::Approx(2.0));
}
