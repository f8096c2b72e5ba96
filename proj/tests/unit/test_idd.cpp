#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "mudet/idd.hpp"
#include "oracles.hpp"

using namespace mudet;

namespace {

std::vector<std::vector<std::size_t>> full_lists(std::size_t k, std::size_t n)
{
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return std::vector<std::vector<std::size_t>>(k, all);
}

std::vector<double> random_llrs(std::size_t n, double scale, Rng& rng)
{
    std::normal_distribution<double> g(0.0, scale);
    std::vector<double> l(n);
    for (auto& x : l) x = g(rng);
    return l;
}

}  // namespace

TEST_CASE("bit probabilities from LLRs")
{
    CHECK(bit_prob_from_llr(1.0, +1) == doctest::Approx(0.7310585786300049));
    CHECK(bit_prob_from_llr(1.0, -1) == doctest::Approx(0.2689414213699951));
    CHECK(bit_prob_from_llr(0.0, +1) == doctest::Approx(0.5));
    CHECK_THROWS_AS(bit_prob_from_llr(0.0, 0), UsageError);
    CHECK(log_bit_prob(40.0, 1) == doctest::Approx(0.0));
    CHECK(log_bit_prob(40.0, 0) == doctest::Approx(-40.0));
    CHECK(std::isfinite(log_bit_prob(1e6, 0)));
    CHECK(std::exp(log_bit_prob(-2.0, 1)) == doctest::Approx(bit_prob_from_llr(-2.0, +1)));
}

TEST_CASE("symbol probabilities are products of bit probabilities")
{
    const auto c = Constellation::qam16();
    const std::vector<double> zero(4, 0.0);
    for (std::size_t q = 0; q < 16; ++q) CHECK(symbol_prob(zero, c, q) == doctest::Approx(1.0 / 16.0));
    const std::vector<double> l{0.3, -1.2, 2.0, 0.7};
    double total = 0.0;
    for (std::size_t q = 0; q < 16; ++q) {
        double expect = 1.0;
        for (int j = 0; j < 4; ++j) expect *= bit_prob_from_llr(l[static_cast<std::size_t>(j)], c.bit(q, j) ? 1 : -1);
        CHECK(symbol_prob(l, c, q) == doctest::Approx(expect));
        total += symbol_prob(l, c, q);
    }
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("posterior table matches the Gaussian likelihood times the prior")
{
    Rng rng(9);
    const auto c = Constellation::qam16();
    CVector u(2);
    u << Complex(0.2, -0.5), Complex(-0.9, 0.1);
    const std::vector<double> var{0.1, 0.4};
    const auto l = random_llrs(8, 1.0, rng);
    const auto t = SymbolProbTable::posterior(u, var, l, c);
    for (std::size_t k = 0; k < 2; ++k) {
        std::vector<double> w(16);
        for (std::size_t q = 0; q < 16; ++q)
            w[q] = std::exp(-std::norm(u(static_cast<Eigen::Index>(k)) - c.point(q)) / var[k]) *
                   symbol_prob(std::span<const double>(l).subspan(4 * k, 4), c, q);
        const double z = std::accumulate(w.begin(), w.end(), 0.0);
        for (std::size_t q = 0; q < 16; ++q) CHECK(t.at(k, q) == doctest::Approx(w[q] / z));
    }
}

TEST_CASE("IDD lists follow decreasing probability and reliability")
{
    SymbolProbTable t(3, 4);
    const std::vector<std::vector<double>> p{{0.1, 0.4, 0.4, 0.1}, {0.7, 0.1, 0.1, 0.1}, {0.05, 0.15, 0.3, 0.5}};
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t q = 0; q < 4; ++q) t.at(k, q) = p[k][q];
    std::vector<ReliabilityVerdict> v(3);
    v[1].reliable = true;
    v[0].reliable = false;
    v[2].reliable = false;
    const auto lists = build_idd_list(t, v, 3);
    CHECK(lists[0] == std::vector<std::size_t>{1, 2, 0});
    CHECK(lists[1] == std::vector<std::size_t>{0});
    CHECK(lists[2] == std::vector<std::size_t>{3, 2, 1});
    const auto all = build_idd_list(t, {}, 9);
    for (const auto& l : all) CHECK(l.size() == 4);
}

TEST_CASE("list max-log over full lists equals exhaustive max-log")
{
    Rng rng(13);
    for (const auto& c : {Constellation::qpsk(), Constellation::qam16()}) {
        const std::size_t jb = static_cast<std::size_t>(c.bits_per_symbol());
        const int trials = c.size() == 4 ? 1000 : 200;
        for (int trial = 0; trial < trials; ++trial) {
            const CMatrix h = fixture::random_channel(3, 2, rng);
            const CVector s = fixture::symbols(fixture::random_indices(2, c.size(), rng), c);
            CVector r = h * s;
            for (Eigen::Index n = 0; n < r.size(); ++n) r(n) += complex_gaussian(rng, 0.3);
            const auto prior = random_llrs(2 * jb, 1.5, rng);
            OpCounter ops;
            const auto got = soft_detect_llr(r, h, full_lists(2, c.size()), prior, 0.3, c, &ops);
            const auto want = oracle::exhaustive_maxlog(r, h, fixture::points(c), static_cast<int>(jb),
                                                        [&](std::size_t q, int j) { return c.bit(q, j); }, prior, 0.3);
            CHECK(got.gamma == c.size() * c.size());
            CHECK(got.backfilled == 0);
            for (std::size_t n = 0; n < want.size(); ++n) CHECK(got.extrinsic[n] == doctest::Approx(clamp_llr(want[n])).epsilon(1e-9));
        }
    }
}

TEST_CASE("extrinsic output ignores the bit's own prior")
{
    Rng rng(15);
    const auto c = Constellation::qpsk();
    const CMatrix h = fixture::random_channel(2, 2, rng);
    const CVector r = h * fixture::symbols({0, 3}, c);
    auto prior = random_llrs(4, 1.0, rng);
    const auto a = soft_detect_llr(r, h, full_lists(2, 4), prior, 0.5, c);
    prior[2] += 5.0;
    const auto b = soft_detect_llr(r, h, full_lists(2, 4), prior, 0.5, c);
    CHECK(b.extrinsic[2] == doctest::Approx(a.extrinsic[2]));
}

TEST_CASE("noiseless observations give extrinsic signs equal to the bits")
{
    Rng rng(17);
    const auto c = Constellation::qam16();
    for (int trial = 0; trial < 100; ++trial) {
        const CMatrix h = fixture::random_channel(4, 2, rng);
        const auto idx = fixture::random_indices(2, 16, rng);
        const auto out = soft_detect_llr(h * fixture::symbols(idx, c), h, full_lists(2, 16), {}, 1e-3, c);
        for (std::size_t k = 0; k < 2; ++k)
            for (int j = 0; j < 4; ++j) CHECK((out.extrinsic[k * 4 + static_cast<std::size_t>(j)] > 0) == (c.bit(idx[k], j) == 1));
    }
}

TEST_CASE("singleton lists are completed by backfill and stay finite")
{
    Rng rng(19);
    const auto c = Constellation::qpsk();
    const CMatrix h = fixture::random_channel(2, 2, rng);
    const CVector r = h * fixture::symbols({1, 2}, c);
    const std::vector<std::vector<std::size_t>> lists{{1}, {2}};
    const auto out = soft_detect_llr(r, h, lists, {}, 0.2, c);
    CHECK(out.gamma == 1);
    CHECK(out.backfilled > 0);
    for (double x : out.extrinsic) CHECK(std::isfinite(x));
    CHECK(out.extrinsic[0] < 0.0);  // point 1 = 01
    CHECK(out.extrinsic[1] > 0.0);
    CHECK(out.extrinsic[2] > 0.0);  // point 2 = 10
    CHECK(out.extrinsic[3] < 0.0);
}

TEST_CASE("per-stream LLRs match a direct enumeration")
{
    Rng rng(23);
    const auto c = Constellation::qam16();
    for (int trial = 0; trial < 200; ++trial) {
        const Complex u = complex_gaussian(rng);
        const auto prior = random_llrs(4, 1.0, rng);
        const auto got = stream_llr(u, 0.25, prior, c);
        for (int j = 0; j < 4; ++j) {
            double best[2] = {-1e300, -1e300};
            for (std::size_t q = 0; q < 16; ++q) {
                double lam = -std::norm(u - c.point(q)) / 0.25;
                for (int j2 = 0; j2 < 4; ++j2)
                    if (j2 != j) lam += log_bit_prob(prior[static_cast<std::size_t>(j2)], c.bit(q, j2));
                best[c.bit(q, j)] = std::max(best[c.bit(q, j)], lam);
            }
            CHECK(got[static_cast<std::size_t>(j)] == doctest::Approx(best[1] - best[0]).epsilon(1e-9));
        }
    }
}
