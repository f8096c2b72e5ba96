#include "mudet/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mudet {

namespace {

// Gray-coded PAM level for a (sign, magnitude) bit pair, before scaling.
double pam4_level(int sign_bit, int inner_bit)
{
    const double magnitude = inner_bit ? 1.0 : 3.0;
    return sign_bit ? -magnitude : magnitude;
}

}  // namespace

Constellation::Constellation(Modulation modulation, int bits, std::vector<Complex> points)
    : modulation_(modulation), bits_per_symbol_(bits), points_(std::move(points))
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < points_.size(); ++a) {
        for (std::size_t b = a + 1; b < points_.size(); ++b) {
            best = std::min(best, std::abs(points_[a] - points_[b]));
        }
        max_level_ = std::max({max_level_, std::abs(points_[a].real()), std::abs(points_[a].imag())});
    }
    min_spacing_ = best;
}

Constellation Constellation::qpsk()
{
    const double a = 1.0 / std::sqrt(2.0);
    std::vector<Complex> pts(4);
    for (std::size_t idx = 0; idx < 4; ++idx) {
        const int b0 = static_cast<int>((idx >> 1) & 1U);
        const int b1 = static_cast<int>(idx & 1U);
        pts[idx] = {b0 ? -a : a, b1 ? -a : a};
    }
    return Constellation(Modulation::Qpsk, 2, std::move(pts));
}

Constellation Constellation::qam16()
{
    const double scale = 1.0 / std::sqrt(10.0);
    std::vector<Complex> pts(16);
    for (std::size_t idx = 0; idx < 16; ++idx) {
        const int b0 = static_cast<int>((idx >> 3) & 1U);
        const int b1 = static_cast<int>((idx >> 2) & 1U);
        const int b2 = static_cast<int>((idx >> 1) & 1U);
        const int b3 = static_cast<int>(idx & 1U);
        pts[idx] = {scale * pam4_level(b0, b1), scale * pam4_level(b2, b3)};
    }
    return Constellation(Modulation::Qam16, 4, std::move(pts));
}

Constellation Constellation::from_name(std::string_view name)
{
    if (name == "qpsk") return qpsk();
    if (name == "16qam") return qam16();
    throw ConfigError("unknown modulation '" + std::string(name) + "' (expected qpsk or 16qam)");
}

std::string Constellation::name() const
{
    return modulation_ == Modulation::Qpsk ? "qpsk" : "16qam";
}

bool Constellation::is_outer_tier(std::size_t index) const
{
    const Complex& p = points_.at(index);
    const double m = std::max(std::abs(p.real()), std::abs(p.imag()));
    return std::abs(m - max_level_) < 1e-12;
}

std::size_t Constellation::map_bits_index(std::span<const std::uint8_t> bits) const
{
    if (bits.size() != static_cast<std::size_t>(bits_per_symbol_)) {
        throw UsageError("map_bits: expected " + std::to_string(bits_per_symbol_) + " bits, got " +
                         std::to_string(bits.size()));
    }
    std::size_t index = 0;
    for (auto b : bits) {
        if (b > 1) throw UsageError("map_bits: bit values must be 0 or 1");
        index = (index << 1) | b;
    }
    return index;
}

Complex Constellation::map_bits(std::span<const std::uint8_t> bits) const
{
    return points_[map_bits_index(bits)];
}

std::vector<std::uint8_t> Constellation::demap(std::size_t index) const
{
    if (index >= points_.size()) throw UsageError("demap: point index out of range");
    std::vector<std::uint8_t> bits(bits_per_symbol_);
    for (int j = 0; j < bits_per_symbol_; ++j) bits[j] = static_cast<std::uint8_t>(bit(index, j));
    return bits;
}

std::size_t Constellation::slice_index(Complex u) const noexcept
{
    std::size_t best = 0;
    double best_d = std::norm(u - points_[0]);
    for (std::size_t c = 1; c < points_.size(); ++c) {
        const double d = std::norm(u - points_[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

double Constellation::nearest_distance(Complex u) const noexcept
{
    return std::abs(u - points_[slice_index(u)]);
}

ReliabilityVerdict check_reliability(Complex u, const Constellation& constellation, double d_th)
{
    if (std::isnan(d_th) || d_th < 0.0) throw UsageError("check_reliability: d_th must be >= 0");

    const double eps = constellation.min_spacing();
    const double half = eps / 2.0;
    const double re = std::abs(u.real());
    const double im = std::abs(u.imag());
    const std::size_t nearest = constellation.slice_index(u);

    ReliabilityVerdict v;
    v.nearest_distance = std::abs(u - constellation.point(nearest));
    const bool zero_tolerance = d_th == 0.0;
    const double band = half - d_th;  // -inf when d_th is +inf

    if (constellation.modulation() == Modulation::Qpsk) {
        if (re <= half && im <= half) {
            v.case_tag = RegionCase::InsideSquare;
            v.reliable = !(v.nearest_distance > d_th);
        } else {
            v.case_tag = RegionCase::OutsideSquare;
            v.reliable = !(re < band || im < band);
            if (zero_tolerance && v.nearest_distance > 0.0) v.reliable = false;
        }
        return v;
    }

    if (constellation.is_outer_tier(nearest)) {
        v.case_tag = RegionCase::OuterTier;
        const double re_line = std::min(std::abs(u.real() + eps), std::abs(u.real() - eps));
        const double im_line = std::min(std::abs(u.imag() + eps), std::abs(u.imag() - eps));
        v.reliable = !(re < band || im < band || re_line < band || im_line < band);
        if (zero_tolerance && v.nearest_distance > 0.0) v.reliable = false;
    } else {
        v.case_tag = RegionCase::InnerTier;
        v.reliable = !(v.nearest_distance >= d_th);
    }
    return v;
}

std::vector<std::size_t> build_candidate_list(Complex u, const ReliabilityVerdict& verdict,
                                              const Constellation& constellation,
                                              std::size_t tau_max)
{
    if (tau_max < 1) throw UsageError("build_candidate_list: tau_max must be >= 1");
    if (verdict.reliable) return {constellation.slice_index(u)};

    const std::size_t n = constellation.size();
    std::vector<double> dist(n);
    for (std::size_t c = 0; c < n; ++c) dist[c] = std::norm(u - constellation.point(c));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t keep = std::min(tau_max, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                      });
    order.resize(keep);
    return order;
}

}  // namespace mudet
