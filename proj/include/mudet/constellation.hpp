#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mudet/types.hpp"

namespace mudet {

enum class Modulation { Qpsk, Qam16 };

/// A unit-average-energy square QAM alphabet with a fixed Gray labeling.
///
/// Points are stored in canonical order: point index == label value, with
/// label bit 0 as the most significant bit. Bit 0 selects the sign of the
/// in-phase component (0 -> positive). For 16-QAM bit 1 selects the in-phase
/// magnitude (0 -> outer level 3, 1 -> inner level 1), and bits 2/3 do the
/// same for the quadrature component. QPSK uses bit 0 for I and bit 1 for Q.
///
///   QPSK   00 -> (+1+j)/sqrt2   01 -> (+1-j)/sqrt2
///          10 -> (-1+j)/sqrt2   11 -> (-1-j)/sqrt2
///   16QAM  I level: 00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3 (times 1/sqrt10)
class Constellation {
public:
    static Constellation qpsk();
    static Constellation qam16();
    /// Accepts "qpsk" or "16qam".
    static Constellation from_name(std::string_view name);

    Modulation modulation() const noexcept { return modulation_; }
    std::string name() const;
    int bits_per_symbol() const noexcept { return bits_per_symbol_; }
    std::size_t size() const noexcept { return points_.size(); }
    std::span<const Complex> points() const noexcept { return points_; }
    const Complex& point(std::size_t index) const { return points_.at(index); }

    /// Distance between the two nearest points (epsilon).
    double min_spacing() const noexcept { return min_spacing_; }

    /// Value of label bit `bit` (0 = most significant) of point `index`.
    int bit(std::size_t index, int bit) const noexcept
    {
        return static_cast<int>((index >> (bits_per_symbol_ - 1 - bit)) & 1U);
    }

    /// 16-QAM points whose larger coordinate magnitude is the maximum level.
    /// Every QPSK point is outer tier.
    bool is_outer_tier(std::size_t index) const;

    Complex map_bits(std::span<const std::uint8_t> bits) const;
    std::size_t map_bits_index(std::span<const std::uint8_t> bits) const;
    std::vector<std::uint8_t> demap(std::size_t index) const;

    /// Nearest point; exact ties go to the lowest canonical index.
    std::size_t slice_index(Complex u) const noexcept;
    Complex slice(Complex u) const noexcept { return points_[slice_index(u)]; }

    double nearest_distance(Complex u) const noexcept;

private:
    Constellation(Modulation modulation, int bits, std::vector<Complex> points);

    Modulation modulation_;
    int bits_per_symbol_;
    std::vector<Complex> points_;
    double min_spacing_ = 0.0;
    double max_level_ = 0.0;
};

enum class RegionCase { InsideSquare, OutsideSquare, InnerTier, OuterTier };

struct ReliabilityVerdict {
    bool reliable = true;
    RegionCase case_tag = RegionCase::InsideSquare;
    double nearest_distance = 0.0;
};

/// Constellation-constraint test on a soft estimate.
///
/// QPSK: inside the square spanned by the four points the estimate is
/// unreliable when it is farther than d_th from every point; outside the
/// square it is unreliable when either coordinate lies within
/// epsilon/2 - d_th of an axis. 16-QAM estimates nearest to an outer-tier
/// point use the outside rule extended to the lines Re = +-epsilon and
/// Im = +-epsilon; estimates nearest an inner point are unreliable when
/// d_k >= d_th.
///
/// d_th == 0 is the zero-tolerance limit: any estimate that is not exactly a
/// constellation point is unreliable, so every user receives a full list.
/// d_th may be +infinity, in which case every estimate is reliable.
ReliabilityVerdict check_reliability(Complex u, const Constellation& constellation, double d_th);

/// Point indices of the tentative-decision list for one user, nearest first.
/// A reliable verdict yields the single sliced point; otherwise the
/// min(tau_max, |X|) nearest points. Distance ties resolve by canonical index.
std::vector<std::size_t> build_candidate_list(Complex u, const ReliabilityVerdict& verdict,
                                              const Constellation& constellation,
                                              std::size_t tau_max);

}  // namespace mudet
