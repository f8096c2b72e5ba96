#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mudet/types.hpp"

namespace mudet {

/// LLRs follow L = log P(b = 1) / P(b = 0) and are clamped to this magnitude.
inline constexpr double kLlrClamp = 50.0;

double clamp_llr(double l) noexcept;

/// Rate-1/2 memory-2 feedforward code with octal generators (7, 5).
///
/// State is (m[t-1], m[t-2]) packed as 2 * m[t-1] + m[t-2]. Step t emits the
/// pair (c1, c2) = (m ^ m[t-1] ^ m[t-2], m ^ m[t-2]) at coded positions 2t
/// and 2t + 1. Blocks are zero-terminated with two tail steps.
class ConvCode {
public:
    static constexpr int kStates = 4;
    static constexpr int kMemory = 2;

    struct Branch {
        int next_state;
        std::array<std::uint8_t, 2> out;
    };

    ConvCode();

    const Branch& branch(int state, int input) const { return table_[static_cast<std::size_t>(2 * state + input)]; }
    static std::size_t coded_length(std::size_t message_bits) { return 2 * (message_bits + kMemory); }

private:
    std::array<Branch, 2 * kStates> table_;
};

std::vector<std::uint8_t> conv_encode(std::span<const std::uint8_t> message);

/// Bit decisions b = (L > 0).
std::vector<std::uint8_t> hard_decisions(std::span<const double> llr);

enum class BcjrMetric { MaxLog, LogMap };

struct BcjrOutput {
    std::vector<double> coded_app;        // a-posteriori LLR per coded bit
    std::vector<double> coded_extrinsic;  // coded_app - channel input
    std::vector<double> message_app;      // per message bit, tail excluded
    std::vector<double> message_extrinsic;  // message_app - message a-priori
};

/// Forward-backward decoding over the terminated (7,5) trellis.
///
/// `channel` carries one LLR per coded bit. `message_prior` is either empty
/// (no a-priori knowledge) or one LLR per message bit.
BcjrOutput bcjr_decode(std::span<const double> channel, std::span<const double> message_prior = {},
                       BcjrMetric metric = BcjrMetric::MaxLog);

/// Uniform random permutation drawn by Fisher-Yates from a seeded stream.
/// interleave(x)[n] = x[perm[n]].
class Interleaver {
public:
    Interleaver(std::size_t length, std::uint64_t seed);
    static Interleaver identity(std::size_t length);

    std::size_t length() const noexcept { return perm_.size(); }
    std::span<const std::size_t> permutation() const noexcept { return perm_; }

    template <typename T>
    std::vector<T> interleave(std::span<const T> block) const
    {
        check(block.size());
        std::vector<T> out(block.size());
        for (std::size_t n = 0; n < perm_.size(); ++n) out[n] = block[perm_[n]];
        return out;
    }

    template <typename T>
    std::vector<T> deinterleave(std::span<const T> block) const
    {
        check(block.size());
        std::vector<T> out(block.size());
        for (std::size_t n = 0; n < perm_.size(); ++n) out[perm_[n]] = block[n];
        return out;
    }

private:
    Interleaver() = default;
    void check(std::size_t n) const;

    std::vector<std::size_t> perm_;
};

}  // namespace mudet
