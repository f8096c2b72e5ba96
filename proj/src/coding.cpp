#include "mudet/coding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mudet/rng.hpp"

namespace mudet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(e^a + e^b) or max(a, b).
double combine(double a, double b, BcjrMetric metric)
{
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    if (metric == BcjrMetric::MaxLog) return m;
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

double clamp_llr(double l) noexcept
{
    if (std::isnan(l)) return 0.0;
    return std::clamp(l, -kLlrClamp, kLlrClamp);
}

ConvCode::ConvCode()
{
    for (int state = 0; state < kStates; ++state) {
        const int m1 = state >> 1;
        const int m2 = state & 1;
        for (int input = 0; input < 2; ++input) {
            Branch& b = table_[static_cast<std::size_t>(2 * state + input)];
            b.next_state = (input << 1) | m1;
            b.out = {static_cast<std::uint8_t>(input ^ m1 ^ m2), static_cast<std::uint8_t>(input ^ m2)};
        }
    }
}

std::vector<std::uint8_t> conv_encode(std::span<const std::uint8_t> message)
{
    static const ConvCode code;
    std::vector<std::uint8_t> out;
    out.reserve(ConvCode::coded_length(message.size()));
    int state = 0;
    const std::size_t steps = message.size() + ConvCode::kMemory;
    for (std::size_t t = 0; t < steps; ++t) {
        const int input = t < message.size() ? (message[t] & 1) : 0;
        const auto& b = code.branch(state, input);
        out.push_back(b.out[0]);
        out.push_back(b.out[1]);
        state = b.next_state;
    }
    return out;
}

std::vector<std::uint8_t> hard_decisions(std::span<const double> llr)
{
    std::vector<std::uint8_t> out(llr.size());
    for (std::size_t n = 0; n < llr.size(); ++n) out[n] = llr[n] > 0.0 ? 1 : 0;
    return out;
}

BcjrOutput bcjr_decode(std::span<const double> channel, std::span<const double> message_prior, BcjrMetric metric)
{
    static const ConvCode code;
    if (channel.size() < 2 * ConvCode::kMemory || channel.size() % 2 != 0) {
        throw UsageError("bcjr_decode: channel block must hold an even number >= 4 of LLRs");
    }
    const std::size_t steps = channel.size() / 2;
    const std::size_t n_msg = steps - ConvCode::kMemory;
    if (!message_prior.empty() && message_prior.size() != n_msg) {
        throw UsageError("bcjr_decode: message prior length " + std::to_string(message_prior.size()) +
                         " != " + std::to_string(n_msg));
    }
    constexpr int S = ConvCode::kStates;

    // Branch metric with the symmetric convention: each bit contributes
    // (2b - 1) L / 2.
    auto gamma = [&](std::size_t t, int state, int input) {
        const auto& b = code.branch(state, input);
        double g = 0.5 * ((2.0 * b.out[0] - 1.0) * channel[2 * t] + (2.0 * b.out[1] - 1.0) * channel[2 * t + 1]);
        if (t < n_msg && !message_prior.empty()) g += 0.5 * (2.0 * input - 1.0) * message_prior[t];
        return g;
    };
    auto input_allowed = [&](std::size_t t, int input) { return t < n_msg || input == 0; };

    std::vector<std::array<double, S>> alpha(steps + 1), beta(steps + 1);
    alpha[0].fill(kNegInf);
    alpha[0][0] = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        alpha[t + 1].fill(kNegInf);
        for (int s = 0; s < S; ++s) {
            if (alpha[t][s] == kNegInf) continue;
            for (int in = 0; in < 2; ++in) {
                if (!input_allowed(t, in)) continue;
                const int ns = code.branch(s, in).next_state;
                alpha[t + 1][ns] = combine(alpha[t + 1][ns], alpha[t][s] + gamma(t, s, in), metric);
            }
        }
        const double norm = *std::max_element(alpha[t + 1].begin(), alpha[t + 1].end());
        for (auto& a : alpha[t + 1]) a -= norm;
    }
    beta[steps].fill(kNegInf);
    beta[steps][0] = 0.0;
    for (std::size_t t = steps; t-- > 0;) {
        beta[t].fill(kNegInf);
        for (int s = 0; s < S; ++s) {
            for (int in = 0; in < 2; ++in) {
                if (!input_allowed(t, in)) continue;
                const int ns = code.branch(s, in).next_state;
                if (beta[t + 1][ns] == kNegInf) continue;
                beta[t][s] = combine(beta[t][s], beta[t + 1][ns] + gamma(t, s, in), metric);
            }
        }
        const double norm = *std::max_element(beta[t].begin(), beta[t].end());
        for (auto& b : beta[t]) b -= norm;
    }

    BcjrOutput out;
    out.coded_app.resize(channel.size());
    out.coded_extrinsic.resize(channel.size());
    out.message_app.resize(n_msg);
    out.message_extrinsic.resize(n_msg);
    for (std::size_t t = 0; t < steps; ++t) {
        std::array<double, 2> in_acc{kNegInf, kNegInf};
        std::array<std::array<double, 2>, 2> out_acc{{{kNegInf, kNegInf}, {kNegInf, kNegInf}}};
        for (int s = 0; s < S; ++s) {
            if (alpha[t][s] == kNegInf) continue;
            for (int in = 0; in < 2; ++in) {
                if (!input_allowed(t, in)) continue;
                const auto& b = code.branch(s, in);
                if (beta[t + 1][b.next_state] == kNegInf) continue;
                const double m = alpha[t][s] + gamma(t, s, in) + beta[t + 1][b.next_state];
                in_acc[static_cast<std::size_t>(in)] = combine(in_acc[static_cast<std::size_t>(in)], m, metric);
                for (int j = 0; j < 2; ++j) out_acc[static_cast<std::size_t>(j)][b.out[static_cast<std::size_t>(j)]] =
                    combine(out_acc[static_cast<std::size_t>(j)][b.out[static_cast<std::size_t>(j)]], m, metric);
            }
        }
        for (std::size_t j = 0; j < 2; ++j) {
            const std::size_t n = 2 * t + j;
            const double app = out_acc[j][1] - out_acc[j][0];
            out.coded_app[n] = clamp_llr(app);
            out.coded_extrinsic[n] = clamp_llr(app - channel[n]);
        }
        if (t < n_msg) {
            const double app = in_acc[1] - in_acc[0];
            const double prior = message_prior.empty() ? 0.0 : message_prior[t];
            out.message_app[t] = clamp_llr(app);
            out.message_extrinsic[t] = clamp_llr(app - prior);
        }
    }
    return out;
}

Interleaver::Interleaver(std::size_t length, std::uint64_t seed) : perm_(length)
{
    for (std::size_t n = 0; n < length; ++n) perm_[n] = n;
    Rng rng(seed);
    for (std::size_t n = length; n > 1; --n) {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::swap(perm_[n - 1], perm_[pick(rng)]);
    }
}

Interleaver Interleaver::identity(std::size_t length)
{
    Interleaver out;
    out.perm_.resize(length);
    for (std::size_t n = 0; n < length; ++n) out.perm_[n] = n;
    return out;
}

void Interleaver::check(std::size_t n) const
{
    if (n != perm_.size()) {
        throw UsageError("interleaver: block length " + std::to_string(n) + " != " + std::to_string(perm_.size()));
    }
}

}  // namespace mudet
