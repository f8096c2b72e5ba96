#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mudet/coding.hpp"
#include "mudet/constellation.hpp"
#include "mudet/receiver.hpp"
#include "mudet/types.hpp"

namespace mudet {

/// P(b = b_bar) for b_bar in {+1, -1} given L = log P(+1)/P(-1).
double bit_prob_from_llr(double llr, int b_bar);

/// log P(b = bit) for bit in {0, 1}, computed without overflow.
double log_bit_prob(double llr, int bit);

/// Product of bit probabilities of point q's label. `llrs` holds one LLR
/// per label bit, most significant first.
double symbol_prob(std::span<const double> llrs, const Constellation& constellation, std::size_t q);

/// Per user k and point q, a probability P[s_k = c_q]. Rows sum to one.
class SymbolProbTable {
public:
    SymbolProbTable(std::size_t n_users, std::size_t n_points);

    std::size_t n_users() const noexcept { return n_users_; }
    std::size_t n_points() const noexcept { return n_points_; }
    double& at(std::size_t k, std::size_t q) { return prob_[k * n_points_ + q]; }
    double at(std::size_t k, std::size_t q) const { return prob_[k * n_points_ + q]; }

    /// Symbol probabilities from bit LLRs alone; `llrs` is indexed k * J + j.
    static SymbolProbTable from_llrs(std::span<const double> llrs, const Constellation& constellation);

    /// P[s_k = c_q | u_k] for u_k = s_k + n with n ~ CN(0, var[k]) and the
    /// bit priors `llrs` (may be empty for uniform priors).
    static SymbolProbTable posterior(const CVector& u, std::span<const double> var, std::span<const double> llrs,
                                     const Constellation& constellation);

private:
    std::size_t n_users_;
    std::size_t n_points_;
    std::vector<double> prob_;
};

/// Per-user candidate lists ordered by decreasing probability (ties by
/// canonical index). User k keeps one entry if verdicts[k] is reliable and
/// min(tau_max, |X|) otherwise. Empty `verdicts` treats every user as
/// unreliable.
std::vector<std::vector<std::size_t>> build_idd_list(const SymbolProbTable& table,
                                                     std::span<const ReliabilityVerdict> verdicts,
                                                     std::size_t tau_max);

struct SoftDetection {
    std::vector<double> extrinsic;  // indexed k * J + j
    std::size_t gamma = 0;          // vectors in the Cartesian list product
    std::size_t backfilled = 0;     // vectors added for empty hypotheses
};

/// List max-log detection. For every bit (k, j):
///   L = max_{s in S, b_kj(s) = 1} lambda_kj(s) - max_{s in S, b_kj(s) = 0} lambda_kj(s)
///   lambda_kj(s) = sum_{(k',j') != (k,j)} log P(b_k'j'(s)) - ||r - H s||^2 / sigma_v2
/// where S is the product of the lists. When a hypothesis has no member in
/// S, the best vector in S is modified greedily at user k to the best point
/// with the required bit, and that vector joins S.
SoftDetection soft_detect_llr(const CVector& r, const CMatrix& h, const std::vector<std::vector<std::size_t>>& lists,
                              std::span<const double> prior_llrs, double sigma_v2,
                              const Constellation& constellation, OpCounter* ops = nullptr);

/// Max-log LLRs for one scalar stream u = s + n, n ~ CN(0, var), with the
/// self a-priori term excluded. `prior_llrs` holds J values or is empty.
std::vector<double> stream_llr(Complex u, double var, std::span<const double> prior_llrs,
                               const Constellation& constellation);

struct IddConfig {
    DetectorKind detector = DetectorKind::Pdfcc;
    int turbo_iterations = 4;
    double d_th = 0.3;
    std::size_t tau_max = 4;
    BcjrMetric metric = BcjrMetric::MaxLog;
};

/// Everything the adaptive front end produced over the data part of a frame.
struct FrontEndTrace {
    std::vector<CVector> received;
    std::vector<FrontEndSnapshot> snapshots;
    std::vector<CVector> soft;       // u per vector (P-DF stage 2 or S-DF)
    std::vector<CVector> decisions;  // hard decisions of the uncoded pass
};

struct IddIteration {
    std::vector<std::vector<std::uint8_t>> message;  // per user
    std::vector<std::vector<std::uint8_t>> coded;    // per user, decoder order
    double mean_gamma = 0.0;
};

/// Iterative detection and decoding of one frame. User k's coded block of
/// interleavers[k].length() bits was interleaved and mapped J bits per symbol
/// onto the data vectors in `trace`.
///
/// Iteration 1 uses the front-end soft outputs. Later iterations of the P-DF
/// family rebuild u_k from the stored weights with the decoder's hard coded
/// decisions as cancelled interference, and refresh the CC verdicts.
std::vector<IddIteration> run_idd(const FrontEndTrace& trace, std::span<const Interleaver> interleavers,
                                  const Constellation& constellation, double sigma_v2, const IddConfig& config);

}  // namespace mudet
