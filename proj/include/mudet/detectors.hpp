#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mudet/constellation.hpp"
#include "mudet/estimation.hpp"
#include "mudet/types.hpp"

namespace mudet {

struct DetectionResult {
    std::vector<std::size_t> decision_indices;  // per user, into the constellation
    CVector decisions;                          // s_hat
    CVector soft;                               // u_k (empty for ML)
    std::size_t gamma = 1;                      // candidate vectors examined
    std::uint64_t op_count = 0;                 // complex multiplications
    std::vector<ReliabilityVerdict> verdicts;   // P-DFCC only
    std::vector<std::vector<std::size_t>> candidate_lists;  // P-DFCC only
};

/// Permutation of user indices; position 0 is detected first.
using DetectionOrder = std::vector<std::size_t>;

/// Largest |X|^K the exhaustive detector accepts.
inline constexpr std::uint64_t kMaxExhaustiveCandidates = std::uint64_t{1} << 20;

/// ||r - H s||^2 for the symbol vector given by point indices. Costs
/// N_R K + N_R complex multiplications. Every detector evaluates candidates
/// through this function, so equal vectors give bit-identical metrics.
double residual_metric(const CVector& r, const CMatrix& h, std::span<const std::size_t> indices,
                       const Constellation& constellation, OpCounter* ops = nullptr);

inline std::uint64_t metric_cost(std::size_t n_rx, std::size_t n_users)
{
    return static_cast<std::uint64_t>(n_rx * n_users + n_rx);
}

/// Exhaustive search over X^K. Ties go to the lexicographically first
/// index vector (user 0 most significant).
DetectionResult ml_detect(const CVector& r, const CMatrix& h, const Constellation& constellation);

/// Users sorted by decreasing column norm of H; equal norms keep index order.
DetectionOrder compute_order(const CMatrix& h);

/// Successive DF. states[p] serves user order[p] and carries p backward taps
/// fed with the decisions of order[0..p-1].
DetectionResult sdf_detect(const CVector& r, std::span<const ReceiverState> states,
                           const DetectionOrder& order, const Constellation& constellation);

/// Parallel DF. Stage 1 slices a first pass for every user; stage 2 feeds the
/// other K-1 first-pass decisions into each user's concatenated filter.
///
/// With `stage1` empty the first pass is the forward part of each concatenated
/// filter applied to r. Otherwise stage1[k] is a separate N_R-tap linear
/// filter for user k.
DetectionResult pdf_detect(const CVector& r, std::span<const ReceiverState> states,
                           const Constellation& constellation,
                           std::span<const ReceiverState> stage1 = {});

/// Stage 2 of P-DF on caller-supplied first-pass decisions (one per user).
/// Costs K (N_R + K - 1) complex multiplications.
DetectionResult pdf_stage2(const CVector& r, std::span<const ReceiverState> states, const CVector& first_pass,
                           const Constellation& constellation);

struct PdfccOptions {
    double d_th = 0.05;
    std::size_t tau_max = 4;
    std::size_t gamma_cap = 4096;
    /// Recompute the soft outputs with the selected vector as feedback.
    bool recancel = false;
};

/// P-DF followed by constellation constraints and ML selection among the
/// Gamma = prod |L_k| combined candidate vectors, using the channel estimate.
/// When Gamma exceeds the cap, the farthest candidate across all lists is
/// dropped until it fits. No metric is evaluated when Gamma == 1.
DetectionResult pdfcc_detect(const CVector& r, std::span<const ReceiverState> states,
                             const CMatrix& h_est, const Constellation& constellation,
                             const PdfccOptions& options, std::span<const ReceiverState> stage1 = {});

/// The constellation-constraint stage on its own: takes a P-DF result (soft
/// outputs and op count) and returns the P-DFCC result.
DetectionResult apply_constraints(const CVector& r, DetectionResult pdf, std::span<const ReceiverState> states,
                                  const CMatrix& h_est, const Constellation& constellation,
                                  const PdfccOptions& options);

/// Regressor [r; d] with d the decisions of every user except `user`.
void parallel_regressor(const CVector& r, const CVector& decisions, std::size_t user, CVector& out);

}  // namespace mudet
