#pragma once

#include <vector>

#include "mudet/types.hpp"

namespace mudet {

/// Exponentially-weighted RLS filter on a concatenated regressor.
///
/// Holds the weights w and the inverse correlation Phi^{-1}. Starts from
/// w = 0, Phi^{-1} = I / delta, which makes the recursion identical to the
/// batch solution of sum lambda^{i-t} |ref_t - w^H x_t|^2 + lambda^i delta |w|^2.
class RlsFilter {
public:
    RlsFilter(std::size_t dim, double lambda, double delta);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(weights_.size()); }
    double lambda() const noexcept { return lambda_; }
    const CVector& weights() const noexcept { return weights_; }
    const CMatrix& inv_corr() const noexcept { return inv_corr_; }

    void set_weights(const CVector& w);

    /// w^H x. Costs dim() complex multiplications.
    Complex output(const CVector& x, OpCounter* ops = nullptr) const;

    /// One recursion step towards `reference` (pilot in training mode, the
    /// decision in decision-directed mode). Returns the a-priori output
    /// w^H[i-1] x. Costs 2 dim^2 + 3 dim complex multiplications.
    Complex update(const CVector& x, Complex reference, OpCounter* ops = nullptr);

private:
    CVector weights_;
    CMatrix inv_corr_;
    CVector q_;
    double lambda_;
};

enum class FeedbackMode { Successive, Parallel };

/// Per-user receive filter. The regressor is [r; d_k] where d_k holds
/// backward_len fed-back symbols.
struct ReceiverState {
    RlsFilter filter;
    std::size_t forward_len = 0;
    std::size_t backward_len = 0;

    ReceiverState(std::size_t n_rx, std::size_t n_backward, double lambda, double delta)
        : filter(n_rx + n_backward, lambda, delta), forward_len(n_rx), backward_len(n_backward)
    {
    }

    /// Forward part of the concatenated weights.
    auto forward_weights() const { return filter.weights().head(static_cast<Eigen::Index>(forward_len)); }
    auto backward_weights() const { return filter.weights().tail(static_cast<Eigen::Index>(backward_len)); }
};

/// Fresh filters. Successive mode returns states in detection-order position:
/// position p has p backward taps. Parallel mode gives every user K-1.
std::vector<ReceiverState> init_receiver(std::size_t n_users, std::size_t n_rx, FeedbackMode mode,
                                         double lambda, double delta);

/// Recursive exponentially-weighted LS channel estimate H = D P with
/// D = sum lambda^{i-t} r s^H and P the inverse of
/// lambda^i delta_c I + sum lambda^{i-t} s s^H, updated via the matrix
/// inversion lemma.
class ChannelEstimator {
public:
    ChannelEstimator(std::size_t n_rx, std::size_t n_users, double lambda, double delta_c);

    /// Folds in one (received, symbol) pair and returns the new estimate.
    const CMatrix& update(const CVector& r, const CVector& s, OpCounter* ops = nullptr);

    const CMatrix& estimate() const noexcept { return estimate_; }
    const CMatrix& cross_corr() const noexcept { return cross_; }
    const CMatrix& inv_corr() const noexcept { return inv_corr_; }
    double lambda() const noexcept { return lambda_; }

private:
    CMatrix cross_;     // D, N_R x K
    CMatrix inv_corr_;  // P, K x K
    CMatrix estimate_;  // D P
    CVector ps_;
    double lambda_;
};

}  // namespace mudet
