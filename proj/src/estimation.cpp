#include "mudet/estimation.hpp"

#include <cmath>
#include <string>

namespace mudet {

RlsFilter::RlsFilter(std::size_t dim, double lambda, double delta)
    : weights_(CVector::Zero(static_cast<Eigen::Index>(dim))),
      inv_corr_(CMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)) / delta),
      q_(static_cast<Eigen::Index>(dim)),
      lambda_(lambda)
{
    if (dim == 0) throw UsageError("RlsFilter: dimension must be positive");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw UsageError("RlsFilter: lambda must lie in (0, 1]");
    if (!(delta > 0.0)) throw UsageError("RlsFilter: delta must be positive");
}

void RlsFilter::set_weights(const CVector& w)
{
    if (w.size() != weights_.size()) throw UsageError("RlsFilter::set_weights: dimension mismatch");
    weights_ = w;
}

Complex RlsFilter::output(const CVector& x, OpCounter* ops) const
{
    if (x.size() != weights_.size()) {
        throw UsageError("RlsFilter: regressor length " + std::to_string(x.size()) + " != filter length " +
                         std::to_string(weights_.size()));
    }
    const Eigen::Index n = x.size();
    Complex acc{0.0, 0.0};
    for (Eigen::Index t = 0; t < n; ++t) acc += std::conj(weights_(t)) * x(t);
    count(ops, static_cast<std::uint64_t>(n));
    return acc;
}

Complex RlsFilter::update(const CVector& x, Complex reference, OpCounter* ops)
{
    const Eigen::Index n = weights_.size();
    if (x.size() != n) {
        throw UsageError("RlsFilter: regressor length " + std::to_string(x.size()) + " != filter length " +
                         std::to_string(n));
    }

    // q = Phi^{-1}[i-1] x
    for (Eigen::Index r = 0; r < n; ++r) {
        Complex acc{0.0, 0.0};
        for (Eigen::Index c = 0; c < n; ++c) acc += inv_corr_(r, c) * x(c);
        q_(r) = acc;
    }
    // x^H q is real for Hermitian Phi^{-1}
    Complex xq{0.0, 0.0};
    for (Eigen::Index t = 0; t < n; ++t) xq += std::conj(x(t)) * q_(t);
    const double denom = lambda_ + xq.real();
    if (!(denom > 0.0) || !std::isfinite(denom)) throw NumericError("RLS update: non-positive gain denominator");
    const double gain_scale = 1.0 / denom;  // k = q / (lambda + x^H q)

    const Complex a_priori = output(x, nullptr);
    const Complex xi = reference - a_priori;

    const double inv_lambda = 1.0 / lambda_;
    for (Eigen::Index c = 0; c < n; ++c) {
        const Complex qc = std::conj(q_(c));
        for (Eigen::Index r = 0; r < n; ++r) {
            inv_corr_(r, c) = inv_lambda * (inv_corr_(r, c) - gain_scale * q_(r) * qc);
        }
    }
    for (Eigen::Index c = 0; c < n; ++c) {
        inv_corr_(c, c) = Complex(inv_corr_(c, c).real(), 0.0);
        for (Eigen::Index r = c + 1; r < n; ++r) {
            const Complex avg = 0.5 * (inv_corr_(r, c) + std::conj(inv_corr_(c, r)));
            inv_corr_(r, c) = avg;
            inv_corr_(c, r) = std::conj(avg);
        }
    }

    const Complex xi_conj = std::conj(xi);
    for (Eigen::Index t = 0; t < n; ++t) weights_(t) += gain_scale * q_(t) * xi_conj;

    if (!std::isfinite(weights_(0).real()) || !std::isfinite(weights_(0).imag())) {
        throw NumericError("RLS update produced non-finite weights");
    }
    count(ops, static_cast<std::uint64_t>(2 * n * n + 3 * n));
    return a_priori;
}

std::vector<ReceiverState> init_receiver(std::size_t n_users, std::size_t n_rx, FeedbackMode mode,
                                         double lambda, double delta)
{
    if (n_users == 0 || n_users > n_rx) throw ConfigError("init_receiver: need 1 <= K <= N_R");
    std::vector<ReceiverState> states;
    states.reserve(n_users);
    for (std::size_t k = 0; k < n_users; ++k) {
        const std::size_t backward = mode == FeedbackMode::Successive ? k : n_users - 1;
        states.emplace_back(n_rx, backward, lambda, delta);
    }
    return states;
}

ChannelEstimator::ChannelEstimator(std::size_t n_rx, std::size_t n_users, double lambda, double delta_c)
    : cross_(CMatrix::Zero(static_cast<Eigen::Index>(n_rx), static_cast<Eigen::Index>(n_users))),
      inv_corr_(CMatrix::Identity(static_cast<Eigen::Index>(n_users), static_cast<Eigen::Index>(n_users)) /
                delta_c),
      estimate_(CMatrix::Zero(static_cast<Eigen::Index>(n_rx), static_cast<Eigen::Index>(n_users))),
      ps_(static_cast<Eigen::Index>(n_users)),
      lambda_(lambda)
{
    if (!(lambda > 0.0 && lambda <= 1.0)) throw UsageError("ChannelEstimator: lambda must lie in (0, 1]");
    if (!(delta_c > 0.0)) throw UsageError("ChannelEstimator: delta_c must be positive");
}

const CMatrix& ChannelEstimator::update(const CVector& r, const CVector& s, OpCounter* ops)
{
    const Eigen::Index nr = cross_.rows();
    const Eigen::Index k = cross_.cols();
    if (r.size() != nr || s.size() != k) throw UsageError("ChannelEstimator::update: dimension mismatch");

    ps_.noalias() = inv_corr_ * s;
    const double denom = lambda_ + s.dot(ps_).real();  // dot conjugates s
    if (!(denom > 0.0) || !std::isfinite(denom)) throw NumericError("channel estimator: bad gain denominator");
    inv_corr_ = (inv_corr_ - (ps_ * ps_.adjoint()) / denom) / lambda_;
    inv_corr_ = 0.5 * (inv_corr_ + inv_corr_.adjoint()).eval();

    cross_ = lambda_ * cross_ + r * s.adjoint();
    estimate_.noalias() = cross_ * inv_corr_;
    count(ops, static_cast<std::uint64_t>(2 * k * k + k + nr * k + nr * k * k));
    return estimate_;
}

}  // namespace mudet
