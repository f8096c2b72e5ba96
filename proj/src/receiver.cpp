#include "mudet/receiver.hpp"

#include <numeric>

namespace mudet {

DetectorKind parse_detector(std::string_view name)
{
    if (name == "ml") return DetectorKind::Ml;
    if (name == "sdf") return DetectorKind::Sdf;
    if (name == "pdf") return DetectorKind::Pdf;
    if (name == "pdfcc") return DetectorKind::Pdfcc;
    throw ConfigError("unknown detector '" + std::string(name) + "' (expected ml, sdf, pdf or pdfcc)");
}

std::string to_string(DetectorKind kind)
{
    switch (kind) {
    case DetectorKind::Ml: return "ml";
    case DetectorKind::Sdf: return "sdf";
    case DetectorKind::Pdf: return "pdf";
    case DetectorKind::Pdfcc: return "pdfcc";
    }
    return "?";
}

Stage1Source parse_stage1(std::string_view name)
{
    if (name == "forward") return Stage1Source::Forward;
    if (name == "linear") return Stage1Source::Linear;
    if (name == "sdf") return Stage1Source::Successive;
    throw ConfigError("unknown P-DF stage-1 source '" + std::string(name) + "' (expected forward, linear or sdf)");
}

std::string to_string(Stage1Source source)
{
    switch (source) {
    case Stage1Source::Forward: return "forward";
    case Stage1Source::Linear: return "linear";
    case Stage1Source::Successive: return "sdf";
    }
    return "?";
}

AdaptiveReceiver::AdaptiveReceiver(const ReceiverConfig& config, const Constellation& constellation,
                                   std::size_t n_users, std::size_t n_rx)
    : config_(config),
      constellation_(&constellation),
      n_users_(n_users),
      n_rx_(n_rx),
      channel_(n_rx, n_users, config.lambda_channel, config.delta_channel),
      order_(n_users)
{
    if (n_users == 0 || n_users > n_rx) throw ConfigError("receiver: need 1 <= K <= N_R");
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    switch (config.kind) {
    case DetectorKind::Ml: break;
    case DetectorKind::Sdf:
        successive_ = init_receiver(n_users, n_rx, FeedbackMode::Successive, config.lambda, config.delta);
        break;
    case DetectorKind::Pdf:
    case DetectorKind::Pdfcc:
        states_ = init_receiver(n_users, n_rx, FeedbackMode::Parallel, config.lambda, config.delta);
        if (config.stage1 == Stage1Source::Linear) {
            for (std::size_t k = 0; k < n_users; ++k) stage1_.emplace_back(n_rx, 0, config.lambda, config.delta);
        } else if (config.stage1 == Stage1Source::Successive) {
            successive_ = init_receiver(n_users, n_rx, FeedbackMode::Successive, config.lambda, config.delta);
        }
        break;
    }
}

bool AdaptiveReceiver::uses_channel_estimate() const noexcept
{
    return config_.kind != DetectorKind::Pdf || config_.stage1 == Stage1Source::Successive;
}

void AdaptiveReceiver::train_successive(std::vector<ReceiverState>& states, const CVector& r, const CVector& s,
                                        CVector* soft)
{
    for (std::size_t p = 0; p < n_users_; ++p) {
        regressor_.resize(static_cast<Eigen::Index>(n_rx_ + p));
        regressor_.head(static_cast<Eigen::Index>(n_rx_)) = r;
        for (std::size_t q = 0; q < p; ++q)
            regressor_(static_cast<Eigen::Index>(n_rx_ + q)) = s(static_cast<Eigen::Index>(order_[q]));
        const auto user = static_cast<Eigen::Index>(order_[p]);
        const Complex a_priori = states[p].filter.update(regressor_, s(user));
        if (soft != nullptr) (*soft)(user) = a_priori;
    }
}

void AdaptiveReceiver::adapt_successive(std::vector<ReceiverState>& states, const CVector& r,
                                        const CVector& reference, OpCounter* ops)
{
    for (std::size_t p = 0; p < n_users_; ++p) {
        regressor_.resize(static_cast<Eigen::Index>(n_rx_ + p));
        regressor_.head(static_cast<Eigen::Index>(n_rx_)) = r;
        for (std::size_t q = 0; q < p; ++q)
            regressor_(static_cast<Eigen::Index>(n_rx_ + q)) = reference(static_cast<Eigen::Index>(order_[q]));
        states[p].filter.update(regressor_, reference(static_cast<Eigen::Index>(order_[p])), ops);
    }
}

std::vector<CVector> AdaptiveReceiver::train(std::span<const CVector> received, std::span<const CVector> pilots)
{
    if (received.size() != pilots.size()) throw UsageError("train: received and pilot blocks differ in length");
    if (uses_channel_estimate()) {
        for (std::size_t i = 0; i < received.size(); ++i) channel_.update(received[i], pilots[i], &channel_ops_);
    }
    if (!successive_.empty()) order_ = compute_order(channel_.estimate());

    std::vector<CVector> soft;
    soft.reserve(received.size());
    for (std::size_t i = 0; i < received.size(); ++i) {
        const CVector& r = received[i];
        const CVector& s = pilots[i];
        CVector u = CVector::Zero(static_cast<Eigen::Index>(n_users_));
        if (config_.kind == DetectorKind::Sdf) {
            train_successive(successive_, r, s, &u);
        } else if (config_.kind != DetectorKind::Ml) {
            for (std::size_t k = 0; k < n_users_; ++k) {
                parallel_regressor(r, s, k, regressor_);
                u(static_cast<Eigen::Index>(k)) = states_[k].filter.update(regressor_, s(static_cast<Eigen::Index>(k)));
                if (!stage1_.empty()) stage1_[k].filter.update(r, s(static_cast<Eigen::Index>(k)));
            }
            if (!successive_.empty()) train_successive(successive_, r, s, nullptr);
        }
        soft.push_back(std::move(u));
    }
    return soft;
}

void AdaptiveReceiver::adapt(const CVector& r, const CVector& reference, OpCounter& ops)
{
    if (config_.kind == DetectorKind::Sdf) {
        adapt_successive(successive_, r, reference, &ops);
        return;
    }
    for (std::size_t k = 0; k < n_users_; ++k) {
        parallel_regressor(r, reference, k, regressor_);
        states_[k].filter.update(regressor_, reference(static_cast<Eigen::Index>(k)), &ops);
        if (!stage1_.empty()) stage1_[k].filter.update(r, reference(static_cast<Eigen::Index>(k)), &ops);
    }
    if (!successive_.empty()) adapt_successive(successive_, r, reference, &ops);
}

DetectionResult AdaptiveReceiver::detect_parallel(const CVector& r)
{
    if (successive_.empty()) return pdf_detect(r, states_, *constellation_, stage1_);
    const DetectionResult first = sdf_detect(r, successive_, order_, *constellation_);
    DetectionResult out = pdf_stage2(r, states_, first.decisions, *constellation_);
    out.op_count += first.op_count;
    return out;
}

DetectionResult AdaptiveReceiver::detect(const CVector& r, FrontEndSnapshot* snapshot)
{
    if (snapshot != nullptr) {
        snapshot->feedback_weights.clear();
        snapshot->stage1_weights.clear();
        for (const auto& st : states_) snapshot->feedback_weights.push_back(st.filter.weights());
        for (const auto& st : stage1_) snapshot->stage1_weights.push_back(st.filter.weights());
        snapshot->channel_estimate = channel_.estimate();
    }

    DetectionResult result;
    switch (config_.kind) {
    case DetectorKind::Ml: result = ml_detect(r, channel_.estimate(), *constellation_); break;
    case DetectorKind::Sdf: result = sdf_detect(r, successive_, order_, *constellation_); break;
    case DetectorKind::Pdf: result = detect_parallel(r); break;
    case DetectorKind::Pdfcc:
        result = apply_constraints(r, detect_parallel(r), states_, channel_.estimate(), *constellation_, config_.cc);
        break;
    }

    OpCounter ops;
    ops.add(result.op_count);
    if (config_.kind != DetectorKind::Ml) adapt(r, result.decisions, ops);
    if (config_.kind == DetectorKind::Ml || config_.kind == DetectorKind::Pdfcc) {
        channel_.update(r, result.decisions, &channel_ops_);
    }
    result.op_count = ops.complex_mults;
    return result;
}

}  // namespace mudet
