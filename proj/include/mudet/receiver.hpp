#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mudet/constellation.hpp"
#include "mudet/detectors.hpp"
#include "mudet/estimation.hpp"

namespace mudet {

enum class DetectorKind { Ml, Sdf, Pdf, Pdfcc };

DetectorKind parse_detector(std::string_view name);
std::string to_string(DetectorKind kind);

/// Where P-DF takes its first-pass decisions from.
enum class Stage1Source {
    Forward,  // forward part of each concatenated filter
    Linear,   // separate N_R-tap RLS filter per user
    Successive,  // an ordered S-DF pass with its own filters
};

Stage1Source parse_stage1(std::string_view name);
std::string to_string(Stage1Source source);

struct ReceiverConfig {
    DetectorKind kind = DetectorKind::Pdfcc;
    double lambda = 0.998;
    double delta = 0.01;
    double lambda_channel = 0.998;
    double delta_channel = 0.01;
    PdfccOptions cc{};
    Stage1Source stage1 = Stage1Source::Linear;
};

/// Filter weights and channel estimate in force when one vector was detected.
struct FrontEndSnapshot {
    std::vector<CVector> feedback_weights;  // per user, concatenated
    std::vector<CVector> stage1_weights;    // per user, empty for Forward
    CMatrix channel_estimate;
};

/// One frame's worth of adaptive receive processing for a detector family.
///
/// train() consumes the pilot block: the channel estimator runs first (the
/// S-DF order comes from its estimate), then every RLS filter is trained with
/// the true symbols both as reference and as fed-back interference. After
/// that, detect() works in decision-directed mode: it detects one vector and
/// adapts all filters and the channel estimate using the final decisions.
class AdaptiveReceiver {
public:
    AdaptiveReceiver(const ReceiverConfig& config, const Constellation& constellation, std::size_t n_users,
                     std::size_t n_rx);

    /// Returns, per pilot, the a-priori soft estimates of every user (for
    /// MSE tracing). ML returns zeros.
    std::vector<CVector> train(std::span<const CVector> received, std::span<const CVector> pilots);

    /// Decision-directed step. op_count in the result covers detection and
    /// filter adaptation; channel estimation is tallied in channel_ops().
    DetectionResult detect(const CVector& r, FrontEndSnapshot* snapshot = nullptr);

    const CMatrix& channel_estimate() const noexcept { return channel_.estimate(); }
    const DetectionOrder& order() const noexcept { return order_; }
    std::uint64_t channel_ops() const noexcept { return channel_ops_.complex_mults; }
    const ReceiverConfig& config() const noexcept { return config_; }
    std::span<const ReceiverState> feedback_states() const noexcept { return states_; }
    std::span<const ReceiverState> stage1_states() const noexcept { return stage1_; }

private:
    bool uses_channel_estimate() const noexcept;
    void adapt(const CVector& r, const CVector& reference, OpCounter& ops);
    void train_successive(std::vector<ReceiverState>& states, const CVector& r, const CVector& s, CVector* soft);
    void adapt_successive(std::vector<ReceiverState>& states, const CVector& r, const CVector& reference,
                          OpCounter* ops);
    DetectionResult detect_parallel(const CVector& r);

    ReceiverConfig config_;
    const Constellation* constellation_;
    std::size_t n_users_;
    std::size_t n_rx_;
    std::vector<ReceiverState> states_;
    std::vector<ReceiverState> stage1_;
    std::vector<ReceiverState> successive_;
    ChannelEstimator channel_;
    DetectionOrder order_;
    OpCounter channel_ops_;
    CVector regressor_;
};

}  // namespace mudet
