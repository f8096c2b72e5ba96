#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mudet/channel.hpp"
#include "mudet/coding.hpp"
#include "mudet/receiver.hpp"

namespace mudet {

struct ExperimentConfig {
    DetectorKind detector = DetectorKind::Pdfcc;
    std::size_t users = 4;
    std::size_t rx = 4;
    std::string modulation = "qpsk";
    FadingModel channel = FadingModel::BlockFading;
    double fdt = 1e-4;
    std::vector<double> ebn0_db{0.0, 4.0, 8.0, 12.0, 16.0};
    std::size_t frames = 100;
    std::size_t frame_length = 500;  // vectors per uncoded frame, pilots included
    std::size_t pilots = 10;
    double lambda = 0.998;
    double delta = 0.01;
    double d_th = 0.05;
    std::size_t tau_max = 4;
    std::size_t gamma_cap = 4096;
    bool recancel = false;
    Stage1Source stage1 = Stage1Source::Linear;
    bool coded = false;
    std::size_t block_bits = 1000;
    int turbo_iters = 4;
    BcjrMetric bcjr = BcjrMetric::MaxLog;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0 = hardware concurrency

    /// Throws ConfigError naming the first offending field.
    void validate() const;
    ReceiverConfig receiver() const;
};

struct IterationStats {
    std::uint64_t coded_errors = 0;
    std::uint64_t coded_bits = 0;
    std::uint64_t message_errors = 0;
    std::uint64_t message_bits = 0;
    double mean_gamma = 0.0;

    double coded_ber() const { return coded_bits ? static_cast<double>(coded_errors) / coded_bits : 0.0; }
    double message_ber() const { return message_bits ? static_cast<double>(message_errors) / message_bits : 0.0; }
};

struct PointResult {
    double ebn0_db = 0.0;
    std::uint64_t bit_errors = 0;
    std::uint64_t bits = 0;
    double ber = 0.0;
    double ber_ci_lo = 0.0;
    double ber_ci_hi = 0.0;
    double mean_gamma = 0.0;
    double mean_ops = 0.0;          // detection + adaptation, per vector
    double mean_channel_ops = 0.0;  // channel estimation, per vector
    std::size_t trials = 0;         // frames
    double wall_seconds = 0.0;
    std::vector<IterationStats> iterations;  // coded runs only
};

struct ResultRecord {
    ExperimentConfig config;
    std::vector<PointResult> points;
};

/// 95% Wilson score interval for `errors` successes out of `n`.
std::pair<double, double> wilson_interval(std::uint64_t errors, std::uint64_t n, double z = 1.959963984540054);

ResultRecord run_uncoded_sweep(const ExperimentConfig& config);
ResultRecord run_coded_sweep(const ExperimentConfig& config);

struct MseTrace {
    std::vector<double> mse;       // per symbol index, averaged over users and runs
    std::vector<double> run_tail;  // per run, mean over [tail_start, frame_length)
    std::size_t runs = 0;
};

/// E|u_k - s_k|^2 per symbol index. Pilots contribute their a-priori
/// training outputs. Uses the first entry of ebn0_db.
MseTrace run_mse_trace(const ExperimentConfig& config, std::size_t tail_start);

void write_csv(std::ostream& os, const ResultRecord& record);

inline constexpr const char* kCsvSchema = "# mudet-results v1";

}  // namespace mudet
