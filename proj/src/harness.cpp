#include "mudet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "mudet/idd.hpp"
#include "mudet/rng.hpp"

namespace mudet {

namespace {

// Runs task(i) for i in [0, n) on a pool; the first exception is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task)
{
    unsigned workers = threads != 0 ? threads : std::max(1U, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct FrameData {
    std::vector<CVector> symbols;
    std::vector<std::vector<std::size_t>> indices;
    std::vector<CVector> received;
};

// Channel, symbols and noise for one frame. Every detector and SNR point
// sees the same channel, symbols and unit noise draws for a given frame.
FrameData make_frame(const ExperimentConfig& cfg, const Constellation& cons, std::size_t frame, double sigma_v2,
                     const std::vector<std::vector<std::size_t>>* fixed_indices = nullptr)
{
    Rng rng(stream_seed(cfg.seed, frame));
    const std::uint64_t channel_seed = rng();
    const std::size_t length = fixed_indices ? fixed_indices->size() : cfg.frame_length;
    const ChannelRealization ch = cfg.channel == FadingModel::BlockFading
                                      ? gen_block_fading(cfg.users, cfg.rx, 1, channel_seed)
                                      : gen_jakes(cfg.users, cfg.rx, length, cfg.fdt, channel_seed);
    FrameData f;
    f.symbols.resize(length);
    f.indices.resize(length);
    f.received.resize(length);
    std::uniform_int_distribution<std::size_t> pick(0, cons.size() - 1);
    for (std::size_t i = 0; i < length; ++i) {
        if (fixed_indices) {
            f.indices[i] = (*fixed_indices)[i];
        } else {
            f.indices[i].resize(cfg.users);
            for (auto& q : f.indices[i]) q = pick(rng);
        }
        f.symbols[i].resize(static_cast<Eigen::Index>(cfg.users));
        for (std::size_t k = 0; k < cfg.users; ++k) f.symbols[i](static_cast<Eigen::Index>(k)) = cons.point(f.indices[i][k]);
    }
    Rng noise_rng(stream_seed(cfg.seed ^ 0x6e6f697365ULL, frame));
    for (std::size_t i = 0; i < length; ++i) {
        const CMatrix& h = cfg.channel == FadingModel::BlockFading ? ch.at(0) : ch.at(i);
        f.received[i] = transmit(h, f.symbols[i], NoiseSpec(sigma_v2), noise_rng);
    }
    return f;
}

std::uint64_t bit_errors(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b)
{
    std::uint64_t n = 0;
    for (std::size_t k = 0; k < a.size(); ++k) n += static_cast<std::uint64_t>(std::popcount(a[k] ^ b[k]));
    return n;
}

struct FrameTally {
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;
    double gamma = 0.0;
    double ops = 0.0;
    double channel_ops = 0.0;
    std::size_t vectors = 0;
    std::vector<IterationStats> iterations;
};

void finish_point(PointResult& p, const std::vector<FrameTally>& tallies)
{
    std::size_t vectors = 0;
    double gamma = 0.0, ops = 0.0, ch_ops = 0.0;
    for (const auto& t : tallies) {
        p.bit_errors += t.errors;
        p.bits += t.bits;
        gamma += t.gamma;
        ops += t.ops;
        ch_ops += t.channel_ops;
        vectors += t.vectors;
        if (p.iterations.size() < t.iterations.size()) p.iterations.resize(t.iterations.size());
        for (std::size_t it = 0; it < t.iterations.size(); ++it) {
            auto& dst = p.iterations[it];
            const auto& src = t.iterations[it];
            dst.coded_errors += src.coded_errors;
            dst.coded_bits += src.coded_bits;
            dst.message_errors += src.message_errors;
            dst.message_bits += src.message_bits;
            dst.mean_gamma += src.mean_gamma / static_cast<double>(tallies.size());
        }
    }
    p.trials = tallies.size();
    p.ber = p.bits ? static_cast<double>(p.bit_errors) / static_cast<double>(p.bits) : 0.0;
    std::tie(p.ber_ci_lo, p.ber_ci_hi) = wilson_interval(p.bit_errors, p.bits);
    if (vectors > 0) {
        p.mean_gamma = gamma / static_cast<double>(vectors);
        p.mean_ops = ops / static_cast<double>(vectors);
        p.mean_channel_ops = ch_ops / static_cast<double>(vectors);
    }
}

double code_rate(const ExperimentConfig& cfg) { return cfg.coded ? 0.5 : 1.0; }

}  // namespace

void ExperimentConfig::validate() const
{
    if (users == 0) throw ConfigError("users must be >= 1");
    if (users > rx) throw ConfigError("users (" + std::to_string(users) + ") must not exceed rx (" + std::to_string(rx) + ")");
    (void)Constellation::from_name(modulation);
    if (channel == FadingModel::Jakes && !(fdt > 0.0 && fdt < 0.5)) throw ConfigError("fdt must lie in (0, 0.5)");
    if (ebn0_db.empty()) throw ConfigError("ebn0 list is empty");
    for (double e : ebn0_db) {
        if (!std::isfinite(e)) throw ConfigError("ebn0 values must be finite");
    }
    if (frames == 0) throw ConfigError("frames must be >= 1");
    if (pilots == 0) throw ConfigError("pilots must be >= 1");
    if (!coded && frame_length <= pilots) throw ConfigError("frame length must exceed the pilot count");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
    if (!(delta > 0.0)) throw ConfigError("delta must be positive");
    if (std::isnan(d_th) || d_th < 0.0) throw ConfigError("dth must be >= 0");
    if (tau_max == 0) throw ConfigError("tau-max must be >= 1");
    if (gamma_cap == 0) throw ConfigError("gamma-cap must be >= 1");
    if (coded) {
        if (block_bits == 0) throw ConfigError("block-bits must be >= 1");
        const auto bits = static_cast<std::size_t>(Constellation::from_name(modulation).bits_per_symbol());
        if (ConvCode::coded_length(block_bits) % bits != 0) {
            throw ConfigError("coded block length is not a multiple of the bits per symbol");
        }
        if (turbo_iters < 1) throw ConfigError("turbo-iters must be >= 1");
    }
}

ReceiverConfig ExperimentConfig::receiver() const
{
    ReceiverConfig rc;
    rc.kind = detector;
    rc.lambda = lambda;
    rc.delta = delta;
    rc.lambda_channel = lambda;
    rc.delta_channel = delta;
    rc.cc.d_th = d_th;
    rc.cc.tau_max = tau_max;
    rc.cc.gamma_cap = gamma_cap;
    rc.cc.recancel = recancel;
    rc.stage1 = stage1;
    return rc;
}

std::pair<double, double> wilson_interval(std::uint64_t errors, std::uint64_t n, double z)
{
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(errors) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

ResultRecord run_uncoded_sweep(const ExperimentConfig& config)
{
    config.validate();
    if (config.coded) throw ConfigError("run_uncoded_sweep: coded flag is set");
    const Constellation cons = Constellation::from_name(config.modulation);
    const ReceiverConfig rc = config.receiver();
    const auto bits_per_symbol = static_cast<std::uint64_t>(cons.bits_per_symbol());

    ResultRecord record{config, {}};
    for (double ebn0 : config.ebn0_db) {
        const auto start = std::chrono::steady_clock::now();
        const double sigma_v2 = sigma_v2_from_ebn0(ebn0, config.rx, code_rate(config), cons.size());
        std::vector<FrameTally> tallies(config.frames);
        parallel_for(config.frames, config.threads, [&](std::size_t frame) {
            const FrameData f = make_frame(config, cons, frame, sigma_v2);
            AdaptiveReceiver rx(rc, cons, config.users, config.rx);
            rx.train(std::span(f.received).first(config.pilots), std::span(f.symbols).first(config.pilots));
            FrameTally& t = tallies[frame];
            for (std::size_t i = config.pilots; i < f.received.size(); ++i) {
                const DetectionResult d = rx.detect(f.received[i]);
                t.errors += bit_errors(d.decision_indices, f.indices[i]);
                t.bits += config.users * bits_per_symbol;
                t.gamma += static_cast<double>(d.gamma);
                t.ops += static_cast<double>(d.op_count);
                ++t.vectors;
            }
            t.channel_ops = static_cast<double>(rx.channel_ops());
        });
        PointResult p;
        p.ebn0_db = ebn0;
        finish_point(p, tallies);
        p.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        record.points.push_back(std::move(p));
    }
    return record;
}

ResultRecord run_coded_sweep(const ExperimentConfig& config)
{
    config.validate();
    if (!config.coded) throw ConfigError("run_coded_sweep: coded flag is not set");
    const Constellation cons = Constellation::from_name(config.modulation);
    const ReceiverConfig rc = config.receiver();
    const auto bits = static_cast<std::size_t>(cons.bits_per_symbol());
    const std::size_t coded_len = ConvCode::coded_length(config.block_bits);
    const std::size_t n_data = coded_len / bits;

    std::vector<Interleaver> interleavers;
    for (std::size_t k = 0; k < config.users; ++k) interleavers.emplace_back(coded_len, stream_seed(config.seed ^ 0x696c76ULL, k));

    IddConfig idd;
    idd.detector = config.detector;
    idd.turbo_iterations = config.turbo_iters;
    idd.d_th = config.d_th;
    idd.tau_max = config.tau_max;
    idd.metric = config.bcjr;

    ResultRecord record{config, {}};
    for (double ebn0 : config.ebn0_db) {
        const auto start = std::chrono::steady_clock::now();
        const double sigma_v2 = sigma_v2_from_ebn0(ebn0, config.rx, code_rate(config), cons.size());
        std::vector<FrameTally> tallies(config.frames);
        parallel_for(config.frames, config.threads, [&](std::size_t frame) {
            Rng msg_rng(stream_seed(config.seed ^ 0x6d7367ULL, frame));
            std::vector<std::vector<std::uint8_t>> message(config.users), coded(config.users);
            std::vector<std::vector<std::size_t>> indices(config.pilots + n_data, std::vector<std::size_t>(config.users));
            std::uniform_int_distribution<std::size_t> pick(0, cons.size() - 1);
            for (std::size_t i = 0; i < config.pilots; ++i) {
                for (auto& q : indices[i]) q = pick(msg_rng);
            }
            for (std::size_t k = 0; k < config.users; ++k) {
                message[k].resize(config.block_bits);
                for (auto& b : message[k]) b = static_cast<std::uint8_t>(msg_rng() & 1U);
                coded[k] = conv_encode(message[k]);
                const auto tx = interleavers[k].interleave<std::uint8_t>(coded[k]);
                for (std::size_t t = 0; t < n_data; ++t) {
                    indices[config.pilots + t][k] = cons.map_bits_index(std::span(tx).subspan(t * bits, bits));
                }
            }
            const FrameData f = make_frame(config, cons, frame, sigma_v2, &indices);

            AdaptiveReceiver rx(rc, cons, config.users, config.rx);
            rx.train(std::span(f.received).first(config.pilots), std::span(f.symbols).first(config.pilots));
            FrontEndTrace trace;
            FrameTally& t = tallies[frame];
            for (std::size_t i = config.pilots; i < f.received.size(); ++i) {
                FrontEndSnapshot snap;
                DetectionResult d = rx.detect(f.received[i], &snap);
                t.errors += bit_errors(d.decision_indices, f.indices[i]);
                t.bits += config.users * bits;
                t.gamma += static_cast<double>(d.gamma);
                t.ops += static_cast<double>(d.op_count);
                ++t.vectors;
                trace.received.push_back(f.received[i]);
                trace.snapshots.push_back(std::move(snap));
                trace.soft.push_back(d.soft.size() ? d.soft : d.decisions);
                trace.decisions.push_back(d.decisions);
            }
            t.channel_ops = static_cast<double>(rx.channel_ops());

            const auto iterations = run_idd(trace, interleavers, cons, sigma_v2, idd);
            for (const auto& it : iterations) {
                IterationStats s;
                s.mean_gamma = it.mean_gamma;
                for (std::size_t k = 0; k < config.users; ++k) {
                    for (std::size_t n = 0; n < config.block_bits; ++n) s.message_errors += it.message[k][n] != message[k][n];
                    for (std::size_t n = 0; n < coded_len; ++n) s.coded_errors += it.coded[k][n] != coded[k][n];
                }
                s.message_bits = config.users * config.block_bits;
                s.coded_bits = config.users * coded_len;
                t.iterations.push_back(s);
            }
        });
        PointResult p;
        p.ebn0_db = ebn0;
        finish_point(p, tallies);
        // Headline BER of a coded point is the final-iteration message BER.
        const auto& last = p.iterations.back();
        p.bit_errors = last.message_errors;
        p.bits = last.message_bits;
        p.ber = last.message_ber();
        std::tie(p.ber_ci_lo, p.ber_ci_hi) = wilson_interval(p.bit_errors, p.bits);
        p.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        record.points.push_back(std::move(p));
    }
    return record;
}

MseTrace run_mse_trace(const ExperimentConfig& config, std::size_t tail_start)
{
    config.validate();
    if (tail_start >= config.frame_length) throw ConfigError("mse trace: tail start beyond frame length");
    const Constellation cons = Constellation::from_name(config.modulation);
    const ReceiverConfig rc = config.receiver();
    const double sigma_v2 = sigma_v2_from_ebn0(config.ebn0_db.front(), config.rx, code_rate(config), cons.size());

    std::vector<std::vector<double>> per_run(config.frames);
    parallel_for(config.frames, config.threads, [&](std::size_t frame) {
        const FrameData f = make_frame(config, cons, frame, sigma_v2);
        AdaptiveReceiver rx(rc, cons, config.users, config.rx);
        auto& mse = per_run[frame];
        mse.resize(config.frame_length);
        const auto soft = rx.train(std::span(f.received).first(config.pilots), std::span(f.symbols).first(config.pilots));
        for (std::size_t i = 0; i < config.pilots; ++i) mse[i] = (soft[i] - f.symbols[i]).squaredNorm() / static_cast<double>(config.users);
        for (std::size_t i = config.pilots; i < config.frame_length; ++i) {
            const DetectionResult d = rx.detect(f.received[i]);
            const CVector& u = d.soft.size() ? d.soft : d.decisions;
            mse[i] = (u - f.symbols[i]).squaredNorm() / static_cast<double>(config.users);
        }
    });

    MseTrace out;
    out.runs = config.frames;
    out.mse.assign(config.frame_length, 0.0);
    for (const auto& run : per_run) {
        for (std::size_t i = 0; i < run.size(); ++i) out.mse[i] += run[i] / static_cast<double>(config.frames);
        double tail = 0.0;
        for (std::size_t i = tail_start; i < run.size(); ++i) tail += run[i];
        out.run_tail.push_back(tail / static_cast<double>(run.size() - tail_start));
    }
    return out;
}

void write_csv(std::ostream& os, const ResultRecord& record)
{
    const auto& c = record.config;
    os << kCsvSchema << " detector=" << to_string(c.detector) << " users=" << c.users << " rx=" << c.rx
       << " modulation=" << c.modulation << " channel=" << (c.channel == FadingModel::Jakes ? "jakes" : "block")
       << " fdt=" << c.fdt << " frames=" << c.frames << " pilots=" << c.pilots << " lambda=" << c.lambda
       << " dth=" << c.d_th << " tau_max=" << c.tau_max << " seed=" << c.seed << '\n';
    os << "ebn0_db,detector,ber,ber_ci_lo,ber_ci_hi,mean_gamma,mean_ops,trials";
    if (c.coded) os << ",turbo_iter,coded_ber,msg_ber";
    os << '\n';
    os << std::setprecision(10);
    const std::string det = to_string(c.detector);
    for (const auto& p : record.points) {
        auto prefix = [&](std::ostream& o) {
            o << p.ebn0_db << ',' << det << ',' << p.ber << ',' << p.ber_ci_lo << ',' << p.ber_ci_hi << ','
              << p.mean_gamma << ',' << p.mean_ops << ',' << p.trials;
        };
        if (!c.coded) {
            prefix(os);
            os << '\n';
            continue;
        }
        for (std::size_t it = 0; it < p.iterations.size(); ++it) {
            prefix(os);
            os << ',' << it + 1 << ',' << p.iterations[it].coded_ber() << ',' << p.iterations[it].message_ber() << '\n';
        }
    }
}

}  // namespace mudet
