#include "mudet/idd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mudet/detectors.hpp"

namespace mudet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinVariance = 1e-6;

// -log(1 + e^-x)
double log_sigmoid(double x)
{
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

void check_prior_length(std::span<const double> llrs, std::size_t want, const char* who)
{
    if (!llrs.empty() && llrs.size() != want) {
        throw UsageError(std::string(who) + ": expected " + std::to_string(want) + " prior LLRs, got " +
                         std::to_string(llrs.size()));
    }
}

void normalize_row(SymbolProbTable& t, std::size_t k)
{
    double sum = 0.0;
    for (std::size_t q = 0; q < t.n_points(); ++q) sum += t.at(k, q);
    for (std::size_t q = 0; q < t.n_points(); ++q) t.at(k, q) /= sum;
}

}  // namespace

double bit_prob_from_llr(double llr, int b_bar)
{
    if (b_bar != 1 && b_bar != -1) throw UsageError("bit_prob_from_llr: b_bar must be +1 or -1");
    return 0.5 * (1.0 + b_bar * std::tanh(0.5 * clamp_llr(llr)));
}

double log_bit_prob(double llr, int bit)
{
    const double l = clamp_llr(llr);
    return log_sigmoid(bit != 0 ? l : -l);
}

double symbol_prob(std::span<const double> llrs, const Constellation& constellation, std::size_t q)
{
    const int bits = constellation.bits_per_symbol();
    if (llrs.size() != static_cast<std::size_t>(bits)) throw UsageError("symbol_prob: need one LLR per label bit");
    if (q >= constellation.size()) throw UsageError("symbol_prob: point index out of range");
    double p = 1.0;
    for (int j = 0; j < bits; ++j) p *= bit_prob_from_llr(llrs[static_cast<std::size_t>(j)], 2 * constellation.bit(q, j) - 1);
    return p;
}

SymbolProbTable::SymbolProbTable(std::size_t n_users, std::size_t n_points)
    : n_users_(n_users), n_points_(n_points), prob_(n_users * n_points, 0.0)
{
}

SymbolProbTable SymbolProbTable::from_llrs(std::span<const double> llrs, const Constellation& constellation)
{
    const auto bits = static_cast<std::size_t>(constellation.bits_per_symbol());
    if (llrs.size() % bits != 0) throw UsageError("SymbolProbTable::from_llrs: length not a multiple of J");
    const std::size_t k_users = llrs.size() / bits;
    SymbolProbTable t(k_users, constellation.size());
    for (std::size_t k = 0; k < k_users; ++k) {
        for (std::size_t q = 0; q < constellation.size(); ++q) t.at(k, q) = symbol_prob(llrs.subspan(k * bits, bits), constellation, q);
        normalize_row(t, k);
    }
    return t;
}

SymbolProbTable SymbolProbTable::posterior(const CVector& u, std::span<const double> var, std::span<const double> llrs,
                                           const Constellation& constellation)
{
    const auto k_users = static_cast<std::size_t>(u.size());
    const auto bits = static_cast<std::size_t>(constellation.bits_per_symbol());
    if (var.size() != k_users) throw UsageError("SymbolProbTable::posterior: one variance per user required");
    check_prior_length(llrs, k_users * bits, "SymbolProbTable::posterior");
    SymbolProbTable t(k_users, constellation.size());
    std::vector<double> logp(constellation.size());
    for (std::size_t k = 0; k < k_users; ++k) {
        const double v = std::max(var[k], kMinVariance);
        for (std::size_t q = 0; q < constellation.size(); ++q) {
            double lp = -std::norm(u(static_cast<Eigen::Index>(k)) - constellation.point(q)) / v;
            if (!llrs.empty()) {
                for (std::size_t j = 0; j < bits; ++j) lp += log_bit_prob(llrs[k * bits + j], constellation.bit(q, static_cast<int>(j)));
            }
            logp[q] = lp;
        }
        const double mx = *std::max_element(logp.begin(), logp.end());
        for (std::size_t q = 0; q < constellation.size(); ++q) t.at(k, q) = std::exp(logp[q] - mx);
        normalize_row(t, k);
    }
    return t;
}

std::vector<std::vector<std::size_t>> build_idd_list(const SymbolProbTable& table,
                                                     std::span<const ReliabilityVerdict> verdicts,
                                                     std::size_t tau_max)
{
    if (!verdicts.empty() && verdicts.size() != table.n_users()) {
        throw UsageError("build_idd_list: verdict count differs from user count");
    }
    if (tau_max < 1) throw UsageError("build_idd_list: tau_max must be >= 1");
    std::vector<std::vector<std::size_t>> lists(table.n_users());
    for (std::size_t k = 0; k < table.n_users(); ++k) {
        std::vector<std::size_t> order(table.n_points());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return table.at(k, a) > table.at(k, b); });
        const bool reliable = !verdicts.empty() && verdicts[k].reliable;
        order.resize(reliable ? 1 : std::min(tau_max, table.n_points()));
        lists[k] = std::move(order);
    }
    return lists;
}

SoftDetection soft_detect_llr(const CVector& r, const CMatrix& h, const std::vector<std::vector<std::size_t>>& lists,
                              std::span<const double> prior_llrs, double sigma_v2,
                              const Constellation& constellation, OpCounter* ops)
{
    const auto k_users = static_cast<std::size_t>(h.cols());
    const auto bits = static_cast<std::size_t>(constellation.bits_per_symbol());
    const std::size_t n_llr = k_users * bits;
    if (r.size() != h.rows()) throw UsageError("soft_detect_llr: r and H row counts differ");
    if (lists.size() != k_users) throw UsageError("soft_detect_llr: one list per user required");
    for (const auto& l : lists) {
        if (l.empty()) throw UsageError("soft_detect_llr: empty candidate list");
    }
    check_prior_length(prior_llrs, n_llr, "soft_detect_llr");
    if (!(sigma_v2 > 0.0)) throw UsageError("soft_detect_llr: sigma_v2 must be positive");

    // log P(b_kj = bit), laid out [k * J + j][bit]
    std::vector<std::array<double, 2>> logp(n_llr, {std::log(0.5), std::log(0.5)});
    if (!prior_llrs.empty()) {
        for (std::size_t n = 0; n < n_llr; ++n) logp[n] = {log_bit_prob(prior_llrs[n], 0), log_bit_prob(prior_llrs[n], 1)};
    }

    std::vector<std::array<double, 2>> best(n_llr, {kNegInf, kNegInf});
    std::vector<std::size_t> best_vec;
    double best_total = kNegInf;

    auto visit = [&](const std::vector<std::size_t>& idx) {
        double total = -residual_metric(r, h, idx, constellation, ops) / sigma_v2;
        for (std::size_t k = 0; k < k_users; ++k) {
            for (std::size_t j = 0; j < bits; ++j) total += logp[k * bits + j][static_cast<std::size_t>(constellation.bit(idx[k], static_cast<int>(j)))];
        }
        for (std::size_t k = 0; k < k_users; ++k) {
            for (std::size_t j = 0; j < bits; ++j) {
                const auto b = static_cast<std::size_t>(constellation.bit(idx[k], static_cast<int>(j)));
                const double lam = total - logp[k * bits + j][b];
                if (lam > best[k * bits + j][b]) best[k * bits + j][b] = lam;
            }
        }
        if (total > best_total) {
            best_total = total;
            best_vec = idx;
        }
        return total;
    };

    SoftDetection out;
    std::size_t gamma = 1;
    for (const auto& l : lists) gamma *= l.size();
    out.gamma = gamma;
    std::vector<std::size_t> pos(k_users, 0), idx(k_users);
    for (std::size_t n = 0; n < gamma; ++n) {
        for (std::size_t k = 0; k < k_users; ++k) idx[k] = lists[k][pos[k]];
        visit(idx);
        for (std::size_t k = k_users; k-- > 0;) {
            if (++pos[k] < lists[k].size()) break;
            pos[k] = 0;
        }
    }

    for (std::size_t k = 0; k < k_users; ++k) {
        for (std::size_t j = 0; j < bits; ++j) {
            for (int b = 0; b < 2; ++b) {
                if (best[k * bits + j][static_cast<std::size_t>(b)] != kNegInf) continue;
                std::vector<std::size_t> pick;
                double pick_total = kNegInf;
                std::vector<std::size_t> trial = best_vec;
                for (std::size_t q = 0; q < constellation.size(); ++q) {
                    if (constellation.bit(q, static_cast<int>(j)) != b) continue;
                    trial[k] = q;
                    double total = -residual_metric(r, h, trial, constellation, ops) / sigma_v2;
                    for (std::size_t kk = 0; kk < k_users; ++kk) {
                        for (std::size_t jj = 0; jj < bits; ++jj) total += logp[kk * bits + jj][static_cast<std::size_t>(constellation.bit(trial[kk], static_cast<int>(jj)))];
                    }
                    if (total > pick_total) {
                        pick_total = total;
                        pick = trial;
                    }
                }
                visit(pick);
                ++out.backfilled;
            }
        }
    }

    out.extrinsic.resize(n_llr);
    for (std::size_t n = 0; n < n_llr; ++n) out.extrinsic[n] = clamp_llr(best[n][1] - best[n][0]);
    return out;
}

std::vector<double> stream_llr(Complex u, double var, std::span<const double> prior_llrs,
                               const Constellation& constellation)
{
    const auto bits = static_cast<std::size_t>(constellation.bits_per_symbol());
    check_prior_length(prior_llrs, bits, "stream_llr");
    const double v = std::max(var, kMinVariance);
    std::vector<std::array<double, 2>> best(bits, {kNegInf, kNegInf});
    for (std::size_t q = 0; q < constellation.size(); ++q) {
        double total = -std::norm(u - constellation.point(q)) / v;
        std::vector<double> lp(bits, 0.0);
        for (std::size_t j = 0; j < bits; ++j) {
            lp[j] = prior_llrs.empty() ? 0.0 : log_bit_prob(prior_llrs[j], constellation.bit(q, static_cast<int>(j)));
            total += lp[j];
        }
        for (std::size_t j = 0; j < bits; ++j) {
            const auto b = static_cast<std::size_t>(constellation.bit(q, static_cast<int>(j)));
            best[j][b] = std::max(best[j][b], total - lp[j]);
        }
    }
    std::vector<double> out(bits);
    for (std::size_t j = 0; j < bits; ++j) out[j] = clamp_llr(best[j][1] - best[j][0]);
    return out;
}

std::vector<IddIteration> run_idd(const FrontEndTrace& trace, std::span<const Interleaver> interleavers,
                                  const Constellation& constellation, double sigma_v2, const IddConfig& config)
{
    if (config.turbo_iterations < 1) throw ConfigError("run_idd: turbo iterations must be >= 1");
    const std::size_t n_vec = trace.received.size();
    if (n_vec == 0) throw UsageError("run_idd: empty frame");
    if (trace.soft.size() != n_vec || trace.snapshots.size() != n_vec || trace.decisions.size() != n_vec) {
        throw UsageError("run_idd: trace fields differ in length");
    }
    const auto k_users = static_cast<std::size_t>(trace.soft.front().size());
    const auto bits = static_cast<std::size_t>(constellation.bits_per_symbol());
    if (interleavers.size() != k_users) throw UsageError("run_idd: one interleaver per user required");
    for (const auto& il : interleavers) {
        if (il.length() != n_vec * bits) throw UsageError("run_idd: interleaver length differs from frame bits");
    }
    const bool pdf_family = config.detector == DetectorKind::Pdf || config.detector == DetectorKind::Pdfcc;

    // Interleaved-domain LLRs, indexed [t][k * J + j].
    std::vector<std::vector<double>> prior(n_vec, std::vector<double>(k_users * bits, 0.0));
    std::vector<std::vector<double>> extrinsic(n_vec, std::vector<double>(k_users * bits, 0.0));
    std::vector<CVector> soft = trace.soft;
    std::vector<CVector> reference = trace.decisions;  // per-vector symbols used for variance estimates

    std::vector<IddIteration> result;
    CVector regressor;
    std::vector<double> var(k_users);
    for (int it = 0; it < config.turbo_iterations; ++it) {
        for (std::size_t k = 0; k < k_users; ++k) {
            double acc = 0.0;
            for (std::size_t t = 0; t < n_vec; ++t) acc += std::norm(soft[t](static_cast<Eigen::Index>(k)) - reference[t](static_cast<Eigen::Index>(k)));
            var[k] = std::max(acc / static_cast<double>(n_vec), kMinVariance);
        }

        double gamma_sum = 0.0;
        for (std::size_t t = 0; t < n_vec; ++t) {
            auto& ext = extrinsic[t];
            const auto& pri = prior[t];
            switch (config.detector) {
            case DetectorKind::Pdf:
            case DetectorKind::Sdf:
                for (std::size_t k = 0; k < k_users; ++k) {
                    const auto l = stream_llr(soft[t](static_cast<Eigen::Index>(k)), var[k],
                                              std::span(pri).subspan(k * bits, bits), constellation);
                    std::copy(l.begin(), l.end(), ext.begin() + static_cast<std::ptrdiff_t>(k * bits));
                }
                gamma_sum += 1.0;
                break;
            case DetectorKind::Pdfcc: {
                std::vector<ReliabilityVerdict> verdicts(k_users);
                for (std::size_t k = 0; k < k_users; ++k) verdicts[k] = check_reliability(soft[t](static_cast<Eigen::Index>(k)), constellation, config.d_th);
                const auto table = SymbolProbTable::posterior(soft[t], var, pri, constellation);
                const auto lists = build_idd_list(table, verdicts, config.tau_max);
                auto sd = soft_detect_llr(trace.received[t], trace.snapshots[t].channel_estimate, lists, pri, sigma_v2, constellation);
                ext = std::move(sd.extrinsic);
                gamma_sum += static_cast<double>(sd.gamma);
                break;
            }
            case DetectorKind::Ml: {
                std::vector<std::vector<std::size_t>> lists(k_users, std::vector<std::size_t>(constellation.size()));
                for (auto& l : lists) std::iota(l.begin(), l.end(), std::size_t{0});
                auto sd = soft_detect_llr(trace.received[t], trace.snapshots[t].channel_estimate, lists, pri, sigma_v2, constellation);
                ext = std::move(sd.extrinsic);
                gamma_sum += static_cast<double>(sd.gamma);
                break;
            }
            }
        }

        IddIteration rec;
        rec.mean_gamma = gamma_sum / static_cast<double>(n_vec);
        rec.message.resize(k_users);
        rec.coded.resize(k_users);
        std::vector<std::vector<double>> app_interleaved(k_users);
        for (std::size_t k = 0; k < k_users; ++k) {
            std::vector<double> stream(n_vec * bits);
            for (std::size_t t = 0; t < n_vec; ++t) {
                for (std::size_t j = 0; j < bits; ++j) stream[t * bits + j] = extrinsic[t][k * bits + j];
            }
            const auto channel = interleavers[k].deinterleave<double>(stream);
            const auto dec = bcjr_decode(channel, {}, config.metric);
            rec.message[k] = hard_decisions(dec.message_app);
            rec.coded[k] = hard_decisions(dec.coded_app);
            const auto fb = interleavers[k].interleave<double>(dec.coded_extrinsic);
            app_interleaved[k] = interleavers[k].interleave<double>(dec.coded_app);
            for (std::size_t t = 0; t < n_vec; ++t) {
                for (std::size_t j = 0; j < bits; ++j) prior[t][k * bits + j] = fb[t * bits + j];
            }
        }
        result.push_back(std::move(rec));

        // Decoder decisions as symbols; they serve as the cancellation input
        // and the variance reference for the next pass.
        std::vector<std::uint8_t> label(bits);
        for (std::size_t t = 0; t < n_vec; ++t) {
            CVector s(static_cast<Eigen::Index>(k_users));
            for (std::size_t k = 0; k < k_users; ++k) {
                for (std::size_t j = 0; j < bits; ++j) label[j] = app_interleaved[k][t * bits + j] > 0.0 ? 1 : 0;
                s(static_cast<Eigen::Index>(k)) = constellation.map_bits(label);
            }
            reference[t] = s;
            if (pdf_family && !trace.snapshots[t].feedback_weights.empty()) {
                const auto& weights = trace.snapshots[t].feedback_weights;
                for (std::size_t k = 0; k < k_users; ++k) {
                    parallel_regressor(trace.received[t], s, k, regressor);
                    soft[t](static_cast<Eigen::Index>(k)) = weights[k].dot(regressor);  // dot conjugates w
                }
            }
        }
    }
    return result;
}

}  // namespace mudet
