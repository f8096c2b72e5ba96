#include "mudet/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mudet {

namespace {

void check_dims(const CVector& r, std::span<const ReceiverState> states, std::size_t backward_expected,
                bool parallel)
{
    if (states.empty()) throw UsageError("detector: no receiver states");
    for (std::size_t p = 0; p < states.size(); ++p) {
        const auto& st = states[p];
        const std::size_t want_back = parallel ? backward_expected : p;
        if (st.forward_len != static_cast<std::size_t>(r.size()) || st.backward_len != want_back) {
            throw UsageError("detector: receiver state " + std::to_string(p) + " has shape (" +
                             std::to_string(st.forward_len) + "," + std::to_string(st.backward_len) +
                             "), expected (" + std::to_string(r.size()) + "," + std::to_string(want_back) +
                             ")");
        }
    }
}

void fill_decisions(DetectionResult& out, const Constellation& constellation)
{
    out.decisions.resize(static_cast<Eigen::Index>(out.decision_indices.size()));
    for (std::size_t k = 0; k < out.decision_indices.size(); ++k)
        out.decisions(static_cast<Eigen::Index>(k)) = constellation.point(out.decision_indices[k]);
}

// Forward-part inner product w_f^H r.
Complex forward_output(const ReceiverState& st, const CVector& r)
{
    const CVector& w = st.filter.weights();
    Complex acc{0.0, 0.0};
    for (Eigen::Index t = 0; t < r.size(); ++t) acc += std::conj(w(t)) * r(t);
    return acc;
}

// Backward-part inner product over the decisions of all users except `user`.
Complex backward_output(const ReceiverState& st, const CVector& decisions, std::size_t user,
                        Eigen::Index offset)
{
    const CVector& w = st.filter.weights();
    Complex acc{0.0, 0.0};
    Eigen::Index t = offset;
    for (Eigen::Index k = 0; k < decisions.size(); ++k) {
        if (static_cast<std::size_t>(k) == user) continue;
        acc += std::conj(w(t++)) * decisions(k);
    }
    return acc;
}

}  // namespace

double residual_metric(const CVector& r, const CMatrix& h, std::span<const std::size_t> indices,
                       const Constellation& constellation, OpCounter* ops)
{
    const Eigen::Index nr = h.rows();
    const Eigen::Index k = h.cols();
    double sum = 0.0;
    for (Eigen::Index n = 0; n < nr; ++n) {
        Complex e = r(n);
        for (Eigen::Index u = 0; u < k; ++u) e -= h(n, u) * constellation.point(indices[static_cast<std::size_t>(u)]);
        sum += std::norm(e);
    }
    count(ops, metric_cost(static_cast<std::size_t>(nr), static_cast<std::size_t>(k)));
    return sum;
}

DetectionResult ml_detect(const CVector& r, const CMatrix& h, const Constellation& constellation)
{
    const std::size_t k = static_cast<std::size_t>(h.cols());
    if (r.size() != h.rows()) throw UsageError("ml_detect: r and H row counts differ");
    const std::size_t c = constellation.size();
    std::uint64_t total = 1;
    for (std::size_t u = 0; u < k; ++u) {
        total *= c;
        if (total > kMaxExhaustiveCandidates) {
            throw ConfigError("ml_detect: |X|^K exceeds the exhaustive-search cap of 2^20");
        }
    }

    OpCounter ops;
    std::vector<std::size_t> idx(k, 0);
    std::vector<std::size_t> best(k, 0);
    double best_metric = std::numeric_limits<double>::infinity();
    for (std::uint64_t n = 0; n < total; ++n) {
        const double m = residual_metric(r, h, idx, constellation, &ops);
        if (m < best_metric) {
            best_metric = m;
            best = idx;
        }
        for (std::size_t u = k; u-- > 0;) {  // odometer, last user fastest
            if (++idx[u] < c) break;
            idx[u] = 0;
        }
    }

    DetectionResult out;
    out.decision_indices = std::move(best);
    out.gamma = static_cast<std::size_t>(total);
    out.op_count = ops.complex_mults;
    fill_decisions(out, constellation);
    return out;
}

DetectionOrder compute_order(const CMatrix& h)
{
    std::vector<double> norms(static_cast<std::size_t>(h.cols()));
    for (Eigen::Index c = 0; c < h.cols(); ++c) norms[static_cast<std::size_t>(c)] = h.col(c).squaredNorm();
    DetectionOrder order(norms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
    return order;
}

DetectionResult sdf_detect(const CVector& r, std::span<const ReceiverState> states,
                           const DetectionOrder& order, const Constellation& constellation)
{
    const std::size_t k = states.size();
    if (order.size() != k) throw UsageError("sdf_detect: order length differs from number of states");
    check_dims(r, states, 0, false);

    DetectionResult out;
    out.decision_indices.assign(k, 0);
    out.soft = CVector::Zero(static_cast<Eigen::Index>(k));
    out.decisions = CVector::Zero(static_cast<Eigen::Index>(k));
    OpCounter ops;
    for (std::size_t p = 0; p < k; ++p) {
        const std::size_t user = order[p];
        const CVector& w = states[p].filter.weights();
        Complex u = forward_output(states[p], r);
        for (std::size_t q = 0; q < p; ++q) {
            u += std::conj(w(r.size() + static_cast<Eigen::Index>(q))) *
                 out.decisions(static_cast<Eigen::Index>(order[q]));
        }
        ops.add(static_cast<std::uint64_t>(r.size()) + p);
        const std::size_t idx = constellation.slice_index(u);
        out.soft(static_cast<Eigen::Index>(user)) = u;
        out.decision_indices[user] = idx;
        out.decisions(static_cast<Eigen::Index>(user)) = constellation.point(idx);
    }
    out.op_count = ops.complex_mults;
    return out;
}

DetectionResult pdf_stage2(const CVector& r, std::span<const ReceiverState> states, const CVector& first_pass,
                           const Constellation& constellation)
{
    const std::size_t k = states.size();
    check_dims(r, states, k - 1, true);
    if (static_cast<std::size_t>(first_pass.size()) != k) throw UsageError("pdf_stage2: first pass must hold K decisions");

    DetectionResult out;
    out.decision_indices.assign(k, 0);
    out.soft = CVector::Zero(static_cast<Eigen::Index>(k));
    for (std::size_t u = 0; u < k; ++u) {
        const Complex val = forward_output(states[u], r) + backward_output(states[u], first_pass, u, r.size());
        out.soft(static_cast<Eigen::Index>(u)) = val;
        out.decision_indices[u] = constellation.slice_index(val);
    }
    out.op_count = static_cast<std::uint64_t>(k) * states[0].filter.dim();
    fill_decisions(out, constellation);
    return out;
}

DetectionResult pdf_detect(const CVector& r, std::span<const ReceiverState> states,
                           const Constellation& constellation, std::span<const ReceiverState> stage1)
{
    const std::size_t k = states.size();
    check_dims(r, states, k - 1, true);
    const bool linear_stage1 = !stage1.empty();
    if (linear_stage1) {
        if (stage1.size() != k) throw UsageError("pdf_detect: stage-1 filter count differs from K");
        check_dims(r, stage1, 0, true);
    }

    CVector first(static_cast<Eigen::Index>(k));
    for (std::size_t u = 0; u < k; ++u) {
        const Complex pre = forward_output(linear_stage1 ? stage1[u] : states[u], r);
        first(static_cast<Eigen::Index>(u)) = constellation.slice(pre);
    }
    DetectionResult out = pdf_stage2(r, states, first, constellation);
    const auto first_ops = static_cast<std::uint64_t>(r.size()) * k;
    // The forward products are shared with stage 2 unless stage 1 has its own filters.
    out.op_count += linear_stage1 ? first_ops : 0;
    return out;
}

void parallel_regressor(const CVector& r, const CVector& decisions, std::size_t user, CVector& out)
{
    const Eigen::Index nr = r.size();
    const Eigen::Index k = decisions.size();
    out.resize(nr + k - 1);
    out.head(nr) = r;
    Eigen::Index t = nr;
    for (Eigen::Index u = 0; u < k; ++u) {
        if (static_cast<std::size_t>(u) != user) out(t++) = decisions(u);
    }
}

DetectionResult pdfcc_detect(const CVector& r, std::span<const ReceiverState> states,
                             const CMatrix& h_est, const Constellation& constellation,
                             const PdfccOptions& options, std::span<const ReceiverState> stage1)
{
    return apply_constraints(r, pdf_detect(r, states, constellation, stage1), states, h_est, constellation,
                             options);
}

DetectionResult apply_constraints(const CVector& r, DetectionResult pdf, std::span<const ReceiverState> states,
                                  const CMatrix& h_est, const Constellation& constellation,
                                  const PdfccOptions& options)
{
    if (h_est.rows() != r.size() || static_cast<std::size_t>(h_est.cols()) != states.size()) {
        throw UsageError("pdfcc_detect: channel estimate shape does not match r and K");
    }
    if (options.gamma_cap < 1) throw UsageError("pdfcc_detect: gamma cap must be >= 1");

    DetectionResult out = std::move(pdf);
    const std::size_t k = states.size();
    OpCounter ops;
    ops.add(out.op_count);

    // Reliability check: distance to every point, one |.|^2 each.
    out.verdicts.resize(k);
    out.candidate_lists.resize(k);
    for (std::size_t u = 0; u < k; ++u) {
        const Complex val = out.soft(static_cast<Eigen::Index>(u));
        out.verdicts[u] = check_reliability(val, constellation, options.d_th);
        out.candidate_lists[u] = build_candidate_list(val, out.verdicts[u], constellation, options.tau_max);
    }
    ops.add(static_cast<std::uint64_t>(k * constellation.size()));

    auto gamma_of = [&] {
        long double g = 1.0L;
        for (const auto& l : out.candidate_lists) g *= static_cast<long double>(l.size());
        return g;
    };
    while (gamma_of() > static_cast<long double>(options.gamma_cap)) {
        std::size_t drop = k;
        double worst = -1.0;
        for (std::size_t u = 0; u < k; ++u) {
            const auto& l = out.candidate_lists[u];
            if (l.size() < 2) continue;
            const double d = std::norm(out.soft(static_cast<Eigen::Index>(u)) - constellation.point(l.back()));
            if (d > worst) {
                worst = d;
                drop = u;
            }
        }
        out.candidate_lists[drop].pop_back();
    }

    std::size_t gamma = 1;
    for (const auto& l : out.candidate_lists) gamma *= l.size();
    out.gamma = gamma;

    if (gamma > 1) {
        std::vector<std::size_t> pos(k, 0);
        std::vector<std::size_t> idx(k);
        std::vector<std::size_t> best(k);
        double best_metric = std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < gamma; ++n) {
            for (std::size_t u = 0; u < k; ++u) idx[u] = out.candidate_lists[u][pos[u]];
            const double m = residual_metric(r, h_est, idx, constellation, &ops);
            if (m < best_metric || (m == best_metric && idx < best)) {
                best_metric = m;
                best = idx;
            }
            for (std::size_t u = k; u-- > 0;) {
                if (++pos[u] < out.candidate_lists[u].size()) break;
                pos[u] = 0;
            }
        }
        out.decision_indices = std::move(best);
    } else {
        for (std::size_t u = 0; u < k; ++u) out.decision_indices[u] = out.candidate_lists[u].front();
    }
    fill_decisions(out, constellation);

    if (options.recancel) {
        for (std::size_t u = 0; u < k; ++u) {
            out.soft(static_cast<Eigen::Index>(u)) =
                forward_output(states[u], r) + backward_output(states[u], out.decisions, u, r.size());
        }
        ops.add(static_cast<std::uint64_t>(k) * states[0].filter.dim());
    }
    out.op_count = ops.complex_mults;
    return out;
}

}  // namespace mudet
