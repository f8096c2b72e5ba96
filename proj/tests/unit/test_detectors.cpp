#include <doctest.h>

#include <limits>
#include <vector>

#include "fixtures.hpp"
#include "mudet/detectors.hpp"
#include "oracles.hpp"

using namespace mudet;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CVector noisy(const CMatrix& h, const CVector& s, double sigma_v2, Rng& rng)
{
    CVector r = h * s;
    for (Eigen::Index n = 0; n < r.size(); ++n) r(n) += complex_gaussian(rng, sigma_v2);
    return r;
}

}  // namespace

TEST_CASE("ML detector equals brute-force enumeration")
{
    for (const auto& c : {Constellation::qpsk(), Constellation::qam16()}) {
        Rng rng(11);
        const std::size_t k = c.size() == 4 ? 4 : 2;
        for (int trial = 0; trial < 300; ++trial) {
            const CMatrix h = fixture::random_channel(4, k, rng);
            const CVector s = fixture::symbols(fixture::random_indices(k, c.size(), rng), c);
            const CVector r = noisy(h, s, 0.5, rng);
            const auto res = ml_detect(r, h, c);
            CHECK(res.decision_indices == oracle::brute_ml(r, h, fixture::points(c)));
            CHECK(res.gamma == static_cast<std::size_t>(std::pow(c.size(), k)));
            CHECK(res.op_count == res.gamma * metric_cost(4, k));
        }
    }
}

TEST_CASE("ML rejects oversized searches and mismatched dimensions")
{
    const auto c = Constellation::qam16();
    CHECK_THROWS_AS(ml_detect(CVector::Zero(8), CMatrix::Zero(8, 8), c), ConfigError);
    CHECK_THROWS_AS(ml_detect(CVector::Zero(3), CMatrix::Zero(4, 2), c), UsageError);
}

TEST_CASE("ML recovers the transmitted vector without noise")
{
    Rng rng(3);
    const auto c = Constellation::qpsk();
    for (int trial = 0; trial < 50; ++trial) {
        const CMatrix h = fixture::random_channel(3, 3, rng);
        const auto idx = fixture::random_indices(3, c.size(), rng);
        CHECK(ml_detect(h * fixture::symbols(idx, c), h, c).decision_indices == idx);
    }
}

TEST_CASE("order sorts by decreasing column norm, ties by index")
{
    CMatrix h = CMatrix::Zero(2, 3);
    h(0, 0) = 1.0;
    h(0, 1) = 3.0;
    h(1, 2) = 1.0;
    CHECK(compute_order(h) == DetectionOrder{1, 0, 2});
}

TEST_CASE("P-DF hand-computed two-user case")
{
    const auto c = Constellation::qpsk();
    auto states = init_receiver(2, 2, FeedbackMode::Parallel, 0.998, 0.01);
    CVector w0(3), w1(3);
    w0 << 1.0, 0.0, -0.5;
    w1 << 0.0, 1.0, 0.25;
    states[0].filter.set_weights(w0);
    states[1].filter.set_weights(w1);
    CVector r(2);
    r << Complex(0.8, 0.6), Complex(-0.9, 0.2);
    const auto res = pdf_detect(r, states, c);
    // stage 1: forward parts give r0 -> (+,+) and r1 -> (-,+)
    const Complex s0 = c.point(0), s1 = c.point(2);
    CHECK(std::abs(res.soft(0) - (r(0) - 0.5 * s1)) < 1e-12);
    CHECK(std::abs(res.soft(1) - (r(1) + 0.25 * s0)) < 1e-12);
    CHECK(res.decision_indices[0] == c.slice_index(r(0) - 0.5 * s1));
    CHECK(res.op_count == 2 * 3);
}

TEST_CASE("P-DF with zeroed backward weights is the linear receiver")
{
    Rng rng(5);
    const auto c = Constellation::qpsk();
    const CMatrix h = fixture::random_channel(4, 4, rng);
    auto states = fixture::trained_pdf_states(h, c, 0.1, 200, rng);
    for (auto& st : states) {
        CVector w = st.filter.weights();
        w.tail(static_cast<Eigen::Index>(st.backward_len)).setZero();
        st.filter.set_weights(w);
    }
    for (int trial = 0; trial < 100; ++trial) {
        const CVector r = noisy(h, fixture::symbols(fixture::random_indices(4, 4, rng), c), 0.1, rng);
        const auto res = pdf_detect(r, states, c);
        for (std::size_t u = 0; u < 4; ++u) {
            const Complex lin = states[u].forward_weights().dot(r);
            CHECK(std::abs(res.soft(static_cast<Eigen::Index>(u)) - lin) < 1e-12);
        }
    }
}

TEST_CASE("P-DFCC limits: infinite threshold is P-DF, zero threshold is ML")
{
    Rng rng(21);
    for (const auto& c : {Constellation::qpsk(), Constellation::qam16()}) {
        const std::size_t k = c.size() == 4 ? 4 : 2;
        const CMatrix h = fixture::random_channel(4, k, rng);
        const auto states = fixture::trained_pdf_states(h, c, 0.2, 300, rng);
        const auto stage1 = init_receiver(k, 4, FeedbackMode::Parallel, 0.998, 0.01);
        for (int trial = 0; trial < 200; ++trial) {
            const CVector r = noisy(h, fixture::symbols(fixture::random_indices(k, c.size(), rng), c), 0.3, rng);
            const auto pdf = pdf_detect(r, states, c);
            const auto inf = pdfcc_detect(r, states, h, c, {kInf, 4, 4096, false});
            CHECK(inf.decision_indices == pdf.decision_indices);
            CHECK(inf.gamma == 1);
            CHECK(inf.op_count == pdf.op_count + k * c.size());

            const auto zero = pdfcc_detect(r, states, h, c, {0.0, c.size(), 1u << 20, false});
            CHECK(zero.decision_indices == ml_detect(r, h, c).decision_indices);
            CHECK(zero.gamma == static_cast<std::size_t>(std::pow(c.size(), k)));
        }
    }
}

TEST_CASE("P-DFCC metric never exceeds the P-DF metric and ML bounds it below")
{
    Rng rng(23);
    const auto c = Constellation::qpsk();
    const CMatrix h = fixture::random_channel(4, 4, rng);
    const auto states = fixture::trained_pdf_states(h, c, 0.3, 300, rng);
    for (int trial = 0; trial < 500; ++trial) {
        const CVector r = noisy(h, fixture::symbols(fixture::random_indices(4, 4, rng), c), 0.6, rng);
        const auto pdf = pdf_detect(r, states, c);
        const auto cc = pdfcc_detect(r, states, h, c, {0.3, 4, 4096, false});
        const auto ml = ml_detect(r, h, c);
        const double m_pdf = residual_metric(r, h, pdf.decision_indices, c);
        const double m_cc = residual_metric(r, h, cc.decision_indices, c);
        const double m_ml = residual_metric(r, h, ml.decision_indices, c);
        CHECK(m_cc <= m_pdf);
        CHECK(m_ml <= m_cc);
        std::size_t g = 1;
        for (const auto& l : cc.candidate_lists) g *= l.size();
        CHECK(cc.gamma == g);
        if (cc.gamma > 1) CHECK(cc.op_count == pdf.op_count + 16 + cc.gamma * metric_cost(4, 4));
    }
}

TEST_CASE("Gamma grows with the threshold radius")
{
    Rng rng(29);
    const auto c = Constellation::qpsk();
    const CMatrix h = fixture::random_channel(4, 4, rng);
    const auto states = fixture::trained_pdf_states(h, c, 0.3, 300, rng);
    for (int trial = 0; trial < 200; ++trial) {
        const CVector r = noisy(h, fixture::symbols(fixture::random_indices(4, 4, rng), c), 0.6, rng);
        std::size_t prev = 0;
        // Smaller d_th flags more estimates, so sweep from loose to tight.
        for (double d : {kInf, 0.6, 0.4, 0.2, 0.1, 0.05, 0.0}) {
            const auto cc = pdfcc_detect(r, states, h, c, {d, 4, 4096, false});
            CHECK(cc.gamma >= prev);
            prev = cc.gamma;
        }
    }
}

TEST_CASE("one unreliable user among two gives four candidates")
{
    const auto c = Constellation::qpsk();
    auto states = init_receiver(2, 2, FeedbackMode::Parallel, 0.998, 0.01);
    CVector w0(3), w1(3);
    w0 << 1.0, 0.0, 0.0;
    w1 << 0.0, 1.0, 0.0;
    states[0].filter.set_weights(w0);
    states[1].filter.set_weights(w1);
    const CMatrix h = CMatrix::Identity(2, 2);
    CVector r(2);
    r << Complex(0.02, 0.03), c.point(1) + Complex(0.01, 0.0);
    const auto cc = pdfcc_detect(r, states, h, c, {0.05, 4, 4096, false});
    CHECK_FALSE(cc.verdicts[0].reliable);
    CHECK(cc.verdicts[1].reliable);
    CHECK(cc.gamma == 4);
    CHECK(cc.decision_indices == oracle::brute_ml(r, h, fixture::points(c)));
}

TEST_CASE("Gamma cap drops the farthest candidates")
{
    Rng rng(31);
    const auto c = Constellation::qpsk();
    const CMatrix h = fixture::random_channel(4, 4, rng);
    const auto states = fixture::trained_pdf_states(h, c, 0.3, 200, rng);
    const CVector r = noisy(h, fixture::symbols(fixture::random_indices(4, 4, rng), c), 0.3, rng);
    const auto cc = pdfcc_detect(r, states, h, c, {0.0, 4, 10, false});
    CHECK(cc.gamma <= 10);
    for (std::size_t u = 0; u < 4; ++u) CHECK_FALSE(cc.candidate_lists[u].empty());
}

TEST_CASE("S-DF without noise and with matched filters recovers the symbols")
{
    Rng rng(37);
    const auto c = Constellation::qpsk();
    for (int trial = 0; trial < 50; ++trial) {
        const CMatrix h = fixture::random_channel(3, 3, rng);
        const auto order = compute_order(h);
        auto states = init_receiver(3, 3, FeedbackMode::Successive, 0.998, 0.01);
        // Zero-forcing rows with exact cancellation of already-decided users.
        const CMatrix g = h.inverse();
        for (std::size_t p = 0; p < 3; ++p) {
            CVector w = CVector::Zero(static_cast<Eigen::Index>(3 + p));
            w.head(3) = g.row(static_cast<Eigen::Index>(order[p])).adjoint();
            states[p].filter.set_weights(w);
        }
        const auto idx = fixture::random_indices(3, 4, rng);
        const auto res = sdf_detect(h * fixture::symbols(idx, c), states, order, c);
        CHECK(res.decision_indices == idx);
        CHECK(res.op_count == 3 + 4 + 5);
    }
}

TEST_CASE("detectors reject malformed states")
{
    const auto c = Constellation::qpsk();
    const auto states = init_receiver(2, 3, FeedbackMode::Parallel, 0.998, 0.01);
    CHECK_THROWS_AS(pdf_detect(CVector::Zero(2), states, c), UsageError);
    CHECK_THROWS_AS(pdfcc_detect(CVector::Zero(3), states, CMatrix::Zero(3, 3), c, {}), UsageError);
    CHECK_THROWS_AS(sdf_detect(CVector::Zero(3), init_receiver(2, 3, FeedbackMode::Successive, 0.998, 0.01),
                               DetectionOrder{0}, c),
                    UsageError);
}
