#include <doctest.h>

#include <vector>

#include "fixtures.hpp"
#include "mudet/estimation.hpp"
#include "oracles.hpp"

using namespace mudet;

namespace {

CVector random_vector(Eigen::Index n, Rng& rng)
{
    CVector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = complex_gaussian(rng);
    return x;
}

}  // namespace

TEST_CASE("RLS recursion equals the regularized exponentially weighted LS solution")
{
    for (double lambda : {0.95, 0.998, 1.0}) {
        CAPTURE(lambda);
        Rng rng(17);
        RlsFilter f(5, lambda, 0.1);
        const CVector w_true = random_vector(5, rng);
        std::vector<CVector> xs;
        std::vector<Complex> ds;
        double worst = 0.0;
        for (int t = 0; t < 200; ++t) {
            xs.push_back(random_vector(5, rng));
            ds.push_back(w_true.dot(xs.back()) + complex_gaussian(rng, 0.01));
            f.update(xs.back(), ds.back());
            if (t % 20 == 19 || t < 3)
                worst = std::max(worst, (f.weights() - oracle::direct_ls(xs, ds, lambda, 0.1)).norm());
        }
        CHECK(worst < 1e-8);
        CHECK((f.weights() - w_true).norm() < 0.1);
    }
}

TEST_CASE("RLS update returns the a-priori output and counts 2n^2 + 3n")
{
    Rng rng(2);
    RlsFilter f(4, 0.99, 1.0);
    f.update(random_vector(4, rng), Complex{1.0, 0.0});
    const CVector x = random_vector(4, rng);
    const Complex before = f.weights().dot(x);
    OpCounter ops;
    CHECK(std::abs(f.update(x, Complex{0.0, 1.0}, &ops) - before) < 1e-12);
    CHECK(ops.complex_mults == 2 * 16 + 3 * 4);
    OpCounter out_ops;
    CHECK(std::abs(f.output(x, &out_ops) - f.weights().dot(x)) < 1e-12);
    CHECK(out_ops.complex_mults == 4);
}

TEST_CASE("RLS initial inverse correlation is I / delta")
{
    RlsFilter f(3, 0.998, 100.0);
    CHECK(f.inv_corr().isApprox(0.01 * CMatrix::Identity(3, 3)));
    CHECK(f.weights().isZero());
    CHECK_THROWS_AS(f.set_weights(CVector::Zero(2)), UsageError);
}

TEST_CASE("init_receiver dimensions")
{
    const auto par = init_receiver(4, 6, FeedbackMode::Parallel, 0.998, 0.01);
    REQUIRE(par.size() == 4);
    for (const auto& s : par) {
        CHECK(s.forward_len == 6);
        CHECK(s.backward_len == 3);
        CHECK(s.filter.dim() == 9);
    }
    const auto succ = init_receiver(4, 6, FeedbackMode::Successive, 0.998, 0.01);
    for (std::size_t p = 0; p < succ.size(); ++p) CHECK(succ[p].backward_len == p);
}

TEST_CASE("channel estimator recursion equals the batch estimate")
{
    Rng rng(5);
    const CMatrix h = fixture::random_channel(4, 3, rng);
    ChannelEstimator est(4, 3, 0.99, 0.5);
    std::vector<CVector> rs, ss;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        ss.push_back(random_vector(3, rng));
        rs.push_back(h * ss.back() + 0.1 * random_vector(4, rng));
        est.update(rs.back(), ss.back());
        worst = std::max(worst, (est.estimate() - oracle::batch_channel(rs, ss, 0.99, 0.5)).norm());
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("noiseless training with negligible regularization recovers H")
{
    Rng rng(8);
    const auto c = Constellation::qpsk();
    const CMatrix h = fixture::random_channel(4, 4, rng);
    ChannelEstimator est(4, 4, 0.998, 1e-9);
    for (int t = 0; t < 40; ++t) {
        const CVector s = fixture::symbols(fixture::random_indices(4, c.size(), rng), c);
        est.update(h * s, s);
    }
    CHECK((est.estimate() - h).cwiseAbs().maxCoeff() < 1e-6);
}
