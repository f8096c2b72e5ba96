#pragma once

#include <vector>

#include "mudet/constellation.hpp"
#include "mudet/estimation.hpp"
#include "mudet/rng.hpp"

namespace fixture {

inline std::vector<mudet::Complex> points(const mudet::Constellation& c)
{
    return {c.points().begin(), c.points().end()};
}

inline mudet::CMatrix random_channel(std::size_t nr, std::size_t k, mudet::Rng& rng)
{
    mudet::CMatrix h(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) = mudet::complex_gaussian(rng);
    return h;
}

inline std::vector<std::size_t> random_indices(std::size_t k, std::size_t alphabet, mudet::Rng& rng)
{
    std::vector<std::size_t> idx(k);
    for (auto& q : idx) q = rng() % alphabet;
    return idx;
}

inline mudet::CVector symbols(const std::vector<std::size_t>& idx, const mudet::Constellation& c)
{
    mudet::CVector s(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) s(static_cast<Eigen::Index>(k)) = c.point(idx[k]);
    return s;
}

/// P-DF states whose weights come from RLS training on `n_train` random
/// vectors over channel h, so that outputs behave like a working receiver.
inline std::vector<mudet::ReceiverState> trained_pdf_states(const mudet::CMatrix& h, const mudet::Constellation& c,
                                                            double sigma_v2, std::size_t n_train, mudet::Rng& rng)
{
    const auto k = static_cast<std::size_t>(h.cols());
    const auto nr = static_cast<std::size_t>(h.rows());
    auto states = mudet::init_receiver(k, nr, mudet::FeedbackMode::Parallel, 0.998, 0.01);
    mudet::CVector x;
    for (std::size_t t = 0; t < n_train; ++t) {
        const auto idx = random_indices(k, c.size(), rng);
        const mudet::CVector s = symbols(idx, c);
        mudet::CVector r = h * s;
        for (Eigen::Index n = 0; n < r.size(); ++n) r(n) += mudet::complex_gaussian(rng, sigma_v2);
        for (std::size_t u = 0; u < k; ++u) {
            x.resize(static_cast<Eigen::Index>(nr + k - 1));
            x.head(static_cast<Eigen::Index>(nr)) = r;
            Eigen::Index p = static_cast<Eigen::Index>(nr);
            for (std::size_t v = 0; v < k; ++v)
                if (v != u) x(p++) = s(static_cast<Eigen::Index>(v));
            states[u].filter.update(x, s(static_cast<Eigen::Index>(u)));
        }
    }
    return states;
}

}  // namespace fixture
