#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mudet {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

// Caller passed arguments that violate an operation's preconditions
// (wrong lengths, mismatched dimensions, negative thresholds).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Experiment or component configuration is invalid (K > N_R, Doppler out of
// range, exhaustive search too large). Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numeric guard tripped at runtime (non-finite filter state). Maps to CLI
// exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tally of complex multiplications. Squared magnitudes |z|^2 count as one
// complex multiplication; multiplications by real scalars are not counted.
struct OpCounter {
    std::uint64_t complex_mults = 0;

    void add(std::uint64_t n) noexcept { complex_mults += n; }
};

inline void count(OpCounter* ops, std::uint64_t n) noexcept
{
    if (ops != nullptr) ops->add(n);
}

}  // namespace mudet
