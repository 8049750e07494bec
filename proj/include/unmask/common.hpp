#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace unmask {

// Error taxonomy shared by the whole library. The C API maps these onto
// um_status codes and the CLI onto process exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input value (bad subset, bad probability vector, ...).
struct InvalidArgument : Error {
    using Error::Error;
};

// A state-space or enumeration guard would be exceeded.
struct GuardExceeded : Error {
    using Error::Error;
};

// Malformed JSON / file contents.
struct ParseError : Error {
    using Error::Error;
};

// Conditioning event has probability zero. Never silently replaced by a
// uniform fallback: that would corrupt exact error computations.
struct UndefinedConditional : Error {
    using Error::Error;
};

// Model parameter sits on a singular boundary (degenerate covariance).
struct SingularModel : Error {
    using Error::Error;
};

// Target distribution has no correlation structure (D = 0), so the
// requested rescaling/optimization is undefined.
struct NoCorrelation : Error {
    using Error::Error;
};

// A method's hypothesis (e.g. strictly increasing profile) is violated.
struct HypothesisViolated : Error {
    using Error::Error;
};

// Neumaier compensated summation. Enumeration sums must stay accurate to
// ~1e-15 even over 1e7 terms, which plain accumulation does not give.
class StableSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline constexpr std::uint64_t kDefaultStateGuard = 10'000'000;

// Hard cap for operations that enumerate ordered partitions of {1..N}.
inline constexpr int kPartitionGuardN = 6;

}  // namespace unmask
