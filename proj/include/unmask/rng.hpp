#pragma once

#include <cstdint>
#include <vector>

namespace unmask {

// Counter-based pseudorandom generator built on the SplitMix64 mixing
// function. A stream is identified by a 64-bit key; draws hash
// (key, counter) so that streams never share state.
//
// Substream scheme (this is the documented counter scheme required for
// reproducibility): derive(w) folds the word w into the key with one
// SplitMix64 step, so the stream named by a master seed plus a path of
// words, e.g. rng(seed).derive(kStreamTokens).derive(step).derive(i),
// is the same regardless of the order other streams are consumed in or
// of how work is split across workers.
class KeyedRng {
public:
    explicit KeyedRng(std::uint64_t seed);

    // New independent stream obtained by folding `word` into the key.
    KeyedRng derive(std::uint64_t word) const;

    std::uint64_t next();

    // Uniform on [0, 1), 53-bit resolution.
    double uniform();

    // Uniform on (0, 1].
    double uniform_pos();

    // Uniform integer in {0, ..., bound-1}; unbiased via rejection.
    std::uint32_t below(std::uint32_t bound);

    // Standard normal via Box-Muller. Draws two uniforms per call.
    double normal();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Gamma(shape, 1) sample, Marsaglia-Tsang. Deterministic for a given
// stream state across platforms (no libstdc++ distribution involved).
double sample_gamma(KeyedRng& rng, double shape);

// Geometric on {1,...,m} with P(X=i) = (1-p)^{i-1} p for i < m and the
// remaining mass (1-p)^{m-1} on m itself.
int sample_truncated_geometric(KeyedRng& rng, double p, int m);

// Removes `count` uniformly chosen elements from `pool` and returns them
// sorted ascending.
std::vector<int> draw_subset(KeyedRng& rng, std::vector<int>& pool, int count);

}  // namespace unmask
