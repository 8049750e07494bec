#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "unmask/common.hpp"

namespace unmask {

// Finite token alphabet. Labels are only used for display and trace files;
// all computation is on 0-based token indices.
struct TokenSpace {
    std::vector<std::string> labels;

    int cardinality() const { return static_cast<int>(labels.size()); }

    // Tokens named "0", "1", ... .
    static TokenSpace make_default(int cardinality);

    void validate() const;
};

// Observed tokens on a subset of coordinates: strictly increasing 0-based
// positions paired with token indices.
class Assignment {
public:
    Assignment() = default;
    Assignment(std::vector<int> indices, std::vector<int> values, int n, int cardinality);

    const std::vector<int>& indices() const { return indices_; }
    const std::vector<int>& values() const { return values_; }
    int size() const { return static_cast<int>(indices_.size()); }
    bool contains(int position) const;

private:
    std::vector<int> indices_;
    std::vector<int> values_;
};

// Exact joint pmf over X^N.
//
// States are indexed mixed-radix with x_1 (coordinate 0) most significant:
// code(x) = sum_i x_i * |X|^(N-1-i). This fixes the file format and every
// test vector.
class TabularDist {
public:
    TabularDist(int n, TokenSpace tokens, std::vector<double> pmf,
                std::uint64_t state_guard = kDefaultStateGuard);

    int n() const { return n_; }
    int cardinality() const { return tokens_.cardinality(); }
    const TokenSpace& tokens() const { return tokens_; }
    std::span<const double> pmf() const { return pmf_; }
    std::size_t states() const { return pmf_.size(); }

    std::size_t encode(std::span<const int> state) const;
    void decode(std::size_t code, std::span<int> state) const;
    double prob(std::span<const int> state) const;

private:
    int n_;
    TokenSpace tokens_;
    std::vector<double> pmf_;
};

// Marginal law of the coordinates in `subset` (0-based, strictly
// increasing, nonempty). Coordinate order is preserved.
TabularDist marginal(const TabularDist& dist, std::span<const int> subset);

// Conditional distribution of coordinate `target` given the observed
// tokens in `given` (target must not appear in `given`). Throws
// UndefinedConditional when the conditioning event has zero probability.
std::vector<double> conditional(const TabularDist& dist, int target, const Assignment& given);

// Conditional total correlation of the coordinates in `block` given those
// in `given` (disjoint, block nonempty), in nats. Zero iff the block
// coordinates are conditionally independent; identically zero for
// singleton blocks. 0*log(0) terms are 0 throughout.
double total_correlation(const TabularDist& dist, std::span<const int> block,
                         std::span<const int> given);

// Correlation measure D(pi) = (1/N) sum_i I(x_i ; x_{-i}), in nats.
// Always within [0, log|X|].
double d_measure(const TabularDist& dist);

// Distribution with i.i.d. uniform block representatives and all
// coordinates equal a.s. within each block of `partition` (an unordered
// cover of {0..n-1} by disjoint nonempty blocks).
TabularDist block_copy_dist(int n, TokenSpace tokens,
                            const std::vector<std::vector<int>>& partition,
                            std::uint64_t state_guard = kDefaultStateGuard);

// Dirichlet(concentration) random table; deterministic per seed.
TabularDist random_tabular(std::uint64_t seed, int n, TokenSpace tokens, double concentration,
                           std::uint64_t state_guard = kDefaultStateGuard);

// Shannon entropy of a pmf in nats (compensated sum, 0*log(0) = 0).
double entropy(std::span<const double> pmf);

// Univariate conditionals p(x_target = v ; x_given): the interface the
// sampler and the Monte Carlo profile estimator consume.
struct ConditionalModel {
    virtual ~ConditionalModel() = default;
    virtual int n() const = 0;
    virtual int cardinality() const = 0;
    // Probability vector over tokens for `target` given the assignment.
    virtual std::vector<double> conditional_of(int target, const Assignment& given) const = 0;
};

// Exact conditionals of a tabular target.
class ExactConditional final : public ConditionalModel {
public:
    explicit ExactConditional(const TabularDist& dist) : dist_(&dist) {}
    int n() const override { return dist_->n(); }
    int cardinality() const override { return dist_->cardinality(); }
    std::vector<double> conditional_of(int target, const Assignment& given) const override {
        return conditional(*dist_, target, given);
    }

private:
    const TabularDist* dist_;
};

}  // namespace unmask
