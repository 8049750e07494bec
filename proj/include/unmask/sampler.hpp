#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "unmask/dist.hpp"
#include "unmask/planner.hpp"

namespace unmask {

// Denoiser: the model of univariate conditionals driving token draws.
// Either the exact conditionals of a tabular target or the uniform
// mixture p(v;w) = (1-eps) pi(v|w) + eps/|X|.
//
// Conventions: with eps > 0 a conditioning event of zero probability
// yields the uniform distribution (only the mixture component carries
// information there); such prefixes are unreachable under the target, so
// no error functional ever weighs them. With eps = 0 the same event is an
// UndefinedConditional error, mirroring the exact-conditional contract.
class Denoiser final : public ConditionalModel {
public:
    static Denoiser exact(std::shared_ptr<const TabularDist> dist);
    static Denoiser uniform_mixture(std::shared_ptr<const TabularDist> dist, double epsilon);
    static Denoiser exact(const TabularDist& dist);  // copies
    static Denoiser uniform_mixture(const TabularDist& dist, double epsilon);

    double epsilon() const { return epsilon_; }
    const TabularDist& target() const { return *dist_; }

    int n() const override { return dist_->n(); }
    int cardinality() const override { return dist_->cardinality(); }
    std::vector<double> conditional_of(int target, const Assignment& given) const override;

private:
    Denoiser(std::shared_ptr<const TabularDist> dist, double epsilon);
    std::shared_ptr<const TabularDist> dist_;
    double epsilon_;
};

struct StepRecord {
    std::vector<int> block;   // unmasked coordinates, sorted
    std::vector<int> tokens;  // drawn token per block coordinate
};

struct RunTrace {
    std::vector<int> x;            // full assignment
    std::vector<StepRecord> steps;
    std::int64_t step_count() const { return static_cast<std::int64_t>(steps.size()); }
};

// One pass of the sequential unmasking algorithm: at each step the planner
// picks a block of masked coordinates, then each one is drawn from its
// univariate conditional given everything unmasked so far. Deterministic
// per seed.
RunTrace run(const Denoiser& denoiser, const Planner& planner, std::uint64_t seed);

// Exact output law p_hat(x) = sum_z nu(z) prod_k prod_{i in z_k}
// p(x_i ; x_{z<k}), by enumeration. Guarded to N <= kPartitionGuardN.
TabularDist output_law_exact(const Denoiser& denoiser, const Planner& planner);

// Output law of the sampler when each block is drawn from its exact JOINT
// conditional pi(x_{z_k} | x_{z<k}) instead of the factorized product.
// Every planner then reproduces pi; this operation evaluates the product
// of block conditionals literally so that the claim is verified, not
// assumed. Guarded to N <= kPartitionGuardN.
TabularDist output_law_block_exact(const TabularDist& dist, const Planner& planner);

// KL(p || q) in nats. Returns +infinity when q(x) = 0 < p(x).
double kl(const TabularDist& p, const TabularDist& q);

// Conditional-learning error term of the KL decomposition (expectation
// under pi(x) nu(z) of the summed conditional log ratios).
double e_learn(const TabularDist& dist, const Denoiser& denoiser, const Planner& planner);

struct DecompositionReport {
    double kl_marginal;  // KL(pi || p_hat)
    double kl_joint;     // KL(pi nu || p_hat nu), computed by direct enumeration
    double e_learn;
    double e_fact;
    // kl_joint - (e_learn + e_fact); zero up to rounding.
    double identity_residual() const { return kl_joint - (e_learn + e_fact); }
};

DecompositionReport decomposition_check(const TabularDist& dist, const Denoiser& denoiser,
                                        const Planner& planner);

}  // namespace unmask
