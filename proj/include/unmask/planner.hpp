#pragma once

#include <cstdint>
#include <vector>

#include "unmask/schedule.hpp"

namespace unmask {

// Ordered partition of {0..n-1} into nonempty blocks (each block sorted).
using OrderedPartition = std::vector<std::vector<int>>;

// Rule choosing which coordinates to unmask at each step. All planners
// here are independent of the tokens generated so far.
//
//  - random_order: sizes from a SizeLaw, entries uniform without
//    replacement among still-masked coordinates.
//  - fixed_partition: a deterministic ordered partition.
//  - fixed_ordering_from_seed: one random-order draw materialized at
//    construction and reused for every run.
class Planner {
public:
    enum class Kind { random_order, fixed_partition, fixed_ordering_from_seed };

    static Planner random_order(SizeLaw law);
    static Planner fixed_partition(int n, OrderedPartition blocks);
    static Planner fixed_ordering_from_seed(SizeLaw law, std::uint64_t seed);

    Kind kind() const { return kind_; }
    int n() const { return n_; }
    bool is_random_order() const { return kind_ == Kind::random_order; }
    const SizeLaw& law() const;                 // random_order only
    const OrderedPartition& fixed_blocks() const;  // fixed kinds only

    // One ordered partition for a run.
    OrderedPartition draw_partition(KeyedRng& rng) const;

    struct WeightedPartition {
        OrderedPartition blocks;
        double prob;
    };

    // Full support with probabilities; exact-computation back end.
    // Guarded to n <= kPartitionGuardN.
    std::vector<WeightedPartition> enumerate_support() const;

private:
    Planner() = default;
    Kind kind_ = Kind::fixed_partition;
    int n_ = 0;
    std::vector<SizeLaw> law_;  // empty or single element
    OrderedPartition blocks_;
};

// All ordered partitions of {0..n-1} whose block sizes match `sizes`,
// each paired with the uniform random-order probability of the partition
// given those sizes.
std::vector<Planner::WeightedPartition> enumerate_partitions_with_sizes(
    int n, const std::vector<std::int64_t>& sizes);

// All compositions of n (ordered positive integer tuples summing to n).
std::vector<std::vector<std::int64_t>> enumerate_compositions(std::int64_t n);

// Probability of a full size vector under the law (product of the
// truncated-geometric chain for geometric laws).
double size_vector_prob(const SizeLaw& law, const std::vector<std::int64_t>& sizes);

}  // namespace unmask
