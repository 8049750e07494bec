#include "unmask/planner.hpp"

#include <algorithm>
#include <cmath>

namespace unmask {

namespace {

void check_partition(int n, const OrderedPartition& blocks) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    if (blocks.empty()) throw InvalidArgument("Planner: partition must have at least one block");
    for (const auto& block : blocks) {
        if (block.empty()) throw InvalidArgument("Planner: blocks must be nonempty");
        for (int pos : block) {
            if (pos < 0 || pos >= n) throw InvalidArgument("Planner: index out of range");
            if (seen[static_cast<std::size_t>(pos)]) {
                throw InvalidArgument("Planner: blocks must be disjoint");
            }
            seen[static_cast<std::size_t>(pos)] = true;
        }
    }
    for (bool s : seen) {
        if (!s) throw InvalidArgument("Planner: blocks must cover every coordinate");
    }
}

OrderedPartition sorted_blocks(OrderedPartition blocks) {
    for (auto& b : blocks) std::sort(b.begin(), b.end());
    return blocks;
}

double binomial(std::int64_t n, std::int64_t k) {
    double v = 1.0;
    for (std::int64_t j = 1; j <= k; ++j) {
        v *= static_cast<double>(n - k + j) / static_cast<double>(j);
    }
    return v;
}

void recurse_partitions(const std::vector<int>& remaining,
                        const std::vector<std::int64_t>& sizes, std::size_t k, double prob,
                        OrderedPartition& prefix,
                        std::vector<Planner::WeightedPartition>& out) {
    if (k == sizes.size()) {
        out.push_back({prefix, prob});
        return;
    }
    const auto s = static_cast<int>(sizes[k]);
    const double weight = 1.0 / binomial(static_cast<std::int64_t>(remaining.size()), s);
    // Choose s elements of `remaining` in increasing order.
    std::vector<int> pick(static_cast<std::size_t>(s));
    std::vector<int> idx(static_cast<std::size_t>(s));
    auto emit = [&]() {
        std::vector<int> rest;
        rest.reserve(remaining.size() - static_cast<std::size_t>(s));
        std::size_t t = 0;
        for (std::size_t r = 0; r < remaining.size(); ++r) {
            if (t < idx.size() && idx[t] == static_cast<int>(r)) {
                ++t;
            } else {
                rest.push_back(remaining[r]);
            }
        }
        prefix.push_back(pick);
        recurse_partitions(rest, sizes, k + 1, prob * weight, prefix, out);
        prefix.pop_back();
    };
    // Iterative combination enumeration.
    for (int j = 0; j < s; ++j) idx[static_cast<std::size_t>(j)] = j;
    for (;;) {
        for (int j = 0; j < s; ++j) {
            pick[static_cast<std::size_t>(j)] =
                remaining[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
        }
        emit();
        int j = s - 1;
        while (j >= 0 &&
               idx[static_cast<std::size_t>(j)] == static_cast<int>(remaining.size()) - s + j) {
            --j;
        }
        if (j < 0) break;
        ++idx[static_cast<std::size_t>(j)];
        for (int t = j + 1; t < s; ++t) {
            idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
        }
    }
}

}  // namespace

Planner Planner::random_order(SizeLaw law) {
    Planner p;
    p.kind_ = Kind::random_order;
    p.n_ = static_cast<int>(law.n());
    p.law_.push_back(std::move(law));
    return p;
}

Planner Planner::fixed_partition(int n, OrderedPartition blocks) {
    blocks = sorted_blocks(std::move(blocks));
    check_partition(n, blocks);
    Planner p;
    p.kind_ = Kind::fixed_partition;
    p.n_ = n;
    p.blocks_ = std::move(blocks);
    return p;
}

Planner Planner::fixed_ordering_from_seed(SizeLaw law, std::uint64_t seed) {
    Planner p;
    p.kind_ = Kind::fixed_ordering_from_seed;
    p.n_ = static_cast<int>(law.n());
    // Materialize one random-order draw; the run stream never sees it again.
    KeyedRng rng = KeyedRng(seed).derive(0xf1c5edull);
    Planner ro = Planner::random_order(law);
    p.blocks_ = ro.draw_partition(rng);
    p.law_.push_back(std::move(law));
    return p;
}

const SizeLaw& Planner::law() const {
    if (law_.empty()) throw InvalidArgument("Planner::law: planner has no size law");
    return law_.front();
}

const OrderedPartition& Planner::fixed_blocks() const {
    if (kind_ == Kind::random_order) {
        throw InvalidArgument("Planner::fixed_blocks: random-order planner has no fixed blocks");
    }
    return blocks_;
}

OrderedPartition Planner::draw_partition(KeyedRng& rng) const {
    if (kind_ != Kind::random_order) return blocks_;
    KeyedRng sizes_rng = rng.derive(0);
    CumSchedule sched = law_.front().sample(sizes_rng);
    std::vector<int> pool(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) pool[static_cast<std::size_t>(i)] = i;
    OrderedPartition blocks;
    KeyedRng pick_rng = rng.derive(1);
    for (std::int64_t s : sched.sizes()) {
        blocks.push_back(draw_subset(pick_rng, pool, static_cast<int>(s)));
    }
    return blocks;
}

std::vector<Planner::WeightedPartition> Planner::enumerate_support() const {
    if (n_ > kPartitionGuardN) {
        throw GuardExceeded("Planner::enumerate_support: N exceeds the partition guard");
    }
    if (kind_ != Kind::random_order) {
        return {WeightedPartition{blocks_, 1.0}};
    }
    const SizeLaw& law = law_.front();
    std::vector<WeightedPartition> out;
    if (law.kind() == SizeLaw::Kind::geometric) {
        for (const auto& sizes : enumerate_compositions(law.n())) {
            double ps = size_vector_prob(law, sizes);
            auto parts = enumerate_partitions_with_sizes(n_, sizes);
            for (auto& wp : parts) {
                wp.prob *= ps;
                out.push_back(std::move(wp));
            }
        }
    } else {
        for (const auto& [sched, prob] : law.atoms()) {
            auto parts = enumerate_partitions_with_sizes(n_, sched.sizes());
            for (auto& wp : parts) {
                wp.prob *= prob;
                out.push_back(std::move(wp));
            }
        }
    }
    return out;
}

std::vector<Planner::WeightedPartition> enumerate_partitions_with_sizes(
    int n, const std::vector<std::int64_t>& sizes) {
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    std::vector<Planner::WeightedPartition> out;
    OrderedPartition prefix;
    recurse_partitions(all, sizes, 0, 1.0, prefix, out);
    return out;
}

std::vector<std::vector<std::int64_t>> enumerate_compositions(std::int64_t n) {
    std::vector<std::vector<std::int64_t>> out;
    std::vector<std::int64_t> cur;
    // Depth-first over first parts.
    struct Rec {
        std::int64_t n;
        std::vector<std::vector<std::int64_t>>& out;
        std::vector<std::int64_t>& cur;
        void go(std::int64_t rest) {
            if (rest == 0) {
                out.push_back(cur);
                return;
            }
            for (std::int64_t s = 1; s <= rest; ++s) {
                cur.push_back(s);
                go(rest - s);
                cur.pop_back();
            }
        }
    } rec{n, out, cur};
    rec.go(n);
    return out;
}

double size_vector_prob(const SizeLaw& law, const std::vector<std::int64_t>& sizes) {
    std::int64_t total = 0;
    for (std::int64_t s : sizes) total += s;
    if (total != law.n()) return 0.0;
    switch (law.kind()) {
        case SizeLaw::Kind::geometric: {
            double prob = 1.0;
            std::int64_t remaining = law.n();
            for (std::int64_t s : sizes) {
                prob *= truncated_geometric_pmf(law.p(), remaining, s);
                remaining -= s;
            }
            return prob;
        }
        case SizeLaw::Kind::deterministic:
        case SizeLaw::Kind::explicit_mixture: {
            double prob = 0.0;
            for (const auto& [sched, w] : law.atoms()) {
                if (sched.sizes() == sizes) prob += w;
            }
            return prob;
        }
    }
    return 0.0;
}

}  // namespace unmask
