#include "unmask/efact.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace unmask {

namespace {

void check_dims(const InfoProfile& profile, std::int64_t n, const char* who) {
    if (profile.n() != n) throw InvalidArgument(std::string(who) + ": dimension mismatch");
}

// Memoized conditional total correlations keyed by (given, block) bitmasks.
class TcCache {
public:
    explicit TcCache(const TabularDist& dist) : dist_(&dist) {}

    double tc(std::uint32_t block_mask, std::uint32_t given_mask) {
        std::uint64_t key = (static_cast<std::uint64_t>(given_mask) << 32) | block_mask;
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        std::vector<int> block = mask_to_set(block_mask);
        std::vector<int> given = mask_to_set(given_mask);
        double v = total_correlation(*dist_, block, given);
        cache_.emplace(key, v);
        return v;
    }

    static std::uint32_t set_to_mask(const std::vector<int>& set) {
        std::uint32_t m = 0;
        for (int pos : set) m |= (1u << pos);
        return m;
    }

private:
    static std::vector<int> mask_to_set(std::uint32_t mask) {
        std::vector<int> out;
        for (int i = 0; i < 32; ++i) {
            if (mask & (1u << i)) out.push_back(i);
        }
        return out;
    }

    const TabularDist* dist_;
    std::unordered_map<std::uint64_t, double> cache_;
};

double partition_tc(TcCache& cache, const OrderedPartition& blocks) {
    double sum = 0.0;
    std::uint32_t prefix = 0;
    for (const auto& block : blocks) {
        std::uint32_t bm = TcCache::set_to_mask(block);
        sum += cache.tc(bm, prefix);
        prefix |= bm;
    }
    return sum;
}

}  // namespace

double a_riemann(const InfoProfile& profile, const CumSchedule& sched) {
    check_dims(profile, sched.n(), "a_riemann");
    StableSum total;
    for (double v : profile.values()) total.add(v);
    StableSum riemann;
    const auto& a = sched.a();
    for (std::size_t k = 1; k < a.size(); ++k) {
        riemann.add(static_cast<double>(a[k] - a[k - 1]) *
                    profile.value(a[k - 1]));
    }
    return total.value() - riemann.value();
}

double a_discrete_derivative(const InfoProfile& profile, const CumSchedule& sched) {
    check_dims(profile, sched.n(), "a_discrete_derivative");
    const auto& f = profile.values();
    const auto& a = sched.a();
    StableSum acc;
    // Walk i through each schedule cell so r_a(i) is the cell's right edge.
    std::size_t k = 1;
    for (std::int64_t i = 1; i < profile.n(); ++i) {
        while (a[k] < i) ++k;
        double df = f[static_cast<std::size_t>(i)] - f[static_cast<std::size_t>(i - 1)];
        acc.add(df * static_cast<double>(a[k] - i));
    }
    return acc.value();
}

double efact_geometric_closed_form(const InfoProfile& profile, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidArgument("efact_geometric_closed_form: p must lie in (0,1)");
    }
    const auto& f = profile.values();
    const std::int64_t n = profile.n();
    const double q = 1.0 - p;
    StableSum acc;
    for (std::int64_t i = 1; i < n; ++i) {
        double df = f[static_cast<std::size_t>(i)] - f[static_cast<std::size_t>(i - 1)];
        acc.add((1.0 - std::pow(q, static_cast<double>(n - i))) * df);
    }
    return q / p * acc.value();
}

double efact_random_order(const InfoProfile& profile, const SizeLaw& law) {
    check_dims(profile, law.n(), "efact_random_order");
    switch (law.kind()) {
        case SizeLaw::Kind::deterministic:
            return a_riemann(profile, law.schedule());
        case SizeLaw::Kind::geometric:
            return efact_geometric_closed_form(profile, law.p());
        case SizeLaw::Kind::explicit_mixture: {
            StableSum acc;
            for (const auto& [sched, prob] : law.atoms()) {
                acc.add(prob * a_riemann(profile, sched));
            }
            return acc.value();
        }
    }
    throw InvalidArgument("efact_random_order: unknown law kind");
}

double efact_direct(const TabularDist& dist, const Planner& planner) {
    if (dist.n() != planner.n()) throw InvalidArgument("efact_direct: dimension mismatch");
    if (dist.n() > kPartitionGuardN) {
        throw GuardExceeded("efact_direct: N exceeds the partition enumeration guard");
    }
    TcCache cache(dist);
    StableSum acc;
    for (const auto& wp : planner.enumerate_support()) {
        acc.add(wp.prob * partition_tc(cache, wp.blocks));
    }
    return acc.value();
}

SizeLaw::Stats planner_stats(const Planner& planner) {
    if (planner.is_random_order()) return planner.law().stats();
    const auto& blocks = planner.fixed_blocks();
    SizeLaw::Stats st;
    st.e_k = static_cast<double>(blocks.size());
    std::int64_t smax = 0;
    for (const auto& b : blocks) smax = std::max<std::int64_t>(smax, static_cast<std::int64_t>(b.size()));
    st.e_smax = static_cast<double>(smax);
    st.e_n_over_smax = static_cast<double>(planner.n()) / static_cast<double>(smax);
    return st;
}

std::pair<double, double> bound_worst(double log_cardinality, double d,
                                      const SizeLaw::Stats& stats, std::int64_t n) {
    if (!(stats.e_k >= 1.0 && stats.e_k <= static_cast<double>(n) + 1e-9)) {
        throw InvalidArgument("bound_worst: inconsistent E[K]");
    }
    if (!(stats.e_n_over_smax >= 1.0 - 1e-9 &&
          stats.e_n_over_smax <= static_cast<double>(n) + 1e-9)) {
        throw InvalidArgument("bound_worst: inconsistent E[N/s_max]");
    }
    double first = (static_cast<double>(n) - stats.e_k) * log_cardinality;
    double second = (static_cast<double>(n) - stats.e_n_over_smax) * d;
    return {first, second};
}

std::pair<double, double> bound_random_order(double d, double e_smax, int cardinality) {
    if (!(e_smax >= 1.0)) throw InvalidArgument("bound_random_order: E[s_max] must be >= 1");
    return {(e_smax - 1.0) * d, (e_smax - 1.0) * std::log(static_cast<double>(cardinality))};
}

GeomBounds bounds_geometric(double d, double p, double max_delta) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("bounds_geometric: p must lie in (0,1)");
    double ratio = (1.0 - p) / p;
    return {ratio * d - ratio * ratio * max_delta, ratio * d};
}

MarkovTailReport markov_tail(const TabularDist& dist, const std::vector<std::int64_t>& sizes,
                             double c) {
    if (!(c > 0.0)) throw InvalidArgument("markov_tail: c must be positive");
    if (dist.n() > kPartitionGuardN) {
        throw GuardExceeded("markov_tail: N exceeds the partition enumeration guard");
    }
    const std::int64_t n = dist.n();
    const auto k = static_cast<std::int64_t>(sizes.size());
    std::int64_t smax = *std::max_element(sizes.begin(), sizes.end());
    std::int64_t cap = (n + k - 1) / k;  // ceil(N/K)
    if (smax > cap) {
        throw InvalidArgument("markov_tail: sizes must satisfy s_max <= ceil(N/K)");
    }
    double d = d_measure(dist);
    double threshold = c * static_cast<double>((n - k + k - 1) / k) * d;  // ceil((N-K)/K) * c * D

    TcCache cache(dist);
    StableSum mass;
    for (const auto& wp : enumerate_partitions_with_sizes(static_cast<int>(n), sizes)) {
        double efz = partition_tc(cache, wp.blocks);
        if (efz > threshold + 1e-12) mass.add(wp.prob);
    }
    return {threshold, 1.0 / c, mass.value()};
}

}  // namespace unmask
