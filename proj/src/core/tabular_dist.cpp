#include "unmask/dist.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

#include "unmask/rng.hpp"

namespace unmask {

namespace {

void check_subset(std::span<const int> subset, int n, const char* who) {
    if (subset.empty()) throw InvalidArgument(std::string(who) + ": subset must be nonempty");
    for (std::size_t j = 0; j < subset.size(); ++j) {
        if (subset[j] < 0 || subset[j] >= n) {
            throw InvalidArgument(std::string(who) + ": index out of range");
        }
        if (j > 0 && subset[j] <= subset[j - 1]) {
            throw InvalidArgument(std::string(who) + ": subset must be strictly increasing");
        }
    }
}

std::uint64_t checked_pow(int base, int exp, std::uint64_t guard, const char* who) {
    std::uint64_t v = 1;
    for (int i = 0; i < exp; ++i) {
        if (v > guard / static_cast<std::uint64_t>(base)) {
            throw GuardExceeded(std::string(who) + ": |X|^N exceeds the state guard");
        }
        v *= static_cast<std::uint64_t>(base);
    }
    return v;
}

// Projects a full-state code onto the marginal code of `subset`.
// Digit extraction uses precomputed powers of the cardinality.
class Projector {
public:
    Projector(const TabularDist& dist, std::span<const int> subset) {
        const int card = dist.cardinality();
        int n = dist.n();
        weights_.assign(static_cast<std::size_t>(n), 0);
        std::uint64_t w = 1;
        for (std::size_t j = subset.size(); j-- > 0;) {
            weights_[static_cast<std::size_t>(subset[j])] = w;
            w *= static_cast<std::uint64_t>(card);
        }
        divisors_.assign(static_cast<std::size_t>(n), 1);
        std::uint64_t d = 1;
        for (int i = n - 1; i >= 0; --i) {
            divisors_[static_cast<std::size_t>(i)] = d;
            d *= static_cast<std::uint64_t>(card);
        }
        card_ = card;
        n_ = n;
    }

    std::size_t operator()(std::size_t code) const {
        std::uint64_t out = 0;
        for (int i = 0; i < n_; ++i) {
            if (weights_[static_cast<std::size_t>(i)] == 0) continue;
            std::uint64_t digit = (code / divisors_[static_cast<std::size_t>(i)]) %
                                  static_cast<std::uint64_t>(card_);
            out += digit * weights_[static_cast<std::size_t>(i)];
        }
        return static_cast<std::size_t>(out);
    }

private:
    std::vector<std::uint64_t> weights_;
    std::vector<std::uint64_t> divisors_;
    int card_ = 0;
    int n_ = 0;
};

std::vector<double> marginal_table(const TabularDist& dist, std::span<const int> subset) {
    const int card = dist.cardinality();
    std::size_t size = 1;
    for (std::size_t j = 0; j < subset.size(); ++j) size *= static_cast<std::size_t>(card);
    Projector project(dist, subset);
    std::vector<StableSum> acc(size);
    auto pmf = dist.pmf();
    for (std::size_t code = 0; code < pmf.size(); ++code) {
        if (pmf[code] == 0.0) continue;
        acc[project(code)].add(pmf[code]);
    }
    std::vector<double> out(size);
    for (std::size_t i = 0; i < size; ++i) out[i] = acc[i].value();
    return out;
}

}  // namespace

TokenSpace TokenSpace::make_default(int cardinality) {
    TokenSpace ts;
    ts.labels.reserve(static_cast<std::size_t>(cardinality));
    for (int i = 0; i < cardinality; ++i) ts.labels.push_back(std::to_string(i));
    ts.validate();
    return ts;
}

void TokenSpace::validate() const {
    if (cardinality() < 2) throw InvalidArgument("TokenSpace: cardinality must be >= 2");
    std::set<std::string> seen(labels.begin(), labels.end());
    if (static_cast<int>(seen.size()) != cardinality()) {
        throw InvalidArgument("TokenSpace: labels must be pairwise distinct");
    }
}

Assignment::Assignment(std::vector<int> indices, std::vector<int> values, int n, int cardinality)
    : indices_(std::move(indices)), values_(std::move(values)) {
    if (indices_.size() != values_.size()) {
        throw InvalidArgument("Assignment: indices/values length mismatch");
    }
    for (std::size_t j = 0; j < indices_.size(); ++j) {
        if (indices_[j] < 0 || indices_[j] >= n) {
            throw InvalidArgument("Assignment: index out of range");
        }
        if (j > 0 && indices_[j] <= indices_[j - 1]) {
            throw InvalidArgument("Assignment: indices must be strictly increasing");
        }
        if (values_[j] < 0 || values_[j] >= cardinality) {
            throw InvalidArgument("Assignment: token value out of range");
        }
    }
}

bool Assignment::contains(int position) const {
    return std::binary_search(indices_.begin(), indices_.end(), position);
}

TabularDist::TabularDist(int n, TokenSpace tokens, std::vector<double> pmf,
                         std::uint64_t state_guard)
    : n_(n), tokens_(std::move(tokens)), pmf_(std::move(pmf)) {
    if (n_ < 1) throw InvalidArgument("TabularDist: n must be positive");
    tokens_.validate();
    std::uint64_t states = checked_pow(tokens_.cardinality(), n_, state_guard, "TabularDist");
    if (pmf_.size() != states) {
        throw InvalidArgument("TabularDist: pmf length must be |X|^N");
    }
    StableSum sum;
    for (double p : pmf_) {
        if (!(p >= 0.0)) throw InvalidArgument("TabularDist: probabilities must be >= 0");
        sum.add(p);
    }
    if (std::abs(sum.value() - 1.0) > 1e-12) {
        throw InvalidArgument("TabularDist: probabilities must sum to 1 within 1e-12");
    }
}

std::size_t TabularDist::encode(std::span<const int> state) const {
    if (static_cast<int>(state.size()) != n_) throw InvalidArgument("encode: wrong state length");
    std::size_t code = 0;
    for (int i = 0; i < n_; ++i) {
        if (state[static_cast<std::size_t>(i)] < 0 ||
            state[static_cast<std::size_t>(i)] >= cardinality()) {
            throw InvalidArgument("encode: token out of range");
        }
        code = code * static_cast<std::size_t>(cardinality()) +
               static_cast<std::size_t>(state[static_cast<std::size_t>(i)]);
    }
    return code;
}

void TabularDist::decode(std::size_t code, std::span<int> state) const {
    for (int i = n_ - 1; i >= 0; --i) {
        state[static_cast<std::size_t>(i)] =
            static_cast<int>(code % static_cast<std::size_t>(cardinality()));
        code /= static_cast<std::size_t>(cardinality());
    }
}

double TabularDist::prob(std::span<const int> state) const { return pmf_[encode(state)]; }

TabularDist marginal(const TabularDist& dist, std::span<const int> subset) {
    check_subset(subset, dist.n(), "marginal");
    std::vector<double> table = marginal_table(dist, subset);
    return TabularDist(static_cast<int>(subset.size()), dist.tokens(), std::move(table),
                       kDefaultStateGuard);
}

std::vector<double> conditional(const TabularDist& dist, int target, const Assignment& given) {
    if (target < 0 || target >= dist.n()) throw InvalidArgument("conditional: target out of range");
    if (given.contains(target)) {
        throw InvalidArgument("conditional: target must not be conditioned on");
    }
    const int n = dist.n();
    const int card = dist.cardinality();

    // Enumerate only the states consistent with the assignment: walk a
    // mixed-radix counter over the free coordinates on top of the fixed
    // base code. Cost |X|^(free) instead of |X|^N.
    std::vector<std::size_t> weight(static_cast<std::size_t>(n));
    {
        std::size_t w = 1;
        for (int pos = n - 1; pos >= 0; --pos) {
            weight[static_cast<std::size_t>(pos)] = w;
            w *= static_cast<std::size_t>(card);
        }
    }
    std::size_t base = 0;
    for (int j = 0; j < given.size(); ++j) {
        base += static_cast<std::size_t>(given.values()[static_cast<std::size_t>(j)]) *
                weight[static_cast<std::size_t>(given.indices()[static_cast<std::size_t>(j)])];
    }
    std::vector<int> free_pos;
    for (int pos = 0; pos < n; ++pos) {
        if (pos != target && !given.contains(pos)) free_pos.push_back(pos);
    }

    auto pmf = dist.pmf();
    std::vector<StableSum> num(static_cast<std::size_t>(card));
    std::size_t free_states = 1;
    for (std::size_t j = 0; j < free_pos.size(); ++j) {
        free_states *= static_cast<std::size_t>(card);
    }
    for (int v = 0; v < card; ++v) {
        std::size_t tbase =
            base + static_cast<std::size_t>(v) * weight[static_cast<std::size_t>(target)];
        for (std::size_t c = 0; c < free_states; ++c) {
            std::size_t code = tbase;
            std::size_t rem = c;
            for (std::size_t j = free_pos.size(); j-- > 0;) {
                code += (rem % static_cast<std::size_t>(card)) *
                        weight[static_cast<std::size_t>(free_pos[j])];
                rem /= static_cast<std::size_t>(card);
            }
            num[static_cast<std::size_t>(v)].add(pmf[code]);
        }
    }

    std::vector<double> out(static_cast<std::size_t>(card));
    StableSum mass;
    for (int v = 0; v < card; ++v) {
        out[static_cast<std::size_t>(v)] = num[static_cast<std::size_t>(v)].value();
        mass.add(out[static_cast<std::size_t>(v)]);
    }
    double denom = mass.value();
    if (!(denom > 0.0)) {
        throw UndefinedConditional("conditional: conditioning event has probability zero");
    }
    for (double& p : out) p /= denom;
    return out;
}

double total_correlation(const TabularDist& dist, std::span<const int> block,
                         std::span<const int> given) {
    check_subset(block, dist.n(), "total_correlation");
    if (!given.empty()) check_subset(given, dist.n(), "total_correlation");
    for (int b : block) {
        if (std::binary_search(given.begin(), given.end(), b)) {
            throw InvalidArgument("total_correlation: block and given must be disjoint");
        }
    }
    if (block.size() == 1) return 0.0;

    // Union marginal, then sub-marginals of it by summing out axes.
    std::vector<int> uni(block.begin(), block.end());
    uni.insert(uni.end(), given.begin(), given.end());
    std::sort(uni.begin(), uni.end());
    TabularDist joint = marginal(dist, uni);

    const int m = joint.n();
    std::vector<int> g_local;
    std::vector<int> b_local;
    for (int j = 0; j < m; ++j) {
        int pos = uni[static_cast<std::size_t>(j)];
        if (std::binary_search(given.begin(), given.end(), pos)) {
            g_local.push_back(j);
        } else {
            b_local.push_back(j);
        }
    }

    std::optional<Projector> proj_g;
    std::vector<double> marg_g;
    if (!g_local.empty()) {
        marg_g = marginal_table(joint, g_local);
        proj_g.emplace(joint, std::span<const int>(g_local));
    }

    // Per-coordinate marginals over given u {i}.
    std::vector<std::vector<double>> marg_gi(b_local.size());
    std::vector<Projector> proj_gi;
    proj_gi.reserve(b_local.size());
    for (std::size_t t = 0; t < b_local.size(); ++t) {
        std::vector<int> gi = g_local;
        gi.push_back(b_local[t]);
        std::sort(gi.begin(), gi.end());
        marg_gi[t] = marginal_table(joint, gi);
        proj_gi.emplace_back(joint, std::span<const int>(gi));
    }

    StableSum tc;
    auto table = joint.pmf();
    for (std::size_t code = 0; code < table.size(); ++code) {
        double p = table[code];
        if (p == 0.0) continue;
        double pg = proj_g ? marg_g[(*proj_g)(code)] : 1.0;
        // log pi(x_block | x_given) - sum_i log pi(x_i | x_given)
        double term = std::log(p / pg);
        for (std::size_t t = 0; t < b_local.size(); ++t) {
            term -= std::log(marg_gi[t][proj_gi[t](code)] / pg);
        }
        tc.add(p * term);
    }
    return tc.value();
}

double entropy(std::span<const double> pmf) {
    StableSum h;
    for (double p : pmf) {
        if (p > 0.0) h.add(-p * std::log(p));
    }
    return h.value();
}

double d_measure(const TabularDist& dist) {
    const int n = dist.n();
    if (n == 1) return 0.0;
    double h_full = entropy(dist.pmf());
    StableSum acc;
    for (int i = 0; i < n; ++i) {
        std::vector<int> self{i};
        std::vector<int> rest;
        for (int j = 0; j < n; ++j) {
            if (j != i) rest.push_back(j);
        }
        double h_i = entropy(marginal_table(dist, self));
        double h_rest = entropy(marginal_table(dist, rest));
        acc.add(h_i + h_rest - h_full);
    }
    return acc.value() / static_cast<double>(n);
}

TabularDist block_copy_dist(int n, TokenSpace tokens,
                            const std::vector<std::vector<int>>& partition,
                            std::uint64_t state_guard) {
    tokens.validate();
    std::vector<int> owner(static_cast<std::size_t>(n), -1);
    for (std::size_t b = 0; b < partition.size(); ++b) {
        if (partition[b].empty()) throw InvalidArgument("block_copy_dist: empty block");
        for (int pos : partition[b]) {
            if (pos < 0 || pos >= n) throw InvalidArgument("block_copy_dist: index out of range");
            if (owner[static_cast<std::size_t>(pos)] != -1) {
                throw InvalidArgument("block_copy_dist: blocks must be disjoint");
            }
            owner[static_cast<std::size_t>(pos)] = static_cast<int>(b);
        }
    }
    for (int pos = 0; pos < n; ++pos) {
        if (owner[static_cast<std::size_t>(pos)] == -1) {
            throw InvalidArgument("block_copy_dist: blocks must cover every coordinate");
        }
    }

    const int card = tokens.cardinality();
    std::uint64_t states = checked_pow(card, n, state_guard, "block_copy_dist");
    std::uint64_t reps = 1;
    for (std::size_t b = 0; b < partition.size(); ++b) reps *= static_cast<std::uint64_t>(card);
    double mass = 1.0 / static_cast<double>(reps);

    std::vector<double> pmf(states, 0.0);
    std::vector<int> rep(partition.size(), 0);
    std::vector<int> state(static_cast<std::size_t>(n));
    for (std::uint64_t r = 0; r < reps; ++r) {
        std::uint64_t c = r;
        for (std::size_t b = partition.size(); b-- > 0;) {
            rep[b] = static_cast<int>(c % static_cast<std::uint64_t>(card));
            c /= static_cast<std::uint64_t>(card);
        }
        for (int pos = 0; pos < n; ++pos) {
            state[static_cast<std::size_t>(pos)] =
                rep[static_cast<std::size_t>(owner[static_cast<std::size_t>(pos)])];
        }
        std::size_t code = 0;
        for (int i = 0; i < n; ++i) {
            code = code * static_cast<std::size_t>(card) +
                   static_cast<std::size_t>(state[static_cast<std::size_t>(i)]);
        }
        pmf[code] = mass;
    }
    return TabularDist(n, std::move(tokens), std::move(pmf), state_guard);
}

TabularDist random_tabular(std::uint64_t seed, int n, TokenSpace tokens, double concentration,
                           std::uint64_t state_guard) {
    if (!(concentration > 0.0)) {
        throw InvalidArgument("random_tabular: concentration must be positive");
    }
    tokens.validate();
    std::uint64_t states = checked_pow(tokens.cardinality(), n, state_guard, "random_tabular");

    KeyedRng rng = KeyedRng(seed).derive(0x7ab1e5u);
    std::vector<double> pmf(states);
    StableSum total;
    for (std::size_t s = 0; s < states; ++s) {
        pmf[s] = sample_gamma(rng, concentration);
        total.add(pmf[s]);
    }
    double norm = total.value();
    for (double& p : pmf) p /= norm;
    // Renormalize once more so the ctor's 1e-12 check is met exactly.
    StableSum check;
    for (double p : pmf) check.add(p);
    double c = check.value();
    for (double& p : pmf) p /= c;
    return TabularDist(n, std::move(tokens), std::move(pmf), state_guard);
}

}  // namespace unmask
