#include "unmask/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "unmask/efact.hpp"

namespace unmask {

namespace {

constexpr std::uint64_t kStreamPlanner = 0;
constexpr std::uint64_t kStreamTokens = 1;

// Conditional tables for one prefix subset S: the prefix mass of every
// assignment on S together with exact and denoiser univariate conditionals
// for every coordinate outside S. Entries are laid out as
// cond[assignment_code][free_slot][token].
struct PrefixTable {
    std::vector<int> subset;          // sorted coordinates of S
    std::vector<int> free_coords;     // sorted coordinates outside S
    std::vector<double> prefix_mass;  // |X|^{|S|}
    std::vector<double> exact_cond;   // -1 where the prefix mass is zero
    std::size_t assignments = 0;

    std::size_t cond_index(std::size_t code, std::size_t slot, int v, int card) const {
        return (code * free_coords.size() + slot) * static_cast<std::size_t>(card) +
               static_cast<std::size_t>(v);
    }
};

// Lazy per-subset cache of PrefixTables for one tabular target.
class PrefixCache {
public:
    explicit PrefixCache(const TabularDist& dist) : dist_(&dist) {}

    const PrefixTable& table(std::uint32_t mask) {
        auto it = cache_.find(mask);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(mask, build(mask)).first->second;
    }

    const TabularDist& dist() const { return *dist_; }

private:
    PrefixTable build(std::uint32_t mask) const {
        const int n = dist_->n();
        const int card = dist_->cardinality();
        PrefixTable t;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                t.subset.push_back(i);
            } else {
                t.free_coords.push_back(i);
            }
        }
        t.assignments = 1;
        for (std::size_t j = 0; j < t.subset.size(); ++j) {
            t.assignments *= static_cast<std::size_t>(card);
        }
        std::vector<StableSum> mass(t.assignments);
        std::vector<StableSum> joint(t.assignments * t.free_coords.size() *
                                     static_cast<std::size_t>(card));

        auto pmf = dist_->pmf();
        std::vector<int> state(static_cast<std::size_t>(n));
        for (std::size_t code = 0; code < pmf.size(); ++code) {
            if (pmf[code] == 0.0) continue;
            dist_->decode(code, state);
            std::size_t pc = 0;
            for (int pos : t.subset) {
                pc = pc * static_cast<std::size_t>(card) +
                     static_cast<std::size_t>(state[static_cast<std::size_t>(pos)]);
            }
            mass[pc].add(pmf[code]);
            for (std::size_t slot = 0; slot < t.free_coords.size(); ++slot) {
                int v = state[static_cast<std::size_t>(t.free_coords[slot])];
                joint[t.cond_index(pc, slot, v, card)].add(pmf[code]);
            }
        }

        t.prefix_mass.resize(t.assignments);
        t.exact_cond.assign(joint.size(), -1.0);
        for (std::size_t pc = 0; pc < t.assignments; ++pc) {
            double m = mass[pc].value();
            t.prefix_mass[pc] = m;
            if (m <= 0.0) continue;
            for (std::size_t slot = 0; slot < t.free_coords.size(); ++slot) {
                for (int v = 0; v < card; ++v) {
                    t.exact_cond[t.cond_index(pc, slot, v, card)] =
                        joint[t.cond_index(pc, slot, v, card)].value() / m;
                }
            }
        }
        return t;
    }

    const TabularDist* dist_;
    std::unordered_map<std::uint32_t, PrefixTable> cache_;
};

double mixture(double exact, double epsilon, int card) {
    return (1.0 - epsilon) * exact + epsilon / static_cast<double>(card);
}

// Denoiser value for a (possibly zero-mass) prefix table entry.
double denoiser_value(const PrefixTable& t, std::size_t pc, std::size_t slot, int v,
                      double epsilon, int card) {
    double exact = t.exact_cond[t.cond_index(pc, slot, v, card)];
    if (exact < 0.0) {
        if (epsilon > 0.0) return 1.0 / static_cast<double>(card);
        return -1.0;  // undefined
    }
    return mixture(exact, epsilon, card);
}

std::uint32_t block_mask(const std::vector<int>& block) {
    std::uint32_t m = 0;
    for (int pos : block) m |= (1u << pos);
    return m;
}

void check_guard(const Planner& planner, const char* who) {
    if (planner.n() > kPartitionGuardN) {
        throw GuardExceeded(std::string(who) + ": N exceeds the partition enumeration guard");
    }
}

}  // namespace

Denoiser::Denoiser(std::shared_ptr<const TabularDist> dist, double epsilon)
    : dist_(std::move(dist)), epsilon_(epsilon) {
    if (!dist_) throw InvalidArgument("Denoiser: null target");
    if (!(epsilon_ >= 0.0 && epsilon_ <= 1.0)) {
        throw InvalidArgument("Denoiser: epsilon must lie in [0,1]");
    }
}

Denoiser Denoiser::exact(std::shared_ptr<const TabularDist> dist) {
    return Denoiser(std::move(dist), 0.0);
}

Denoiser Denoiser::uniform_mixture(std::shared_ptr<const TabularDist> dist, double epsilon) {
    return Denoiser(std::move(dist), epsilon);
}

Denoiser Denoiser::exact(const TabularDist& dist) {
    return Denoiser(std::make_shared<TabularDist>(dist), 0.0);
}

Denoiser Denoiser::uniform_mixture(const TabularDist& dist, double epsilon) {
    return Denoiser(std::make_shared<TabularDist>(dist), epsilon);
}

std::vector<double> Denoiser::conditional_of(int target, const Assignment& given) const {
    const int card = cardinality();
    std::vector<double> exact;
    try {
        exact = conditional(*dist_, target, given);
    } catch (const UndefinedConditional&) {
        if (epsilon_ > 0.0) {
            return std::vector<double>(static_cast<std::size_t>(card),
                                       1.0 / static_cast<double>(card));
        }
        throw;
    }
    if (epsilon_ == 0.0) return exact;
    for (double& p : exact) p = mixture(p, epsilon_, card);
    return exact;
}

RunTrace run(const Denoiser& denoiser, const Planner& planner, std::uint64_t seed) {
    if (denoiser.n() != planner.n()) throw InvalidArgument("run: dimension mismatch");
    const int n = planner.n();
    const int card = denoiser.cardinality();
    KeyedRng master(seed);
    KeyedRng planner_rng = master.derive(kStreamPlanner);
    OrderedPartition blocks = planner.draw_partition(planner_rng);

    RunTrace trace;
    trace.x.assign(static_cast<std::size_t>(n), -1);
    std::vector<int> known_idx;
    std::vector<int> known_val;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        Assignment given(known_idx, known_val, n, card);
        StepRecord rec;
        rec.block = blocks[k];
        KeyedRng step_rng = master.derive(kStreamTokens).derive(static_cast<std::uint64_t>(k));
        for (int pos : blocks[k]) {
            std::vector<double> probs = denoiser.conditional_of(pos, given);
            KeyedRng token_rng = step_rng.derive(static_cast<std::uint64_t>(pos));
            double u = token_rng.uniform();
            double run_mass = 0.0;
            int v = card - 1;
            for (int c = 0; c < card; ++c) {
                run_mass += probs[static_cast<std::size_t>(c)];
                if (u < run_mass) {
                    v = c;
                    break;
                }
            }
            rec.tokens.push_back(v);
            trace.x[static_cast<std::size_t>(pos)] = v;
        }
        // Unmask the whole block only after every coordinate was drawn.
        for (std::size_t j = 0; j < rec.block.size(); ++j) {
            known_idx.push_back(rec.block[j]);
            known_val.push_back(rec.tokens[j]);
        }
        std::vector<std::size_t> order(known_idx.size());
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return known_idx[a] < known_idx[b]; });
        std::vector<int> si, sv;
        si.reserve(order.size());
        sv.reserve(order.size());
        for (std::size_t j : order) {
            si.push_back(known_idx[j]);
            sv.push_back(known_val[j]);
        }
        known_idx = std::move(si);
        known_val = std::move(sv);
        trace.steps.push_back(std::move(rec));
    }
    return trace;
}

TabularDist output_law_exact(const Denoiser& denoiser, const Planner& planner) {
    if (denoiser.n() != planner.n()) {
        throw InvalidArgument("output_law_exact: dimension mismatch");
    }
    check_guard(planner, "output_law_exact");
    const TabularDist& target = denoiser.target();
    const int n = target.n();
    const int card = target.cardinality();
    const double eps = denoiser.epsilon();
    PrefixCache cache(target);

    std::vector<StableSum> law(target.states());
    std::vector<int> state(static_cast<std::size_t>(n));
    for (const auto& wp : planner.enumerate_support()) {
        for (std::size_t code = 0; code < target.states(); ++code) {
            target.decode(code, state);
            double prod = wp.prob;
            std::uint32_t prefix = 0;
            for (const auto& block : wp.blocks) {
                if (prod == 0.0) break;
                const PrefixTable& t = cache.table(prefix);
                std::size_t pc = 0;
                for (int pos : t.subset) {
                    pc = pc * static_cast<std::size_t>(card) +
                         static_cast<std::size_t>(state[static_cast<std::size_t>(pos)]);
                }
                for (int pos : block) {
                    std::size_t slot = static_cast<std::size_t>(
                        std::lower_bound(t.free_coords.begin(), t.free_coords.end(), pos) -
                        t.free_coords.begin());
                    double q = denoiser_value(t, pc, slot, state[static_cast<std::size_t>(pos)],
                                              eps, card);
                    if (q < 0.0) {
                        // A zero-mass prefix reached with positive factorized
                        // probability: the exact denoiser's law is undefined
                        // there (the sampler itself would fail on this path).
                        throw UndefinedConditional(
                            "output_law_exact: factorized sampling reaches a "
                            "zero-probability prefix; use a mixture denoiser");
                    }
                    prod *= q;
                }
                prefix |= block_mask(block);
            }
            if (prod != 0.0) law[code].add(prod);
        }
    }
    std::vector<double> pmf(target.states());
    for (std::size_t i = 0; i < pmf.size(); ++i) pmf[i] = law[i].value();
    // Tidy rounding so the constructor's normalization check passes.
    StableSum total;
    for (double p : pmf) total.add(p);
    double norm = total.value();
    if (std::abs(norm - 1.0) > 1e-9) {
        throw Error("output_law_exact: law mass drifted from 1");
    }
    for (double& p : pmf) p /= norm;
    return TabularDist(n, target.tokens(), std::move(pmf));
}

TabularDist output_law_block_exact(const TabularDist& dist, const Planner& planner) {
    if (dist.n() != planner.n()) {
        throw InvalidArgument("output_law_block_exact: dimension mismatch");
    }
    check_guard(planner, "output_law_block_exact");
    const int n = dist.n();
    const int card = dist.cardinality();

    // Marginal tables per unmasked-set mask, built on demand.
    std::unordered_map<std::uint32_t, std::vector<double>> marg;
    auto mass_of = [&](std::uint32_t mask, const std::vector<int>& state) -> double {
        if (mask == 0) return 1.0;
        auto it = marg.find(mask);
        if (it == marg.end()) {
            std::vector<int> subset;
            for (int i = 0; i < n; ++i) {
                if (mask & (1u << i)) subset.push_back(i);
            }
            TabularDist m = marginal(dist, subset);
            it = marg.emplace(mask, std::vector<double>(m.pmf().begin(), m.pmf().end())).first;
        }
        std::size_t code = 0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                code = code * static_cast<std::size_t>(card) +
                       static_cast<std::size_t>(state[static_cast<std::size_t>(i)]);
            }
        }
        return it->second[code];
    };

    std::vector<StableSum> law(dist.states());
    std::vector<int> state(static_cast<std::size_t>(n));
    for (const auto& wp : planner.enumerate_support()) {
        for (std::size_t code = 0; code < dist.states(); ++code) {
            dist.decode(code, state);
            // prod_k pi(x_{z_k} | x_{z<k}) as a telescoping ratio of
            // prefix masses.
            double prod = wp.prob;
            std::uint32_t prefix = 0;
            for (const auto& block : wp.blocks) {
                std::uint32_t next = prefix | block_mask(block);
                double denom = mass_of(prefix, state);
                if (denom <= 0.0) {
                    prod = 0.0;
                    break;
                }
                prod *= mass_of(next, state) / denom;
                prefix = next;
            }
            if (prod != 0.0) law[code].add(prod);
        }
    }
    std::vector<double> pmf(dist.states());
    StableSum total;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        pmf[i] = law[i].value();
        total.add(pmf[i]);
    }
    double norm = total.value();
    for (double& p : pmf) p /= norm;
    return TabularDist(n, dist.tokens(), std::move(pmf));
}

double kl(const TabularDist& p, const TabularDist& q) {
    if (p.n() != q.n() || p.cardinality() != q.cardinality()) {
        throw InvalidArgument("kl: distributions must share shape");
    }
    StableSum acc;
    auto pp = p.pmf();
    auto qq = q.pmf();
    for (std::size_t i = 0; i < pp.size(); ++i) {
        if (pp[i] == 0.0) continue;
        if (qq[i] <= 0.0) return std::numeric_limits<double>::infinity();
        acc.add(pp[i] * std::log(pp[i] / qq[i]));
    }
    return acc.value();
}

namespace {

// Expected log-ratio and log-denoiser terms, memoized per (prefix, coord).
class TermCache {
public:
    TermCache(PrefixCache& cache, double epsilon) : cache_(&cache), epsilon_(epsilon) {}

    // E_pi[ log pi(x_i | x_S) - log p_hat(x_i ; x_S) ]
    double learn_term(std::uint32_t mask, int coord) {
        auto key = make_key(mask, coord);
        auto it = learn_.find(key);
        if (it != learn_.end()) return it->second;
        double v = compute(mask, coord, /*learn=*/true);
        learn_.emplace(key, v);
        return v;
    }

    // E_pi[ log p_hat(x_i ; x_S) ]
    double log_phat_term(std::uint32_t mask, int coord) {
        auto key = make_key(mask, coord);
        auto it = phat_.find(key);
        if (it != phat_.end()) return it->second;
        double v = compute(mask, coord, /*learn=*/false);
        phat_.emplace(key, v);
        return v;
    }

private:
    static std::uint64_t make_key(std::uint32_t mask, int coord) {
        return (static_cast<std::uint64_t>(mask) << 6) | static_cast<std::uint64_t>(coord);
    }

    double compute(std::uint32_t mask, int coord, bool learn) {
        const PrefixTable& t = cache_->table(mask);
        const int card = cache_->dist().cardinality();
        std::size_t slot = static_cast<std::size_t>(
            std::lower_bound(t.free_coords.begin(), t.free_coords.end(), coord) -
            t.free_coords.begin());
        StableSum acc;
        for (std::size_t pc = 0; pc < t.assignments; ++pc) {
            double m = t.prefix_mass[pc];
            if (m == 0.0) continue;
            for (int v = 0; v < card; ++v) {
                double exact = t.exact_cond[t.cond_index(pc, slot, v, card)];
                double joint = m * exact;
                if (joint == 0.0) continue;
                double phat = mixture(exact, epsilon_, card);
                acc.add(joint * (learn ? std::log(exact / phat) : std::log(phat)));
            }
        }
        return acc.value();
    }

    PrefixCache* cache_;
    double epsilon_;
    std::unordered_map<std::uint64_t, double> learn_;
    std::unordered_map<std::uint64_t, double> phat_;
};

}  // namespace

double e_learn(const TabularDist& dist, const Denoiser& denoiser, const Planner& planner) {
    if (dist.n() != planner.n() || denoiser.n() != dist.n()) {
        throw InvalidArgument("e_learn: dimension mismatch");
    }
    check_guard(planner, "e_learn");
    PrefixCache cache(dist);
    TermCache terms(cache, denoiser.epsilon());
    StableSum acc;
    for (const auto& wp : planner.enumerate_support()) {
        double sum = 0.0;
        std::uint32_t prefix = 0;
        for (const auto& block : wp.blocks) {
            for (int pos : block) sum += terms.learn_term(prefix, pos);
            prefix |= block_mask(block);
        }
        acc.add(wp.prob * sum);
    }
    return acc.value();
}

DecompositionReport decomposition_check(const TabularDist& dist, const Denoiser& denoiser,
                                        const Planner& planner) {
    if (dist.n() != planner.n() || denoiser.n() != dist.n()) {
        throw InvalidArgument("decomposition_check: dimension mismatch");
    }
    check_guard(planner, "decomposition_check");

    DecompositionReport report{};
    report.e_learn = e_learn(dist, denoiser, planner);
    report.e_fact = efact_direct(dist, planner);
    report.kl_marginal = kl(dist, output_law_exact(denoiser, planner));

    // kl_joint = E_pi[log pi(x)] - E_{pi nu}[log p_hat(x; z)], assembled
    // from per-(prefix, coordinate) expectations rather than the
    // decomposition itself.
    PrefixCache cache(dist);
    TermCache terms(cache, denoiser.epsilon());
    double minus_entropy = -entropy(dist.pmf());
    StableSum log_phat;
    for (const auto& wp : planner.enumerate_support()) {
        double sum = 0.0;
        std::uint32_t prefix = 0;
        for (const auto& block : wp.blocks) {
            for (int pos : block) sum += terms.log_phat_term(prefix, pos);
            prefix |= block_mask(block);
        }
        log_phat.add(wp.prob * sum);
    }
    report.kl_joint = minus_entropy - log_phat.value();
    return report;
}

}  // namespace unmask
