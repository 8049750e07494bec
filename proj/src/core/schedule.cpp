#include "unmask/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace unmask {

CumSchedule::CumSchedule(std::int64_t n, std::vector<std::int64_t> a) : n_(n), a_(std::move(a)) {
    if (n_ < 1) throw InvalidArgument("CumSchedule: n must be positive");
    if (a_.size() < 2 || a_.front() != 0 || a_.back() != n_) {
        throw InvalidArgument("CumSchedule: endpoints must be a_0 = 0 and a_K = N");
    }
    for (std::size_t k = 1; k < a_.size(); ++k) {
        if (a_[k] <= a_[k - 1]) {
            throw InvalidArgument("CumSchedule: entries must be strictly increasing");
        }
    }
}

std::vector<std::int64_t> CumSchedule::sizes() const {
    std::vector<std::int64_t> s(a_.size() - 1);
    for (std::size_t k = 1; k < a_.size(); ++k) s[k - 1] = a_[k] - a_[k - 1];
    return s;
}

std::int64_t CumSchedule::s_max() const {
    std::int64_t m = 0;
    for (std::size_t k = 1; k < a_.size(); ++k) m = std::max(m, a_[k] - a_[k - 1]);
    return m;
}

std::int64_t CumSchedule::r(std::int64_t i) const {
    auto it = std::lower_bound(a_.begin(), a_.end(), i);
    if (it == a_.end()) throw InvalidArgument("CumSchedule::r: i exceeds N");
    return *it;
}

CumSchedule CumSchedule::from_sizes(std::int64_t n, std::span<const std::int64_t> sizes) {
    std::vector<std::int64_t> a{0};
    for (std::int64_t s : sizes) a.push_back(a.back() + s);
    return CumSchedule(n, std::move(a));
}

CumSchedule CumSchedule::identity(std::int64_t n) {
    std::vector<std::int64_t> a(static_cast<std::size_t>(n) + 1);
    for (std::int64_t k = 0; k <= n; ++k) a[static_cast<std::size_t>(k)] = k;
    return CumSchedule(n, std::move(a));
}

SizeLaw SizeLaw::deterministic(CumSchedule schedule) {
    SizeLaw law;
    law.kind_ = Kind::deterministic;
    law.n_ = schedule.n();
    law.atoms_.emplace_back(std::move(schedule), 1.0);
    return law;
}

SizeLaw SizeLaw::geometric(std::int64_t n, double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("SizeLaw::geometric: p must lie in (0,1)");
    if (n < 1) throw InvalidArgument("SizeLaw::geometric: n must be positive");
    SizeLaw law;
    law.kind_ = Kind::geometric;
    law.n_ = n;
    law.p_ = p;
    return law;
}

SizeLaw SizeLaw::explicit_mixture(std::vector<std::pair<CumSchedule, double>> atoms) {
    if (atoms.empty()) throw InvalidArgument("SizeLaw::explicit_mixture: no atoms");
    SizeLaw law;
    law.kind_ = Kind::explicit_mixture;
    law.n_ = atoms.front().first.n();
    StableSum total;
    for (const auto& [sched, prob] : atoms) {
        if (sched.n() != law.n_) {
            throw InvalidArgument("SizeLaw::explicit_mixture: schedules must share n");
        }
        if (!(prob >= 0.0)) throw InvalidArgument("SizeLaw::explicit_mixture: negative weight");
        total.add(prob);
    }
    if (std::abs(total.value() - 1.0) > 1e-12) {
        throw InvalidArgument("SizeLaw::explicit_mixture: weights must sum to 1 within 1e-12");
    }
    law.atoms_ = std::move(atoms);
    return law;
}

double SizeLaw::p() const {
    if (kind_ != Kind::geometric) throw InvalidArgument("SizeLaw::p: not a geometric law");
    return p_;
}

const CumSchedule& SizeLaw::schedule() const {
    if (kind_ != Kind::deterministic) {
        throw InvalidArgument("SizeLaw::schedule: not a deterministic law");
    }
    return atoms_.front().first;
}

const std::vector<std::pair<CumSchedule, double>>& SizeLaw::atoms() const { return atoms_; }

CumSchedule SizeLaw::sample(KeyedRng& rng) const {
    switch (kind_) {
        case Kind::deterministic:
            return atoms_.front().first;
        case Kind::explicit_mixture: {
            double u = rng.uniform();
            double run = 0.0;
            for (const auto& [sched, prob] : atoms_) {
                run += prob;
                if (u < run) return sched;
            }
            return atoms_.back().first;
        }
        case Kind::geometric: {
            std::vector<std::int64_t> a{0};
            while (a.back() < n_) {
                std::int64_t remaining = n_ - a.back();
                int s = sample_truncated_geometric(rng, p_, static_cast<int>(remaining));
                a.push_back(a.back() + s);
            }
            return CumSchedule(n_, std::move(a));
        }
    }
    throw InvalidArgument("SizeLaw::sample: unknown kind");
}

double truncated_geometric_pmf(double p, std::int64_t m, std::int64_t i) {
    if (i < 1 || i > m) return 0.0;
    if (i == m) return std::pow(1.0 - p, static_cast<double>(m - 1));
    return std::pow(1.0 - p, static_cast<double>(i - 1)) * p;
}

namespace {

SizeLaw::Stats schedule_stats(const CumSchedule& sched) {
    SizeLaw::Stats st;
    st.e_k = static_cast<double>(sched.steps());
    st.e_smax = static_cast<double>(sched.s_max());
    st.e_n_over_smax = static_cast<double>(sched.n()) / static_cast<double>(sched.s_max());
    return st;
}

}  // namespace

SizeLaw::Stats SizeLaw::stats() const {
    if (kind_ == Kind::deterministic) return schedule_stats(atoms_.front().first);
    if (kind_ == Kind::explicit_mixture) {
        Stats st;
        for (const auto& [sched, prob] : atoms_) {
            Stats one = schedule_stats(sched);
            st.e_k += prob * one.e_k;
            st.e_smax += prob * one.e_smax;
            st.e_n_over_smax += prob * one.e_n_over_smax;
        }
        return st;
    }

    // Geometric chain: exact renewal computation.
    // E[K]: v(j) = P(the chain visits position j); every visited position
    // in {0..N-1} starts one block.
    const std::int64_t n = n_;
    if (n > 2048) {
        throw GuardExceeded("SizeLaw::stats: geometric stats limited to n <= 2048");
    }
    std::vector<double> visit(static_cast<std::size_t>(n), 0.0);
    visit[0] = 1.0;
    StableSum e_k;
    e_k.add(1.0);
    for (std::int64_t j = 1; j < n; ++j) {
        StableSum acc;
        for (std::int64_t i = 0; i < j; ++i) {
            if (visit[static_cast<std::size_t>(i)] == 0.0) continue;
            acc.add(visit[static_cast<std::size_t>(i)] *
                    truncated_geometric_pmf(p_, n - i, j - i));
        }
        visit[static_cast<std::size_t>(j)] = acc.value();
        e_k.add(acc.value());
    }

    // s_max: forward DP over (position, running max).
    // state[j][m] = P(at position j with running max m).
    std::vector<std::vector<double>> state(static_cast<std::size_t>(n),
                                           std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
    state[0][0] = 1.0;
    StableSum e_smax;
    StableSum e_inv;
    for (std::int64_t j = 0; j < n; ++j) {
        for (std::int64_t m = 0; m <= n; ++m) {
            double mass = state[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)];
            if (mass == 0.0) continue;
            std::int64_t remaining = n - j;
            for (std::int64_t s = 1; s <= remaining; ++s) {
                double q = truncated_geometric_pmf(p_, remaining, s);
                if (q == 0.0) continue;
                std::int64_t nm = std::max(m, s);
                if (j + s == n) {
                    e_smax.add(mass * q * static_cast<double>(nm));
                    e_inv.add(mass * q * static_cast<double>(n) / static_cast<double>(nm));
                } else {
                    state[static_cast<std::size_t>(j + s)][static_cast<std::size_t>(nm)] +=
                        mass * q;
                }
            }
        }
    }

    Stats st;
    st.e_k = e_k.value();
    st.e_smax = e_smax.value();
    st.e_n_over_smax = e_inv.value();
    return st;
}

}  // namespace unmask
