#include "unmask.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "json.hpp"
#include "unmask/efact.hpp"
#include "unmask/experiments.hpp"
#include "unmask/io.hpp"
#include "unmask/sched_opt.hpp"

using namespace unmask;

/* Opaque handle definitions. */
struct um_dist {
    Distribution value;
};

struct um_profile {
    InfoProfile value;
};

struct um_schedule {
    CumSchedule value;
};

struct um_sampler {
    std::shared_ptr<const TabularDist> target;
    Planner planner;
    Denoiser denoiser;
    TokenSpace tokens;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Runs a callable, translating exceptions into status codes.
template <typename Fn>
um_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return UM_OK;
    } catch (const ParseError& e) {
        g_last_error = e.what();
        return UM_ERR_PARSE;
    } catch (const GuardExceeded& e) {
        g_last_error = e.what();
        return UM_ERR_GUARD_EXCEEDED;
    } catch (const HypothesisViolated& e) {
        g_last_error = e.what();
        return UM_ERR_HYPOTHESIS;
    } catch (const UndefinedConditional& e) {
        g_last_error = e.what();
        return UM_ERR_UNDEFINED_CONDITIONAL;
    } catch (const SingularModel& e) {
        g_last_error = e.what();
        return UM_ERR_SINGULAR;
    } catch (const NoCorrelation& e) {
        g_last_error = e.what();
        return UM_ERR_NO_CORRELATION;
    } catch (const InvalidArgument& e) {
        g_last_error = e.what();
        return UM_ERR_INVALID_ARGUMENT;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return UM_ERR_INTERNAL;
    }
}

um_status require_nonnull(const void* p) {
    if (p == nullptr) {
        g_last_error = "null argument";
        return UM_ERR_INVALID_ARGUMENT;
    }
    return UM_OK;
}

InfoProfile compute_profile(const Distribution& dist) {
    if (dist.is_tabular()) return exact_profile(dist.tabular());
    return gaussian_profile(dist.gaussian());
}

}  // namespace

extern "C" {

UM_API const char* um_status_name(um_status status) {
    switch (status) {
        case UM_OK: return "ok";
        case UM_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case UM_ERR_PARSE: return "parse_error";
        case UM_ERR_GUARD_EXCEEDED: return "guard_exceeded";
        case UM_ERR_HYPOTHESIS: return "hypothesis_violated";
        case UM_ERR_UNDEFINED_CONDITIONAL: return "undefined_conditional";
        case UM_ERR_SINGULAR: return "singular_model";
        case UM_ERR_NO_CORRELATION: return "no_correlation";
        case UM_ERR_INTERNAL: return "internal_error";
    }
    return "unknown";
}

UM_API const char* um_last_error(void) { return g_last_error.c_str(); }

UM_API void um_string_free(char* text) { std::free(text); }

/* ---------------- distributions ---------------- */

UM_API um_status um_dist_from_json(const char* json_text, uint64_t state_guard, um_dist** out) {
    if (um_status s = require_nonnull(json_text); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] {
        std::uint64_t guard = state_guard == 0 ? kDefaultStateGuard : state_guard;
        *out = new um_dist{Distribution::from_json_text(json_text, guard)};
    });
}

UM_API um_status um_dist_to_json(const um_dist* dist, char** json_out) {
    if (um_status s = require_nonnull(dist); s != UM_OK) return s;
    if (um_status s = require_nonnull(json_out); s != UM_OK) return s;
    return guarded([&] { *json_out = dup_string(dist->value.to_json_text()); });
}

UM_API void um_dist_free(um_dist* dist) { delete dist; }

UM_API int64_t um_dist_n(const um_dist* dist) { return dist ? dist->value.n() : 0; }

UM_API int um_dist_cardinality(const um_dist* dist) {
    if (!dist || !dist->value.is_tabular()) return 0;
    return dist->value.tabular().cardinality();
}

UM_API int um_dist_is_tabular(const um_dist* dist) {
    return dist && dist->value.is_tabular() ? 1 : 0;
}

UM_API um_status um_dist_d_measure(const um_dist* dist, double* out) {
    if (um_status s = require_nonnull(dist); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] {
        *out = dist->value.is_tabular() ? d_measure(dist->value.tabular())
                                        : gaussian_d(dist->value.gaussian());
    });
}

/* ---------------- profiles ---------------- */

UM_API um_status um_profile_compute(const um_dist* dist, um_profile** out) {
    if (um_status s = require_nonnull(dist); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] { *out = new um_profile{compute_profile(dist->value)}; });
}

UM_API um_status um_profile_mc(const um_dist* dist, int64_t samples, uint64_t seed,
                               int sum_over_tokens, um_profile** out) {
    if (um_status s = require_nonnull(dist); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] {
        *out = new um_profile{
            mc_profile(dist->value.tabular(), samples, seed, sum_over_tokens != 0)};
    });
}

UM_API um_status um_profile_from_json(const char* json_text, um_profile** out) {
    if (um_status s = require_nonnull(json_text); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] { *out = new um_profile{profile_from_json_text(json_text)}; });
}

UM_API um_status um_profile_to_json(const um_profile* profile, char** json_out) {
    if (um_status s = require_nonnull(profile); s != UM_OK) return s;
    if (um_status s = require_nonnull(json_out); s != UM_OK) return s;
    return guarded([&] { *json_out = dup_string(profile_to_json_text(profile->value)); });
}

UM_API um_status um_profile_to_csv(const um_profile* profile, char** csv_out) {
    if (um_status s = require_nonnull(profile); s != UM_OK) return s;
    if (um_status s = require_nonnull(csv_out); s != UM_OK) return s;
    return guarded([&] { *csv_out = dup_string(profile_to_csv(profile->value)); });
}

UM_API void um_profile_free(um_profile* profile) { delete profile; }

UM_API int64_t um_profile_n(const um_profile* profile) {
    return profile ? profile->value.n() : 0;
}

UM_API um_status um_profile_value(const um_profile* profile, int64_t i, double* out) {
    if (um_status s = require_nonnull(profile); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] {
        if (i < 0 || i >= profile->value.n()) {
            throw InvalidArgument("um_profile_value: index out of range");
        }
        *out = profile->value.value(i);
    });
}

UM_API um_status um_profile_d(const um_profile* profile, double* out) {
    if (um_status s = require_nonnull(profile); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] { *out = profile->value.d(); });
}

UM_API int um_profile_is_monotone(const um_profile* profile, double tol) {
    return profile && profile->value.nondecreasing(tol) ? 1 : 0;
}

UM_API um_status um_profile_isotonic(const um_profile* profile, um_profile** out) {
    if (um_status s = require_nonnull(profile); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] { *out = new um_profile{isotonic_smooth(profile->value)}; });
}

/* ---------------- schedules ---------------- */

UM_API um_status um_schedule_from_json(const char* json_text, um_schedule** out) {
    if (um_status s = require_nonnull(json_text); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] {
        *out = new um_schedule{schedule_from_json_text(json_text).schedule};
    });
}

UM_API um_status um_schedule_to_json(const um_schedule* schedule, const char* provenance,
                                     char** json_out) {
    if (um_status s = require_nonnull(schedule); s != UM_OK) return s;
    if (um_status s = require_nonnull(json_out); s != UM_OK) return s;
    return guarded([&] {
        *json_out = dup_string(
            schedule_to_json_text(schedule->value, provenance ? provenance : "unknown"));
    });
}

UM_API void um_schedule_free(um_schedule* schedule) { delete schedule; }

UM_API int64_t um_schedule_steps(const um_schedule* schedule) {
    return schedule ? schedule->value.steps() : 0;
}

UM_API um_status um_schedule_entry(const um_schedule* schedule, int64_t k, int64_t* out) {
    if (um_status s = require_nonnull(schedule); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] {
        if (k < 0 || k > schedule->value.steps()) {
            throw InvalidArgument("um_schedule_entry: index out of range");
        }
        *out = schedule->value.a()[static_cast<std::size_t>(k)];
    });
}

UM_API um_status um_schedule_uniform(int64_t n, int64_t k, um_schedule** out) {
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] { *out = new um_schedule{uniform_schedule(n, k)}; });
}

UM_API um_status um_schedule_dp(const um_profile* profile, int64_t k, um_schedule** out,
                                double* a_value_out) {
    if (um_status s = require_nonnull(profile); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] {
        DpResult res = optimal_dp(profile->value, k);
        if (a_value_out) *a_value_out = res.a_value;
        *out = new um_schedule{std::move(res.schedule)};
    });
}

UM_API um_status um_schedule_data_driven(const um_profile* profile, int64_t k,
                                         um_schedule** out) {
    if (um_status s = require_nonnull(profile); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] { *out = new um_schedule{data_driven_schedule(profile->value, k)}; });
}

UM_API um_status um_schedule_alpha_opt(const um_profile* profile, int64_t k, um_schedule** out) {
    if (um_status s = require_nonnull(profile); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] {
        const InfoProfile& prof = profile->value;
        RescaledDerivative g = rescaled_derivative(prof, prof.d());
        AlphaCurve curve = continuous_optimum([g](double u) { return g.at(u); });
        *out = new um_schedule{from_alpha(curve, prof.n(), k).schedule};
    });
}

UM_API um_status um_schedule_exponential(double xi, int64_t n, int64_t k, um_schedule** out) {
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] {
        *out = new um_schedule{from_alpha(AlphaCurve::exponential(xi), n, k).schedule};
    });
}

UM_API um_status um_a_riemann(const um_profile* profile, const um_schedule* schedule,
                              double* out) {
    if (um_status s = require_nonnull(profile); s != UM_OK) return s;
    if (um_status s = require_nonnull(schedule); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] { *out = a_riemann(profile->value, schedule->value); });
}

UM_API um_status um_a_discrete_derivative(const um_profile* profile,
                                          const um_schedule* schedule, double* out) {
    if (um_status s = require_nonnull(profile); s != UM_OK) return s;
    if (um_status s = require_nonnull(schedule); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] { *out = a_discrete_derivative(profile->value, schedule->value); });
}

UM_API um_status um_efact_geometric(const um_profile* profile, double p, double* out) {
    if (um_status s = require_nonnull(profile); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] { *out = efact_geometric_closed_form(profile->value, p); });
}

UM_API um_status um_bounds_geometric(double d, double p, double max_delta, double* lower_out,
                                     double* upper_out) {
    if (um_status s = require_nonnull(lower_out); s != UM_OK) return s;
    if (um_status s = require_nonnull(upper_out); s != UM_OK) return s;
    return guarded([&] {
        GeomBounds gb = bounds_geometric(d, p, max_delta);
        *lower_out = gb.lower;
        *upper_out = gb.upper;
    });
}

/* ---------------- samplers ---------------- */

UM_API um_status um_sampler_create(const um_dist* dist, const char* planner_json,
                                   const char* denoiser_json, um_sampler** out) {
    if (um_status s = require_nonnull(dist); s != UM_OK) return s;
    if (um_status s = require_nonnull(planner_json); s != UM_OK) return s;
    if (um_status s = require_nonnull(denoiser_json); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] {
        auto target = dist->value.tabular_ptr();
        Planner planner = planner_from_json_text(planner_json, target->n());
        Denoiser denoiser = denoiser_from_json_text(denoiser_json, target);
        *out = new um_sampler{target, std::move(planner), std::move(denoiser),
                              target->tokens()};
    });
}

UM_API void um_sampler_free(um_sampler* sampler) { delete sampler; }

UM_API um_status um_sampler_run(const um_sampler* sampler, uint64_t seed,
                                char** trace_jsonl_out) {
    if (um_status s = require_nonnull(sampler); s != UM_OK) return s;
    if (um_status s = require_nonnull(trace_jsonl_out); s != UM_OK) return s;
    return guarded([&] {
        RunTrace trace = run(sampler->denoiser, sampler->planner, seed);
        *trace_jsonl_out = dup_string(trace_to_jsonl(trace, sampler->tokens));
    });
}

UM_API um_status um_sampler_output_law(const um_sampler* sampler, um_dist** out) {
    if (um_status s = require_nonnull(sampler); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] {
        TabularDist law = output_law_exact(sampler->denoiser, sampler->planner);
        nlohmann::json spec;
        spec["type"] = "tabular";
        spec["n"] = law.n();
        spec["tokens"] = law.tokens().labels;
        spec["pmf"] = std::vector<double>(law.pmf().begin(), law.pmf().end());
        *out = new um_dist{Distribution::from_json_text(spec.dump())};
    });
}

UM_API um_status um_sampler_decomposition(const um_sampler* sampler, char** json_out) {
    if (um_status s = require_nonnull(sampler); s != UM_OK) return s;
    if (um_status s = require_nonnull(json_out); s != UM_OK) return s;
    return guarded([&] {
        DecompositionReport rep =
            decomposition_check(*sampler->target, sampler->denoiser, sampler->planner);
        nlohmann::json j;
        j["kl_marginal"] = rep.kl_marginal;
        j["kl_joint"] = rep.kl_joint;
        j["e_learn"] = rep.e_learn;
        j["e_fact"] = rep.e_fact;
        j["identity_residual"] = rep.identity_residual();
        *json_out = dup_string(j.dump());
    });
}

UM_API um_status um_kl(const um_dist* p, const um_dist* q, double* out) {
    if (um_status s = require_nonnull(p); s != UM_OK) return s;
    if (um_status s = require_nonnull(q); s != UM_OK) return s;
    if (um_status s = require_nonnull(out); s != UM_OK) return s;
    return guarded([&] { *out = kl(p->value.tabular(), q->value.tabular()); });
}

/* ---------------- experiment drivers ---------------- */

UM_API um_status um_verify_bounds(const char* instances_json, char** csv_out,
                                  int* violations_out) {
    if (um_status s = require_nonnull(instances_json); s != UM_OK) return s;
    if (um_status s = require_nonnull(csv_out); s != UM_OK) return s;
    return guarded([&] {
        BoundsAudit audit = run_bounds_audit(instances_json);
        *csv_out = dup_string(audit.csv);
        if (violations_out) *violations_out = audit.violations;
    });
}

UM_API um_status um_scaling_report(const char* config_json, char** csv_out) {
    if (um_status s = require_nonnull(config_json); s != UM_OK) return s;
    if (um_status s = require_nonnull(csv_out); s != UM_OK) return s;
    return guarded([&] { *csv_out = dup_string(run_scaling_report(config_json)); });
}

}  // extern "C"
