#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <string>

#include "doctest.h"
#include "unmask.h"

namespace {

struct StringOut {
    char* text = nullptr;
    ~StringOut() { um_string_free(text); }
    std::string str() const { return text ? text : ""; }
};

const char* kCopyDist = R"({"type":"block_copy","n":4,"tokens":["0","1"],"blocks":[[1,2],[3,4]]})";
const char* kRandomDist = R"({"type":"random","n":3,"tokens":["0","1"],"seed":7,"concentration":1.0})";

}  // namespace

TEST_CASE("c api: status names and error reporting") {
    CHECK(std::strcmp(um_status_name(UM_OK), "ok") == 0);
    CHECK(std::strcmp(um_status_name(UM_ERR_PARSE), "parse_error") == 0);

    um_dist* dist = nullptr;
    CHECK(um_dist_from_json("{ not json", 0, &dist) == UM_ERR_PARSE);
    CHECK(std::string(um_last_error()).find("JSON") != std::string::npos);
    CHECK(um_dist_from_json(nullptr, 0, &dist) == UM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("c api: distribution round trip and D measure") {
    um_dist* dist = nullptr;
    REQUIRE(um_dist_from_json(kCopyDist, 0, &dist) == UM_OK);
    CHECK(um_dist_n(dist) == 4);
    CHECK(um_dist_cardinality(dist) == 2);
    CHECK(um_dist_is_tabular(dist) == 1);

    double d = 0.0;
    REQUIRE(um_dist_d_measure(dist, &d) == UM_OK);
    CHECK(d == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    StringOut json;
    REQUIRE(um_dist_to_json(dist, &json.text) == UM_OK);
    um_dist* again = nullptr;
    REQUIRE(um_dist_from_json(json.text, 0, &again) == UM_OK);
    StringOut json2;
    REQUIRE(um_dist_to_json(again, &json2.text) == UM_OK);
    CHECK(json.str() == json2.str());

    um_dist_free(again);
    um_dist_free(dist);
}

TEST_CASE("c api: gaussian distributions and the state guard") {
    um_dist* gauss = nullptr;
    REQUIRE(um_dist_from_json(R"({"type":"gaussian_exchangeable","n":1000,"rho":0.001})", 0,
                              &gauss) == UM_OK);
    CHECK(um_dist_is_tabular(gauss) == 0);
    CHECK(um_dist_cardinality(gauss) == 0);
    double d = 0.0;
    CHECK(um_dist_d_measure(gauss, &d) == UM_OK);
    CHECK(d > 0.0);
    um_dist_free(gauss);

    um_dist* big = nullptr;
    CHECK(um_dist_from_json(R"({"type":"random","n":30,"tokens":["0","1"],"seed":1})", 0, &big) ==
          UM_ERR_GUARD_EXCEEDED);
}

TEST_CASE("c api: profile compute, serialize, monotonicity") {
    um_dist* dist = nullptr;
    REQUIRE(um_dist_from_json(kRandomDist, 0, &dist) == UM_OK);

    um_profile* prof = nullptr;
    REQUIRE(um_profile_compute(dist, &prof) == UM_OK);
    CHECK(um_profile_n(prof) == 3);
    CHECK(um_profile_is_monotone(prof, 1e-10) == 1);

    double d_prof = 0.0, d_dist = 0.0;
    REQUIRE(um_profile_d(prof, &d_prof) == UM_OK);
    REQUIRE(um_dist_d_measure(dist, &d_dist) == UM_OK);
    CHECK(d_prof == doctest::Approx(d_dist).epsilon(1e-10));

    StringOut json;
    REQUIRE(um_profile_to_json(prof, &json.text) == UM_OK);
    um_profile* parsed = nullptr;
    REQUIRE(um_profile_from_json(json.text, &parsed) == UM_OK);
    double v0 = 0.0, v0p = 0.0;
    REQUIRE(um_profile_value(prof, 0, &v0) == UM_OK);
    REQUIRE(um_profile_value(parsed, 0, &v0p) == UM_OK);
    CHECK(v0 == v0p);
    CHECK(um_profile_value(prof, 5, &v0) == UM_ERR_INVALID_ARGUMENT);

    StringOut csv;
    REQUIRE(um_profile_to_csv(prof, &csv.text) == UM_OK);
    CHECK(csv.str().rfind("i,f,delta_f,g_scaled", 0) == 0);

    um_profile* mc = nullptr;
    REQUIRE(um_profile_mc(dist, 500, 9, 0, &mc) == UM_OK);
    um_profile* smooth = nullptr;
    REQUIRE(um_profile_isotonic(mc, &smooth) == UM_OK);
    CHECK(um_profile_is_monotone(smooth, 0.0) == 1);

    um_profile_free(smooth);
    um_profile_free(mc);
    um_profile_free(parsed);
    um_profile_free(prof);
    um_dist_free(dist);
}

TEST_CASE("c api: schedule optimizers and A values") {
    um_profile* ramp = nullptr;
    REQUIRE(um_profile_from_json(R"({"n":4,"values":[0.0,1.0,2.0,3.0],"mode":"exact"})", &ramp) ==
            UM_OK);

    um_schedule* dp = nullptr;
    double a_star = -1.0;
    REQUIRE(um_schedule_dp(ramp, 2, &dp, &a_star) == UM_OK);
    CHECK(a_star == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(um_schedule_steps(dp) == 2);
    int64_t a1 = 0;
    REQUIRE(um_schedule_entry(dp, 1, &a1) == UM_OK);
    CHECK(a1 == 2);

    um_schedule* uniform = nullptr;
    REQUIRE(um_schedule_uniform(4, 2, &uniform) == UM_OK);
    double a_uniform = 0.0;
    REQUIRE(um_a_riemann(ramp, uniform, &a_uniform) == UM_OK);
    CHECK(a_uniform == doctest::Approx(2.0).epsilon(1e-12));
    double a_dd = 0.0;
    REQUIRE(um_a_discrete_derivative(ramp, uniform, &a_dd) == UM_OK);
    CHECK(a_dd == doctest::Approx(a_uniform).epsilon(1e-12));

    um_schedule* exp_sched = nullptr;
    REQUIRE(um_schedule_exponential(1.0, 16, 4, &exp_sched) == UM_OK);
    int64_t e1 = 0;
    REQUIRE(um_schedule_entry(exp_sched, 1, &e1) == UM_OK);
    CHECK(e1 == 4);

    StringOut json;
    REQUIRE(um_schedule_to_json(dp, "dp_optimal", &json.text) == UM_OK);
    CHECK(json.str().find("\"provenance\":\"dp_optimal\"") != std::string::npos);
    um_schedule* parsed = nullptr;
    REQUIRE(um_schedule_from_json(json.text, &parsed) == UM_OK);
    CHECK(um_schedule_steps(parsed) == 2);

    // Data-driven and geodesic schedules need correlation structure.
    um_profile* flat = nullptr;
    REQUIRE(um_profile_from_json(R"({"n":3,"values":[-1.0,-1.0,-1.0],"mode":"exact"})", &flat) ==
            UM_OK);
    um_schedule* bad = nullptr;
    CHECK(um_schedule_data_driven(flat, 2, &bad) == UM_ERR_NO_CORRELATION);
    CHECK(um_schedule_alpha_opt(flat, 2, &bad) == UM_ERR_NO_CORRELATION);

    um_profile* gauss_prof = nullptr;
    um_dist* gauss = nullptr;
    REQUIRE(um_dist_from_json(R"({"type":"gaussian_exchangeable","n":64,"rho":0.015625})", 0,
                              &gauss) == UM_OK);
    REQUIRE(um_profile_compute(gauss, &gauss_prof) == UM_OK);
    um_schedule* opt = nullptr;
    REQUIRE(um_schedule_alpha_opt(gauss_prof, 8, &opt) == UM_OK);
    CHECK(um_schedule_steps(opt) == 8);

    double geo = 0.0;
    REQUIRE(um_efact_geometric(gauss_prof, 0.25, &geo) == UM_OK);
    double lo = 0.0, hi = 0.0;
    double d = 0.0;
    REQUIRE(um_profile_d(gauss_prof, &d) == UM_OK);
    REQUIRE(um_bounds_geometric(d, 0.25, 1.0, &lo, &hi) == UM_OK);
    CHECK(geo <= hi + 1e-12);

    um_schedule_free(opt);
    um_profile_free(gauss_prof);
    um_dist_free(gauss);
    um_profile_free(flat);
    um_schedule_free(parsed);
    um_schedule_free(exp_sched);
    um_schedule_free(uniform);
    um_schedule_free(dp);
    um_profile_free(ramp);
}

TEST_CASE("c api: sampler runs, output law, decomposition") {
    // Sampling uses a full-support target: on degenerate targets the
    // factorized exact denoiser can legitimately reach a zero-probability
    // prefix, which reports UM_ERR_UNDEFINED_CONDITIONAL instead.
    um_dist* rnd = nullptr;
    REQUIRE(um_dist_from_json(kRandomDist, 0, &rnd) == UM_OK);
    um_sampler* runner = nullptr;
    REQUIRE(um_sampler_create(rnd, R"({"type":"fixed_partition","blocks":[[1,3],[2]]})",
                              R"({"type":"exact"})", &runner) == UM_OK);
    StringOut trace;
    REQUIRE(um_sampler_run(runner, 7, &trace.text) == UM_OK);
    StringOut trace2;
    REQUIRE(um_sampler_run(runner, 7, &trace2.text) == UM_OK);
    CHECK(trace.str() == trace2.str());
    CHECK(trace.str().find("\"K\":2") != std::string::npos);
    um_sampler_free(runner);
    um_dist_free(rnd);

    um_dist* dist = nullptr;
    REQUIRE(um_dist_from_json(kCopyDist, 0, &dist) == UM_OK);
    um_sampler* sampler = nullptr;
    REQUIRE(um_sampler_create(dist,
                              R"({"type":"fixed_partition","blocks":[[1,2,3,4]]})",
                              R"({"type":"exact"})", &sampler) == UM_OK);

    um_dist* law = nullptr;
    REQUIRE(um_sampler_output_law(sampler, &law) == UM_OK);
    double divergence = 0.0;
    REQUIRE(um_kl(dist, law, &divergence) == UM_OK);
    // Factorizing everything at once costs exactly 2 log 2 here.
    CHECK(divergence == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-10));

    StringOut report;
    REQUIRE(um_sampler_decomposition(sampler, &report.text) == UM_OK);
    CHECK(report.str().find("\"e_learn\":0.0") != std::string::npos);
    CHECK(report.str().find("identity_residual") != std::string::npos);

    // Two aligned blocks on the degenerate target: the factorized exact law
    // walks into zero-probability prefixes and reports it.
    um_sampler* aligned = nullptr;
    REQUIRE(um_sampler_create(dist, R"({"type":"fixed_partition","blocks":[[1,2],[3,4]]})",
                              R"({"type":"exact"})", &aligned) == UM_OK);
    um_dist* bad_law = nullptr;
    CHECK(um_sampler_output_law(aligned, &bad_law) == UM_ERR_UNDEFINED_CONDITIONAL);
    um_sampler_free(aligned);

    um_dist_free(law);
    um_sampler_free(sampler);
    um_dist_free(dist);
}

TEST_CASE("c api: verify-bounds and scaling drivers") {
    StringOut csv;
    int violations = -1;
    const char* instances = R"({
      "instances": [
        {"id": "copy_blocks",
         "dist": {"type":"block_copy","n":4,"tokens":["0","1"],"blocks":[[1,2],[3,4]]},
         "planner": {"type":"fixed_partition","blocks":[[1,2],[3,4]]}}
      ]})";
    REQUIRE(um_verify_bounds(instances, &csv.text, &violations) == UM_OK);
    CHECK(violations == 0);
    CHECK(csv.str().rfind("instance_id,route,value,bound_name,bound_value,slack", 0) == 0);

    StringOut scaling;
    REQUIRE(um_scaling_report(
                R"({"xi":1.0,"curve":"exponential","regime":"diverging",
                    "grid":[{"n":4096,"k":64}]})",
                &scaling.text) == UM_OK);
    CHECK(scaling.str().rfind("n,k,regime,functional,predicted_A,measured_A,ratio", 0) == 0);

    CHECK(um_scaling_report("{bad", &scaling.text) == UM_ERR_PARSE);
}
