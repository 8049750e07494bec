// unmask CLI: reproducible experiments over the C API.
//
// Subcommands: profile | optimize | verify-bounds | scaling | sample.
// Exit codes: 0 ok, 2 parse/config error, 3 guard exceeded, 4 method
// hypothesis violated, 5 bound violation (verify-bounds), 1 anything else.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "unmask.h"

namespace {

struct CliError {
    int exit_code;
    std::string message;
};

int status_exit_code(um_status status) {
    switch (status) {
        case UM_OK:
            return 0;
        case UM_ERR_PARSE:
        case UM_ERR_INVALID_ARGUMENT:
            return 2;
        case UM_ERR_GUARD_EXCEEDED:
            return 3;
        case UM_ERR_HYPOTHESIS:
        case UM_ERR_NO_CORRELATION:
            return 4;
        default:
            return 1;
    }
}

void check(um_status status, const std::string& what) {
    if (status != UM_OK) {
        throw CliError{status_exit_code(status),
                       what + ": " + um_status_name(status) + " (" + um_last_error() + ")"};
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError{2, "cannot open " + path};
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError{2, "cannot write " + path};
    out << text;
}

// Owned C string from the API.
struct ApiString {
    char* text = nullptr;
    ~ApiString() { um_string_free(text); }
    std::string str() const { return text ? text : ""; }
};

struct DistHandle {
    um_dist* p = nullptr;
    ~DistHandle() { um_dist_free(p); }
};
struct ProfileHandle {
    um_profile* p = nullptr;
    ~ProfileHandle() { um_profile_free(p); }
};
struct ScheduleHandle {
    um_schedule* p = nullptr;
    ~ScheduleHandle() { um_schedule_free(p); }
};
struct SamplerHandle {
    um_sampler* p = nullptr;
    ~SamplerHandle() { um_sampler_free(p); }
};

// Display helper: values are stored in nats; --bits only rescales output.
std::string show(double nats, bool bits) {
    std::ostringstream out;
    out.precision(12);
    if (bits) {
        out << nats / std::log(2.0) << " bits";
    } else {
        out << nats << " nats";
    }
    return out.str();
}

struct ProfileArgs {
    std::string dist_path;
    std::string out_stem;
    std::string format = "both";
    std::int64_t mc_samples = 0;
    bool sum_over_tokens = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t guard_states = 0;
    bool bits = false;
};

int cmd_profile(const ProfileArgs& args) {
    DistHandle dist;
    check(um_dist_from_json(read_file(args.dist_path).c_str(), args.guard_states, &dist.p),
          "distribution");

    ProfileHandle prof;
    if (args.mc_samples > 0) {
        if (!args.seed_set) throw CliError{2, "--mc requires --seed"};
        check(um_profile_mc(dist.p, args.mc_samples, args.seed,
                            args.sum_over_tokens ? 1 : 0, &prof.p),
              "mc profile");
    } else {
        check(um_profile_compute(dist.p, &prof.p), "profile");
    }

    if (args.format == "json" || args.format == "both") {
        ApiString json;
        check(um_profile_to_json(prof.p, &json.text), "profile json");
        write_file(args.out_stem + ".json", json.str());
    }
    if (args.format == "csv" || args.format == "both") {
        ApiString csv;
        check(um_profile_to_csv(prof.p, &csv.text), "profile csv");
        write_file(args.out_stem + ".csv", csv.str());
    }

    double d = 0.0;
    check(um_profile_d(prof.p, &d), "profile D");
    std::cout << "D(pi) = " << show(d, args.bits) << "\n";
    std::cout << "nondecreasing within 1e-10: "
              << (um_profile_is_monotone(prof.p, 1e-10) ? "yes" : "no") << "\n";
    return 0;
}

struct OptimizeArgs {
    std::string profile_path;
    std::string out_path;
    std::string method = "dp";
    std::int64_t k = 0;
    bool isotonic = false;
    bool bits = false;
};

int cmd_optimize(const OptimizeArgs& args) {
    ProfileHandle prof;
    check(um_profile_from_json(read_file(args.profile_path).c_str(), &prof.p), "profile");
    ProfileHandle smooth;
    const um_profile* active = prof.p;
    if (args.isotonic) {
        check(um_profile_isotonic(prof.p, &smooth.p), "isotonic");
        active = smooth.p;
    }

    ScheduleHandle sched;
    std::string provenance;
    if (args.method == "dp") {
        double a_star = 0.0;
        check(um_schedule_dp(active, args.k, &sched.p, &a_star), "dp");
        provenance = "dp_optimal";
    } else if (args.method == "data_driven") {
        check(um_schedule_data_driven(active, args.k, &sched.p), "data_driven");
        provenance = "data_driven";
    } else if (args.method == "alpha_opt") {
        check(um_schedule_alpha_opt(active, args.k, &sched.p), "alpha_opt");
        provenance = "alpha:geodesic";
    } else {
        throw CliError{2, "unknown method '" + args.method + "'"};
    }

    ApiString json;
    check(um_schedule_to_json(sched.p, provenance.c_str(), &json.text), "schedule json");
    write_file(args.out_path, json.str());

    double a_value = 0.0;
    check(um_a_riemann(active, sched.p, &a_value), "A(a)");
    ScheduleHandle uniform;
    check(um_schedule_uniform(um_profile_n(active), args.k, &uniform.p), "uniform schedule");
    double a_uniform = 0.0;
    check(um_a_riemann(active, uniform.p, &a_uniform), "A(uniform)");

    std::cout << "A(a) = " << show(a_value, args.bits) << "\n";
    std::cout << "A(uniform) = " << show(a_uniform, args.bits) << "\n";
    double ratio = a_uniform > 0.0 ? a_value / a_uniform : 1.0;
    std::cout << "ratio = " << ratio << "\n";
    return 0;
}

int cmd_verify_bounds(const std::string& instances_path, const std::string& out_path) {
    ApiString csv;
    int violations = 0;
    check(um_verify_bounds(read_file(instances_path).c_str(), &csv.text, &violations),
          "verify-bounds");
    write_file(out_path, csv.str());
    std::cout << "violations: " << violations << "\n";
    if (violations > 0) {
        std::cerr << "bound violations detected\n";
        return 5;
    }
    return 0;
}

int cmd_scaling(const std::string& config_path, const std::string& out_path) {
    ApiString csv;
    check(um_scaling_report(read_file(config_path).c_str(), &csv.text), "scaling");
    write_file(out_path, csv.str());
    std::string text = csv.str();
    std::cout << "rows: " << std::count(text.begin(), text.end(), '\n') - 1 << "\n";
    return 0;
}

struct SampleArgs {
    std::string dist_path;
    std::string planner_path;
    std::string denoiser_path;
    std::string out_path;
    std::int64_t runs = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool exact_law = false;
    std::uint64_t guard_states = 0;
    bool bits = false;
};

int cmd_sample(const SampleArgs& args) {
    if (!args.seed_set) throw CliError{2, "sample requires --seed"};
    DistHandle dist;
    check(um_dist_from_json(read_file(args.dist_path).c_str(), args.guard_states, &dist.p),
          "distribution");
    SamplerHandle sampler;
    check(um_sampler_create(dist.p, read_file(args.planner_path).c_str(),
                            read_file(args.denoiser_path).c_str(), &sampler.p),
          "sampler");

    std::ofstream out(args.out_path, std::ios::binary);
    if (!out) throw CliError{2, "cannot write " + args.out_path};
    for (std::int64_t r = 0; r < args.runs; ++r) {
        ApiString trace;
        check(um_sampler_run(sampler.p, args.seed + static_cast<std::uint64_t>(r), &trace.text),
              "run");
        out << trace.str();
    }
    std::cout << "runs: " << args.runs << "\n";

    if (args.exact_law) {
        ApiString report;
        check(um_sampler_decomposition(sampler.p, &report.text), "decomposition");
        nlohmann::json j = nlohmann::json::parse(report.str());
        std::cout << "kl_marginal = " << show(j.at("kl_marginal").get<double>(), args.bits)
                  << "\n";
        std::cout << "e_learn = " << show(j.at("e_learn").get<double>(), args.bits) << "\n";
        std::cout << "e_fact = " << show(j.at("e_fact").get<double>(), args.bits) << "\n";
        std::cout << "identity_residual = " << j.at("identity_residual").get<double>() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sequential-unmasking samplers: profiles, error bounds, optimal schedules"};
    app.require_subcommand(1);

    ProfileArgs pa;
    CLI::App* profile = app.add_subcommand("profile", "compute an information profile");
    profile->add_option("--dist", pa.dist_path, "distribution JSON file")->required();
    profile->add_option("--out", pa.out_stem, "output stem (writes .json/.csv)")->required();
    profile->add_option("--format", pa.format, "json|csv|both (default both)")
        ->check(CLI::IsMember({"json", "csv", "both"}));
    profile->add_option("--mc", pa.mc_samples, "Monte Carlo samples (default: exact)");
    profile->add_flag("--sum-over-tokens", pa.sum_over_tokens,
                      "sum the estimator over all token values");
    profile->add_option("--seed", pa.seed, "master seed (required with --mc)")
        ->each([&pa](const std::string&) { pa.seed_set = true; });
    profile->add_option("--guard-states", pa.guard_states, "joint state guard override");
    profile->add_flag("--bits", pa.bits, "display information in bits");

    OptimizeArgs oa;
    CLI::App* optimize = app.add_subcommand("optimize", "optimize an unmasking schedule");
    optimize->add_option("--profile", oa.profile_path, "profile JSON file")->required();
    optimize->add_option("--k", oa.k, "number of steps K")->required();
    optimize->add_option("--method", oa.method, "dp|data_driven|alpha_opt")->required();
    optimize->add_option("--out", oa.out_path, "schedule JSON output")->required();
    optimize->add_flag("--isotonic", oa.isotonic, "isotonic-smooth the profile first");
    optimize->add_flag("--bits", oa.bits, "display information in bits");

    std::string vb_instances, vb_out;
    CLI::App* verify = app.add_subcommand("verify-bounds", "audit every bound on an instance set");
    verify->add_option("--instances", vb_instances, "instance set JSON")->required();
    verify->add_option("--out", vb_out, "audit CSV output")->required();

    std::string sc_config, sc_out;
    CLI::App* scaling = app.add_subcommand("scaling", "Gaussian-family scaling report");
    scaling->add_option("--config", sc_config, "scaling config JSON")->required();
    scaling->add_option("--out", sc_out, "report CSV output")->required();

    SampleArgs sa;
    CLI::App* sample = app.add_subcommand("sample", "run the unmasking sampler");
    sample->add_option("--dist", sa.dist_path, "distribution JSON file")->required();
    sample->add_option("--planner", sa.planner_path, "planner JSON file")->required();
    sample->add_option("--denoiser", sa.denoiser_path, "denoiser JSON file")->required();
    sample->add_option("--runs", sa.runs, "number of runs");
    sample->add_option("--seed", sa.seed, "master seed (run r uses seed + r)")
        ->each([&sa](const std::string&) { sa.seed_set = true; });
    sample->add_option("--out", sa.out_path, "trace JSONL output")->required();
    sample->add_flag("--exact-law", sa.exact_law, "print the exact KL decomposition (N <= 6)");
    sample->add_option("--guard-states", sa.guard_states, "joint state guard override");
    sample->add_flag("--bits", sa.bits, "display information in bits");

    CLI11_PARSE(app, argc, argv);

    try {
        if (profile->parsed()) return cmd_profile(pa);
        if (optimize->parsed()) return cmd_optimize(oa);
        if (verify->parsed()) return cmd_verify_bounds(vb_instances, vb_out);
        if (scaling->parsed()) return cmd_scaling(sc_config, sc_out);
        if (sample->parsed()) return cmd_sample(sa);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
