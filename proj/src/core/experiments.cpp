#include "unmask/experiments.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "unmask/efact.hpp"
#include "unmask/io.hpp"
#include "unmask/sched_opt.hpp"

namespace unmask {

using nlohmann::json;

namespace {

constexpr double kSlackTol = -1e-10;

class AuditWriter {
public:
    void row(const std::string& id, const std::string& route, double value,
             const std::string& bound_name, double bound_value, double slack) {
        rows_ << id << ',' << route << ',' << format_double(value) << ',' << bound_name << ','
              << format_double(bound_value) << ',' << format_double(slack) << '\n';
        if (slack < kSlackTol) ++violations_;
    }

    void agreement(const std::string& id, const std::string& route_a, double a,
                   const std::string& name, double b) {
        row(id, route_a, a, name, b, -std::abs(a - b));
    }

    BoundsAudit finish() {
        return {"instance_id,route,value,bound_name,bound_value,slack\n" + rows_.str(),
                violations_};
    }

private:
    std::ostringstream rows_;
    int violations_ = 0;
};

void audit_instance(AuditWriter& out, const json& inst) {
    auto id = inst.value("id", std::string("instance"));
    if (!inst.contains("dist")) throw ParseError("bounds audit: instance needs a dist");
    Distribution dist = Distribution::from_json_text(inst.at("dist").dump());

    InfoProfile profile = dist.is_tabular() ? exact_profile(dist.tabular())
                                            : gaussian_profile(dist.gaussian());
    double d = dist.is_tabular() ? d_measure(dist.tabular()) : gaussian_d(dist.gaussian());
    double log_card =
        dist.is_tabular() ? std::log(static_cast<double>(dist.tabular().cardinality())) : 0.0;

    if (inst.contains("law")) {
        SizeLaw law = size_law_from_json_text(inst.at("law").dump(), dist.n());
        double value = efact_random_order(profile, law);
        SizeLaw::Stats stats = law.stats();

        // Theorem-level random-order bounds.
        auto [b_d, b_log] = bound_random_order(d, stats.e_smax, dist.is_tabular()
                                                                    ? dist.tabular().cardinality()
                                                                    : 2);
        out.row(id, "random_order", value, "smax_times_d", b_d, b_d - value);
        if (dist.is_tabular()) {
            out.row(id, "random_order", value, "smax_times_log_card", b_log, b_log - value);
        }

        if (law.kind() == SizeLaw::Kind::geometric) {
            GeomBounds gb = bounds_geometric(d, law.p(), max_delta(profile));
            out.row(id, "geometric_closed_form", value, "geometric_upper", gb.upper,
                    gb.upper - value);
            out.row(id, "geometric_closed_form", value, "geometric_lower", gb.lower,
                    value - gb.lower);
        } else {
            // Two algebraic routes to A(a) must agree on every atom.
            for (const auto& [sched, prob] : law.atoms()) {
                (void)prob;
                out.agreement(id, "riemann", a_riemann(profile, sched), "discrete_derivative",
                              a_discrete_derivative(profile, sched));
            }
        }

        if (dist.is_tabular() && dist.n() <= kPartitionGuardN) {
            Planner ro = Planner::random_order(law);
            out.agreement(id, "random_order", value, "direct_tc", efact_direct(dist.tabular(), ro));
        }
    }

    if (inst.contains("planner") && dist.is_tabular()) {
        Planner planner = planner_from_json_text(inst.at("planner").dump(), dist.n());
        double value = efact_direct(dist.tabular(), planner);
        SizeLaw::Stats stats = planner_stats(planner);
        auto [b1, b2] = bound_worst(log_card, d, stats, dist.n());
        out.row(id, "direct_tc", value, "worst_case_log_card", b1, b1 - value);
        out.row(id, "direct_tc", value, "worst_case_d", b2, b2 - value);
    }

    if (inst.contains("markov_c") && dist.is_tabular()) {
        if (!inst.contains("sizes")) throw ParseError("bounds audit: markov_c needs sizes");
        auto sizes = inst.at("sizes").get<std::vector<std::int64_t>>();
        for (double c : inst.at("markov_c").get<std::vector<double>>()) {
            MarkovTailReport rep = markov_tail(dist.tabular(), sizes, c);
            out.row(id, "markov_exceedance", rep.exceedance, "one_over_c", rep.markov_bound,
                    rep.markov_bound - rep.exceedance);
        }
    }
}

}  // namespace

BoundsAudit run_bounds_audit(const std::string& instances_json) {
    json root = json::parse(instances_json, nullptr, false);
    if (root.is_discarded() || !root.contains("instances")) {
        throw ParseError("bounds audit: expected {\"instances\":[...]}");
    }
    AuditWriter out;
    for (const auto& inst : root.at("instances")) audit_instance(out, inst);
    return out.finish();
}

std::string run_scaling_report(const std::string& config_json) {
    json cfg = json::parse(config_json, nullptr, false);
    if (cfg.is_discarded()) throw ParseError("scaling: invalid JSON config");
    double xi = cfg.value("xi", 1.0);
    std::string curve_tag = cfg.value("curve", std::string("exponential"));
    std::string regime_tag = cfg.value("regime", std::string("diverging"));
    if (!cfg.contains("grid")) throw ParseError("scaling: config needs a grid");

    AlphaCurve curve = AlphaCurve::identity();
    if (curve_tag == "exponential") {
        curve = AlphaCurve::exponential(xi);
    } else if (curve_tag == "optimal") {
        GaussianGLimit g(xi);
        curve = continuous_optimum([g](double u) { return g(u); });
    } else if (curve_tag != "identity") {
        throw ParseError("scaling: unknown curve '" + curve_tag + "'");
    }
    Regime regime;
    if (regime_tag == "diverging") {
        regime = Regime::diverging;
    } else if (regime_tag == "bounded") {
        regime = Regime::bounded;
    } else {
        throw ParseError("scaling: unknown regime '" + regime_tag + "'");
    }

    std::ostringstream out;
    out << "n,k,regime,functional,predicted_A,measured_A,ratio\n";
    for (const auto& cell : cfg.at("grid")) {
        auto n = cell.at("n").get<std::int64_t>();
        auto k = cell.at("k").get<std::int64_t>();
        LimitReport rep = scaling_limit_experiment(xi, curve, n, k, regime);
        std::string regime_col = regime_tag;
        if (rep.degenerate_d) regime_col += ":degenerate_d";
        out << n << ',' << k << ',' << regime_col << ',' << format_double(rep.functional) << ','
            << format_double(rep.predicted_a) << ',' << format_double(rep.measured_a) << ','
            << format_double(rep.ratio) << '\n';
    }
    return out.str();
}

}  // namespace unmask
