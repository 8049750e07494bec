#pragma once

#include <string>

namespace unmask {

struct BoundsAudit {
    std::string csv;  // instance_id,route,value,bound_name,bound_value,slack
    int violations;   // rows with slack < -1e-10
};

// Runs every applicable bound and route-agreement check on a JSON instance
// set: {"instances":[{"id":..,"dist":{..},"law":{..}?,"planner":{..}?,
// "markov_c":[..]?},..]}. Each row's slack is bound_value - value for
// bound rows and -|difference| for two-route agreement rows, so the single
// pass rule is slack >= -1e-10.
BoundsAudit run_bounds_audit(const std::string& instances_json);

// Scaling report over a (N, K) grid for the analytic Gaussian family:
// {"xi":..,"curve":"identity|exponential|optimal","regime":
// "diverging|bounded","grid":[{"n":..,"k":..},..]}.
// CSV columns: n,k,regime,functional,predicted_A,measured_A,ratio.
std::string run_scaling_report(const std::string& config_json);

}  // namespace unmask
