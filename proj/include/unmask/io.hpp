#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "unmask/dist.hpp"
#include "unmask/gaussian.hpp"
#include "unmask/info_profile.hpp"
#include "unmask/planner.hpp"
#include "unmask/sampler.hpp"
#include "unmask/schedule.hpp"

namespace unmask {

// A parsed distribution file: tabular targets realize to a TabularDist,
// "gaussian_exchangeable" stays analytic. The normalized source spec is
// kept so that write -> read -> write is byte-identical.
class Distribution {
public:
    static Distribution from_json_text(const std::string& text,
                                       std::uint64_t state_guard = kDefaultStateGuard);
    std::string to_json_text() const;

    bool is_tabular() const { return std::holds_alternative<TabularDist>(value_); }
    const TabularDist& tabular() const;
    std::shared_ptr<const TabularDist> tabular_ptr() const;
    const GaussianExchangeable& gaussian() const;
    std::int64_t n() const;

private:
    Distribution() = default;
    std::variant<std::monostate, TabularDist, GaussianExchangeable> value_;
    std::shared_ptr<const TabularDist> shared_;
    std::string spec_;
};

// Profile file {"n":..,"values":[..],"mode":"exact|mc|closed_form","meta":{..}}.
std::string profile_to_json_text(const InfoProfile& profile);
InfoProfile profile_from_json_text(const std::string& text);

// CSV with columns i,f,delta_f,g_scaled (delta_f and g_scaled are 0 in the
// i = 0 row; g_scaled is 0 everywhere when the profile has no positive D).
std::string profile_to_csv(const InfoProfile& profile);

// Schedule file {"n":..,"a":[..],"provenance":..,"meta":{..}}.
std::string schedule_to_json_text(const CumSchedule& sched, const std::string& provenance,
                                  const std::string& meta_json = "{}");
struct ParsedSchedule {
    CumSchedule schedule;
    std::string provenance;
};
ParsedSchedule schedule_from_json_text(const std::string& text);

// Size-law spec: {"type":"deterministic","a":[..]} |
// {"type":"geometric","n":..,"p":..} |
// {"type":"explicit","atoms":[{"a":[..],"prob":..},..]}.
SizeLaw size_law_from_json_text(const std::string& text, std::int64_t n_hint);

// Planner spec: {"type":"random_order","law":{..}} |
// {"type":"fixed_partition","blocks":[[..],..]} (1-based coordinates) |
// {"type":"fixed_ordering","seed":..,"law":{..}}.
Planner planner_from_json_text(const std::string& text, std::int64_t n);

// Denoiser spec: {"type":"exact"} | {"type":"uniform_mixture","epsilon":..}.
Denoiser denoiser_from_json_text(const std::string& text,
                                 std::shared_ptr<const TabularDist> target);

// One trace as JSON lines: a {"k","z_k","tokens"} object per step
// (1-based coordinates, labelled tokens), then {"x":[labels],"K":steps}.
std::string trace_to_jsonl(const RunTrace& trace, const TokenSpace& tokens);

// 17-significant-digit float formatting shared by every CSV artifact.
std::string format_double(double v);

}  // namespace unmask
