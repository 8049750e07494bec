#include "unmask/io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace unmask {

using nlohmann::json;

namespace {

json parse(const std::string& text, const char* who) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError(std::string(who) + ": invalid JSON");
    return j;
}

template <typename T>
T require(const json& j, const char* key, const char* who) {
    if (!j.contains(key)) {
        throw ParseError(std::string(who) + ": missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(std::string(who) + ": field '" + key + "' has the wrong type");
    }
}

TokenSpace tokens_from_json(const json& j, const char* who) {
    auto labels = require<std::vector<std::string>>(j, "tokens", who);
    TokenSpace ts{std::move(labels)};
    ts.validate();
    return ts;
}

// File blocks/indices are 1-based; internals are 0-based.
std::vector<std::vector<int>> blocks_from_json(const json& j, const char* who) {
    auto raw = require<std::vector<std::vector<int>>>(j, "blocks", who);
    for (auto& b : raw) {
        for (int& v : b) v -= 1;
    }
    return raw;
}

}  // namespace

Distribution Distribution::from_json_text(const std::string& text, std::uint64_t state_guard) {
    json j = parse(text, "distribution");
    auto type = require<std::string>(j, "type", "distribution");
    Distribution out;
    json spec;
    spec["type"] = type;
    if (type == "tabular") {
        auto n = require<int>(j, "n", "tabular distribution");
        TokenSpace ts = tokens_from_json(j, "tabular distribution");
        auto pmf = require<std::vector<double>>(j, "pmf", "tabular distribution");
        spec["n"] = n;
        spec["tokens"] = ts.labels;
        spec["pmf"] = pmf;
        out.value_ = TabularDist(n, std::move(ts), std::move(pmf), state_guard);
    } else if (type == "block_copy") {
        auto n = require<int>(j, "n", "block_copy distribution");
        TokenSpace ts = tokens_from_json(j, "block_copy distribution");
        auto blocks = blocks_from_json(j, "block_copy distribution");
        spec["n"] = n;
        spec["tokens"] = ts.labels;
        spec["blocks"] = require<json>(j, "blocks", "block_copy distribution");
        out.value_ = block_copy_dist(n, std::move(ts), blocks, state_guard);
    } else if (type == "random") {
        auto n = require<int>(j, "n", "random distribution");
        TokenSpace ts = tokens_from_json(j, "random distribution");
        auto seed = require<std::uint64_t>(j, "seed", "random distribution");
        double concentration = j.value("concentration", 1.0);
        spec["n"] = n;
        spec["tokens"] = ts.labels;
        spec["seed"] = seed;
        spec["concentration"] = concentration;
        out.value_ = random_tabular(seed, n, std::move(ts), concentration, state_guard);
    } else if (type == "gaussian_exchangeable") {
        auto n = require<std::int64_t>(j, "n", "gaussian distribution");
        auto rho = require<double>(j, "rho", "gaussian distribution");
        spec["n"] = n;
        spec["rho"] = rho;
        out.value_ = GaussianExchangeable(n, rho);
    } else {
        throw ParseError("distribution: unknown type '" + type + "'");
    }
    if (out.is_tabular()) {
        out.shared_ = std::make_shared<TabularDist>(std::get<TabularDist>(out.value_));
    }
    out.spec_ = spec.dump();
    return out;
}

std::string Distribution::to_json_text() const { return spec_; }

const TabularDist& Distribution::tabular() const {
    if (!is_tabular()) throw InvalidArgument("Distribution: not a tabular distribution");
    return std::get<TabularDist>(value_);
}

std::shared_ptr<const TabularDist> Distribution::tabular_ptr() const {
    if (!is_tabular()) throw InvalidArgument("Distribution: not a tabular distribution");
    return shared_;
}

const GaussianExchangeable& Distribution::gaussian() const {
    if (!std::holds_alternative<GaussianExchangeable>(value_)) {
        throw InvalidArgument("Distribution: not a gaussian_exchangeable distribution");
    }
    return std::get<GaussianExchangeable>(value_);
}

std::int64_t Distribution::n() const {
    if (is_tabular()) return tabular().n();
    return gaussian().n();
}

std::string profile_to_json_text(const InfoProfile& profile) {
    json j;
    j["n"] = profile.n();
    j["values"] = profile.values();
    json meta = json::object();
    switch (profile.mode()) {
        case ProfileMode::exact:
            j["mode"] = "exact";
            break;
        case ProfileMode::closed_form:
            j["mode"] = "closed_form";
            break;
        case ProfileMode::monte_carlo: {
            j["mode"] = "mc";
            const auto& mc = *profile.mc();
            meta["samples"] = mc.samples;
            meta["seed"] = mc.seed;
            meta["sum_over_tokens"] = mc.sum_over_tokens;
            meta["stderr"] = mc.stderrs;
            break;
        }
    }
    j["meta"] = meta;
    return j.dump();
}

InfoProfile profile_from_json_text(const std::string& text) {
    json j = parse(text, "profile");
    auto values = require<std::vector<double>>(j, "values", "profile");
    auto n = require<std::int64_t>(j, "n", "profile");
    if (n != static_cast<std::int64_t>(values.size())) {
        throw ParseError("profile: n does not match the number of values");
    }
    auto mode = require<std::string>(j, "mode", "profile");
    if (mode == "exact") return InfoProfile(std::move(values), ProfileMode::exact);
    if (mode == "closed_form") return InfoProfile(std::move(values), ProfileMode::closed_form);
    if (mode == "mc") {
        McInfo info;
        if (j.contains("meta")) {
            const json& meta = j.at("meta");
            info.samples = meta.value("samples", std::int64_t{0});
            info.seed = meta.value("seed", std::uint64_t{0});
            info.sum_over_tokens = meta.value("sum_over_tokens", false);
            if (meta.contains("stderr")) {
                info.stderrs = meta.at("stderr").get<std::vector<double>>();
            }
        }
        return InfoProfile(std::move(values), ProfileMode::monte_carlo, std::move(info));
    }
    throw ParseError("profile: unknown mode '" + mode + "'");
}

std::string profile_to_csv(const InfoProfile& profile) {
    std::ostringstream out;
    out << "i,f,delta_f,g_scaled\n";
    const auto& f = profile.values();
    double d = profile.d();
    double scale = d > 0.0 ? static_cast<double>(profile.n()) / d : 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double df = i == 0 ? 0.0 : f[i] - f[i - 1];
        out << i << ',' << format_double(f[i]) << ',' << format_double(df) << ','
            << format_double(df * scale) << '\n';
    }
    return out.str();
}

std::string schedule_to_json_text(const CumSchedule& sched, const std::string& provenance,
                                  const std::string& meta_json) {
    json j;
    j["n"] = sched.n();
    j["a"] = sched.a();
    j["provenance"] = provenance;
    j["meta"] = parse(meta_json, "schedule meta");
    return j.dump();
}

ParsedSchedule schedule_from_json_text(const std::string& text) {
    json j = parse(text, "schedule");
    auto n = require<std::int64_t>(j, "n", "schedule");
    auto a = require<std::vector<std::int64_t>>(j, "a", "schedule");
    std::string provenance = j.value("provenance", "unknown");
    return {CumSchedule(n, std::move(a)), provenance};
}

namespace {

SizeLaw size_law_from_json(const json& j, std::int64_t n_hint) {
    auto type = require<std::string>(j, "type", "size law");
    if (type == "deterministic") {
        auto a = require<std::vector<std::int64_t>>(j, "a", "size law");
        std::int64_t n = j.value("n", a.back());
        return SizeLaw::deterministic(CumSchedule(n, std::move(a)));
    }
    if (type == "geometric") {
        auto p = require<double>(j, "p", "size law");
        std::int64_t n = j.value("n", n_hint);
        if (n <= 0) throw ParseError("size law: geometric law needs n");
        return SizeLaw::geometric(n, p);
    }
    if (type == "explicit") {
        if (!j.contains("atoms")) throw ParseError("size law: explicit law needs atoms");
        std::vector<std::pair<CumSchedule, double>> atoms;
        for (const auto& atom : j.at("atoms")) {
            auto a = require<std::vector<std::int64_t>>(atom, "a", "size law atom");
            auto prob = require<double>(atom, "prob", "size law atom");
            std::int64_t n = atom.value("n", a.back());
            atoms.emplace_back(CumSchedule(n, std::move(a)), prob);
        }
        return SizeLaw::explicit_mixture(std::move(atoms));
    }
    throw ParseError("size law: unknown type '" + type + "'");
}

}  // namespace

SizeLaw size_law_from_json_text(const std::string& text, std::int64_t n_hint) {
    return size_law_from_json(parse(text, "size law"), n_hint);
}

Planner planner_from_json_text(const std::string& text, std::int64_t n) {
    json j = parse(text, "planner");
    auto type = require<std::string>(j, "type", "planner");
    if (type == "random_order") {
        if (!j.contains("law")) throw ParseError("planner: random_order needs a law");
        return Planner::random_order(size_law_from_json(j.at("law"), n));
    }
    if (type == "fixed_partition") {
        auto blocks = blocks_from_json(j, "planner");
        return Planner::fixed_partition(static_cast<int>(n), std::move(blocks));
    }
    if (type == "fixed_ordering") {
        if (!j.contains("law")) throw ParseError("planner: fixed_ordering needs a law");
        auto seed = require<std::uint64_t>(j, "seed", "planner");
        return Planner::fixed_ordering_from_seed(size_law_from_json(j.at("law"), n), seed);
    }
    throw ParseError("planner: unknown type '" + type + "'");
}

Denoiser denoiser_from_json_text(const std::string& text,
                                 std::shared_ptr<const TabularDist> target) {
    json j = parse(text, "denoiser");
    auto type = require<std::string>(j, "type", "denoiser");
    if (type == "exact") return Denoiser::exact(std::move(target));
    if (type == "uniform_mixture") {
        auto eps = require<double>(j, "epsilon", "denoiser");
        return Denoiser::uniform_mixture(std::move(target), eps);
    }
    throw ParseError("denoiser: unknown type '" + type + "'");
}

std::string trace_to_jsonl(const RunTrace& trace, const TokenSpace& tokens) {
    std::ostringstream out;
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        const auto& step = trace.steps[k];
        json j;
        j["k"] = k + 1;
        json zk = json::array();
        for (int pos : step.block) zk.push_back(pos + 1);
        j["z_k"] = zk;
        json toks = json::object();
        for (std::size_t t = 0; t < step.block.size(); ++t) {
            toks[std::to_string(step.block[t] + 1)] =
                tokens.labels[static_cast<std::size_t>(step.tokens[t])];
        }
        j["tokens"] = toks;
        out << j.dump() << '\n';
    }
    json fin;
    json xs = json::array();
    for (int v : trace.x) xs.push_back(tokens.labels[static_cast<std::size_t>(v)]);
    fin["x"] = xs;
    fin["K"] = trace.step_count();
    out << fin.dump() << '\n';
    return out.str();
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace unmask
