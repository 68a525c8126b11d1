#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mobsim/error.hpp"
#include "mobsim/rng.hpp"
#include "mobsim/strings.hpp"

#include <json.hpp>

// The calibratable simulator parameter space. The core set below captures
// the behavioral degrees of freedom the geo-statistics respond to; specs
// are file-loadable so the space can be extended without code changes.

namespace mobsim {

enum class ParamKind { continuous, integer };

struct ParamEntry {
    std::string name;
    ParamKind kind = ParamKind::continuous;
    double min = 0.0;
    double max = 1.0;
    std::string description;
};

class ParamSpec {
public:
    ParamSpec() = default;

    explicit ParamSpec(std::vector<ParamEntry> entries) : entries_(std::move(entries)) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const ParamEntry& e = entries_[i];
            require(!e.name.empty(), "param spec: empty name");
            require(e.min < e.max, "param spec '" + e.name + "': min must be < max");
            require(index_.emplace(e.name, i).second,
                    "param spec: duplicate name '" + e.name + "'");
        }
    }

    const std::vector<ParamEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const ParamEntry& at(std::size_t i) const { return entries_[i]; }

    std::size_t index_of(const std::string& name) const {
        auto it = index_.find(name);
        require(it != index_.end(), "param spec: unknown name '" + name + "'");
        return it->second;
    }

    // FNV-1a over the canonical serialization; recorded in run_meta so a
    // regeneration can detect a mismatched spec.
    std::uint64_t hash() const {
        std::uint64_t h = 14695981039346656037ULL;
        auto mix = [&h](const std::string& s) {
            for (unsigned char c : s) {
                h ^= c;
                h *= 1099511628211ULL;
            }
            h ^= 0x1f;
            h *= 1099511628211ULL;
        };
        for (const ParamEntry& e : entries_) {
            mix(e.name);
            mix(e.kind == ParamKind::integer ? "int" : "cont");
            mix(fmt_double(e.min));
            mix(fmt_double(e.max));
        }
        return h;
    }

private:
    std::vector<ParamEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct ParamVector {
    std::vector<double> values;  // one per spec entry, in spec order
};

inline bool param_value_ok(const ParamEntry& e, double v) {
    if (!std::isfinite(v) || v < e.min || v > e.max) return false;
    if (e.kind == ParamKind::integer && v != std::floor(v)) return false;
    return true;
}

inline void validate(const ParamSpec& spec, const ParamVector& pv) {
    require(pv.values.size() == spec.size(), "param vector size does not match spec");
    for (std::size_t i = 0; i < spec.size(); ++i) {
        if (!param_value_ok(spec.at(i), pv.values[i])) {
            throw ConfigError("param '" + spec.at(i).name + "' = " + fmt_double(pv.values[i]) +
                              " outside [" + fmt_double(spec.at(i).min) + ", " +
                              fmt_double(spec.at(i).max) + "]");
        }
    }
}

inline double get_param(const ParamSpec& spec, const ParamVector& pv, const std::string& name) {
    return pv.values.at(spec.index_of(name));
}

// Uniform draw per entry; integer entries draw uniformly over the integral
// values of [min, max].
inline ParamVector sample_params(const ParamSpec& spec, Rng& rng) {
    ParamVector pv;
    pv.values.reserve(spec.size());
    for (const ParamEntry& e : spec.entries()) {
        if (e.kind == ParamKind::integer) {
            const std::int64_t lo = static_cast<std::int64_t>(std::ceil(e.min));
            const std::int64_t hi = static_cast<std::int64_t>(std::floor(e.max));
            pv.values.push_back(static_cast<double>(rng.uniform_int(lo, hi)));
        } else {
            pv.values.push_back(rng.uniform(e.min, e.max));
        }
    }
    return pv;
}

// --- core parameter space -------------------------------------------------

inline ParamSpec default_param_spec() {
    using K = ParamKind;
    return ParamSpec({
        {"n_interests", K::integer, 1, 10, "recreation sites in each agent's interest set"},
        {"walk_speed_mps", K::continuous, 0.5, 2.5, "walking speed, m/s"},
        {"drive_speed_mps", K::continuous, 4.0, 25.0, "driving speed, m/s"},
        {"drive_cutoff_m", K::continuous, 300, 6000, "trips longer than this are driven"},
        {"commute_min_m", K::continuous, 100, 4000, "minimum home-work distance"},
        {"commute_max_m", K::continuous, 4000, 20000, "maximum home-work distance"},
        {"work_start_h", K::continuous, 5.0, 12.0, "mean workday start, hours after midnight"},
        {"work_start_jitter_s", K::continuous, 0, 7200, "daily workday start jitter, +-s"},
        {"work_hours_h", K::continuous, 4.0, 12.0, "workday length, hours"},
        {"eat_out_prob", K::continuous, 0.02, 0.98, "probability a meal happens at a restaurant"},
        {"sleep_rate_ph", K::continuous, 0.02, 0.10, "sleep need growth while awake, 1/h"},
        {"hunger_rate_ph", K::continuous, 0.05, 0.40, "hunger growth, 1/h"},
        {"income_rate_ph", K::continuous, 0.02, 0.20, "income need growth while not working, 1/h"},
        {"leisure_rate_ph", K::continuous, 0.01, 0.20, "leisure need growth, 1/h"},
        {"sleep_trigger", K::continuous, 0.40, 0.98, "sleep need level that sends the agent home"},
        {"hunger_trigger", K::continuous, 0.40, 0.98, "hunger level that triggers a meal"},
        {"income_trigger", K::continuous, 0.20, 0.90, "income need level that triggers work"},
        {"leisure_trigger", K::continuous, 0.40, 0.98, "leisure level that triggers recreation"},
        {"sleep_duration_s", K::continuous, 18000, 36000, "sleep dwell, seconds"},
        {"eat_duration_s", K::continuous, 600, 7200, "meal dwell, seconds"},
        {"leisure_duration_s", K::continuous, 900, 14400, "recreation dwell, seconds"},
        {"home_per_1k", K::continuous, 50, 600, "home sites per 1000 agents"},
        {"work_per_1k", K::continuous, 30, 500, "work sites per 1000 agents"},
        {"restaurant_per_1k", K::continuous, 30, 500, "restaurants per 1000 agents"},
        {"recreation_per_1k", K::continuous, 30, 500, "recreation sites per 1000 agents"},
        {"cluster_count", K::integer, 1, 8, "site placement density clusters"},
        {"cluster_spread_m", K::continuous, 300, 8000, "cluster scatter (stddev), meters"},
    });
}

// --- json ------------------------------------------------------------------

inline nlohmann::json param_spec_to_json(const ParamSpec& spec) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ParamEntry& e : spec.entries()) {
        arr.push_back({{"name", e.name},
                       {"kind", e.kind == ParamKind::integer ? "integer" : "continuous"},
                       {"min", e.min},
                       {"max", e.max},
                       {"description", e.description}});
    }
    return arr;
}

inline ParamSpec param_spec_from_json(const nlohmann::json& j) {
    std::vector<ParamEntry> entries;
    try {
        for (const auto& item : j) {
            ParamEntry e;
            e.name = item.at("name").get<std::string>();
            const std::string kind = item.at("kind").get<std::string>();
            if (kind == "integer") {
                e.kind = ParamKind::integer;
            } else if (kind == "continuous") {
                e.kind = ParamKind::continuous;
            } else {
                throw ParseError("param spec: unknown kind '" + kind + "'");
            }
            e.min = item.at("min").get<double>();
            e.max = item.at("max").get<double>();
            e.description = item.value("description", "");
            entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad param spec json: ") + e.what());
    }
    return ParamSpec(std::move(entries));
}

// Named map form, in spec order.
inline nlohmann::json param_vector_to_json(const ParamSpec& spec, const ParamVector& pv) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < spec.size(); ++i) obj[spec.at(i).name] = pv.values[i];
    return obj;
}

inline ParamVector param_vector_from_json(const ParamSpec& spec, const nlohmann::json& j) {
    ParamVector pv;
    pv.values.assign(spec.size(), 0.0);
    try {
        if (j.is_array()) {
            require(j.size() == spec.size(), "param vector array size does not match spec");
            for (std::size_t i = 0; i < spec.size(); ++i) pv.values[i] = j[i].get<double>();
        } else {
            for (std::size_t i = 0; i < spec.size(); ++i) {
                pv.values[i] = j.at(spec.at(i).name).get<double>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad param vector json: ") + e.what());
    }
    return pv;
}

}  // namespace mobsim
