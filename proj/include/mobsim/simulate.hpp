#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "mobsim/metrics.hpp"
#include "mobsim/staypoints.hpp"
#include "mobsim/world.hpp"

#include <json.hpp>

// Needs-driven mobility simulator. Agents satisfy sleep / hunger / income /
// leisure needs by traveling between sites; the run emits site staypoints
// plus a fixed-interval GPS stream per agent. A run is a pure function of
// (world, params, config, seed).

namespace mobsim {

// Monday 2021-01-04 00:00 UTC; day boundaries line up with simulated days.
constexpr std::int64_t kDefaultStartEpoch = 1609718400;

struct SimConfig {
    int days = 1;
    int tick_s = 60;
    int sample_interval_s = 300;
    std::int64_t start_epoch = kDefaultStartEpoch;
    // Large runs can skip retaining the GPS stream and keep only staypoints;
    // sampling still happens (it drives staypoint sample counts).
    bool record_gps = true;
};

struct RunMeta {
    std::uint64_t seed = 0;
    BBox bbox;
    int n_agents = 0;
    SimConfig config;
    std::uint64_t spec_hash = 0;
    ParamSpec spec;
    ParamVector params;
    // outcomes
    std::size_t n_staypoints = 0;
    std::size_t n_gps = 0;
    double wall_clock_s = 0.0;
};

struct SimOutput {
    RunMeta meta;
    std::vector<std::vector<StayPoint>> staypoints;  // per agent, time order
    std::vector<std::vector<GpsPoint>> gps;          // per agent, constant spacing
    // Extremes of all need levels observed at sample times; clamped
    // integration keeps them inside [0, 1].
    double need_level_min = 1.0;
    double need_level_max = 0.0;

    std::size_t n_staypoints() const {
        std::size_t n = 0;
        for (const auto& v : staypoints) n += v.size();
        return n;
    }
    std::size_t n_gps() const {
        std::size_t n = 0;
        for (const auto& v : gps) n += v.size();
        return n;
    }
};

inline std::string agent_user_id(std::size_t i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%05zu", i);
    return buf;
}

// Shared measurement settings: both real data and simulator output pass
// through the same staypoint -> trips -> metrics pipeline.
struct MeasureConfig {
    StaypointParams staypoints;
    std::size_t min_staypoints = 100;
    AdaMode ada_mode = AdaMode::active_days;
};

namespace detail {

enum Need : int { kSleep = 0, kHunger = 1, kIncome = 2, kLeisure = 3 };

// ParamVector decoded into SI units once per run.
struct SimParams {
    int n_interests;
    double walk_speed, drive_speed, drive_cutoff;
    double commute_lo, commute_hi;
    double work_start_s, work_jitter_s;
    double eat_out_prob;
    std::array<double, 4> rate_per_s;   // need growth
    std::array<double, 4> trigger;
    std::array<double, 4> duration_s;   // dwell per need: sleep, eat, work, leisure

    static SimParams decode(const ParamSpec& spec, const ParamVector& pv) {
        validate(spec, pv);
        auto g = [&](const char* n) { return get_param(spec, pv, n); };
        SimParams p;
        p.n_interests = static_cast<int>(g("n_interests"));
        p.walk_speed = g("walk_speed_mps");
        p.drive_speed = g("drive_speed_mps");
        p.drive_cutoff = g("drive_cutoff_m");
        const double c1 = g("commute_min_m"), c2 = g("commute_max_m");
        p.commute_lo = std::min(c1, c2);
        p.commute_hi = std::max(c1, c2);
        p.work_start_s = g("work_start_h") * 3600.0;
        p.work_jitter_s = g("work_start_jitter_s");
        p.eat_out_prob = g("eat_out_prob");
        p.rate_per_s = {g("sleep_rate_ph") / 3600.0, g("hunger_rate_ph") / 3600.0,
                        g("income_rate_ph") / 3600.0, g("leisure_rate_ph") / 3600.0};
        p.trigger = {g("sleep_trigger"), g("hunger_trigger"), g("income_trigger"),
                     g("leisure_trigger")};
        p.duration_s = {g("sleep_duration_s"), g("eat_duration_s"), g("work_hours_h") * 3600.0,
                        g("leisure_duration_s")};
        require(p.walk_speed > 0.0 && p.drive_speed > 0.0,
                "simulate: travel speeds must be strictly positive");
        for (double d : p.duration_s) {
            require(d >= 0.0, "simulate: dwell durations must be non-negative");
        }
        return p;
    }
};

enum class AgentMode : std::uint8_t { idle, traveling, dwelling };

// Hash-derived uniform in [-amplitude, +amplitude], stable per (run, agent,
// day); keeps the run's RNG stream independent of how often it is queried.
inline double day_jitter(std::uint64_t seed, std::uint64_t agent, std::uint64_t day,
                         double amplitude) {
    const std::uint64_t h = splitmix64(mix_seed(seed, agent + 0x10000ULL, day));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
    return (2.0 * u - 1.0) * amplitude;
}

struct AgentState {
    std::uint32_t home = 0;
    std::uint32_t work = 0;
    std::vector<std::uint32_t> interests;
    std::array<double, 4> need{};
    double x = 0.0, y = 0.0;
    AgentMode mode = AgentMode::idle;
    std::uint32_t site = 0;          // valid unless traveling
    std::int64_t site_arrive = 0;
    std::uint32_t presence_samples = 0;
    // travel
    std::uint32_t dest = 0;
    int dest_need = 0;
    double speed = 0.0;
    // dwell
    int activity = -1;               // need being serviced, -1 when idle
    std::int64_t dwell_end = 0;
};

}  // namespace detail

inline SimOutput simulate(const World& world, const ParamSpec& spec, const ParamVector& pv,
                          const SimConfig& cfg, std::uint64_t seed) {
    using namespace detail;
    require(cfg.days >= 1, "simulate: days must be >= 1");
    require(cfg.tick_s >= 1 && cfg.sample_interval_s >= cfg.tick_s &&
                cfg.sample_interval_s % cfg.tick_s == 0,
            "simulate: sample interval must be a positive multiple of the tick");
    const SimParams P = SimParams::decode(spec, pv);
    const int n_agents = world.n_agents;
    require(!world.homes.empty() && !world.works.empty() && !world.restaurants.empty() &&
                !world.recreations.empty(),
            "simulate: world must have at least one site of each kind");

    Rng rng(mix_seed(seed, 0x73696d00ULL));  // behavior sub-stream

    // --- agent setup, in id order ------------------------------------------
    std::vector<AgentState> agents(static_cast<std::size_t>(n_agents));
    for (std::size_t i = 0; i < agents.size(); ++i) {
        AgentState& a = agents[i];
        a.home = world.homes[rng.index(world.homes.size())];
        const Site& home = world.sites[a.home];

        // Work site uniformly among those whose straight-line distance from
        // home lies in the commute window; nearest-to-window fallback when
        // the draw produced none.
        std::vector<std::uint32_t> in_window;
        for (std::uint32_t widx : world.works) {
            const Site& s = world.sites[widx];
            const double d = std::hypot(s.x - home.x, s.y - home.y);
            if (d >= P.commute_lo && d <= P.commute_hi) in_window.push_back(widx);
        }
        if (!in_window.empty()) {
            a.work = in_window[rng.index(in_window.size())];
        } else {
            double best = std::numeric_limits<double>::infinity();
            a.work = world.works.front();
            for (std::uint32_t widx : world.works) {
                const Site& s = world.sites[widx];
                const double d = std::hypot(s.x - home.x, s.y - home.y);
                const double gap = d < P.commute_lo ? P.commute_lo - d
                                   : d > P.commute_hi ? d - P.commute_hi
                                                      : 0.0;
                if (gap < best) {
                    best = gap;
                    a.work = widx;
                }
            }
        }

        // Interest set: n_interests recreation sites, sampled without
        // replacement, weighted toward sites near home (denser worlds give
        // every agent nearer options, which shortens leisure trips).
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(P.n_interests),
                                                    world.recreations.size());
        std::vector<std::uint32_t> rec = world.recreations;
        std::vector<double> weight(rec.size());
        for (std::size_t j = 0; j < rec.size(); ++j) {
            const Site& s = world.sites[rec[j]];
            const double d = std::hypot(s.x - home.x, s.y - home.y);
            // Uniform floor keeps occasional cross-town interests in the mix.
            weight[j] = 0.2 + 0.8 / ((1.0 + d / 3000.0) * (1.0 + d / 3000.0));
        }
        for (std::size_t taken = 0; taken < k; ++taken) {
            double wsum = 0.0;
            for (std::size_t j = taken; j < rec.size(); ++j) wsum += weight[j];
            double r = rng.u01() * wsum;
            std::size_t sel = taken;
            for (std::size_t j = taken; j < rec.size(); ++j) {
                if (r < weight[j] || j + 1 == rec.size()) {
                    sel = j;
                    break;
                }
                r -= weight[j];
            }
            std::swap(rec[taken], rec[sel]);
            std::swap(weight[taken], weight[sel]);
            a.interests.push_back(rec[taken]);
        }

        for (double& nd : a.need) nd = rng.uniform(0.0, 0.5);
        a.x = home.x;
        a.y = home.y;
        a.mode = AgentMode::idle;
        a.site = a.home;
        a.site_arrive = cfg.start_epoch;
        a.presence_samples = 0;
        a.activity = -1;
    }

    SimOutput out;
    out.staypoints.resize(agents.size());
    out.gps.resize(agents.size());
    const std::int64_t total_s = static_cast<std::int64_t>(cfg.days) * kSecondsPerDay;
    if (cfg.record_gps) {
        const std::size_t est_samples =
            static_cast<std::size_t>(total_s / cfg.sample_interval_s) + 1;
        for (auto& g : out.gps) g.reserve(est_samples);
    }

    const double grow_dt = static_cast<double>(cfg.tick_s);

    auto flush_presence = [&](std::size_t i, std::int64_t depart) {
        AgentState& a = agents[i];
        if (depart <= a.site_arrive) return;
        const Site& s = world.sites[a.site];
        StayPoint sp;
        sp.user_id = agent_user_id(i);
        sp.lat = s.lat;
        sp.lon = s.lon;
        sp.arrive = a.site_arrive;
        sp.depart = depart;
        sp.n_points = a.presence_samples;
        out.staypoints[i].push_back(std::move(sp));
    };

    const std::int64_t end_epoch = cfg.start_epoch + total_s;
    for (std::int64_t t = cfg.start_epoch; t < end_epoch; t += cfg.tick_s) {
        if ((t - cfg.start_epoch) % cfg.sample_interval_s == 0) {
            for (std::size_t i = 0; i < agents.size(); ++i) {
                AgentState& a = agents[i];
                if (cfg.record_gps) {
                    GpsPoint p;
                    world.frame.to_latlon(a.x, a.y, p.lat, p.lon);
                    p.t = t;
                    out.gps[i].push_back(p);
                }
                if (a.mode != AgentMode::traveling) ++a.presence_samples;
                for (double lvl : a.need) {
                    out.need_level_min = std::min(out.need_level_min, lvl);
                    out.need_level_max = std::max(out.need_level_max, lvl);
                }
            }
        }

        const std::int64_t tick_end = t + cfg.tick_s;
        const std::int64_t day = (t - cfg.start_epoch) / kSecondsPerDay;
        const std::int64_t tod = (t - cfg.start_epoch) % kSecondsPerDay;

        for (std::size_t i = 0; i < agents.size(); ++i) {
            AgentState& a = agents[i];

            // Need growth; the need being serviced by a dwell is frozen.
            for (int nd = 0; nd < 4; ++nd) {
                if (a.mode == AgentMode::dwelling && a.activity == nd) continue;
                a.need[static_cast<std::size_t>(nd)] = std::min(
                    1.0, a.need[static_cast<std::size_t>(nd)] +
                             P.rate_per_s[static_cast<std::size_t>(nd)] * grow_dt);
            }

            switch (a.mode) {
                case AgentMode::dwelling: {
                    if (tick_end >= a.dwell_end) {
                        a.need[static_cast<std::size_t>(a.activity)] = 0.0;
                        a.activity = -1;
                        a.mode = AgentMode::idle;
                    }
                    break;
                }
                case AgentMode::traveling: {
                    const Site& d = world.sites[a.dest];
                    const double dx = d.x - a.x;
                    const double dy = d.y - a.y;
                    const double remaining = std::hypot(dx, dy);
                    const double step = a.speed * static_cast<double>(cfg.tick_s);
                    if (remaining <= step) {
                        a.x = d.x;
                        a.y = d.y;
                        a.site = a.dest;
                        a.site_arrive = tick_end;
                        a.presence_samples = 0;
                        a.mode = AgentMode::dwelling;
                        a.activity = a.dest_need;
                        a.dwell_end =
                            tick_end + static_cast<std::int64_t>(
                                           P.duration_s[static_cast<std::size_t>(a.dest_need)]);
                    } else {
                        a.x += dx / remaining * step;
                        a.y += dy / remaining * step;
                    }
                    break;
                }
                case AgentMode::idle: {
                    // Work is only attractive inside the agent's jittered
                    // daily work window.
                    const double wstart =
                        P.work_start_s +
                        day_jitter(seed, static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(day), P.work_jitter_s);
                    const bool in_work_window =
                        static_cast<double>(tod) >= wstart &&
                        static_cast<double>(tod) <= wstart + P.duration_s[kIncome];

                    int pick = -1;
                    double urgency = 0.0;
                    for (int nd = 0; nd < 4; ++nd) {
                        if (nd == kIncome && !in_work_window) continue;
                        const double u = a.need[static_cast<std::size_t>(nd)] -
                                         P.trigger[static_cast<std::size_t>(nd)];
                        if (u > 0.0 && (pick < 0 || u > urgency)) {
                            pick = nd;
                            urgency = u;
                        }
                    }
                    if (pick < 0) break;

                    std::uint32_t dest = a.home;
                    switch (pick) {
                        case kSleep:
                            dest = a.home;
                            break;
                        case kHunger:
                            if (rng.bernoulli(P.eat_out_prob)) {
                                double best = std::numeric_limits<double>::infinity();
                                for (std::uint32_t ridx : world.restaurants) {
                                    const Site& s = world.sites[ridx];
                                    const double dd = std::hypot(s.x - a.x, s.y - a.y);
                                    if (dd < best) {
                                        best = dd;
                                        dest = ridx;
                                    }
                                }
                            } else {
                                dest = a.home;
                            }
                            break;
                        case kIncome:
                            dest = a.work;
                            break;
                        case kLeisure:
                            dest = a.interests[rng.index(a.interests.size())];
                            break;
                    }

                    if (dest == a.site) {
                        a.mode = AgentMode::dwelling;
                        a.activity = pick;
                        a.dwell_end = t + static_cast<std::int64_t>(
                                              P.duration_s[static_cast<std::size_t>(pick)]);
                    } else {
                        flush_presence(i, t);
                        const Site& s = world.sites[dest];
                        const double dist = std::hypot(s.x - a.x, s.y - a.y);
                        a.mode = AgentMode::traveling;
                        a.dest = dest;
                        a.dest_need = pick;
                        a.speed = dist > P.drive_cutoff ? P.drive_speed : P.walk_speed;
                    }
                    break;
                }
            }
        }
    }

    // Close open site presences at simulation end.
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (agents[i].mode != AgentMode::traveling) flush_presence(i, end_epoch);
    }

    out.meta.seed = seed;
    out.meta.bbox = world.bbox;
    out.meta.n_agents = n_agents;
    out.meta.config = cfg;
    out.meta.spec = spec;
    out.meta.spec_hash = spec.hash();
    out.meta.params = pv;
    out.meta.n_staypoints = out.n_staypoints();
    out.meta.n_gps = out.n_gps();
    return out;
}

// Simulator output measured exactly like real data: the GPS stream (not the
// internal staypoint log) runs through staypoint extraction, the active-user
// filter, trip derivation and the metric computation.
inline MetricSet sim_metrics(const SimOutput& out, const MeasureConfig& mc) {
    StaypointsByUser by_user;
    for (std::size_t i = 0; i < out.gps.size(); ++i) {
        auto sps = extract_staypoints(agent_user_id(i), out.gps[i], mc.staypoints);
        if (!sps.empty()) by_user.emplace(agent_user_id(i), std::move(sps));
    }
    const auto active = filter_active_users(by_user, mc.min_staypoints);
    const auto trips = derive_trips(by_user, active);
    return compute_metrics(trips, mc.ada_mode);
}

// --- run_meta json -----------------------------------------------------------

inline nlohmann::json bbox_to_json(const BBox& b) {
    return {{"min_lat", b.min_lat},
            {"min_lon", b.min_lon},
            {"max_lat", b.max_lat},
            {"max_lon", b.max_lon}};
}

inline BBox bbox_from_json(const nlohmann::json& j) {
    BBox b;
    try {
        b.min_lat = j.at("min_lat").get<double>();
        b.min_lon = j.at("min_lon").get<double>();
        b.max_lat = j.at("max_lat").get<double>();
        b.max_lon = j.at("max_lon").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad bbox json: ") + e.what());
    }
    require(b.valid(), "bad bbox json: min bounds must be below max bounds");
    return b;
}

inline nlohmann::json run_meta_to_json(const RunMeta& m) {
    return {{"seed", m.seed},
            {"bbox", bbox_to_json(m.bbox)},
            {"n_agents", m.n_agents},
            {"days", m.config.days},
            {"tick_s", m.config.tick_s},
            {"sample_interval_s", m.config.sample_interval_s},
            {"start", to_iso8601(m.config.start_epoch)},
            {"spec_hash", m.spec_hash},
            {"param_spec", param_spec_to_json(m.spec)},
            {"params", param_vector_to_json(m.spec, m.params)},
            {"counts", {{"staypoints", m.n_staypoints}, {"gps", m.n_gps}}},
            {"wall_clock_s", m.wall_clock_s}};
}

inline RunMeta run_meta_from_json(const nlohmann::json& j) {
    RunMeta m;
    try {
        m.seed = j.at("seed").get<std::uint64_t>();
        m.bbox = bbox_from_json(j.at("bbox"));
        m.n_agents = j.at("n_agents").get<int>();
        m.config.days = j.at("days").get<int>();
        m.config.tick_s = j.at("tick_s").get<int>();
        m.config.sample_interval_s = j.at("sample_interval_s").get<int>();
        m.config.start_epoch = parse_iso8601(j.at("start").get<std::string>());
        m.spec = param_spec_from_json(j.at("param_spec"));
        m.spec_hash = j.at("spec_hash").get<std::uint64_t>();
        m.params = param_vector_from_json(m.spec, j.at("params"));
        if (j.contains("counts")) {
            m.n_staypoints = j["counts"].value("staypoints", std::size_t{0});
            m.n_gps = j["counts"].value("gps", std::size_t{0});
        }
        m.wall_clock_s = j.value("wall_clock_s", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad run_meta json: ") + e.what());
    }
    if (m.spec.hash() != m.spec_hash) {
        throw ConfigError("run_meta spec_hash does not match the embedded param spec");
    }
    return m;
}

// Regeneration: rebuild the world and rerun from a recorded run_meta.
inline SimOutput run_from_meta(const RunMeta& m) {
    validate(m.spec, m.params);
    const World w = build_world(m.bbox, m.n_agents, m.spec, m.params, m.seed);
    return simulate(w, m.spec, m.params, m.config, m.seed);
}

}  // namespace mobsim
