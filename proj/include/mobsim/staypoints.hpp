#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobsim/geodata.hpp"

// Sliding-anchor staypoint detection and trip derivation.

namespace mobsim {

struct StaypointParams {
    double dist_threshold_m = 200.0;
    double time_threshold_s = 1800.0;
};

struct StayPoint {
    std::string user_id;
    double lat = 0.0;   // arithmetic mean of contributing points
    double lon = 0.0;
    std::int64_t arrive = 0;
    std::int64_t depart = 0;
    std::uint32_t n_points = 0;
};

// Displacement between two consecutive staypoints of one user. Distance is
// centroid-to-centroid great-circle, insensitive to sampling frequency.
struct Trip {
    std::string user_id;
    double o_lat = 0.0;
    double o_lon = 0.0;
    double d_lat = 0.0;
    double d_lon = 0.0;
    double distance_m = 0.0;
    std::int64_t depart = 0;  // origin.depart
    std::int64_t arrive = 0;  // destination.arrive
};

// Classical sliding-anchor dwell detection. From anchor i, scan for the first
// j with dist(points[i], points[j]) > dist_threshold; if the dwell
// [i, j-1] lasted at least time_threshold, emit it and restart at j,
// otherwise advance the anchor by one. The trailing window is emitted if
// it meets the time threshold.
inline std::vector<StayPoint> extract_staypoints(std::string_view user_id,
                                                 std::span<const GpsPoint> pts,
                                                 const StaypointParams& p) {
    require(p.dist_threshold_m > 0.0 && p.time_threshold_s > 0.0,
            "staypoint thresholds must be strictly positive");
    std::vector<StayPoint> out;
    const std::size_t n = pts.size();

    auto emit = [&](std::size_t first, std::size_t last) {
        StayPoint sp;
        sp.user_id = std::string(user_id);
        double lat_sum = 0.0, lon_sum = 0.0;
        for (std::size_t k = first; k <= last; ++k) {
            lat_sum += pts[k].lat;
            lon_sum += pts[k].lon;
        }
        const double cnt = static_cast<double>(last - first + 1);
        sp.lat = lat_sum / cnt;
        sp.lon = lon_sum / cnt;
        sp.arrive = pts[first].t;
        sp.depart = pts[last].t;
        sp.n_points = static_cast<std::uint32_t>(last - first + 1);
        out.push_back(std::move(sp));
    };

    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && haversine_m(pts[i], pts[j]) <= p.dist_threshold_m) ++j;
        if (j == n) {
            // Trailing window: no later anchor can last longer, so stop either way.
            if (static_cast<double>(pts[n - 1].t - pts[i].t) >= p.time_threshold_s) {
                emit(i, n - 1);
            }
            break;
        }
        if (static_cast<double>(pts[j - 1].t - pts[i].t) >= p.time_threshold_s) {
            emit(i, j - 1);
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

inline std::vector<StayPoint> extract_staypoints(const Trajectory& traj,
                                                 const StaypointParams& p) {
    return extract_staypoints(traj.user_id, traj.points, p);
}

// One trip per consecutive staypoint pair of the same user.
inline std::vector<Trip> derive_trips(const std::vector<StayPoint>& sps) {
    std::vector<Trip> out;
    if (sps.size() < 2) return out;
    out.reserve(sps.size() - 1);
    for (std::size_t k = 0; k + 1 < sps.size(); ++k) {
        const StayPoint& a = sps[k];
        const StayPoint& b = sps[k + 1];
        Trip t;
        t.user_id = a.user_id;
        t.o_lat = a.lat;
        t.o_lon = a.lon;
        t.d_lat = b.lat;
        t.d_lon = b.lon;
        t.distance_m = haversine_m(a.lat, a.lon, b.lat, b.lon);
        t.depart = a.depart;
        t.arrive = b.arrive;
        out.push_back(std::move(t));
    }
    return out;
}

using StaypointsByUser = std::map<std::string, std::vector<StayPoint>>;

inline StaypointsByUser extract_staypoints(const Dataset& ds, const StaypointParams& p) {
    StaypointsByUser out;
    for (const auto& [id, traj] : ds.trajectories) {
        auto sps = extract_staypoints(traj, p);
        if (!sps.empty()) out.emplace(id, std::move(sps));
    }
    return out;
}

// Users with at least min_sp staypoints (boundary inclusive).
inline std::set<std::string> filter_active_users(const StaypointsByUser& by_user,
                                                 std::size_t min_sp) {
    require(min_sp >= 1, "min staypoint count must be >= 1");
    std::set<std::string> out;
    for (const auto& [id, sps] : by_user) {
        if (sps.size() >= min_sp) out.insert(id);
    }
    return out;
}

// Trips of the active users, user-major then time order.
inline std::vector<Trip> derive_trips(const StaypointsByUser& by_user,
                                      const std::set<std::string>& active) {
    std::vector<Trip> out;
    for (const auto& [id, sps] : by_user) {
        if (!active.count(id)) continue;
        auto trips = derive_trips(sps);
        out.insert(out.end(), trips.begin(), trips.end());
    }
    return out;
}

constexpr const char* kStaypointTsvHeader = "user_id\tlat\tlon\tarrive\tdepart\tn_points";
constexpr const char* kTripTsvHeader =
    "user_id\to_lat\to_lon\td_lat\td_lon\tdistance_m\tdepart\tarrive";

inline void write_staypoint_tsv(std::ostream& out, const std::vector<StayPoint>& sps,
                                bool header = true) {
    if (header) out << kStaypointTsvHeader << '\n';
    for (const StayPoint& s : sps) {
        out << s.user_id << '\t' << fmt_double(s.lat) << '\t' << fmt_double(s.lon) << '\t'
            << to_iso8601(s.arrive) << '\t' << to_iso8601(s.depart) << '\t' << s.n_points
            << '\n';
    }
}

inline std::vector<StayPoint> read_staypoint_tsv(std::istream& in) {
    std::vector<StayPoint> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        if (line_no == 1 && sv == kStaypointTsvHeader) continue;
        const auto f = split(sv, '\t');
        if (f.size() != 6) {
            throw ParseError("staypoint tsv line " + std::to_string(line_no) +
                             ": expected 6 columns");
        }
        StayPoint s;
        s.user_id = std::string(f[0]);
        s.lat = parse_double(f[1], "lat");
        s.lon = parse_double(f[2], "lon");
        s.arrive = parse_iso8601(std::string(f[3]));
        s.depart = parse_iso8601(std::string(f[4]));
        std::int64_t np;
        if (!try_parse_i64(f[5], np) || np < 0) {
            throw ParseError("staypoint tsv line " + std::to_string(line_no) + ": bad n_points");
        }
        s.n_points = static_cast<std::uint32_t>(np);
        out.push_back(std::move(s));
    }
    return out;
}

inline void write_trip_tsv(std::ostream& out, const std::vector<Trip>& trips,
                           bool header = true) {
    if (header) out << kTripTsvHeader << '\n';
    for (const Trip& t : trips) {
        out << t.user_id << '\t' << fmt_double(t.o_lat) << '\t' << fmt_double(t.o_lon) << '\t'
            << fmt_double(t.d_lat) << '\t' << fmt_double(t.d_lon) << '\t'
            << fmt_double(t.distance_m) << '\t' << to_iso8601(t.depart) << '\t'
            << to_iso8601(t.arrive) << '\n';
    }
}

inline std::vector<Trip> read_trip_tsv(std::istream& in) {
    std::vector<Trip> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        if (line_no == 1 && sv == kTripTsvHeader) continue;
        const auto f = split(sv, '\t');
        if (f.size() != 8) {
            throw ParseError("trip tsv line " + std::to_string(line_no) + ": expected 8 columns");
        }
        Trip t;
        t.user_id = std::string(f[0]);
        t.o_lat = parse_double(f[1], "o_lat");
        t.o_lon = parse_double(f[2], "o_lon");
        t.d_lat = parse_double(f[3], "d_lat");
        t.d_lon = parse_double(f[4], "d_lon");
        t.distance_m = parse_double(f[5], "distance_m");
        t.depart = parse_iso8601(std::string(f[6]));
        t.arrive = parse_iso8601(std::string(f[7]));
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace mobsim
