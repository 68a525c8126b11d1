#pragma once

// Test-only reference implementations, written independently of the library
// code paths they check. The staypoint oracle re-derives the dwell rule with
// naive full scans; the metric oracle recomputes the four statistics from
// scratch. Keep these dumb.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mobsim/geo.hpp"
#include "mobsim/rng.hpp"
#include "mobsim/staypoints.hpp"

namespace oracle {

// O(n^2) windowed scan. From the current anchor, rescans forward for the
// first point beyond the distance threshold; the window up to just before it
// is a staypoint iff it spans the time threshold. Emitted windows restart
// the anchor past themselves; rejected ones advance it by one. The trailing
// window (never broken by distance) ends the scan either way.
inline std::vector<mobsim::StayPoint> brute_force_staypoints(const std::string& user_id,
                                                             const std::vector<mobsim::GpsPoint>& pts,
                                                             double dist_threshold_m,
                                                             double time_threshold_s) {
    std::vector<mobsim::StayPoint> out;
    const std::size_t n = pts.size();
    std::size_t anchor = 0;
    while (anchor < n) {
        std::size_t breaker = n;
        for (std::size_t j = anchor + 1; j < n; ++j) {
            if (mobsim::haversine_m(pts[anchor].lat, pts[anchor].lon, pts[j].lat, pts[j].lon) >
                dist_threshold_m) {
                breaker = j;
                break;
            }
        }
        const std::size_t last = breaker - 1;
        const bool long_enough =
            static_cast<double>(pts[last].t - pts[anchor].t) >= time_threshold_s;
        if (long_enough) {
            mobsim::StayPoint sp;
            sp.user_id = user_id;
            double lat_sum = 0.0;
            double lon_sum = 0.0;
            for (std::size_t k = anchor; k <= last; ++k) {
                lat_sum += pts[k].lat;
                lon_sum += pts[k].lon;
            }
            sp.lat = lat_sum / static_cast<double>(last - anchor + 1);
            sp.lon = lon_sum / static_cast<double>(last - anchor + 1);
            sp.arrive = pts[anchor].t;
            sp.depart = pts[last].t;
            sp.n_points = static_cast<std::uint32_t>(last - anchor + 1);
            out.push_back(std::move(sp));
        }
        if (breaker == n) break;
        anchor = long_enough ? breaker : anchor + 1;
    }
    return out;
}

inline bool staypoints_identical(const std::vector<mobsim::StayPoint>& a,
                                 const std::vector<mobsim::StayPoint>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].user_id != b[i].user_id || a[i].lat != b[i].lat || a[i].lon != b[i].lon ||
            a[i].arrive != b[i].arrive || a[i].depart != b[i].depart ||
            a[i].n_points != b[i].n_points) {
            return false;
        }
    }
    return true;
}

struct NaiveMetrics {
    double adt = 0.0;
    double ada = 0.0;
    double mxd = 0.0;
    double mdd = 0.0;
};

// Recomputed from the definitions: ADT mean trip distance, MXD max, MDD
// median (even count averages the middle two), ADA mean of per-(user, day)
// summed distance over days with at least one trip. Sums follow the
// documented convention of running over value-sorted operands, which is what
// makes bitwise agreement a fair requirement.
inline NaiveMetrics naive_metrics(const std::vector<mobsim::Trip>& trips) {
    NaiveMetrics m;
    std::vector<double> sorted;
    for (const mobsim::Trip& t : trips) {
        if (t.distance_m > m.mxd) m.mxd = t.distance_m;
        sorted.push_back(t.distance_m);
    }
    std::sort(sorted.begin(), sorted.end());
    for (double d : sorted) m.adt += d;
    m.adt /= static_cast<double>(trips.size());
    if (sorted.size() % 2 == 1) {
        m.mdd = sorted[sorted.size() / 2];
    } else {
        m.mdd = (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]) / 2.0;
    }
    std::map<std::string, std::map<std::int64_t, std::vector<double>>> per_user_day;
    for (const mobsim::Trip& t : trips) {
        per_user_day[t.user_id][t.depart / mobsim::kSecondsPerDay].push_back(t.distance_m);
    }
    double total = 0.0;
    std::size_t n_days = 0;
    for (auto& [user, days] : per_user_day) {
        for (auto& [day, dists] : days) {
            std::sort(dists.begin(), dists.end());
            double day_total = 0.0;
            for (double d : dists) day_total += d;
            total += day_total;
            ++n_days;
        }
    }
    m.ada = total / static_cast<double>(n_days);
    return m;
}

// Random walk with dwell phases: long pauses inside a tight radius broken by
// occasional jumps, which is the shape staypoint detection has to segment.
inline std::vector<mobsim::GpsPoint> random_trajectory(mobsim::Rng& rng, std::size_t n_points,
                                                       double base_lat = 39.9,
                                                       double base_lon = 116.4) {
    std::vector<mobsim::GpsPoint> pts;
    double lat = base_lat;
    double lon = base_lon;
    std::int64_t t = 1224720000;
    for (std::size_t i = 0; i < n_points; ++i) {
        if (rng.bernoulli(0.25)) {
            lat += rng.uniform(-0.02, 0.02);   // ~2 km jumps
            lon += rng.uniform(-0.02, 0.02);
        } else {
            lat += rng.uniform(-0.0004, 0.0004);  // ~40 m wobble
            lon += rng.uniform(-0.0004, 0.0004);
        }
        t += rng.uniform_int(20, 900);
        mobsim::GpsPoint p;
        p.lat = lat;
        p.lon = lon;
        p.t = t;
        pts.push_back(p);
    }
    return pts;
}

}  // namespace oracle
