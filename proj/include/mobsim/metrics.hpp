#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mobsim/staypoints.hpp"

#include <json.hpp>

// The four geo-statistics {ADT, ADA, MXD, MDD} and the similarity score
// between two metric sets.

namespace mobsim {

struct MetricSet {
    double adt = 0.0;  // average distance per trip, meters
    double ada = 0.0;  // average distance per agent per day, meters
    double mxd = 0.0;  // maximum trip distance, meters
    double mdd = 0.0;  // median trip distance, meters

    bool operator==(const MetricSet&) const = default;
};

// ADA denominator choice. active_days averages over (user, day) pairs with
// at least one trip; span_days averages over every calendar day between a
// user's first and last trip. Real GPS users are inactive most days, which
// makes active_days the sane default for calibration.
enum class AdaMode { active_days, span_days };

inline MetricSet compute_metrics(std::span<const Trip> trips,
                                 AdaMode mode = AdaMode::active_days) {
    if (trips.empty()) throw NoTripsError("metrics undefined: no trips");

    MetricSet m;
    std::vector<double> distances;
    distances.reserve(trips.size());
    for (const Trip& t : trips) distances.push_back(t.distance_m);
    // Sums run over sorted values so the result is bitwise permutation
    // invariant (double addition is not associative).
    std::sort(distances.begin(), distances.end());
    double sum = 0.0;
    for (double d : distances) sum += d;
    m.adt = sum / static_cast<double>(trips.size());
    m.mxd = distances.back();

    const std::size_t n = distances.size();
    m.mdd = (n % 2 == 1) ? distances[n / 2]
                         : 0.5 * (distances[n / 2 - 1] + distances[n / 2]);

    // A trip belongs to the calendar day (UTC) of its departure.
    std::map<std::pair<std::string, std::int64_t>, std::vector<double>> day_dists;
    for (const Trip& t : trips) {
        std::int64_t day = t.depart / kSecondsPerDay;
        if (t.depart < 0 && t.depart % kSecondsPerDay != 0) --day;
        day_dists[{t.user_id, day}].push_back(t.distance_m);
    }
    std::map<std::pair<std::string, std::int64_t>, double> day_sums;
    for (auto& [key, ds] : day_dists) {
        std::sort(ds.begin(), ds.end());
        double s = 0.0;
        for (double d : ds) s += d;
        day_sums.emplace(key, s);
    }
    if (mode == AdaMode::active_days) {
        double total = 0.0;
        for (const auto& [key, dist] : day_sums) total += dist;
        m.ada = total / static_cast<double>(day_sums.size());
    } else {
        // Every day in each user's [first trip day, last trip day] span counts.
        std::map<std::string, std::pair<std::int64_t, std::int64_t>> spans;
        for (const auto& [key, dist] : day_sums) {
            auto it = spans.find(key.first);
            if (it == spans.end()) {
                spans.emplace(key.first, std::make_pair(key.second, key.second));
            } else {
                it->second.first = std::min(it->second.first, key.second);
                it->second.second = std::max(it->second.second, key.second);
            }
        }
        double total = 0.0;
        std::int64_t n_days = 0;
        for (const auto& [key, dist] : day_sums) total += dist;
        for (const auto& [user, span] : spans) n_days += span.second - span.first + 1;
        m.ada = total / static_cast<double>(n_days);
    }
    return m;
}

// 1 - (1/|M|) * sum over the four metrics of |k(p) - k(g)| / k(g).
// Not clamped: scores below zero are legal and keep poor candidates ordered.
inline double similarity(const MetricSet& g, const MetricSet& p) {
    const double gv[4] = {g.adt, g.ada, g.mxd, g.mdd};
    const double pv[4] = {p.adt, p.ada, p.mxd, p.mdd};
    double dev = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (!(gv[k] > 0.0)) {
            throw ConfigError("similarity undefined: target metric component is not positive");
        }
        dev += std::abs(pv[k] - gv[k]) / gv[k];
    }
    return 1.0 - dev / 4.0;
}

// RMS distance of a user's staypoints from their centroid. Informational
// only; not part of the similarity metric set.
inline double radius_of_gyration(const std::vector<StayPoint>& sps) {
    if (sps.empty()) return 0.0;
    double clat = 0.0, clon = 0.0;
    for (const StayPoint& s : sps) {
        clat += s.lat;
        clon += s.lon;
    }
    clat /= static_cast<double>(sps.size());
    clon /= static_cast<double>(sps.size());
    double sq = 0.0;
    for (const StayPoint& s : sps) {
        const double d = haversine_m(clat, clon, s.lat, s.lon);
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(sps.size()));
}

inline nlohmann::json metrics_to_json(const MetricSet& m) {
    return {{"adt", m.adt}, {"ada", m.ada}, {"mxd", m.mxd}, {"mdd", m.mdd}};
}

inline MetricSet metrics_from_json(const nlohmann::json& j) {
    MetricSet m;
    try {
        m.adt = j.at("adt").get<double>();
        m.ada = j.at("ada").get<double>();
        m.mxd = j.at("mxd").get<double>();
        m.mdd = j.at("mdd").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad metrics json: ") + e.what());
    }
    if (!(std::isfinite(m.adt) && std::isfinite(m.ada) && std::isfinite(m.mxd) &&
          std::isfinite(m.mdd)) ||
        m.adt < 0 || m.ada < 0 || m.mxd < 0 || m.mdd < 0) {
        throw ParseError("bad metrics json: components must be finite and non-negative");
    }
    return m;
}

}  // namespace mobsim
