#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "mobsim/error.hpp"

namespace mobsim {

// Spherical earth; sub-0.5% error at city scale.
constexpr double kEarthRadiusM = 6371000.0;
constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double d) { return d * (kPi / 180.0); }
constexpr double rad2deg(double r) { return r * (180.0 / kPi); }

struct GpsPoint {
    double lat = 0.0;            // degrees WGS84
    double lon = 0.0;            // degrees WGS84
    std::int64_t t = 0;          // UTC seconds
    double alt_m = std::numeric_limits<double>::quiet_NaN();  // NaN = absent

    bool has_altitude() const { return !std::isnan(alt_m); }
};

inline bool valid_coords(double lat, double lon) {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
}

struct BBox {
    double min_lat = 0.0;
    double min_lon = 0.0;
    double max_lat = 0.0;
    double max_lon = 0.0;

    bool valid() const {
        return valid_coords(min_lat, min_lon) && valid_coords(max_lat, max_lon) &&
               min_lat < max_lat && min_lon < max_lon;
    }
    // Inclusive on all four bounds.
    bool contains(double lat, double lon) const {
        return lat >= min_lat && lat <= max_lat && lon >= min_lon && lon <= max_lon;
    }
    double center_lat() const { return 0.5 * (min_lat + max_lat); }
    double center_lon() const { return 0.5 * (min_lon + max_lon); }
};

// Great-circle distance in meters.
inline double haversine_m(double lat1, double lon1, double lat2, double lon2) {
    const double p1 = deg2rad(lat1);
    const double p2 = deg2rad(lat2);
    const double sp = std::sin(deg2rad(lat2 - lat1) * 0.5);
    const double sl = std::sin(deg2rad(lon2 - lon1) * 0.5);
    double a = sp * sp + std::cos(p1) * std::cos(p2) * sl * sl;
    a = std::clamp(a, 0.0, 1.0);
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(a));
}

inline double haversine_m(const GpsPoint& a, const GpsPoint& b) {
    return haversine_m(a.lat, a.lon, b.lat, b.lon);
}

// Planar frame for simulation kinematics: equirectangular projection
// anchored at a reference point, x east / y north in meters.
struct LocalFrame {
    double lat0 = 0.0;
    double lon0 = 0.0;
    double coslat0 = 1.0;

    static LocalFrame centered_on(const BBox& box) {
        LocalFrame f;
        f.lat0 = box.center_lat();
        f.lon0 = box.center_lon();
        f.coslat0 = std::cos(deg2rad(f.lat0));
        return f;
    }

    void to_xy(double lat, double lon, double& x, double& y) const {
        x = deg2rad(lon - lon0) * coslat0 * kEarthRadiusM;
        y = deg2rad(lat - lat0) * kEarthRadiusM;
    }
    void to_latlon(double x, double y, double& lat, double& lon) const {
        lat = lat0 + rad2deg(y / kEarthRadiusM);
        lon = lon0 + rad2deg(x / (kEarthRadiusM * coslat0));
    }
};

}  // namespace mobsim
