#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mobsim/geo.hpp"
#include "mobsim/params.hpp"
#include "mobsim/rng.hpp"

// Synthetic city: sites placed inside a bounding box, counts scaled per
// 1000 agents, positions drawn from a half-uniform / half-clustered mixture.

namespace mobsim {

enum class SiteKind : std::uint8_t { home = 0, work = 1, restaurant = 2, recreation = 3 };

inline const char* site_kind_name(SiteKind k) {
    switch (k) {
        case SiteKind::home: return "home";
        case SiteKind::work: return "work";
        case SiteKind::restaurant: return "restaurant";
        case SiteKind::recreation: return "recreation";
    }
    return "?";
}

struct Site {
    SiteKind kind = SiteKind::home;
    double lat = 0.0;
    double lon = 0.0;
    double x = 0.0;  // local frame, meters east of bbox center
    double y = 0.0;  // meters north
    int capacity = 0;
};

struct World {
    BBox bbox;
    LocalFrame frame;
    int n_agents = 0;  // population the site counts were derived for
    std::vector<Site> sites;
    std::vector<std::uint32_t> homes;
    std::vector<std::uint32_t> works;
    std::vector<std::uint32_t> restaurants;
    std::vector<std::uint32_t> recreations;

    const std::vector<std::uint32_t>& of_kind(SiteKind k) const {
        switch (k) {
            case SiteKind::home: return homes;
            case SiteKind::work: return works;
            case SiteKind::restaurant: return restaurants;
            case SiteKind::recreation: return recreations;
        }
        return homes;
    }
};

namespace detail {

inline int site_count(double per_1k, int n_agents) {
    return static_cast<int>(std::ceil(per_1k * static_cast<double>(n_agents) / 1000.0));
}

}  // namespace detail

// Deterministic for fixed (bbox, n_agents, params, seed).
inline World build_world(const BBox& bbox, int n_agents, const ParamSpec& spec,
                         const ParamVector& pv, std::uint64_t seed) {
    require(bbox.valid(), "build_world: invalid bounding box");
    require(n_agents >= 1, "build_world: need at least one agent");
    validate(spec, pv);

    World w;
    w.bbox = bbox;
    w.frame = LocalFrame::centered_on(bbox);
    w.n_agents = n_agents;

    const int n_clusters =
        static_cast<int>(get_param(spec, pv, "cluster_count"));
    const double spread = get_param(spec, pv, "cluster_spread_m");
    require(n_clusters >= 1, "build_world: need at least one placement cluster");
    require(spread >= 0.0, "build_world: cluster spread must be non-negative");

    struct KindPlan {
        SiteKind kind;
        const char* density_param;
        std::vector<std::uint32_t>* index;
    };
    KindPlan plan[4] = {
        {SiteKind::home, "home_per_1k", &w.homes},
        {SiteKind::work, "work_per_1k", &w.works},
        {SiteKind::restaurant, "restaurant_per_1k", &w.restaurants},
        {SiteKind::recreation, "recreation_per_1k", &w.recreations},
    };

    double xmin, ymin, xmax, ymax;
    w.frame.to_xy(bbox.min_lat, bbox.min_lon, xmin, ymin);
    w.frame.to_xy(bbox.max_lat, bbox.max_lon, xmax, ymax);

    Rng rng(mix_seed(seed, 0x776f726cULL));  // world sub-stream

    std::vector<std::pair<double, double>> centers;
    centers.reserve(static_cast<std::size_t>(n_clusters));
    for (int c = 0; c < n_clusters; ++c) {
        centers.emplace_back(rng.uniform(xmin, xmax), rng.uniform(ymin, ymax));
    }

    for (const KindPlan& kp : plan) {
        const int count = detail::site_count(get_param(spec, pv, kp.density_param), n_agents);
        if (count <= 0) {
            throw ConfigError(std::string("site density yields zero ") +
                              site_kind_name(kp.kind) + " sites");
        }
        for (int s = 0; s < count; ++s) {
            double x, y;
            if (rng.bernoulli(0.5)) {
                const auto& [cx, cy] = centers[rng.index(centers.size())];
                x = std::clamp(cx + rng.normal(0.0, spread), xmin, xmax);
                y = std::clamp(cy + rng.normal(0.0, spread), ymin, ymax);
            } else {
                x = rng.uniform(xmin, xmax);
                y = rng.uniform(ymin, ymax);
            }
            Site site;
            site.kind = kp.kind;
            site.x = x;
            site.y = y;
            w.frame.to_latlon(x, y, site.lat, site.lon);
            // Projection round-trips can graze the box edge; keep strictly inside.
            site.lat = std::clamp(site.lat, bbox.min_lat, bbox.max_lat);
            site.lon = std::clamp(site.lon, bbox.min_lon, bbox.max_lon);
            if (kp.kind == SiteKind::home || kp.kind == SiteKind::work) {
                site.capacity = (n_agents + count - 1) / count;
            }
            kp.index->push_back(static_cast<std::uint32_t>(w.sites.size()));
            w.sites.push_back(site);
        }
    }
    return w;
}

}  // namespace mobsim
