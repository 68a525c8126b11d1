#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "mobsim/metrics.hpp"
#include "mobsim/simulate.hpp"
#include "mobsim/staypoints.hpp"

#include <json.hpp>

// Dataset emission: staypoint/trip/GPS tables, per-dataset reports, the
// comparison table, and GeoJSON for map inspection.

namespace mobsim {

struct DatasetReport {
    std::string label;
    std::size_t n_users = 0;
    std::size_t n_staypoints = 0;
    std::size_t n_trips = 0;
    std::size_t n_gps = 0;
    std::uintmax_t staypoint_bytes = 0;
    std::uintmax_t trip_bytes = 0;
    std::uintmax_t gps_bytes = 0;
    double wall_clock_s = 0.0;
    std::optional<MetricSet> metrics;
    std::optional<double> score;  // vs. the designated target
    double mean_rog_m = std::numeric_limits<double>::quiet_NaN();  // informational
};

struct WriteOptions {
    std::string label;
    bool gps = true;  // GPS logging is opt-in for large runs
};

inline nlohmann::json report_to_json(const DatasetReport& r) {
    nlohmann::json j = {{"label", r.label},
                        {"n_users", r.n_users},
                        {"n_staypoints", r.n_staypoints},
                        {"n_trips", r.n_trips},
                        {"n_gps", r.n_gps},
                        {"bytes",
                         {{"staypoints", r.staypoint_bytes},
                          {"trips", r.trip_bytes},
                          {"gps", r.gps_bytes}}},
                        {"wall_clock_s", r.wall_clock_s}};
    if (r.metrics) j["metrics"] = metrics_to_json(*r.metrics);
    if (r.score) j["score"] = *r.score;
    if (!std::isnan(r.mean_rog_m)) j["mean_radius_of_gyration_m"] = r.mean_rog_m;
    return j;
}

namespace detail {

// Deletes everything this writer created if an error escapes mid-write.
class PartialWriteGuard {
public:
    ~PartialWriteGuard() {
        if (armed_) {
            for (const auto& p : paths_) {
                std::error_code ec;
                std::filesystem::remove(p, ec);
            }
        }
    }
    void track(const std::filesystem::path& p) { paths_.push_back(p); }
    void disarm() { armed_ = false; }

private:
    std::vector<std::filesystem::path> paths_;
    bool armed_ = true;
};

inline std::ofstream open_out(const std::filesystem::path& p, PartialWriteGuard& guard) {
    guard.track(p);
    std::ofstream out(p);
    if (!out) throw IoError("cannot open for writing: " + p.string());
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& p) {
    out.flush();
    if (!out) throw IoError("write failed (disk full?): " + p.string());
}

}  // namespace detail

// Simulator output in the same formats as ingested real data, plus the
// run_meta record that makes the dataset regenerable.
inline DatasetReport write_dataset(const SimOutput& out, const std::filesystem::path& dir,
                                   const WriteOptions& opt) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    detail::PartialWriteGuard guard;

    DatasetReport rep;
    rep.label = opt.label.empty() ? "sim" : opt.label;
    rep.n_users = out.gps.size();
    rep.wall_clock_s = out.meta.wall_clock_s;

    const fs::path sp_path = dir / "staypoints.tsv";
    {
        auto f = detail::open_out(sp_path, guard);
        f << kStaypointTsvHeader << '\n';
        for (const auto& sps : out.staypoints) {
            write_staypoint_tsv(f, sps, false);
            rep.n_staypoints += sps.size();
        }
        detail::finish(f, sp_path);
    }

    const fs::path trip_path = dir / "trips.tsv";
    {
        auto f = detail::open_out(trip_path, guard);
        f << kTripTsvHeader << '\n';
        for (const auto& sps : out.staypoints) {
            const auto trips = derive_trips(sps);
            write_trip_tsv(f, trips, false);
            rep.n_trips += trips.size();
        }
        detail::finish(f, trip_path);
    }

    if (opt.gps) {
        const fs::path gps_path = dir / "gps.tsv";
        auto f = detail::open_out(gps_path, guard);
        f << kGpsTsvHeader << '\n';
        for (std::size_t i = 0; i < out.gps.size(); ++i) {
            Trajectory view;
            view.user_id = agent_user_id(i);
            view.points = out.gps[i];
            write_gps_tsv(f, view);
            rep.n_gps += out.gps[i].size();
        }
        detail::finish(f, gps_path);
        rep.gps_bytes = fs::file_size(gps_path);
    }

    const fs::path meta_path = dir / "run_meta.json";
    {
        auto f = detail::open_out(meta_path, guard);
        f << run_meta_to_json(out.meta).dump(2) << '\n';
        detail::finish(f, meta_path);
    }

    rep.staypoint_bytes = fs::file_size(sp_path);
    rep.trip_bytes = fs::file_size(trip_path);
    guard.disarm();
    return rep;
}

// Real-pipeline products in the identical formats.
inline DatasetReport write_dataset(const StaypointsByUser& staypoints,
                                   const std::vector<Trip>& trips, const Dataset* gps,
                                   const std::filesystem::path& dir, const WriteOptions& opt) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    detail::PartialWriteGuard guard;

    DatasetReport rep;
    rep.label = opt.label;
    rep.n_users = staypoints.size();

    const fs::path sp_path = dir / "staypoints.tsv";
    {
        auto f = detail::open_out(sp_path, guard);
        f << kStaypointTsvHeader << '\n';
        for (const auto& [id, sps] : staypoints) {
            write_staypoint_tsv(f, sps, false);
            rep.n_staypoints += sps.size();
        }
        detail::finish(f, sp_path);
    }

    const fs::path trip_path = dir / "trips.tsv";
    {
        auto f = detail::open_out(trip_path, guard);
        write_trip_tsv(f, trips, true);
        rep.n_trips = trips.size();
        detail::finish(f, trip_path);
    }

    if (opt.gps && gps) {
        const fs::path gps_path = dir / "gps.tsv";
        auto f = detail::open_out(gps_path, guard);
        write_gps_tsv(f, *gps);
        rep.n_gps = gps->n_points();
        detail::finish(f, gps_path);
        rep.gps_bytes = fs::file_size(gps_path);
    }

    double rog_sum = 0.0;
    for (const auto& [id, sps] : staypoints) rog_sum += radius_of_gyration(sps);
    if (!staypoints.empty()) rep.mean_rog_m = rog_sum / static_cast<double>(staypoints.size());

    rep.staypoint_bytes = fs::file_size(sp_path);
    rep.trip_bytes = fs::file_size(trip_path);
    guard.disarm();
    return rep;
}

// GeoJSON FeatureCollection of staypoint Points, uniformly subsampled to at
// most max_points (seeded selection sampling, stable for a given seed).
inline std::filesystem::path write_geojson(const std::vector<StayPoint>& staypoints,
                                           const std::filesystem::path& path,
                                           std::size_t max_points, std::uint64_t seed = 1) {
    std::vector<const StayPoint*> chosen;
    if (staypoints.size() <= max_points) {
        for (const StayPoint& s : staypoints) chosen.push_back(&s);
    } else {
        Rng rng(mix_seed(seed, 0x9e0ULL));
        std::size_t need = max_points;
        std::size_t left = staypoints.size();
        for (const StayPoint& s : staypoints) {
            if (need == 0) break;
            if (rng.index(left) < need) {
                chosen.push_back(&s);
                --need;
            }
            --left;
        }
    }

    nlohmann::json features = nlohmann::json::array();
    for (const StayPoint* s : chosen) {
        features.push_back(
            {{"type", "Feature"},
             {"geometry", {{"type", "Point"}, {"coordinates", {s->lon, s->lat}}}},
             {"properties",
              {{"user_id", s->user_id},
               {"arrive", to_iso8601(s->arrive)},
               {"depart", to_iso8601(s->depart)},
               {"n_points", s->n_points}}}});
    }
    nlohmann::json fc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};

    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << fc.dump(2) << '\n';
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
    return path;
}

// Comparison table, target row first (score 1 by definition); rows keep
// their given order.
inline std::filesystem::path write_comparison_table(const std::vector<DatasetReport>& rows,
                                                    const MetricSet& target,
                                                    const std::string& target_label,
                                                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "dataset\tadt\tada\tmxd\tmdd\tscore\n";
    auto row = [&out](const std::string& label, const MetricSet& m, double score) {
        out << label << '\t' << fmt_double(m.adt) << '\t' << fmt_double(m.ada) << '\t'
            << fmt_double(m.mxd) << '\t' << fmt_double(m.mdd) << '\t' << fmt_double(score)
            << '\n';
    };
    row(target_label, target, 1.0);
    for (const DatasetReport& r : rows) {
        if (!r.metrics) continue;
        row(r.label, *r.metrics, r.score ? *r.score : similarity(target, *r.metrics));
    }
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
    return path;
}

}  // namespace mobsim
