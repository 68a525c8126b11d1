#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "mobsim/geo.hpp"
#include "mobsim/strings.hpp"
#include "mobsim/timeutil.hpp"

// GeoLife PLT ingestion: parse raw trajectory logs, group per user,
// apply the bounding-box filter, dump/reload the canonical GPS TSV.

namespace mobsim {

constexpr double kFeetToMeters = 0.3048;
constexpr double kPltMissingAltitude = -777.0;

struct Trajectory {
    std::string user_id;
    std::vector<GpsPoint> points;  // sorted by timestamp, non-decreasing
};

struct Dataset {
    std::map<std::string, Trajectory> trajectories;  // keyed by user_id
    std::string provenance;

    std::size_t n_users() const { return trajectories.size(); }
    std::size_t n_points() const {
        std::size_t n = 0;
        for (const auto& [id, t] : trajectories) n += t.points.size();
        return n;
    }
};

struct LoadReport {
    std::size_t files_read = 0;
    std::size_t files_skipped = 0;
    std::size_t lines_parsed = 0;
    std::size_t lines_dropped = 0;       // out-of-range coordinates/timestamps
    std::size_t record_errors = 0;       // malformed fields
    std::vector<std::string> issues;     // first few messages, capped
    std::vector<std::string> warnings;

    void issue(const std::string& msg) {
        ++record_errors;
        if (issues.size() < 50) issues.push_back(msg);
    }
    void warn(const std::string& msg) { warnings.push_back(msg); }
};

// One PLT record:
//   lat,lon,0,altitude_feet,days_since_1899-12-30,YYYY-MM-DD,HH:MM:SS
// The serial-day field is redundant with the date+time fields and ignored;
// timestamps are built from date+time, interpreted as UTC.
inline Trajectory parse_plt(std::istream& in, const std::string& user_id, LoadReport& report,
                            const std::string& source = "<stream>") {
    Trajectory traj;
    traj.user_id = user_id;
    std::string line;
    std::size_t line_no = 0;

    // PLT files carry exactly 6 header lines.
    for (int i = 0; i < 6 && std::getline(in, line); ++i) ++line_no;

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        const auto fields = split(sv, ',');
        if (fields.size() < 7) {
            report.issue(source + ":" + std::to_string(line_no) + ": expected 7 fields, got " +
                         std::to_string(fields.size()));
            continue;
        }
        double lat, lon, alt_ft;
        if (!try_parse_double(fields[0], lat) || !try_parse_double(fields[1], lon) ||
            !try_parse_double(fields[3], alt_ft)) {
            report.issue(source + ":" + std::to_string(line_no) + ": malformed numeric field");
            continue;
        }
        int y, mo, d, h, mi, s;
        if (std::sscanf(std::string(fields[5]).c_str(), "%d-%d-%d", &y, &mo, &d) != 3 ||
            std::sscanf(std::string(fields[6]).c_str(), "%d:%d:%d", &h, &mi, &s) != 3) {
            report.issue(source + ":" + std::to_string(line_no) + ": malformed date/time field");
            continue;
        }
        if (!valid_coords(lat, lon)) {
            ++report.lines_dropped;
            continue;
        }
        const std::int64_t ts = make_utc(y, mo, d, h, mi, s);
        if (!timestamp_in_range(ts)) {
            ++report.lines_dropped;
            continue;
        }
        GpsPoint p;
        p.lat = lat;
        p.lon = lon;
        p.t = ts;
        if (alt_ft != kPltMissingAltitude && std::isfinite(alt_ft)) {
            p.alt_m = alt_ft * kFeetToMeters;
        }
        traj.points.push_back(p);
        ++report.lines_parsed;
    }

    if (traj.points.empty()) {
        throw EmptyTrajectoryError("no valid records in " + source + " (user " + user_id + ")");
    }
    // Stable: duplicate timestamps keep file order.
    std::stable_sort(traj.points.begin(), traj.points.end(),
                     [](const GpsPoint& a, const GpsPoint& b) { return a.t < b.t; });
    return traj;
}

namespace detail {

inline std::vector<std::filesystem::path> sorted_entries(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

// Accepts either the GeoLife tree (<root>/<user>/Trajectory/*.plt) or a flat
// directory of <user>.plt files; the layout is auto-detected.
inline Dataset load_dataset(const std::filesystem::path& root, LoadReport& report) {
    namespace fs = std::filesystem;
    if (!fs::exists(root) || !fs::is_directory(root)) {
        throw IoError("dataset root is not a readable directory: " + root.string());
    }

    // (user_id, plt files)
    std::vector<std::pair<std::string, std::vector<fs::path>>> users;
    bool geolife_layout = false;
    for (const auto& entry : detail::sorted_entries(root)) {
        if (fs::is_directory(entry) && fs::exists(entry / "Trajectory")) {
            geolife_layout = true;
            break;
        }
    }
    if (geolife_layout) {
        for (const auto& entry : detail::sorted_entries(root)) {
            if (!fs::is_directory(entry)) continue;
            const fs::path tdir = entry / "Trajectory";
            if (!fs::exists(tdir) || !fs::is_directory(tdir)) continue;
            std::vector<fs::path> files;
            for (const auto& f : detail::sorted_entries(tdir)) {
                if (f.extension() == ".plt") files.push_back(f);
            }
            if (!files.empty()) users.emplace_back(entry.filename().string(), std::move(files));
        }
    } else {
        for (const auto& f : detail::sorted_entries(root)) {
            if (fs::is_regular_file(f) && f.extension() == ".plt") {
                users.emplace_back(f.stem().string(), std::vector<fs::path>{f});
            }
        }
    }

    Dataset ds;
    ds.provenance = root.string();
    for (auto& [user_id, files] : users) {
        Trajectory merged;
        merged.user_id = user_id;
        for (const auto& f : files) {
            std::ifstream in(f);
            if (!in) {
                ++report.files_skipped;
                report.warn("unreadable file skipped: " + f.string());
                continue;
            }
            try {
                Trajectory t = parse_plt(in, user_id, report, f.filename().string());
                merged.points.insert(merged.points.end(), t.points.begin(), t.points.end());
                ++report.files_read;
            } catch (const EmptyTrajectoryError& e) {
                ++report.files_skipped;
                report.warn(e.what());
            }
        }
        if (merged.points.empty()) continue;
        std::stable_sort(merged.points.begin(), merged.points.end(),
                         [](const GpsPoint& a, const GpsPoint& b) { return a.t < b.t; });
        ds.trajectories.emplace(user_id, std::move(merged));
    }
    if (ds.trajectories.empty()) {
        report.warn("no trajectories found under " + root.string());
    }
    return ds;
}

// Keeps points inside the box (inclusive bounds); users left empty are dropped.
inline Dataset filter_bbox(const Dataset& ds, const BBox& box) {
    require(box.valid(), "invalid bounding box");
    Dataset out;
    out.provenance = ds.provenance;
    for (const auto& [id, traj] : ds.trajectories) {
        Trajectory kept;
        kept.user_id = id;
        for (const GpsPoint& p : traj.points) {
            if (box.contains(p.lat, p.lon)) kept.points.push_back(p);
        }
        if (!kept.points.empty()) out.trajectories.emplace(id, std::move(kept));
    }
    return out;
}

// Canonical GPS TSV: user_id, ISO-8601 timestamp, lat, lon, alt_m (blank if absent).
constexpr const char* kGpsTsvHeader = "user_id\ttimestamp\tlat\tlon\talt_m";

inline void write_gps_tsv(std::ostream& out, const Trajectory& traj) {
    for (const GpsPoint& p : traj.points) {
        out << traj.user_id << '\t' << to_iso8601(p.t) << '\t' << fmt_double(p.lat) << '\t'
            << fmt_double(p.lon) << '\t' << (p.has_altitude() ? fmt_double(p.alt_m) : "")
            << '\n';
    }
}

inline void write_gps_tsv(std::ostream& out, const Dataset& ds) {
    out << kGpsTsvHeader << '\n';
    for (const auto& [id, traj] : ds.trajectories) write_gps_tsv(out, traj);
}

inline Dataset read_gps_tsv(std::istream& in, const std::string& provenance = "") {
    Dataset ds;
    ds.provenance = provenance;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        if (line_no == 1 && sv == kGpsTsvHeader) continue;
        const auto f = split(sv, '\t');
        if (f.size() != 5) {
            throw ParseError("gps tsv line " + std::to_string(line_no) + ": expected 5 columns");
        }
        GpsPoint p;
        p.t = parse_iso8601(std::string(f[1]));
        p.lat = parse_double(f[2], "lat");
        p.lon = parse_double(f[3], "lon");
        if (!f[4].empty()) p.alt_m = parse_double(f[4], "alt_m");
        auto& traj = ds.trajectories[std::string(f[0])];
        if (traj.user_id.empty()) traj.user_id = std::string(f[0]);
        traj.points.push_back(p);
    }
    for (auto& [id, traj] : ds.trajectories) {
        std::stable_sort(traj.points.begin(), traj.points.end(),
                         [](const GpsPoint& a, const GpsPoint& b) { return a.t < b.t; });
    }
    return ds;
}

}  // namespace mobsim
