// mobsim: staypoint geo-statistics from GPS trajectory datasets, a
// needs-driven mobility simulator, GA calibration of its parameters against
// a target metric set, and reproducible synthetic dataset export.
//
// Subcommands: ingest, metrics, simulate, calibrate, report. A shared JSON
// config file provides defaults; command-line flags override it; every run
// echoes its fully resolved configuration into the output directory.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobsim/calibrate.hpp"
#include "mobsim/export.hpp"
#include "mobsim/geodata.hpp"
#include "mobsim/metrics.hpp"
#include "mobsim/simulate.hpp"

using namespace mobsim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

void handle_sigint(int) { g_stop.store(true); }

struct RunConfig {
    BBox bbox{39.748, 116.165, 40.038, 116.628};  // Beijing study area
    bool bbox_filter = true;
    MeasureConfig measure;
    int agents = 100;
    int days = 30;
    int tick_s = 60;
    int sample_interval_s = 300;
    std::uint64_t seed = 1;
    std::int64_t start_epoch = kDefaultStartEpoch;
    bool gps = true;
    // calibration
    int layer_size = 16;
    int top_k = 0;  // 0 = max(2, layer_size / 4)
    int max_generations = 10;
    double target_score = std::numeric_limits<double>::infinity();
    ModeWeights mode_weights = kUniformModeWeights;
    std::uint64_t master_seed = 1;
    int workers = 0;
    std::size_t top_n = 10;
    std::string param_spec_path;  // empty = built-in default spec
    // output
    std::size_t geojson_max_points = 10000;
    std::uint64_t geojson_seed = 1;

    int resolved_top_k() const { return top_k > 0 ? top_k : std::max(2, layer_size / 4); }
};

json slurp_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot read " + p.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed JSON in " + p.string());
    return j;
}

void apply_config_file(RunConfig& rc, const json& j) {
    try {
        if (j.contains("bbox")) rc.bbox = bbox_from_json(j["bbox"]);
        if (j.contains("staypoints")) {
            const json& s = j["staypoints"];
            rc.measure.staypoints.dist_threshold_m =
                s.value("dist_m", rc.measure.staypoints.dist_threshold_m);
            rc.measure.staypoints.time_threshold_s =
                s.value("time_s", rc.measure.staypoints.time_threshold_s);
            rc.measure.min_staypoints = s.value("min_staypoints", rc.measure.min_staypoints);
            const std::string mode = s.value("ada_mode", "active_days");
            if (mode == "active_days") {
                rc.measure.ada_mode = AdaMode::active_days;
            } else if (mode == "span_days") {
                rc.measure.ada_mode = AdaMode::span_days;
            } else {
                throw ConfigError("staypoints.ada_mode must be active_days or span_days");
            }
        }
        if (j.contains("sim")) {
            const json& s = j["sim"];
            rc.agents = s.value("agents", rc.agents);
            rc.days = s.value("days", rc.days);
            rc.tick_s = s.value("tick_s", rc.tick_s);
            rc.sample_interval_s = s.value("sample_interval_s", rc.sample_interval_s);
            rc.seed = s.value("seed", rc.seed);
            if (s.contains("start")) rc.start_epoch = parse_iso8601(s["start"].get<std::string>());
            rc.gps = s.value("gps", rc.gps);
        }
        if (j.contains("calibrate")) {
            const json& c = j["calibrate"];
            rc.layer_size = c.value("layer_size", rc.layer_size);
            rc.top_k = c.value("top_k", rc.top_k);
            rc.max_generations = c.value("max_generations", rc.max_generations);
            rc.target_score = c.value("target_score", rc.target_score);
            rc.master_seed = c.value("master_seed", rc.master_seed);
            rc.workers = c.value("workers", rc.workers);
            rc.top_n = c.value("top_n", rc.top_n);
            rc.param_spec_path = c.value("param_spec", rc.param_spec_path);
            if (c.contains("mode_weights")) {
                const auto w = c["mode_weights"].get<std::vector<double>>();
                if (w.size() != 5) throw ConfigError("calibrate.mode_weights needs 5 values");
                std::copy(w.begin(), w.end(), rc.mode_weights.begin());
            }
        }
        if (j.contains("output")) {
            const json& o = j["output"];
            rc.geojson_max_points = o.value("geojson_max_points", rc.geojson_max_points);
            rc.geojson_seed = o.value("geojson_seed", rc.geojson_seed);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad config file: ") + e.what());
    }
}

json resolved_config_json(const RunConfig& rc) {
    return {
        {"bbox", bbox_to_json(rc.bbox)},
        {"bbox_filter", rc.bbox_filter},
        {"staypoints",
         {{"dist_m", rc.measure.staypoints.dist_threshold_m},
          {"time_s", rc.measure.staypoints.time_threshold_s},
          {"min_staypoints", rc.measure.min_staypoints},
          {"ada_mode", rc.measure.ada_mode == AdaMode::active_days ? "active_days" : "span_days"}}},
        {"sim",
         {{"agents", rc.agents},
          {"days", rc.days},
          {"tick_s", rc.tick_s},
          {"sample_interval_s", rc.sample_interval_s},
          {"seed", rc.seed},
          {"start", to_iso8601(rc.start_epoch)},
          {"gps", rc.gps}}},
        {"calibrate",
         {{"layer_size", rc.layer_size},
          {"top_k", rc.resolved_top_k()},
          {"max_generations", rc.max_generations},
          {"target_score", std::isfinite(rc.target_score) ? json(rc.target_score) : json()},
          {"mode_weights", rc.mode_weights},
          {"master_seed", rc.master_seed},
          {"workers", rc.workers},
          {"top_n", rc.top_n},
          {"param_spec", rc.param_spec_path}}},
        {"output",
         {{"geojson_max_points", rc.geojson_max_points}, {"geojson_seed", rc.geojson_seed}}}};
}

void echo_resolved_config(const RunConfig& rc, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "resolved_config.json");
    out << resolved_config_json(rc).dump(2) << '\n';
}

ParamSpec load_spec(const RunConfig& rc, const fs::path& workdir) {
    if (rc.param_spec_path.empty()) return default_param_spec();
    return param_spec_from_json(slurp_json(workdir / rc.param_spec_path));
}

bool parse_bbox_flag(const std::string& s, BBox& out) {
    BBox b;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf,%lf", &b.min_lat, &b.min_lon, &b.max_lat,
                    &b.max_lon) != 4 ||
        !b.valid()) {
        return false;
    }
    out = b;
    return true;
}

void print_metrics_table(const std::string& label, const MetricSet& m,
                         std::optional<double> score) {
    std::printf("%-14s ADT=%10.2f  ADA=%10.2f  MXD=%10.2f  MDD=%10.2f", label.c_str(), m.adt,
                m.ada, m.mxd, m.mdd);
    if (score) std::printf("  score=%.4f", *score);
    std::printf("\n");
}

// staypoints -> active users -> trips, identically for any dataset.
std::vector<Trip> pipeline_trips(const StaypointsByUser& by_user, const MeasureConfig& mc,
                                 std::size_t* active_users = nullptr) {
    const auto active = filter_active_users(by_user, mc.min_staypoints);
    if (active_users) *active_users = active.size();
    return derive_trips(by_user, active);
}

// --- subcommands -------------------------------------------------------------

int cmd_ingest(const RunConfig& rc, const fs::path& workdir, const std::string& root,
               const std::string& out, const std::string& label) {
    const fs::path out_dir = workdir / out;
    echo_resolved_config(rc, out_dir);

    LoadReport rep;
    Dataset ds = load_dataset(workdir / root, rep);
    if (!label.empty()) ds.provenance = label;
    const std::size_t users_before = ds.n_users();
    const std::size_t points_before = ds.n_points();
    if (rc.bbox_filter) ds = filter_bbox(ds, rc.bbox);

    {
        std::ofstream f(out_dir / "gps.tsv");
        if (!f) throw IoError("cannot write " + (out_dir / "gps.tsv").string());
        write_gps_tsv(f, ds);
    }
    json report = {{"root", root},
                   {"provenance", ds.provenance},
                   {"files_read", rep.files_read},
                   {"files_skipped", rep.files_skipped},
                   {"lines_parsed", rep.lines_parsed},
                   {"lines_dropped", rep.lines_dropped},
                   {"record_errors", rep.record_errors},
                   {"issues", rep.issues},
                   {"warnings", rep.warnings},
                   {"users_loaded", users_before},
                   {"points_loaded", points_before},
                   {"bbox_filtered", rc.bbox_filter},
                   {"users_kept", ds.n_users()},
                   {"points_kept", ds.n_points()}};
    {
        std::ofstream f(out_dir / "load_report.json");
        f << report.dump(2) << '\n';
    }
    std::printf("ingest: %zu users, %zu points kept (%zu parsed, %zu dropped, %zu bad records)\n",
                ds.n_users(), ds.n_points(), rep.lines_parsed, rep.lines_dropped,
                rep.record_errors);
    return 0;
}

int cmd_metrics(const RunConfig& rc, const fs::path& workdir, const std::string& in,
                const std::string& out, const std::string& target_path, bool geojson,
                const std::string& label) {
    const fs::path out_dir = workdir / out;
    echo_resolved_config(rc, out_dir);

    fs::path gps_path = workdir / in;
    if (fs::is_directory(gps_path)) gps_path /= "gps.tsv";
    std::ifstream gin(gps_path);
    if (!gin) throw IoError("cannot read " + gps_path.string());
    Dataset ds = read_gps_tsv(gin, gps_path.string());
    if (rc.bbox_filter) ds = filter_bbox(ds, rc.bbox);

    const auto t0 = std::chrono::steady_clock::now();
    const StaypointsByUser by_user = extract_staypoints(ds, rc.measure.staypoints);
    std::size_t active_users = 0;
    const std::vector<Trip> trips = pipeline_trips(by_user, rc.measure, &active_users);
    const MetricSet m = compute_metrics(trips, rc.measure.ada_mode);  // throws if no trips
    const auto t1 = std::chrono::steady_clock::now();

    WriteOptions opt;
    opt.label = label.empty() ? fs::path(in).filename().string() : label;
    opt.gps = false;
    DatasetReport rep = write_dataset(by_user, trips, nullptr, out_dir, opt);
    rep.n_users = active_users;
    rep.metrics = m;
    rep.wall_clock_s = std::chrono::duration<double>(t1 - t0).count();

    std::optional<double> score;
    if (!target_path.empty()) {
        const MetricSet target = metrics_from_json(slurp_json(workdir / target_path));
        score = similarity(target, m);
        rep.score = *score;
    }
    {
        std::ofstream f(out_dir / "report.json");
        f << report_to_json(rep).dump(2) << '\n';
    }
    {
        std::ofstream f(out_dir / "metrics.json");
        f << metrics_to_json(m).dump(2) << '\n';
    }
    if (geojson) {
        std::vector<StayPoint> flat;
        for (const auto& [id, sps] : by_user) flat.insert(flat.end(), sps.begin(), sps.end());
        write_geojson(flat, out_dir / "staypoints.geojson", rc.geojson_max_points,
                      rc.geojson_seed);
    }
    std::printf("metrics over %zu active users (of %zu with staypoints), %zu trips\n",
                active_users, by_user.size(), trips.size());
    print_metrics_table(opt.label, m, score);
    return 0;
}

int cmd_simulate(const RunConfig& rc, const fs::path& workdir, const std::string& params_path,
                 const std::string& run_meta_path, const std::string& params_top_path, int rank,
                 const std::string& out, bool geojson, const std::string& label,
                 const std::string& target_path) {
    const fs::path out_dir = workdir / out;
    echo_resolved_config(rc, out_dir);

    ParamSpec spec = load_spec(rc, workdir);
    ParamVector pv;
    SimConfig sim;
    sim.days = rc.days;
    sim.tick_s = rc.tick_s;
    sim.sample_interval_s = rc.sample_interval_s;
    sim.start_epoch = rc.start_epoch;
    BBox bbox = rc.bbox;
    int agents = rc.agents;
    std::uint64_t seed = rc.seed;

    if (!run_meta_path.empty()) {
        const RunMeta meta = run_meta_from_json(slurp_json(workdir / run_meta_path));
        spec = meta.spec;
        pv = meta.params;
        sim = meta.config;
        bbox = meta.bbox;
        agents = meta.n_agents;
        seed = meta.seed;
    } else if (!params_top_path.empty()) {
        const json top = slurp_json(workdir / params_top_path);
        if (!top.is_array() || top.empty()) throw ParseError("params.top file has no entries");
        if (rank < 1 || static_cast<std::size_t>(rank) > top.size()) {
            throw ConfigError("params.top rank out of range (file has " +
                              std::to_string(top.size()) + " entries)");
        }
        pv = param_vector_from_json(spec, top[static_cast<std::size_t>(rank - 1)].at("params"));
    } else if (!params_path.empty()) {
        pv = param_vector_from_json(spec, slurp_json(workdir / params_path));
    } else {
        throw ConfigError("simulate needs one of --params, --run-meta or --params-top");
    }

    validate(spec, pv);  // out-of-bounds parameters fail before any simulation
    sim.record_gps = rc.gps;  // large runs can go staypoints-only
    const auto t0 = std::chrono::steady_clock::now();
    const World world = build_world(bbox, agents, spec, pv, seed);
    SimOutput sim_out = simulate(world, spec, pv, sim, seed);
    const auto t1 = std::chrono::steady_clock::now();
    sim_out.meta.wall_clock_s = std::chrono::duration<double>(t1 - t0).count();

    WriteOptions opt;
    opt.label = label.empty() ? (std::to_string(agents) + "a-" + std::to_string(sim.days) + "d")
                              : label;
    opt.gps = rc.gps;
    DatasetReport rep = write_dataset(sim_out, out_dir, opt);

    try {
        if (rc.gps) {
            // Same measurement pipeline as real data: staypoints re-extracted
            // from the GPS stream.
            rep.metrics = sim_metrics(sim_out, rc.measure);
        } else {
            // Without a GPS stream, measure the emitted staypoint log.
            StaypointsByUser by_user;
            for (const auto& sps : sim_out.staypoints) {
                if (!sps.empty()) by_user.emplace(sps.front().user_id, sps);
            }
            const auto active = filter_active_users(by_user, rc.measure.min_staypoints);
            rep.metrics = compute_metrics(derive_trips(by_user, active), rc.measure.ada_mode);
        }
        if (!target_path.empty()) {
            const MetricSet target = metrics_from_json(slurp_json(workdir / target_path));
            rep.score = similarity(target, *rep.metrics);
        }
    } catch (const NoTripsError& e) {
        std::fprintf(stderr, "note: metrics unavailable for this run: %s\n", e.what());
    }
    {
        std::ofstream f(out_dir / "report.json");
        f << report_to_json(rep).dump(2) << '\n';
    }
    if (geojson) {
        std::vector<StayPoint> flat;
        for (const auto& sps : sim_out.staypoints) flat.insert(flat.end(), sps.begin(), sps.end());
        write_geojson(flat, out_dir / "staypoints.geojson", rc.geojson_max_points,
                      rc.geojson_seed);
    }
    std::printf("simulated %d agents x %d days: %zu staypoints, %zu gps fixes in %.1fs\n",
                agents, sim.days, sim_out.n_staypoints(), sim_out.n_gps(),
                sim_out.meta.wall_clock_s);
    if (rep.metrics) print_metrics_table(opt.label, *rep.metrics, rep.score);
    return 0;
}

int cmd_calibrate(const RunConfig& rc, const fs::path& workdir, const std::string& target_path,
                  const std::string& out) {
    const fs::path out_dir = workdir / out;
    echo_resolved_config(rc, out_dir);

    CalibConfig cfg;
    cfg.layer_size = rc.layer_size;
    cfg.top_k = rc.resolved_top_k();
    cfg.max_generations = rc.max_generations;
    cfg.target_score = rc.target_score;
    cfg.target = metrics_from_json(slurp_json(workdir / target_path));
    cfg.spec = load_spec(rc, workdir);
    cfg.bbox = rc.bbox;
    cfg.n_agents = rc.agents;
    cfg.sim.days = rc.days;
    cfg.sim.tick_s = rc.tick_s;
    cfg.sim.sample_interval_s = rc.sample_interval_s;
    cfg.sim.start_epoch = rc.start_epoch;
    cfg.measure = rc.measure;
    cfg.master_seed = rc.master_seed;
    cfg.mode_weights = rc.mode_weights;
    cfg.workers = rc.workers;
    cfg.checkpoint_path = (out_dir / "checkpoint.jsonl").string();

    if (fs::exists(cfg.checkpoint_path)) {
        std::printf("resuming from %s\n", cfg.checkpoint_path.c_str());
    }
    std::signal(SIGINT, handle_sigint);
    const auto t0 = std::chrono::steady_clock::now();
    const CalibResult result =
        calibrate(cfg, simulation_evaluator(cfg), &g_stop, [](const GenerationRecord& rec) {
            double gen_best = -std::numeric_limits<double>::infinity();
            int fails = 0;
            for (const auto& c : rec.candidates) {
                gen_best = std::max(gen_best, c.score);
                fails += c.failed() ? 1 : 0;
            }
            std::printf("generation %3d: best=%.4f (so far %.4f), failures %d/%zu\n",
                        rec.generation, gen_best, rec.best_score, fails, rec.candidates.size());
            std::fflush(stdout);
        });
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    {
        std::ofstream f(out_dir / "params.top.json");
        f << params_top_json(result, cfg.spec, rc.top_n).dump(2) << '\n';
    }
    json summary = {{"best_score", result.best_score},
                    {"best_generation", result.best_generation},
                    {"generations_run", result.history.size()},
                    {"interrupted", g_stop.load()},
                    {"wall_clock_s", wall},
                    {"best_params", param_vector_to_json(cfg.spec, result.best_params)}};
    {
        std::ofstream f(out_dir / "calib_report.json");
        f << summary.dump(2) << '\n';
    }
    std::printf("%s after %zu generations: best score %.4f (generation %d)\n",
                g_stop.load() ? "interrupted" : "finished", result.history.size(),
                result.best_score, result.best_generation);
    return 0;
}

int cmd_report(const RunConfig& rc, const fs::path& workdir, const std::string& target_path,
               const std::string& target_label, const std::string& out,
               const std::vector<std::string>& dataset_dirs, bool geojson) {
    const fs::path out_dir = workdir / out;
    echo_resolved_config(rc, out_dir);
    const MetricSet target = metrics_from_json(slurp_json(workdir / target_path));

    std::vector<DatasetReport> rows;
    for (const std::string& d : dataset_dirs) {
        const fs::path dir = workdir / d;
        std::ifstream tin(dir / "trips.tsv");
        if (!tin) throw IoError("dataset dir has no trips.tsv: " + dir.string());
        const auto trips = read_trip_tsv(tin);

        DatasetReport rep;
        rep.label = fs::path(d).filename().string();
        if (fs::exists(dir / "report.json")) {
            rep.label = slurp_json(dir / "report.json").value("label", rep.label);
        }
        rep.n_trips = trips.size();
        rep.metrics = compute_metrics(trips, rc.measure.ada_mode);
        rep.score = similarity(target, *rep.metrics);
        if (fs::exists(dir / "staypoints.tsv")) {
            std::ifstream sin(dir / "staypoints.tsv");
            const auto sps = read_staypoint_tsv(sin);
            rep.n_staypoints = sps.size();
            if (geojson) {
                write_geojson(sps, out_dir / (rep.label + ".geojson"), rc.geojson_max_points,
                              rc.geojson_seed);
            }
        }
        rows.push_back(std::move(rep));
    }

    const fs::path table =
        write_comparison_table(rows, target, target_label, out_dir / "comparison.tsv");
    print_metrics_table(target_label, target, 1.0);
    for (const DatasetReport& r : rows) print_metrics_table(r.label, *r.metrics, r.score);
    std::printf("comparison table written to %s\n", table.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GPS trajectory statistics, needs-driven mobility simulation, and "
                 "genetic-algorithm calibration"};
    app.require_subcommand(1);

    std::string config_path;
    std::string workdir = ".";
    app.add_option("--config", config_path, "JSON config file (flags override it)");
    app.add_option("--workdir", workdir, "base directory for all relative paths");

    RunConfig rc;
    std::string bbox_flag;
    double dist_flag = 0, time_flag = 0;
    long long min_sp_flag = -1;
    std::string out, label, target_path;
    bool no_bbox = false, geojson = false, no_gps = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out, "output directory")->required();
        cmd->add_option("--bbox", bbox_flag, "min_lat,min_lon,max_lat,max_lon");
        cmd->add_flag("--no-bbox", no_bbox, "skip the bounding-box filter");
        cmd->add_option("--dist", dist_flag, "staypoint distance threshold, meters");
        cmd->add_option("--time", time_flag, "staypoint time threshold, seconds");
        cmd->add_option("--min-staypoints", min_sp_flag, "active-user staypoint minimum");
        cmd->add_option("--label", label, "dataset label");
    };

    // ingest
    std::string root, in;
    CLI::App* ingest = app.add_subcommand("ingest", "load raw PLT trajectories into canonical TSV");
    ingest->add_option("--root", root, "dataset root directory")->required();
    add_common(ingest);

    // metrics
    CLI::App* metrics = app.add_subcommand("metrics", "staypoints, trips and geo-statistics");
    metrics->add_option("--in", in, "gps.tsv file or directory containing one")->required();
    metrics->add_option("--target", target_path, "target metrics JSON for a similarity score");
    metrics->add_flag("--geojson", geojson, "emit staypoints GeoJSON");
    add_common(metrics);

    // simulate
    std::string params_path, run_meta_path, params_top_path, spec_path, start_str;
    int rank = 1;
    long long agents_flag = -1, days_flag = -1, seed_flag = -1, tick_flag = -1, sample_flag = -1;
    CLI::App* simulate =
        app.add_subcommand("simulate", "run the mobility simulator and export a dataset");
    simulate->add_option("--params", params_path, "parameter vector JSON");
    simulate->add_option("--run-meta", run_meta_path, "run_meta.json to regenerate exactly");
    simulate->add_option("--params-top", params_top_path, "params.top.json from a calibration");
    simulate->add_option("--rank", rank, "1-based entry in --params-top");
    simulate->add_option("--spec", spec_path, "parameter spec JSON (default: built-in)");
    simulate->add_option("--agents", agents_flag, "agent count");
    simulate->add_option("--days", days_flag, "simulated days");
    simulate->add_option("--seed", seed_flag, "run seed");
    simulate->add_option("--tick", tick_flag, "tick seconds");
    simulate->add_option("--sample", sample_flag, "GPS sampling interval seconds");
    simulate->add_option("--start", start_str, "simulation start, ISO-8601");
    simulate->add_option("--target", target_path, "target metrics JSON for a similarity score");
    simulate->add_flag("--no-gps", no_gps, "skip the GPS table (staypoints only)");
    simulate->add_flag("--geojson", geojson, "emit staypoints GeoJSON");
    add_common(simulate);

    // calibrate
    long long layer_flag = -1, topk_flag = -1, gens_flag = -1, mseed_flag = -1, workers_flag = -1;
    double tscore_flag = std::numeric_limits<double>::quiet_NaN();
    CLI::App* calibrate_cmd =
        app.add_subcommand("calibrate", "genetic-algorithm parameter search");
    calibrate_cmd->add_option("--target", target_path, "target metrics JSON")->required();
    calibrate_cmd->add_option("--spec", spec_path, "parameter spec JSON (default: built-in)");
    calibrate_cmd->add_option("--layer-size", layer_flag, "candidates per generation");
    calibrate_cmd->add_option("--top-k", topk_flag, "parents per generation");
    calibrate_cmd->add_option("--max-generations", gens_flag, "0 = unbounded");
    calibrate_cmd->add_option("--target-score", tscore_flag, "stop once reached");
    calibrate_cmd->add_option("--master-seed", mseed_flag, "master seed");
    calibrate_cmd->add_option("--workers", workers_flag, "parallel evaluations (0 = cores)");
    calibrate_cmd->add_option("--agents", agents_flag, "agents per candidate run");
    calibrate_cmd->add_option("--days", days_flag, "days per candidate run");
    add_common(calibrate_cmd);

    // report
    std::vector<std::string> dataset_dirs;
    std::string target_label = "target";
    CLI::App* report =
        app.add_subcommand("report", "comparison table across dataset directories");
    report->add_option("--target", target_path, "target metrics JSON")->required();
    report->add_option("--target-label", target_label, "label for the target row");
    report->add_option("dirs", dataset_dirs, "dataset directories (trips.tsv inside)")
        ->required();
    report->add_flag("--geojson", geojson, "emit staypoints GeoJSON per dataset");
    add_common(report);

    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path wd = workdir;
        if (!config_path.empty()) apply_config_file(rc, slurp_json(wd / config_path));

        // Flag overrides.
        if (!bbox_flag.empty() && !parse_bbox_flag(bbox_flag, rc.bbox)) {
            std::fprintf(stderr, "error: --bbox expects min_lat,min_lon,max_lat,max_lon\n");
            return 1;
        }
        if (no_bbox) rc.bbox_filter = false;
        if (dist_flag > 0) rc.measure.staypoints.dist_threshold_m = dist_flag;
        if (time_flag > 0) rc.measure.staypoints.time_threshold_s = time_flag;
        if (min_sp_flag >= 0) rc.measure.min_staypoints = static_cast<std::size_t>(min_sp_flag);
        if (agents_flag > 0) rc.agents = static_cast<int>(agents_flag);
        if (days_flag > 0) rc.days = static_cast<int>(days_flag);
        if (seed_flag >= 0) rc.seed = static_cast<std::uint64_t>(seed_flag);
        if (tick_flag > 0) rc.tick_s = static_cast<int>(tick_flag);
        if (sample_flag > 0) rc.sample_interval_s = static_cast<int>(sample_flag);
        if (!start_str.empty()) rc.start_epoch = parse_iso8601(start_str);
        if (no_gps) rc.gps = false;
        if (layer_flag > 0) rc.layer_size = static_cast<int>(layer_flag);
        if (topk_flag > 0) rc.top_k = static_cast<int>(topk_flag);
        if (gens_flag >= 0) rc.max_generations = static_cast<int>(gens_flag);
        if (!std::isnan(tscore_flag)) rc.target_score = tscore_flag;
        if (mseed_flag >= 0) rc.master_seed = static_cast<std::uint64_t>(mseed_flag);
        if (workers_flag >= 0) rc.workers = static_cast<int>(workers_flag);
        if (!spec_path.empty()) rc.param_spec_path = spec_path;

        if (ingest->parsed()) return cmd_ingest(rc, wd, root, out, label);
        if (metrics->parsed()) return cmd_metrics(rc, wd, in, out, target_path, geojson, label);
        if (simulate->parsed()) {
            return cmd_simulate(rc, wd, params_path, run_meta_path, params_top_path, rank, out,
                                geojson, label, target_path);
        }
        if (calibrate_cmd->parsed()) return cmd_calibrate(rc, wd, target_path, out);
        if (report->parsed()) {
            return cmd_report(rc, wd, target_path, target_label, out, dataset_dirs, geojson);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
    return 1;
}
