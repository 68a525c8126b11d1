#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mobsim/simulate.hpp"

#include <json.hpp>

// Genetic-algorithm calibration: search the parameter space for the vector
// whose simulated trajectories score highest against a target metric set.
//
// Each generation evaluates `layer_size` candidates; the top_k by score
// become parents, and children are built per parameter by one of five
// modes: parent max, parent min, parent mean, the value of one random
// parent, or a fresh uniform draw (mutation).

namespace mobsim {

enum ChildMode : int { kModeMax = 0, kModeMin = 1, kModeMean = 2, kModePick = 3, kModeMutate = 4 };

using ModeWeights = std::array<double, 5>;

constexpr ModeWeights kUniformModeWeights = {1.0, 1.0, 1.0, 1.0, 1.0};

struct CalibConfig {
    int layer_size = 16;
    int top_k = 4;            // parents per generation
    int max_generations = 0;  // 0 = run until another stop condition
    double target_score = std::numeric_limits<double>::infinity();  // stop when reached
    MetricSet target;
    ParamSpec spec;
    // simulation settings per candidate
    BBox bbox;
    int n_agents = 100;
    SimConfig sim;
    MeasureConfig measure;
    std::uint64_t master_seed = 1;
    ModeWeights mode_weights = kUniformModeWeights;
    int workers = 0;  // 0 = hardware concurrency
    std::string checkpoint_path;

    void check() const {
        require(layer_size >= 2, "calibrate: layer size must be >= 2");
        require(top_k >= 2 && top_k <= layer_size, "calibrate: need 2 <= top_k <= layer size");
        require(spec.size() > 0, "calibrate: empty param spec");
        require(bbox.valid(), "calibrate: invalid bbox");
        double wsum = 0.0;
        for (double w : mode_weights) {
            require(w >= 0.0 && std::isfinite(w), "calibrate: mode weights must be finite and >= 0");
            wsum += w;
        }
        require(wsum > 0.0, "calibrate: mode weights must not all be zero");
    }
};

struct CandidateResult {
    ParamVector params;
    std::optional<MetricSet> metrics;  // empty on failure
    double score = -std::numeric_limits<double>::infinity();
    std::string fail_reason;

    bool failed() const { return !metrics.has_value(); }
};

struct GenerationRecord {
    int generation = 0;
    std::vector<CandidateResult> candidates;
    std::vector<int> parent_indices;  // top_k by score, ties to lower index
    ParamVector best_params;          // best so far, across all generations
    double best_score = -std::numeric_limits<double>::infinity();
};

struct CalibResult {
    ParamVector best_params;
    double best_score = -std::numeric_limits<double>::infinity();
    int best_generation = -1;
    std::vector<GenerationRecord> history;
};

// Candidate run seeds derive from (master_seed, generation, index): replay
// is exact no matter how many workers evaluated the layer.
inline std::uint64_t candidate_seed(std::uint64_t master_seed, int generation, int index) {
    return mix_seed(master_seed, static_cast<std::uint64_t>(generation) + 0xA1,
                    static_cast<std::uint64_t>(index) + 0xB1);
}

// Child construction. Per parameter, one of the five modes is chosen by
// weight; integer entries round half-up and clamp to the entry's range.
inline ParamVector make_child(const std::vector<ParamVector>& parents, const ParamSpec& spec,
                              const ModeWeights& weights, Rng& rng) {
    require(parents.size() >= 2, "make_child: need at least two parents");
    for (const ParamVector& p : parents) {
        require(p.values.size() == spec.size(), "make_child: parent size mismatch");
    }
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    require(wsum > 0.0, "make_child: mode weights must not all be zero");

    ParamVector child;
    child.values.reserve(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const ParamEntry& e = spec.at(i);

        int mode = kModeMutate;
        double r = rng.u01() * wsum;
        for (int m = 0; m < 5; ++m) {
            if (r < weights[static_cast<std::size_t>(m)]) {
                mode = m;
                break;
            }
            r -= weights[static_cast<std::size_t>(m)];
        }

        double v = 0.0;
        switch (mode) {
            case kModeMax: {
                v = parents[0].values[i];
                for (const ParamVector& p : parents) v = std::max(v, p.values[i]);
                break;
            }
            case kModeMin: {
                v = parents[0].values[i];
                for (const ParamVector& p : parents) v = std::min(v, p.values[i]);
                break;
            }
            case kModeMean: {
                double s = 0.0;
                for (const ParamVector& p : parents) s += p.values[i];
                v = s / static_cast<double>(parents.size());
                if (e.kind == ParamKind::integer) v = std::floor(v + 0.5);
                break;
            }
            case kModePick: {
                v = parents[rng.index(parents.size())].values[i];
                break;
            }
            case kModeMutate: {
                if (e.kind == ParamKind::integer) {
                    v = static_cast<double>(
                        rng.uniform_int(static_cast<std::int64_t>(std::ceil(e.min)),
                                        static_cast<std::int64_t>(std::floor(e.max))));
                } else {
                    v = rng.uniform(e.min, e.max);
                }
                break;
            }
        }
        child.values.push_back(std::clamp(v, e.min, e.max));
    }
    return child;
}

using Evaluator = std::function<CandidateResult(const ParamVector&, std::uint64_t seed)>;

// Full pipeline for one candidate: world, run, measurement, score. Domain
// failures (agents that never trip, degenerate site densities) come back as
// failed results, not exceptions.
inline Evaluator simulation_evaluator(const CalibConfig& cfg) {
    return [&cfg](const ParamVector& pv, std::uint64_t seed) {
        CandidateResult res;
        res.params = pv;
        try {
            const World w = build_world(cfg.bbox, cfg.n_agents, cfg.spec, pv, seed);
            const SimOutput out = simulate(w, cfg.spec, pv, cfg.sim, seed);
            const MetricSet m = sim_metrics(out, cfg.measure);
            res.metrics = m;
            res.score = similarity(cfg.target, m);
        } catch (const Error& e) {
            res.metrics.reset();
            res.score = -std::numeric_limits<double>::infinity();
            res.fail_reason = e.what();
        }
        return res;
    };
}

// Evaluates one layer on a bounded worker pool. Results land in index order,
// so the record is identical regardless of scheduling.
inline GenerationRecord run_generation(const std::vector<ParamVector>& candidates,
                                       const CalibConfig& cfg, int generation,
                                       const Evaluator& evaluate) {
    cfg.check();
    require(candidates.size() == static_cast<std::size_t>(cfg.layer_size),
            "run_generation: candidate count must equal the layer size");

    GenerationRecord rec;
    rec.generation = generation;
    rec.candidates.resize(candidates.size());

    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int n_workers = std::max(1, std::min(cfg.workers > 0 ? cfg.workers : hw,
                                               static_cast<int>(candidates.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= candidates.size()) break;
            rec.candidates[i] =
                evaluate(candidates[i], candidate_seed(cfg.master_seed, generation,
                                                       static_cast<int>(i)));
        }
    };
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int wi = 0; wi < n_workers; ++wi) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Parents: top_k among the non-failed, score descending, index ascending.
    std::vector<int> order;
    for (std::size_t i = 0; i < rec.candidates.size(); ++i) {
        if (!rec.candidates[i].failed()) order.push_back(static_cast<int>(i));
    }
    if (order.empty()) {
        std::string dump = "calibration generation " + std::to_string(generation) +
                           " collapsed: all candidates failed;";
        for (std::size_t i = 0; i < std::min<std::size_t>(rec.candidates.size(), 4); ++i) {
            dump += " [" + std::to_string(i) + "] " + rec.candidates[i].fail_reason + ";";
        }
        throw Error(dump);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return rec.candidates[static_cast<std::size_t>(a)].score >
               rec.candidates[static_cast<std::size_t>(b)].score;
    });
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg.top_k)));
    rec.parent_indices = order;
    return rec;
}

// --- checkpoint --------------------------------------------------------------

inline nlohmann::json generation_to_json(const GenerationRecord& rec, const ParamSpec& spec) {
    nlohmann::json cands = nlohmann::json::array();
    for (const CandidateResult& c : rec.candidates) {
        nlohmann::json jc = {{"params", param_vector_to_json(spec, c.params)}};
        if (c.failed()) {
            jc["failed"] = true;
            jc["reason"] = c.fail_reason;
        } else {
            jc["metrics"] = metrics_to_json(*c.metrics);
            jc["score"] = c.score;
        }
        cands.push_back(std::move(jc));
    }
    return {{"type", "generation"},
            {"generation", rec.generation},
            {"candidates", std::move(cands)},
            {"parents", rec.parent_indices},
            {"best", {{"score", rec.best_score},
                      {"params", param_vector_to_json(spec, rec.best_params)}}}};
}

inline GenerationRecord generation_from_json(const nlohmann::json& j, const ParamSpec& spec) {
    GenerationRecord rec;
    try {
        rec.generation = j.at("generation").get<int>();
        for (const auto& jc : j.at("candidates")) {
            CandidateResult c;
            c.params = param_vector_from_json(spec, jc.at("params"));
            if (jc.value("failed", false)) {
                c.fail_reason = jc.value("reason", "");
                c.score = -std::numeric_limits<double>::infinity();
            } else {
                c.metrics = metrics_from_json(jc.at("metrics"));
                c.score = jc.at("score").get<double>();
            }
            rec.candidates.push_back(std::move(c));
        }
        rec.parent_indices = j.at("parents").get<std::vector<int>>();
        rec.best_score = j.at("best").at("score").get<double>();
        rec.best_params = param_vector_from_json(spec, j.at("best").at("params"));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad checkpoint record: ") + e.what());
    }
    return rec;
}

// Whole-file rewrite through a temp file plus rename: a reader never sees a
// torn checkpoint.
inline void write_checkpoint(const std::filesystem::path& path, const CalibConfig& cfg,
                             const std::vector<GenerationRecord>& history) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write checkpoint: " + tmp.string());
        nlohmann::json header = {{"type", "calib_header"},
                                 {"spec_hash", cfg.spec.hash()},
                                 {"master_seed", cfg.master_seed},
                                 {"layer_size", cfg.layer_size},
                                 {"top_k", cfg.top_k},
                                 {"target", metrics_to_json(cfg.target)}};
        out << header.dump() << '\n';
        for (const GenerationRecord& rec : history) {
            out << generation_to_json(rec, cfg.spec).dump() << '\n';
        }
    }
    std::filesystem::rename(tmp, path);
}

// Loads whatever complete generations a previous run left behind; a torn or
// alien checkpoint is rejected rather than silently restarted.
inline std::vector<GenerationRecord> read_checkpoint(const std::filesystem::path& path,
                                                     const CalibConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read checkpoint: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty checkpoint: " + path.string());
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("type", "") != "calib_header") {
        throw ParseError("checkpoint header missing: " + path.string());
    }
    if (header.value("spec_hash", std::uint64_t{0}) != cfg.spec.hash() ||
        header.value("master_seed", std::uint64_t{0}) != cfg.master_seed ||
        header.value("layer_size", -1) != cfg.layer_size ||
        header.value("top_k", -1) != cfg.top_k) {
        throw ConfigError("checkpoint does not match this calibration config: " + path.string());
    }
    std::vector<GenerationRecord> history;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) break;  // tolerate a torn trailing line
        history.push_back(generation_from_json(j, cfg.spec));
    }
    return history;
}

// --- driver ------------------------------------------------------------------

using GenerationCallback = std::function<void(const GenerationRecord&)>;

// Generation 0 samples the spec uniformly; each later generation breeds
// layer_size children from the previous parents. Stops on max_generations,
// on reaching target_score, or on an external stop flag. The evolution RNG
// is re-derived per generation, so a resumed run continues bit-exactly.
inline CalibResult calibrate(const CalibConfig& cfg, const Evaluator& evaluate,
                             const std::atomic<bool>* stop = nullptr,
                             const GenerationCallback& on_generation = nullptr) {
    cfg.check();

    std::vector<GenerationRecord> history;
    if (!cfg.checkpoint_path.empty() && std::filesystem::exists(cfg.checkpoint_path)) {
        history = read_checkpoint(cfg.checkpoint_path, cfg);
    }

    CalibResult result;
    auto absorb = [&result](const GenerationRecord& rec) {
        for (const CandidateResult& c : rec.candidates) {
            if (!c.failed() && c.score > result.best_score) {
                result.best_score = c.score;
                result.best_params = c.params;
                result.best_generation = rec.generation;
            }
        }
    };
    for (const GenerationRecord& rec : history) absorb(rec);

    int gen = static_cast<int>(history.size());
    while (true) {
        if (cfg.max_generations > 0 && gen >= cfg.max_generations) break;
        if (result.best_score >= cfg.target_score) break;
        if (stop && stop->load()) break;

        // Candidates for this generation.
        Rng evo(mix_seed(cfg.master_seed, 0xEE0ULL, static_cast<std::uint64_t>(gen)));
        std::vector<ParamVector> candidates;
        candidates.reserve(static_cast<std::size_t>(cfg.layer_size));
        if (gen == 0) {
            for (int i = 0; i < cfg.layer_size; ++i) candidates.push_back(sample_params(cfg.spec, evo));
        } else {
            const GenerationRecord& prev = history.back();
            std::vector<ParamVector> parents;
            for (int idx : prev.parent_indices) {
                parents.push_back(prev.candidates[static_cast<std::size_t>(idx)].params);
            }
            if (parents.size() == 1) parents.push_back(parents.front());  // lone survivor
            for (int i = 0; i < cfg.layer_size; ++i) {
                candidates.push_back(make_child(parents, cfg.spec, cfg.mode_weights, evo));
            }
        }

        GenerationRecord rec = run_generation(candidates, cfg, gen, evaluate);
        absorb(rec);
        rec.best_score = result.best_score;
        rec.best_params = result.best_params;
        history.push_back(std::move(rec));

        if (!cfg.checkpoint_path.empty()) {
            write_checkpoint(cfg.checkpoint_path, cfg, history);
        }
        if (on_generation) on_generation(history.back());
        ++gen;
    }

    result.history = std::move(history);
    return result;
}

// Best configurations across the whole history, score descending; mirrors a
// `params.top` export with one entry per retained configuration.
inline nlohmann::json params_top_json(const CalibResult& result, const ParamSpec& spec,
                                      std::size_t top_n = 10) {
    struct Entry {
        double score;
        int generation;
        int index;
        const ParamVector* params;
        const MetricSet* metrics;
    };
    std::vector<Entry> all;
    for (const GenerationRecord& rec : result.history) {
        for (std::size_t i = 0; i < rec.candidates.size(); ++i) {
            const CandidateResult& c = rec.candidates[i];
            if (c.failed()) continue;
            all.push_back({c.score, rec.generation, static_cast<int>(i), &c.params,
                           &*c.metrics});
        }
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const Entry& a, const Entry& b) { return a.score > b.score; });
    if (all.size() > top_n) all.resize(top_n);

    nlohmann::json arr = nlohmann::json::array();
    int rank = 1;
    for (const Entry& e : all) {
        arr.push_back({{"rank", rank++},
                       {"score", e.score},
                       {"generation", e.generation},
                       {"index", e.index},
                       {"metrics", metrics_to_json(*e.metrics)},
                       {"params", param_vector_to_json(spec, *e.params)}});
    }
    return arr;
}

}  // namespace mobsim
