#include <catch2/catch.hpp>

#include <cmath>
#include <filesystem>

#include "mobsim/calibrate.hpp"

using namespace mobsim;
namespace fs = std::filesystem;

namespace {

ParamSpec small_spec() {
    return ParamSpec({{"a", ParamKind::continuous, 0.0, 10.0, ""},
                      {"b", ParamKind::continuous, -5.0, 5.0, ""},
                      {"k", ParamKind::integer, 1, 9, ""}});
}

// Deterministic stub: score peaks at a known optimum, no simulation.
Evaluator quadratic_evaluator(const ParamSpec& spec) {
    return [spec](const ParamVector& pv, std::uint64_t) {
        CandidateResult res;
        res.params = pv;
        const double a = pv.values[0], b = pv.values[1], k = pv.values[2];
        const double score =
            1.0 - 0.02 * ((a - 7.0) * (a - 7.0) + b * b + (k - 4.0) * (k - 4.0));
        MetricSet m{1.0, 1.0, 1.0, 1.0};
        res.metrics = m;
        res.score = score;
        return res;
    };
}

CalibConfig stub_config(const ParamSpec& spec) {
    CalibConfig cfg;
    cfg.spec = spec;
    cfg.layer_size = 8;
    cfg.top_k = 3;
    cfg.max_generations = 5;
    cfg.target = MetricSet{1.0, 1.0, 1.0, 1.0};
    cfg.bbox = BBox{39.748, 116.165, 40.038, 116.628};
    cfg.master_seed = 99;
    cfg.workers = 2;
    return cfg;
}

}  // namespace

TEST_CASE("make_child with identical parents and zero mutation is a fixed point",
          "[calibrate]") {
    const ParamSpec spec = small_spec();
    ParamVector p{{3.0, -1.0, 4.0}};
    std::vector<ParamVector> parents{p, p, p};
    ModeWeights w{1.0, 1.0, 1.0, 1.0, 0.0};  // no mutation
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const ParamVector child = make_child(parents, spec, w, rng);
        REQUIRE(child.values == p.values);
    }
}

TEST_CASE("make_child forced modes on hand values", "[calibrate]") {
    const ParamSpec spec = small_spec();
    std::vector<ParamVector> parents{ParamVector{{0.0, -5.0, 1.0}},
                                     ParamVector{{10.0, 5.0, 9.0}}};
    Rng rng(2);

    SECTION("mean") {
        ModeWeights w{0, 0, 1, 0, 0};
        const ParamVector child = make_child(parents, spec, w, rng);
        CHECK(child.values[0] == 5.0);
        CHECK(child.values[1] == 0.0);
        CHECK(child.values[2] == 5.0);  // integer mean, exact here
    }
    SECTION("min") {
        ModeWeights w{0, 1, 0, 0, 0};
        const ParamVector child = make_child(parents, spec, w, rng);
        CHECK(child.values == std::vector<double>{0.0, -5.0, 1.0});
    }
    SECTION("max") {
        ModeWeights w{1, 0, 0, 0, 0};
        const ParamVector child = make_child(parents, spec, w, rng);
        CHECK(child.values == std::vector<double>{10.0, 5.0, 9.0});
    }
    SECTION("pick copies one parent's value per parameter") {
        ModeWeights w{0, 0, 0, 1, 0};
        for (int i = 0; i < 20; ++i) {
            const ParamVector child = make_child(parents, spec, w, rng);
            for (std::size_t j = 0; j < spec.size(); ++j) {
                CHECK((child.values[j] == parents[0].values[j] ||
                       child.values[j] == parents[1].values[j]));
            }
        }
    }
    SECTION("integer mean rounds half-up") {
        std::vector<ParamVector> ps{ParamVector{{0.0, 0.0, 2.0}}, ParamVector{{0.0, 0.0, 3.0}}};
        ModeWeights w{0, 0, 1, 0, 0};
        const ParamVector child = make_child(ps, spec, w, rng);
        CHECK(child.values[2] == 3.0);  // mean 2.5 -> 3
    }
}

TEST_CASE("make_child requires two parents", "[calibrate]") {
    const ParamSpec spec = small_spec();
    std::vector<ParamVector> one{ParamVector{{1.0, 0.0, 2.0}}};
    Rng rng(3);
    REQUIRE_THROWS_AS(make_child(one, spec, kUniformModeWeights, rng), ConfigError);
}

TEST_CASE("pure mutation reproduces the sampling distribution", "[calibrate]") {
    const ParamSpec spec = small_spec();
    std::vector<ParamVector> parents{ParamVector{{9.9, 4.9, 9.0}},
                                     ParamVector{{9.9, 4.9, 9.0}}};
    ModeWeights w{0, 0, 0, 0, 1};
    Rng rng_child(7);
    Rng rng_sample(8);
    const int n = 10000;
    double child_mean = 0.0, sample_mean = 0.0;
    for (int i = 0; i < n; ++i) {
        child_mean += make_child(parents, spec, w, rng_child).values[0];
        sample_mean += sample_params(spec, rng_sample).values[0];
    }
    child_mean /= n;
    sample_mean /= n;
    // Both should approximate the range mean of entry "a" = 5.0.
    REQUIRE(child_mean == Approx(5.0).margin(0.1));
    REQUIRE(sample_mean == Approx(5.0).margin(0.1));
    REQUIRE(child_mean == Approx(sample_mean).margin(0.15));
}

TEST_CASE("children always satisfy the spec bounds", "[calibrate]") {
    const ParamSpec spec = small_spec();
    Rng rng(12);
    std::vector<ParamVector> parents;
    for (int i = 0; i < 4; ++i) parents.push_back(sample_params(spec, rng));
    for (int i = 0; i < 500; ++i) {
        const ParamVector child = make_child(parents, spec, kUniformModeWeights, rng);
        REQUIRE_NOTHROW(validate(spec, child));
    }
}

TEST_CASE("run_generation selection and tie-break", "[calibrate]") {
    const ParamSpec spec = small_spec();
    CalibConfig cfg = stub_config(spec);
    cfg.layer_size = 4;
    cfg.top_k = 2;

    // Scores (0.2, 0.9, 0.9, 0.1): parents must be {1, 2}.
    Evaluator eval = [](const ParamVector& pv, std::uint64_t) {
        static const double scores[4] = {0.2, 0.9, 0.9, 0.1};
        CandidateResult res;
        res.params = pv;
        res.metrics = MetricSet{1, 1, 1, 1};
        res.score = scores[static_cast<int>(pv.values[2]) - 1];
        return res;
    };
    std::vector<ParamVector> cands;
    for (int i = 1; i <= 4; ++i) cands.push_back(ParamVector{{1.0, 0.0, double(i)}});
    const GenerationRecord rec = run_generation(cands, cfg, 0, eval);
    REQUIRE(rec.parent_indices == std::vector<int>{1, 2});
}

TEST_CASE("failed candidates are never selected as parents", "[calibrate]") {
    const ParamSpec spec = small_spec();
    CalibConfig cfg = stub_config(spec);
    cfg.layer_size = 4;
    cfg.top_k = 3;
    Evaluator eval = [](const ParamVector& pv, std::uint64_t) {
        CandidateResult res;
        res.params = pv;
        if (pv.values[2] <= 2.0) {  // first two candidates fail
            res.fail_reason = "no trips";
            return res;
        }
        res.metrics = MetricSet{1, 1, 1, 1};
        res.score = 0.5;
        return res;
    };
    std::vector<ParamVector> cands;
    for (int i = 1; i <= 4; ++i) cands.push_back(ParamVector{{1.0, 0.0, double(i)}});
    const GenerationRecord rec = run_generation(cands, cfg, 0, eval);
    REQUIRE(rec.parent_indices == std::vector<int>{2, 3});

    SECTION("all-fail generation collapses") {
        Evaluator all_fail = [](const ParamVector& pv, std::uint64_t) {
            CandidateResult res;
            res.params = pv;
            res.fail_reason = "boom";
            return res;
        };
        REQUIRE_THROWS_AS(run_generation(cands, cfg, 0, all_fail), Error);
    }
}

TEST_CASE("calibrate: best-so-far is monotone and replay is exact", "[calibrate]") {
    const ParamSpec spec = small_spec();
    CalibConfig cfg = stub_config(spec);
    const CalibResult r1 = calibrate(cfg, quadratic_evaluator(spec));
    REQUIRE(r1.history.size() == 5);

    double prev = -1e300;
    for (const GenerationRecord& rec : r1.history) {
        REQUIRE(rec.best_score >= prev);
        prev = rec.best_score;
        REQUIRE(rec.candidates.size() == 8);
        for (const CandidateResult& c : rec.candidates) {
            REQUIRE_NOTHROW(validate(spec, c.params));
        }
    }
    REQUIRE(r1.best_score == r1.history.back().best_score);

    const CalibResult r2 = calibrate(cfg, quadratic_evaluator(spec));
    REQUIRE(r2.best_score == r1.best_score);
    REQUIRE(r2.best_params.values == r1.best_params.values);
    for (std::size_t g = 0; g < r1.history.size(); ++g) {
        for (std::size_t i = 0; i < r1.history[g].candidates.size(); ++i) {
            REQUIRE(r2.history[g].candidates[i].params.values ==
                    r1.history[g].candidates[i].params.values);
            REQUIRE(r2.history[g].candidates[i].score == r1.history[g].candidates[i].score);
        }
    }

    SECTION("max_generations=1 returns the best of generation 0") {
        CalibConfig one = cfg;
        one.max_generations = 1;
        const CalibResult r = calibrate(one, quadratic_evaluator(spec));
        REQUIRE(r.history.size() == 1);
        double best_gen0 = -1e300;
        for (const CandidateResult& c : r.history[0].candidates) {
            best_gen0 = std::max(best_gen0, c.score);
        }
        REQUIRE(r.best_score == best_gen0);
        REQUIRE(r.best_generation == 0);
    }
}

TEST_CASE("zero mutation with identical initial candidates is a population fixed point",
          "[calibrate]") {
    const ParamSpec spec = small_spec();
    CalibConfig cfg = stub_config(spec);
    cfg.mode_weights = {1, 1, 1, 1, 0};
    cfg.max_generations = 3;

    // Evaluator ignores the seed; feed a fixed starting population by making
    // generation 0 children of forced parents via checkpoint-free calibrate:
    // easiest is to assert through make_child directly plus a 2-gen run whose
    // gen-0 draws collapse: use a spec with zero-width effective ranges.
    const ParamSpec tight({{"a", ParamKind::continuous, 5.0, 5.0 + 1e-12, ""},
                           {"k", ParamKind::integer, 3, 3.5, ""}});
    CalibConfig tcfg = cfg;
    tcfg.spec = tight;
    Evaluator eval = [](const ParamVector& pv, std::uint64_t) {
        CandidateResult res;
        res.params = pv;
        res.metrics = MetricSet{1, 1, 1, 1};
        res.score = 0.5;
        return res;
    };
    const CalibResult r = calibrate(tcfg, eval);
    const auto& first = r.history.front().candidates;
    for (const GenerationRecord& rec : r.history) {
        for (const CandidateResult& c : rec.candidates) {
            REQUIRE(c.params.values[1] == first[0].params.values[1]);
            REQUIRE(c.params.values[0] == Approx(5.0).margin(1e-11));
        }
    }
}

TEST_CASE("checkpoint round trip and resume", "[calibrate]") {
    const ParamSpec spec = small_spec();
    const fs::path ckpt = fs::temp_directory_path() / "mobsim_test_ckpt.jsonl";
    fs::remove(ckpt);

    CalibConfig cfg = stub_config(spec);
    cfg.checkpoint_path = ckpt.string();
    cfg.max_generations = 3;
    const CalibResult partial = calibrate(cfg, quadratic_evaluator(spec));
    REQUIRE(fs::exists(ckpt));
    REQUIRE(partial.history.size() == 3);

    // Continue to 5 generations; the resumed run must equal a clean 5-gen run.
    CalibConfig cfg5 = cfg;
    cfg5.max_generations = 5;
    const CalibResult resumed = calibrate(cfg5, quadratic_evaluator(spec));
    REQUIRE(resumed.history.size() == 5);

    CalibConfig clean = cfg5;
    clean.checkpoint_path.clear();
    const CalibResult direct = calibrate(clean, quadratic_evaluator(spec));
    REQUIRE(resumed.best_score == direct.best_score);
    REQUIRE(resumed.best_params.values == direct.best_params.values);
    for (std::size_t g = 0; g < 5; ++g) {
        REQUIRE(resumed.history[g].candidates.size() == direct.history[g].candidates.size());
        for (std::size_t i = 0; i < direct.history[g].candidates.size(); ++i) {
            REQUIRE(resumed.history[g].candidates[i].params.values ==
                    direct.history[g].candidates[i].params.values);
        }
    }

    SECTION("mismatched config is rejected") {
        CalibConfig other = cfg5;
        other.master_seed += 1;
        REQUIRE_THROWS_AS(calibrate(other, quadratic_evaluator(spec)), ConfigError);
    }
    fs::remove(ckpt);
}

TEST_CASE("params.top export ranks the history", "[calibrate]") {
    const ParamSpec spec = small_spec();
    CalibConfig cfg = stub_config(spec);
    const CalibResult r = calibrate(cfg, quadratic_evaluator(spec));
    const nlohmann::json top = params_top_json(r, spec, 5);
    REQUIRE(top.is_array());
    REQUIRE(top.size() == 5);
    REQUIRE(top[0]["score"].get<double>() == r.best_score);
    for (std::size_t i = 0; i + 1 < top.size(); ++i) {
        REQUIRE(top[i]["score"].get<double>() >= top[i + 1]["score"].get<double>());
    }
    REQUIRE(top[0]["params"].contains("a"));
}

TEST_CASE("worker count does not change the outcome", "[calibrate]") {
    const ParamSpec spec = small_spec();
    CalibConfig cfg = stub_config(spec);
    cfg.workers = 1;
    const CalibResult serial = calibrate(cfg, quadratic_evaluator(spec));
    cfg.workers = 4;
    const CalibResult pooled = calibrate(cfg, quadratic_evaluator(spec));
    REQUIRE(serial.best_score == pooled.best_score);
    REQUIRE(serial.best_params.values == pooled.best_params.values);
    for (std::size_t g = 0; g < serial.history.size(); ++g) {
        REQUIRE(serial.history[g].parent_indices == pooled.history[g].parent_indices);
    }
}

TEST_CASE("real-evaluator calibration is worker-invariant too", "[calibrate]") {
    CalibConfig cfg;
    cfg.spec = default_param_spec();
    cfg.layer_size = 4;
    cfg.top_k = 2;
    cfg.max_generations = 2;
    cfg.target = MetricSet{5000.0, 20000.0, 30000.0, 4000.0};
    cfg.bbox = BBox{39.748, 116.165, 40.038, 116.628};
    cfg.n_agents = 6;
    cfg.sim.days = 2;
    cfg.measure.min_staypoints = 2;
    cfg.master_seed = 321;

    cfg.workers = 1;
    const CalibResult serial = calibrate(cfg, simulation_evaluator(cfg));
    cfg.workers = 3;
    const CalibResult pooled = calibrate(cfg, simulation_evaluator(cfg));

    REQUIRE(serial.best_score == pooled.best_score);
    REQUIRE(serial.best_params.values == pooled.best_params.values);
    REQUIRE(serial.history.size() == pooled.history.size());
    for (std::size_t g = 0; g < serial.history.size(); ++g) {
        const auto& a = serial.history[g];
        const auto& b = pooled.history[g];
        REQUIRE(a.parent_indices == b.parent_indices);
        for (std::size_t i = 0; i < a.candidates.size(); ++i) {
            REQUIRE(a.candidates[i].score == b.candidates[i].score);
            REQUIRE(a.candidates[i].params.values == b.candidates[i].params.values);
        }
    }
}

TEST_CASE("candidate seeds are unique and replayable", "[calibrate]") {
    std::set<std::uint64_t> seen;
    for (int g = 0; g < 20; ++g) {
        for (int i = 0; i < 64; ++i) {
            REQUIRE(seen.insert(candidate_seed(42, g, i)).second);
        }
    }
    REQUIRE(candidate_seed(42, 3, 5) == candidate_seed(42, 3, 5));
    REQUIRE(candidate_seed(42, 3, 5) != candidate_seed(43, 3, 5));
}
