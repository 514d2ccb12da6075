#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plepi/error.hpp"
#include "plepi/pipeline.hpp"
#include "plepi/report.hpp"
#include "support.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

using namespace plepi;

TEST_CASE("noiseless end-to-end run is exact") {
    auto cfg = testing::config_from(testing::noiseless_config_text());
    const auto cb = testing::bench_codebook();
    const auto res = run_pipeline(cfg, cb, false);
    const auto& rep = res.report;
    REQUIRE(rep.truth_spots > 50);
    CHECK(*rep.spot_accuracy == 1.0);
    CHECK(*rep.letter_accuracy == 1.0);
    CHECK(*rep.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*rep.spot.fdr_trick == 0.0);
    CHECK(*rep.spot.fdr_other == 0.0);
    CHECK(*rep.cell.fdr_trick == 0.0);
    CHECK(*rep.cell_recovery_rate == 1.0);
}

TEST_CASE("zero rounds reproduce the burn-in baseline") {
    auto cfg = testing::config_from(testing::noisy_config_text(0));
    const auto cb = testing::bench_codebook();
    const auto res = run_pipeline(cfg, cb, false);
    CHECK(res.trained.teacher == res.burn_in);
    // Independent decode of the burn-in model on the same test tracks.
    const std::vector<Quality> qs{Quality::Lq};
    const auto ws = prepare(cfg, cb, qs);
    const auto dec = decode(res.burn_in, ws.test, cb, cfg.decode, cfg.sim.background_level, 1);
    const auto rep = evaluate_decoded(ws, cfg, cb, dec);
    CHECK(emit_report(rep, ReportFormat::Json) == emit_report(res.report, ReportFormat::Json));
}

TEST_CASE("reports are identical across runs and thread counts") {
    auto cfg = testing::config_from(testing::noisy_config_text(2));
    const auto cb = testing::bench_codebook();
    cfg.threads = 1;
    const auto a = emit_report(run_pipeline(cfg, cb, false).report, ReportFormat::Json);
    const auto b = emit_report(run_pipeline(cfg, cb, false).report, ReportFormat::Json);
    cfg.threads = 4;
    const auto c = emit_report(run_pipeline(cfg, cb, false).report, ReportFormat::Json);
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("pipeline writes every stage artifact") {
    auto cfg = testing::config_from(testing::noiseless_config_text(4, 6, 1));
    cfg.out = testing::scratch_dir("pipeline");
    cfg.dump_pseudo_labels = true;
    cfg.write_tiles = true;
    run_pipeline(cfg, testing::bench_codebook(), true);
    for (const char* name : {"well.json", "reference_abundance.csv", "labels.csv", "model_burnin.json",
                             "teacher.json", "student.json", "history.jsonl", "pseudo_labels_round1.csv",
                             "spot_calls.csv", "cell_calls.csv", "report.json", "report.txt",
                             "abundance_scatter.svg", "accuracy_curve.svg"})
        CHECK_MESSAGE(std::filesystem::exists(cfg.out / name), name);
    CHECK(std::filesystem::exists(tile_stem(cfg.out / "tiles", 3, 8).replace_extension(".bin")));
    // Stored tiles read back identical to fresh renders.
    std::ifstream in(cfg.out / "well.json");
    const auto well = well_from_json(std::string(std::istreambuf_iterator<char>(in), {}));
    const auto stored = stored_tiles(cfg.out / "tiles", 9)(2);
    const auto fresh = rendered_tiles(well, cfg.sim)(2);
    for (std::size_t r = 0; r < 9; ++r) CHECK(stored[r].pixels == fresh[r].pixels);
    CHECK_THROWS_AS(stored_tiles(cfg.out / "nope", 9)(0), ConfigError);
}

TEST_CASE("overlapping splits stop the run before any work") {
    auto cfg = testing::config_from(testing::noiseless_config_text());
    cfg.unlabeled_fields = {0};
    CHECK_THROWS_AS(run_pipeline(cfg, testing::bench_codebook(), false), ConfigError);
}

TEST_CASE("truth matching pairs each spot with at most one track") {
    auto cfg = testing::config_from(testing::noiseless_config_text());
    const auto cb = testing::bench_codebook();
    const std::vector<Quality> qs{Quality::Lq};
    const auto ws = prepare(cfg, cb, qs);
    const auto pairs = match_truth(ws.well, cfg.test_fields, ws.test, 2.0);
    std::size_t truth = 0;
    for (auto f : cfg.test_fields) truth += ws.well.spots_in_field(f).size();
    CHECK(pairs.size() == truth);
    std::set<std::pair<std::size_t, std::size_t>> used;
    for (const auto& p : pairs) CHECK(used.insert({p.field_index, p.track}).second);
}

TEST_CASE("ablation grid has six cells on shared test tracks") {
    auto cfg = testing::config_from(testing::noisy_config_text(1));
    const auto res = run_ablation(cfg, testing::bench_codebook());
    CHECK(res.cells.size() == 6);
    for (auto q : {Quality::Lq, Quality::Hq})
        for (auto s : {Strategy::Baseline, Strategy::LocationOnly, Strategy::Full}) {
            const auto& cell = res.at(s, q);
            CHECK(cell.report.truth_spots == res.at(Strategy::Baseline, Quality::Lq).report.truth_spots);
            if (s == Strategy::LocationOnly)
                for (const auto& h : cell.report.history) CHECK(h.codebook_fused == 0);
            if (s == Strategy::Baseline) CHECK(cell.report.history.empty());
        }
    const auto md = ablation_markdown(res);
    CHECK(md.find("location") != std::string::npos);
    CHECK(nlohmann::json::parse(ablation_json(res)).size() > 0);
}
