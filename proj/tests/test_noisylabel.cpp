#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plepi/error.hpp"
#include "plepi/noisylabel.hpp"
#include "support.hpp"

#include <cmath>

using namespace plepi;

namespace {

struct Scored {
    std::size_t matched = 0;
    std::size_t correct = 0;
    std::size_t to_channel0 = 0;
    double accuracy() const { return matched ? double(correct) / double(matched) : 0.0; }
};

/// Letter accuracy of detections against the nearest true spot within 1.5 px.
Scored score(const GroundTruthWell& well, std::size_t field, std::size_t cycle,
             const std::vector<Detection>& dets) {
    Scored s;
    const auto spots = well.spots_in_field(field);
    for (const auto& d : dets) {
        const Spot* best = nullptr;
        double best_d = 1.5;
        for (const Spot* sp : spots) {
            const double dist = std::hypot(sp->position.x - d.position.x, sp->position.y - d.position.y);
            if (dist <= best_d) best_d = dist, best = sp;
        }
        if (!best) continue;
        ++s.matched;
        if (d.letter == best->barcode[cycle]) ++s.correct;
        else if (d.letter == Base::A) ++s.to_channel0;
    }
    return s;
}

std::vector<Detection> many_detections(std::size_t n) {
    std::vector<Detection> dets(n);
    Rng rng{8};
    for (auto& d : dets) d.letter = base_at(uniform_index(rng, 4));
    return dets;
}

}  // namespace

TEST_CASE("blank tile yields no detections") {
    Tile tile(0, 0, 32, 32);
    std::fill(tile.pixels.begin(), tile.pixels.end(), 0.1f);
    CHECK(detect_spots_lq(tile, 0.2).empty());
}

TEST_CASE("noiseless well: LQ recall and letter accuracy are perfect") {
    auto cfg = SimConfig::noiseless();
    cfg.cells_per_field = 25;
    const auto well = simulate_well(cfg, testing::bench_codebook());
    const auto tiles = render_field(well, cfg, 0);
    const auto n_spots = well.spots_in_field(0).size();
    for (std::size_t r = 0; r < cfg.n_cycles; ++r) {
        const auto dets = detect_spots_lq(tiles[r], 0.3);
        CHECK(dets.size() == n_spots);
        const auto s = score(well, 0, r, dets);
        CHECK(s.matched == n_spots);
        CHECK(s.correct == n_spots);
        for (const auto& d : dets) CHECK(d.letter == argmax_letter(d.intensity));
    }
}

TEST_CASE("single noiseless spot is found within a pixel") {
    auto cfg = SimConfig::noiseless();
    cfg.cells_per_field = 1;
    cfg.spots_per_cell_min = 1;
    cfg.spots_per_cell_mean = 1;
    const auto well = simulate_well(cfg, testing::bench_codebook());
    const auto& spot = well.spots.at(0);
    const auto tile = render_tile(well, cfg, 0, 4);
    const auto dets = detect_spots_lq(tile, 0.3);
    REQUIRE(dets.size() == 1);
    CHECK(std::hypot(dets[0].position.x - spot.position.x, dets[0].position.y - spot.position.y) <= 1.0);
    CHECK(dets[0].letter == spot.barcode[4]);
}

TEST_CASE("HQ on a noiseless field: all letters right, shared locations") {
    auto cfg = SimConfig::noiseless();
    cfg.cells_per_field = 25;
    const auto well = simulate_well(cfg, testing::bench_codebook());
    const auto tiles = render_field(well, cfg, 0);
    const auto per_cycle = detect_spots_hq(tiles, HqParams{});
    const auto n_spots = well.spots_in_field(0).size();
    REQUIRE(per_cycle.size() == 9);
    for (std::size_t r = 0; r < 9; ++r) {
        CHECK(per_cycle[r].size() == n_spots);
        const auto s = score(well, 0, r, per_cycle[r]);
        CHECK(s.correct == n_spots);
        for (std::size_t i = 0; i < per_cycle[r].size(); ++i) {
            CHECK(per_cycle[r][i].position == per_cycle[0][i].position);
            CHECK(per_cycle[r][i].letter == argmax_letter(per_cycle[r][i].intensity));
        }
    }
}

TEST_CASE("gain imbalance (4,1,1,1): LQ drifts to channel 0, HQ recovers") {
    auto cfg = SimConfig::noiseless();
    cfg.cells_per_field = 40;
    cfg.channel_gain = Vector4(4, 1, 1, 1);
    cfg.crosstalk = Matrix4::Identity();
    cfg.crosstalk.row(0).array() += 0.3;  // every dye bleeds a little into channel 0
    cfg.sensor_noise_sd = 0.01;
    cfg.background_level = 0.05;
    const auto well = simulate_well(cfg, testing::bench_codebook());
    const auto tiles = render_field(well, cfg, 0);
    const auto hq = detect_spots_hq(tiles, HqParams{});
    Scored lq_total, hq_total;
    for (std::size_t r = 0; r < 9; ++r) {
        const auto lq = score(well, 0, r, detect_spots_lq(tiles[r], 0.5));
        const auto h = score(well, 0, r, hq[r]);
        lq_total.matched += lq.matched, lq_total.correct += lq.correct, lq_total.to_channel0 += lq.to_channel0;
        hq_total.matched += h.matched, hq_total.correct += h.correct;
    }
    // Oracle: 4 * 0.3 = 1.2 > 1, so every non-A letter reads as A in raw channels.
    CHECK(lq_total.accuracy() < 0.4);
    CHECK(lq_total.to_channel0 == lq_total.matched - lq_total.correct);
    CHECK(hq_total.accuracy() >= 0.99);
}

TEST_CASE("noisy well: LQ letter error exceeds HQ letter error") {
    SimConfig cfg;
    cfg.cells_per_field = 40;
    cfg.seed = 4;
    const auto well = simulate_well(cfg, testing::bench_codebook());
    const auto tiles = render_field(well, cfg, 0);
    const auto hq = detect_spots_hq(tiles, HqParams{});
    Scored lq_total, hq_total;
    for (std::size_t r = 0; r < 9; ++r) {
        const auto lq = score(well, 0, r, detect_spots_lq(tiles[r], 0.5));
        const auto h = score(well, 0, r, hq[r]);
        lq_total.matched += lq.matched, lq_total.correct += lq.correct;
        hq_total.matched += h.matched, hq_total.correct += h.correct;
    }
    REQUIRE(lq_total.matched > 100);
    REQUIRE(hq_total.matched > 100);
    CHECK(1 - lq_total.accuracy() > 1 - hq_total.accuracy());
}

TEST_CASE("HQ requires every cycle") {
    auto cfg = SimConfig::noiseless();
    cfg.cells_per_field = 4;
    const auto well = simulate_well(cfg, testing::bench_codebook());
    auto tiles = render_field(well, cfg, 0);
    tiles.erase(tiles.begin() + 3);
    CHECK_THROWS_AS(detect_spots_hq(tiles, HqParams{}), IncompleteField);
}

TEST_CASE("corrupt_labels edge rates") {
    const auto dets = many_detections(500);
    const auto same = corrupt_labels(dets, 0.0, 1);
    CHECK(same == dets);
    const auto all = corrupt_labels(dets, 1.0, 1);
    for (std::size_t i = 0; i < dets.size(); ++i) CHECK(all[i].letter != dets[i].letter);
    CHECK_THROWS_AS(corrupt_labels(dets, 1.5, 1), ConfigError);
}

TEST_CASE("corrupt_labels flip fraction is binomial within 4 sigma") {
    const auto dets = many_detections(10000);
    const auto out = corrupt_labels(dets, 0.2, 123);
    std::size_t flips = 0;
    std::array<std::size_t, 4> shift{};
    for (std::size_t i = 0; i < dets.size(); ++i)
        if (out[i].letter != dets[i].letter) {
            ++flips;
            ++shift[(index_of(out[i].letter) + 4 - index_of(dets[i].letter)) % 4];
        }
    const double sd = std::sqrt(10000 * 0.2 * 0.8);
    CHECK(std::abs(double(flips) - 2000.0) <= 4 * sd);
    // Replacement letters are uniform over the three others.
    for (int k = 1; k < 4; ++k)
        CHECK(std::abs(double(shift[k]) - flips / 3.0) <= 4 * std::sqrt(flips * (1.0 / 3) * (2.0 / 3)));
    CHECK(corrupt_labels(dets, 0.2, 123) == out);
}

TEST_CASE("detections round-trip through CSV") {
    Detection d;
    d.field = 3;
    d.cycle = 7;
    d.position = {12.25, 40.5};
    d.intensity = Vector4(0.1, 1.0 / 3.0, 2.5, 0.0);
    d.objectness = 0.875;
    d.letter = Base::G;
    const std::vector<Detection> dets{d, d};
    const auto back = parse_detections(serialize_detections(dets));
    REQUIRE(back.size() == 2);
    CHECK(back[0] == d);
}
