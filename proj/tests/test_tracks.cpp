#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plepi/tracks.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>

using namespace plepi;

namespace {

Detection det(std::size_t cycle, double x, double y, double objectness = 1.0) {
    Detection d;
    d.cycle = cycle;
    d.position = {x, y};
    d.objectness = objectness;
    d.intensity = Vector4(objectness, 0, 0, 0);
    return d;
}

}  // namespace

TEST_CASE("identical positions in every cycle form one full track") {
    std::vector<Detection> dets;
    for (std::size_t r = 0; r < 9; ++r) dets.push_back(det(r, 15, 22));
    const auto tracks = build_tracks(dets, TrackParams{});
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].members() == 9);
    CHECK(tracks[0].position == Point{15, 22});
    for (const auto& s : tracks[0].slots) CHECK_FALSE(s.interpolated);
}

TEST_CASE("a far detection opens a second, mostly interpolated track") {
    std::vector<Detection> dets;
    for (std::size_t r = 0; r < 8; ++r) dets.push_back(det(r, 10, 10));
    dets.push_back(det(8, 40, 40));
    const auto tracks = build_tracks(dets, TrackParams{});
    REQUIRE(tracks.size() == 2);
    const auto& far = tracks[0].position == Point{40, 40} ? tracks[0] : tracks[1];
    const auto& near = tracks[0].position == Point{40, 40} ? tracks[1] : tracks[0];
    CHECK(far.members() == 1);
    CHECK(std::count_if(far.slots.begin(), far.slots.end(), [](auto& s) { return s.interpolated; }) == 8);
    CHECK(near.members() == 8);
    CHECK(near.slots[8].interpolated);
}

TEST_CASE("matching follows the running centroid within the radius") {
    std::vector<Detection> dets;
    // Drifts by 1.5 px per cycle: each step is inside a 2 px radius.
    for (std::size_t r = 0; r < 4; ++r) dets.push_back(det(r, 10 + 1.5 * double(r), 10));
    TrackParams p;
    p.n_cycles = 4;
    const auto tracks = build_tracks(dets, p);
    CHECK(tracks.size() == 1);
}

TEST_CASE("a second maximum beside a track is not a new track") {
    std::vector<Detection> dets;
    for (std::size_t r = 0; r < 3; ++r) dets.push_back(det(r, 20, 20, 1.0));
    dets.push_back(det(1, 22.5, 20, 0.2));  // just outside the match radius
    TrackParams p;
    p.n_cycles = 3;
    CHECK(build_tracks(dets, p).size() == 1);
    p.duplicate_radius = 2.2;
    CHECK(build_tracks(dets, p).size() == 2);
}

TEST_CASE("objectness is the median over all cycles and decides foreground for the track") {
    std::vector<Detection> dets;
    const std::vector<double> obj{0.9, 0.2, 0.7, 0.5, 0.8};
    for (std::size_t r = 0; r < 5; ++r) dets.push_back(det(r, 30, 30, obj[r]));
    TrackParams p;
    p.n_cycles = 5;
    p.objectness_threshold = 0.7;
    auto tracks = build_tracks(dets, p);
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].objectness == doctest::Approx(0.7));
    CHECK(tracks[0].foreground);
    p.objectness_threshold = 0.71;
    tracks = build_tracks(dets, p);
    CHECK_FALSE(tracks[0].foreground);
}

TEST_CASE("missing cycles are read from the tile at the consensus position") {
    Tile t0(0, 0, 16, 16), t1(0, 1, 16, 16);
    for (std::size_t c = 0; c < 4; ++c) t1.at(5, 6, c) = float(c + 1);
    std::vector<Detection> dets{det(0, 5, 6)};
    TrackParams p;
    p.n_cycles = 2;
    const std::vector<Tile> tiles{t0, t1};
    const auto tracks = build_tracks(dets, p, tiles);
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].slots[1].interpolated);
    CHECK(tracks[0].slots[1].intensity == Vector4(1, 2, 3, 4));
    const auto no_tiles = build_tracks(dets, p);
    CHECK(no_tiles[0].slots[1].intensity == Vector4::Zero());
}

TEST_CASE("noiseless well: one track per spot, within a pixel") {
    auto cfg = SimConfig::noiseless();
    cfg.cells_per_field = 30;
    const auto well = simulate_well(cfg, testing::bench_codebook());
    const auto tiles = render_field(well, cfg, 0);
    std::vector<Detection> dets;
    for (const auto& t : tiles) {
        const auto d = detect_spots_lq(t, 0.3);
        dets.insert(dets.end(), d.begin(), d.end());
    }
    const auto tracks = build_tracks(dets, TrackParams{}, tiles);
    const auto spots = well.spots_in_field(0);
    REQUIRE(tracks.size() == spots.size());
    for (const Spot* s : spots) {
        double best = 1e9;
        for (const auto& t : tracks)
            best = std::min(best, std::hypot(t.position.x - s->position.x, t.position.y - s->position.y));
        CHECK(best <= 1.0);
    }
    for (const auto& t : tracks) CHECK(t.members() == 9);
}
