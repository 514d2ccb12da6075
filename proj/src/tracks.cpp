#include "plepi/tracks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <unordered_map>

namespace plepi {

std::size_t SpotTrack::members() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(slots.begin(), slots.end(), [](const TrackSlot& s) { return !s.interpolated; }));
}

namespace {

struct Building {
    double sum_x = 0.0;
    double sum_y = 0.0;
    std::size_t count = 0;
    std::vector<const Detection*> members;  // by cycle, null if missing

    Point centroid() const noexcept {
        return {sum_x / static_cast<double>(count), sum_y / static_cast<double>(count)};
    }
};

/// Uniform grid over track centroids, cell size = radius.
class Grid {
public:
    Grid(const std::vector<Building>& tracks, double cell) : cell_(cell) {
        for (std::size_t i = 0; i < tracks.size(); ++i) {
            const auto c = tracks[i].centroid();
            buckets_[key(cell_index(c.x), cell_index(c.y))].push_back(i);
        }
    }

    void add(std::size_t i, Point p) { buckets_[key(cell_index(p.x), cell_index(p.y))].push_back(i); }

    template <class Fn>
    void near(Point p, Fn&& fn) const {
        const long cx = cell_index(p.x);
        const long cy = cell_index(p.y);
        for (long dy = -1; dy <= 1; ++dy)
            for (long dx = -1; dx <= 1; ++dx) {
                const auto it = buckets_.find(key(cx + dx, cy + dy));
                if (it == buckets_.end()) continue;
                for (std::size_t i : it->second) fn(i);
            }
    }

private:
    long cell_index(double v) const noexcept { return static_cast<long>(std::floor(v / cell_)); }
    static long long key(long x, long y) noexcept {
        return (static_cast<long long>(x) << 32) ^ static_cast<long long>(static_cast<unsigned>(y));
    }
    double cell_;
    std::unordered_map<long long, std::vector<std::size_t>> buckets_;
};

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<SpotTrack> build_tracks(std::span<const Detection> dets, const TrackParams& params,
                                    std::span<const Tile> tiles) {
    const std::size_t n_cycles = params.n_cycles;
    const double radius = std::max(params.radius, 1e-9);

    std::vector<std::vector<const Detection*>> by_cycle(n_cycles);
    for (const auto& d : dets)
        if (d.cycle < n_cycles) by_cycle[d.cycle].push_back(&d);
    for (auto& v : by_cycle)
        std::stable_sort(v.begin(), v.end(), [](const Detection* a, const Detection* b) {
            return std::tie(a->position.y, a->position.x) < std::tie(b->position.y, b->position.x);
        });

    const double dup_radius = params.duplicate_radius > 0.0 ? params.duplicate_radius : 2.0 * radius;
    std::vector<Building> tracks;
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t r = 0; r < n_cycles; ++r) {
        const auto& cur = by_cycle[r];
        pairs.clear();
        if (!tracks.empty()) {
            const Grid grid(tracks, radius);
            for (std::size_t di = 0; di < cur.size(); ++di) {
                const Point p = cur[di]->position;
                grid.near(p, [&](std::size_t ti) {
                    const Point c = tracks[ti].centroid();
                    const double d = std::hypot(p.x - c.x, p.y - c.y);
                    if (d <= radius) pairs.emplace_back(d, di, ti);
                });
            }
            std::sort(pairs.begin(), pairs.end());
        }
        std::vector<bool> det_used(cur.size(), false);
        std::vector<bool> track_used(tracks.size(), false);
        std::vector<std::pair<std::size_t, std::size_t>> matches;
        for (const auto& [d, di, ti] : pairs) {
            if (det_used[di] || track_used[ti]) continue;
            det_used[di] = true;
            track_used[ti] = true;
            matches.emplace_back(di, ti);
        }
        // Centroids move only after the whole cycle is matched.
        for (const auto& [di, ti] : matches) {
            auto& t = tracks[ti];
            t.sum_x += cur[di]->position.x;
            t.sum_y += cur[di]->position.y;
            ++t.count;
            t.members[r] = cur[di];
        }
        // Unmatched detections open tracks, strongest first, unless they sit
        // next to a track that already owns that spot.
        std::vector<std::size_t> seeds;
        for (std::size_t di = 0; di < cur.size(); ++di)
            if (!det_used[di]) seeds.push_back(di);
        std::stable_sort(seeds.begin(), seeds.end(), [&](std::size_t a, std::size_t b) {
            return cur[a]->objectness > cur[b]->objectness;
        });
        Grid owners(tracks, dup_radius);
        for (std::size_t di : seeds) {
            const Point p = cur[di]->position;
            bool duplicate = false;
            owners.near(p, [&](std::size_t ti) {
                const Point c = tracks[ti].centroid();
                duplicate = duplicate || std::hypot(p.x - c.x, p.y - c.y) <= dup_radius;
            });
            if (duplicate) continue;
            Building t;
            t.sum_x = p.x;
            t.sum_y = p.y;
            t.count = 1;
            t.members.assign(n_cycles, nullptr);
            t.members[r] = cur[di];
            owners.add(tracks.size(), p);
            tracks.push_back(std::move(t));
        }
    }

    const std::size_t field = dets.empty() ? 0 : dets.front().field;
    std::vector<SpotTrack> out;
    out.reserve(tracks.size());
    std::vector<double> scores(n_cycles);
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const auto& b = tracks[i];
        SpotTrack t;
        t.field = field;
        t.id = i;
        t.position = b.centroid();
        t.slots.resize(n_cycles);
        for (std::size_t r = 0; r < n_cycles; ++r) {
            auto& slot = t.slots[r];
            if (const Detection* d = b.members[r]) {
                slot.intensity = d->intensity;
                slot.objectness = d->objectness;
            } else {
                slot.interpolated = true;
                if (r < tiles.size()) {
                    slot.intensity = tiles[r].sample(t.position);
                    slot.objectness = slot.intensity.maxCoeff();
                }
            }
            scores[r] = slot.objectness;
        }
        t.objectness = median(scores);
        t.foreground = t.objectness >= params.objectness_threshold;
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace plepi
