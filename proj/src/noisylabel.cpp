#include "plepi/noisylabel.hpp"

#include "io_util.hpp"
#include "plepi/error.hpp"
#include "plepi/rng.hpp"

#include <algorithm>
#include <cmath>

namespace plepi {

Base argmax_letter(const Vector4& v) noexcept {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < 4; ++c)
        if (v[c] > v[best]) best = c;
    return base_at(static_cast<std::size_t>(best));
}

namespace {

/// Local maxima of `proj` (row-major w x h) strictly above threshold.
/// Among equal neighbours only the earliest pixel in row-major order counts.
std::vector<std::pair<std::size_t, std::size_t>> local_maxima(const std::vector<float>& proj,
                                                             std::size_t w, std::size_t h,
                                                             double threshold) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const float v = proj[y * w + x];
            if (!(v > threshold)) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const long nx = static_cast<long>(x) + dx;
                    const long ny = static_cast<long>(y) + dy;
                    if (nx < 0 || ny < 0 || nx >= static_cast<long>(w) || ny >= static_cast<long>(h))
                        continue;
                    const float q = proj[static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx)];
                    const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (q > v || (q == v && earlier)) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) out.emplace_back(x, y);
        }
    }
    return out;
}

double percentile_of(std::vector<float> values, double pct) {
    if (values.empty()) return 0.0;
    const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(rank));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    const double lo = values[k];
    if (k + 1 >= values.size()) return lo;
    const double hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(k) + 1, values.end());
    return lo + (rank - static_cast<double>(k)) * (hi - lo);
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<Detection> detect_spots_lq(const Tile& tile, double threshold) {
    const std::size_t w = tile.width;
    const std::size_t h = tile.height;
    std::vector<float> proj(w * h);
    for (std::size_t i = 0; i < w * h; ++i) {
        const float* px = tile.pixels.data() + i * tile.channels;
        proj[i] = *std::max_element(px, px + tile.channels);
    }
    std::vector<Detection> out;
    for (const auto& [x, y] : local_maxima(proj, w, h, threshold)) {
        Detection d;
        d.field = tile.field;
        d.cycle = tile.cycle;
        d.position = {static_cast<double>(x), static_cast<double>(y)};
        d.intensity = tile.pixel(x, y).cast<double>();
        d.objectness = proj[y * w + x];
        d.letter = argmax_letter(d.intensity);
        out.push_back(d);
    }
    return out;
}

std::vector<std::vector<Detection>> detect_spots_hq(std::span<const Tile> tiles,
                                                    const HqParams& params) {
    const std::size_t n_cycles = params.n_cycles;
    std::vector<const Tile*> by_cycle(n_cycles, nullptr);
    for (const auto& t : tiles) {
        if (t.cycle < n_cycles) by_cycle[t.cycle] = &t;
        if (t.field != tiles.front().field)
            throw DataError("detect_spots_hq: tiles from different fields");
    }
    for (std::size_t r = 0; r < n_cycles; ++r)
        if (!by_cycle[r])
            throw IncompleteField("detect_spots_hq: field is missing cycle " + std::to_string(r));
    const Tile& first = *by_cycle[0];
    const std::size_t w = first.width;
    const std::size_t h = first.height;
    const std::size_t np = w * h;

    // Per-channel background and scale over every cycle of the field.
    Vector4 offset, scale;
    double noise = 0.0;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        std::vector<float> values;
        values.reserve(np * n_cycles);
        for (const Tile* t : by_cycle)
            for (std::size_t i = 0; i < np; ++i) values.push_back(t->pixels[i * t->channels + c]);
        const double bg = percentile_of(values, 50.0);
        for (auto& v : values) v = static_cast<float>(v - bg);
        const double top = percentile_of(values, params.percentile);
        offset[static_cast<Eigen::Index>(c)] = bg;
        scale[static_cast<Eigen::Index>(c)] = top > 0.0 ? 1.0 / top : 1.0;
        for (auto& v : values) v = std::abs(v);
        const double sd = 1.4826 * percentile_of(std::move(values), 50.0);
        noise = std::max(noise, sd * scale[static_cast<Eigen::Index>(c)]);
    }
    const double threshold = std::max(params.threshold, params.noise_k * noise);
    auto normalized = [&](const Tile& t, std::size_t x, std::size_t y) -> Vector4 {
        return (t.pixel(x, y).cast<double>() - offset).cwiseProduct(scale);
    };

    std::vector<float> proj(np, -std::numeric_limits<float>::infinity());
    for (const Tile* t : by_cycle)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                proj[y * w + x] = std::max(proj[y * w + x],
                                           static_cast<float>(normalized(*t, x, y).maxCoeff()));

    std::vector<std::vector<Detection>> out(n_cycles);
    for (const auto& [x, y] : local_maxima(proj, w, h, threshold)) {
        std::vector<Vector4> reads(n_cycles);
        std::vector<double> per_cycle(n_cycles);
        for (std::size_t r = 0; r < n_cycles; ++r) {
            reads[r] = normalized(*by_cycle[r], x, y).cwiseMax(0.0);
            per_cycle[r] = reads[r].maxCoeff();
        }
        const double objectness = median_of(per_cycle);
        for (std::size_t r = 0; r < n_cycles; ++r) {
            Detection d;
            d.field = first.field;
            d.cycle = r;
            d.position = {static_cast<double>(x), static_cast<double>(y)};
            d.intensity = reads[r];
            d.objectness = objectness;
            d.letter = argmax_letter(reads[r]);
            out[r].push_back(d);
        }
    }
    return out;
}

std::vector<Detection> corrupt_labels(std::vector<Detection> dets, double flip_rate,
                                      std::uint64_t seed) {
    if (!(flip_rate >= 0.0 && flip_rate <= 1.0))
        throw ConfigError("corrupt_labels: flip_rate must lie in [0, 1]");
    Rng rng{seed};
    for (auto& d : dets) {
        const double u = uniform01(rng);
        const auto shift = 1 + uniform_index(rng, kNumBases - 1);
        if (u < flip_rate) d.letter = base_at((index_of(d.letter) + shift) % kNumBases);
    }
    return dets;
}

std::string serialize_detections(std::span<const Detection> dets) {
    using detail::format_double;
    std::string out = "field,cycle,x,y,iA,iC,iG,iT,objectness,letter\n";
    for (const auto& d : dets) {
        out += std::to_string(d.field) + ',' + std::to_string(d.cycle) + ',' +
               format_double(d.position.x) + ',' + format_double(d.position.y);
        for (Eigen::Index c = 0; c < 4; ++c) out += ',' + format_double(d.intensity[c]);
        out += ',' + format_double(d.objectness) + ',' + to_char(d.letter) + '\n';
    }
    return out;
}

std::vector<Detection> parse_detections(std::string_view text) {
    std::vector<Detection> out;
    for (auto line : detail::lines(text)) {
        const auto cols = detail::split(line);
        if (cols[0] == "field") continue;
        if (cols.size() != 10 || cols[9].size() != 1)
            throw DataError("detections file: malformed row '" + std::string(line) + "'");
        Detection d;
        d.field = static_cast<std::size_t>(detail::to_integer(cols[0]));
        d.cycle = static_cast<std::size_t>(detail::to_integer(cols[1]));
        d.position = {detail::to_double(cols[2]), detail::to_double(cols[3])};
        for (Eigen::Index c = 0; c < 4; ++c)
            d.intensity[c] = detail::to_double(cols[static_cast<std::size_t>(4 + c)]);
        d.objectness = detail::to_double(cols[8]);
        d.letter = base_from_char(cols[9][0]);
        out.push_back(d);
    }
    return out;
}

}  // namespace plepi
