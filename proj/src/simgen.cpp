#include "plepi/simgen.hpp"

#include "io_util.hpp"
#include "plepi/error.hpp"
#include "plepi/parallel.hpp"
#include "plepi/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

namespace plepi {

using nlohmann::json;

void SimConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("sim config: " + m); };
    if (n_channels != kNumChannels) fail("n_channels must be 4");
    if (n_fields == 0 || n_cycles == 0) fail("n_fields and n_cycles must be positive");
    if (width < 8 || height < 8) fail("tile must be at least 8x8 pixels");
    if (cells_per_field == 0) fail("cells_per_field must be positive");
    // A cell must leave room for a spot clear of its boundary.
    const double side = 2.0 * spot_edge_margin + 2.0;
    if (static_cast<double>(width * height) < static_cast<double>(cells_per_field) * side * side)
        fail(std::to_string(cells_per_field) + " cells do not fit a " + std::to_string(width) + "x" +
             std::to_string(height) + " tile");
    if (spots_per_cell_mean < static_cast<double>(spots_per_cell_min))
        fail("spots_per_cell_mean below spots_per_cell_min");
    if (!(spot_sigma > 0.0)) fail("spot_sigma must be positive");
    if (!(spot_amplitude >= 0.0) || !(brightness_sd >= 0.0) || !(background_level >= 0.0) ||
        !(sensor_noise_sd >= 0.0) || !(jitter_sd >= 0.0))
        fail("noise and intensity scales must be >= 0");
    if (!(phasing >= 0.0 && phasing < 1.0)) fail("phasing must lie in [0, 1)");
    if ((crosstalk.array() < 0.0).any()) fail("crosstalk entries must be >= 0");
    if ((crosstalk.diagonal().array() <= 0.0).any()) fail("crosstalk diagonal must be > 0");
    if ((channel_gain.array() <= 0.0).any()) fail("channel gains must be > 0");
    if (!(cell_shrink > 0.0 && cell_shrink <= 1.0)) fail("cell_shrink must lie in (0, 1]");
    if (min_spot_separation < 0.0 || spot_edge_margin < 0.0) fail("spacing must be >= 0");
    if (!(plate_gain_sd >= 0.0)) fail("plate_gain_sd must be >= 0");
}

Matrix4 SimConfig::default_crosstalk() {
    Matrix4 m = Matrix4::Identity();
    m(0, 1) = 0.55;
    m(1, 0) = 0.1;
    m(2, 3) = 0.55;
    m(3, 2) = 0.1;
    return m;
}

SimConfig SimConfig::noiseless() {
    SimConfig c;
    c.brightness_sd = 0.0;
    c.crosstalk = Matrix4::Identity();
    c.phasing = 0.0;
    c.channel_gain = Vector4::Ones();
    c.background_level = 0.0;
    c.sensor_noise_sd = 0.0;
    c.jitter_sd = 0.0;
    return c;
}

std::vector<const Spot*> GroundTruthWell::spots_in_field(std::size_t field) const {
    std::vector<const Spot*> out;
    for (const auto& s : spots)
        if (s.field == field) out.push_back(&s);
    return out;
}

std::vector<const Cell*> GroundTruthWell::cells_in_field(std::size_t field) const {
    std::vector<const Cell*> out;
    for (const auto& c : cells)
        if (c.field == field) out.push_back(&c);
    return out;
}

Vector4 Tile::sample(Point p) const noexcept {
    const double x = std::clamp(p.x, 0.0, static_cast<double>(width - 1));
    const double y = std::clamp(p.y, 0.0, static_cast<double>(height - 1));
    const auto x0 = static_cast<std::size_t>(std::floor(x));
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const std::size_t x1 = std::min(x0 + 1, width - 1);
    const std::size_t y1 = std::min(y0 + 1, height - 1);
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    const Vector4 v00 = pixel(x0, y0).cast<double>();
    const Vector4 v10 = pixel(x1, y0).cast<double>();
    const Vector4 v01 = pixel(x0, y1).cast<double>();
    const Vector4 v11 = pixel(x1, y1).cast<double>();
    return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

namespace {

std::vector<Point> place_sites(const SimConfig& cfg, Rng& rng) {
    const double w = static_cast<double>(cfg.width);
    const double h = static_cast<double>(cfg.height);
    const double min_d = 0.5 * std::sqrt(w * h / static_cast<double>(cfg.cells_per_field));
    std::vector<Point> sites;
    std::size_t attempts = 0;
    while (sites.size() < cfg.cells_per_field) {
        if (++attempts > 200 * cfg.cells_per_field + 10000)
            throw ConfigError("sim config: " + std::to_string(cfg.cells_per_field) +
                              " cells do not fit a " + std::to_string(cfg.width) + "x" +
                              std::to_string(cfg.height) + " tile");
        const Point p{uniform01(rng) * w, uniform01(rng) * h};
        const bool clear = std::all_of(sites.begin(), sites.end(), [&](const Point& q) {
            return std::hypot(p.x - q.x, p.y - q.y) >= min_d;
        });
        if (clear) sites.push_back(p);
    }
    return sites;
}

std::vector<double> abundance_weights(const SimConfig& cfg, std::size_t n, Rng& rng) {
    std::vector<double> w(n, 1.0);
    if (cfg.abundance_concentration > 0.0)
        for (auto& x : w) x = gamma_draw(rng, cfg.abundance_concentration);
    double total = 0.0;
    for (double x : w) total += x;
    std::vector<double> cdf(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += w[i] / total;
        cdf[i] = acc;
    }
    cdf.back() = 1.0;
    return cdf;
}

}  // namespace

GroundTruthWell simulate_well(const SimConfig& cfg, const Codebook& cb) {
    cfg.validate();
    const auto targeted = cb.targeted();
    if (targeted.empty()) throw ConfigError("simulate_well: codebook has no targeted entries");
    if (cb.cycles() != cfg.n_cycles)
        throw ConfigError("sim config: n_cycles " + std::to_string(cfg.n_cycles) +
                          " differs from codebook length " + std::to_string(cb.cycles()));

    Rng rng = make_rng(cfg.seed, "sim");
    const auto cdf = abundance_weights(cfg, targeted.size(), rng);

    GroundTruthWell well;
    well.n_fields = cfg.n_fields;
    well.n_cycles = cfg.n_cycles;
    well.width = cfg.width;
    well.height = cfg.height;

    const double w = static_cast<double>(cfg.width);
    const double h = static_cast<double>(cfg.height);
    for (std::size_t f = 0; f < cfg.n_fields; ++f) {
        const auto sites = place_sites(cfg, rng);
        std::vector<Point> field_spots;
        for (std::size_t i = 0; i < sites.size(); ++i) {
            Cell cell;
            cell.id = well.cells.size();
            cell.field = f;
            cell.site = sites[i];
            cell.mask = shrink(voronoi_region(sites, i, w, h), sites[i], cfg.cell_shrink);
            const double u = uniform01(rng);
            const auto pick = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
            cell.barcode = targeted[static_cast<std::size_t>(pick)];

            const std::size_t n_spots =
                cfg.spots_per_cell_min +
                poisson_draw(rng, cfg.spots_per_cell_mean - static_cast<double>(cfg.spots_per_cell_min));
            double min_x = w, min_y = h, max_x = 0, max_y = 0;
            for (const auto& p : cell.mask) {
                min_x = std::min(min_x, p.x);
                max_x = std::max(max_x, p.x);
                min_y = std::min(min_y, p.y);
                max_y = std::max(max_y, p.y);
            }
            for (std::size_t s = 0; s < n_spots; ++s) {
                for (int attempt = 0; attempt < 200; ++attempt) {
                    const Point p{min_x + uniform01(rng) * (max_x - min_x),
                                  min_y + uniform01(rng) * (max_y - min_y)};
                    if (!contains(cell.mask, p) ||
                        distance_to_boundary(cell.mask, p) < cfg.spot_edge_margin)
                        continue;
                    const bool clear =
                        std::all_of(field_spots.begin(), field_spots.end(), [&](const Point& q) {
                            return std::hypot(p.x - q.x, p.y - q.y) >= cfg.min_spot_separation;
                        });
                    if (!clear) continue;
                    Spot spot;
                    spot.id = well.spots.size();
                    spot.cell_id = cell.id;
                    spot.field = f;
                    spot.position = p;
                    spot.barcode = cell.barcode;
                    spot.brightness =
                        cfg.brightness_sd > 0.0
                            ? std::exp(cfg.brightness_sd * standard_normal(rng) -
                                       0.5 * cfg.brightness_sd * cfg.brightness_sd)
                            : 1.0;
                    field_spots.push_back(p);
                    ++well.true_abundance[spot.barcode];
                    well.spots.push_back(std::move(spot));
                    break;
                }
            }
            well.cells.push_back(std::move(cell));
        }
    }
    return well;
}

Vector4 plate_gain(const SimConfig& cfg, std::size_t field) {
    if (cfg.fields_per_plate == 0 || cfg.plate_gain_sd <= 0.0) return Vector4::Ones();
    Rng rng = make_rng(cfg.seed, "plate", field / cfg.fields_per_plate);
    Vector4 g;
    for (Eigen::Index c = 0; c < 4; ++c) g[c] = std::exp(cfg.plate_gain_sd * standard_normal(rng));
    return g;
}

Vector4 ideal_signal(const SimConfig& cfg, const Barcode& barcode, std::size_t cycle, std::size_t field) {
    Vector4 dye = Vector4::Zero();
    dye[static_cast<Eigen::Index>(index_of(barcode[cycle]))] += 1.0 - cfg.phasing;
    if (cycle > 0) dye[static_cast<Eigen::Index>(index_of(barcode[cycle - 1]))] += cfg.phasing;
    return cfg.channel_gain.cwiseProduct(plate_gain(cfg, field)).cwiseProduct(cfg.crosstalk * dye);
}

Tile render_tile(const GroundTruthWell& well, const SimConfig& cfg, std::size_t field,
                 std::size_t cycle) {
    Tile tile(field, cycle, cfg.width, cfg.height);
    Rng rng = make_rng(cfg.seed, "render", field * cfg.n_cycles + cycle);

    const double sigma = cfg.spot_sigma;
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    const auto reach = static_cast<long>(std::ceil(4.0 * sigma));
    std::vector<double> acc(tile.pixels.size(), 0.0);

    for (const Spot* spot : well.spots_in_field(field)) {
        const double dx = cfg.jitter_sd * standard_normal(rng);
        const double dy = cfg.jitter_sd * standard_normal(rng);
        const double cx = spot->position.x + dx;
        const double cy = spot->position.y + dy;
        const Vector4 signal =
            cfg.spot_amplitude * spot->brightness * ideal_signal(cfg, spot->barcode, cycle, field);
        const long px = std::lround(cx);
        const long py = std::lround(cy);
        for (long y = std::max(0L, py - reach); y <= std::min<long>(cfg.height - 1, py + reach); ++y) {
            for (long x = std::max(0L, px - reach); x <= std::min<long>(cfg.width - 1, px + reach); ++x) {
                const double ddx = static_cast<double>(x) - cx;
                const double ddy = static_cast<double>(y) - cy;
                const double g = std::exp(-(ddx * ddx + ddy * ddy) * inv2s2);
                double* dst = acc.data() + (static_cast<std::size_t>(y) * cfg.width +
                                            static_cast<std::size_t>(x)) * kNumChannels;
                for (std::size_t c = 0; c < kNumChannels; ++c)
                    dst[c] += g * signal[static_cast<Eigen::Index>(c)];
            }
        }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) {
        double v = cfg.background_level + acc[i];
        if (cfg.sensor_noise_sd > 0.0) v += cfg.sensor_noise_sd * standard_normal(rng);
        tile.pixels[i] = static_cast<float>(std::max(0.0, v));
    }
    return tile;
}

std::vector<Tile> render_field(const GroundTruthWell& well, const SimConfig& cfg,
                               std::size_t field, std::size_t threads) {
    std::vector<Tile> tiles(cfg.n_cycles);
    parallel_for(cfg.n_cycles, threads,
                 [&](std::size_t r) { tiles[r] = render_tile(well, cfg, field, r); });
    return tiles;
}

std::vector<Tile> render_tiles(const GroundTruthWell& well, const SimConfig& cfg,
                               std::size_t threads) {
    std::vector<Tile> tiles(cfg.n_fields * cfg.n_cycles);
    parallel_for(tiles.size(), threads, [&](std::size_t i) {
        tiles[i] = render_tile(well, cfg, i / cfg.n_cycles, i % cfg.n_cycles);
    });
    return tiles;
}

AbundanceTable true_abundance_in_fields(const GroundTruthWell& well,
                                        const std::vector<std::size_t>& fields) {
    AbundanceTable out;
    for (const auto& s : well.spots)
        if (std::find(fields.begin(), fields.end(), s.field) != fields.end()) ++out[s.barcode];
    return out;
}

std::string serialize_abundance(const AbundanceTable& table) {
    std::string out = "barcode,count\n";
    for (const auto& [b, n] : table) out += b.str() + "," + std::to_string(n) + "\n";
    return out;
}

std::string export_reference_abundance(const GroundTruthWell& well) {
    return serialize_abundance(well.true_abundance);
}

AbundanceTable parse_abundance(std::string_view text) {
    AbundanceTable out;
    for (auto line : detail::lines(text)) {
        const auto cols = detail::split(line);
        if (cols[0] == "barcode") continue;
        if (cols.size() != 2) throw DataError("abundance table: expected barcode,count");
        const auto count = detail::to_integer(cols[1]);
        if (count < 0) throw DataError("abundance table: negative count");
        out[Barcode::from_string(cols[0])] += static_cast<std::size_t>(count);
    }
    return out;
}

std::string well_to_json(const GroundTruthWell& well) {
    json cells = json::array();
    for (const auto& c : well.cells) {
        json mask = json::array();
        for (const auto& p : c.mask) mask.push_back({p.x, p.y});
        cells.push_back({{"id", c.id},
                         {"field", c.field},
                         {"site", {c.site.x, c.site.y}},
                         {"mask", std::move(mask)},
                         {"barcode", c.barcode.str()}});
    }
    json spots = json::array();
    for (const auto& s : well.spots)
        spots.push_back({{"id", s.id},
                         {"cell", s.cell_id},
                         {"field", s.field},
                         {"x", s.position.x},
                         {"y", s.position.y},
                         {"barcode", s.barcode.str()},
                         {"brightness", s.brightness}});
    json abundance = json::object();
    for (const auto& [b, n] : well.true_abundance) abundance[b.str()] = n;
    const json doc = {{"schema_version", 1},
                      {"n_fields", well.n_fields},
                      {"n_cycles", well.n_cycles},
                      {"width", well.width},
                      {"height", well.height},
                      {"cells", std::move(cells)},
                      {"spots", std::move(spots)},
                      {"true_abundance", std::move(abundance)}};
    return doc.dump(1) + "\n";
}

GroundTruthWell well_from_json(std::string_view text) {
    try {
        const json doc = json::parse(text);
        GroundTruthWell well;
        well.n_fields = doc.at("n_fields").get<std::size_t>();
        well.n_cycles = doc.at("n_cycles").get<std::size_t>();
        well.width = doc.at("width").get<std::size_t>();
        well.height = doc.at("height").get<std::size_t>();
        for (const auto& c : doc.at("cells")) {
            Cell cell;
            cell.id = c.at("id").get<std::size_t>();
            cell.field = c.at("field").get<std::size_t>();
            cell.site = {c.at("site")[0].get<double>(), c.at("site")[1].get<double>()};
            for (const auto& p : c.at("mask")) cell.mask.push_back({p[0].get<double>(), p[1].get<double>()});
            cell.barcode = Barcode::from_string(c.at("barcode").get<std::string>());
            well.cells.push_back(std::move(cell));
        }
        for (const auto& s : doc.at("spots")) {
            Spot spot;
            spot.id = s.at("id").get<std::size_t>();
            spot.cell_id = s.at("cell").get<std::size_t>();
            spot.field = s.at("field").get<std::size_t>();
            spot.position = {s.at("x").get<double>(), s.at("y").get<double>()};
            spot.barcode = Barcode::from_string(s.at("barcode").get<std::string>());
            spot.brightness = s.at("brightness").get<double>();
            well.spots.push_back(std::move(spot));
        }
        for (const auto& [k, v] : doc.at("true_abundance").items())
            well.true_abundance[Barcode::from_string(k)] = v.get<std::size_t>();
        return well;
    } catch (const json::exception& e) {
        throw DataError(std::string("well manifest: ") + e.what());
    }
}

std::filesystem::path tile_stem(const std::filesystem::path& dir, std::size_t field,
                                std::size_t cycle) {
    return dir / ("tile_f" + std::to_string(field) + "_r" + std::to_string(cycle));
}

void write_tile(const Tile& tile, const std::filesystem::path& stem) {
    static_assert(std::endian::native == std::endian::little,
                  "tile files are little-endian; add byte swapping for this platform");
    auto bin = stem;
    bin += ".bin";
    auto side = stem;
    side += ".json";
    detail::write_file(bin, std::string_view(reinterpret_cast<const char*>(tile.pixels.data()),
                                             tile.pixels.size() * sizeof(float)));
    const json meta = {{"W", tile.width}, {"H", tile.height}, {"C", tile.channels},
                       {"f", tile.field}, {"r", tile.cycle},  {"dtype", "float32le"},
                       {"layout", "row-major, channel-last"}};
    detail::write_file(side, meta.dump(1) + "\n");
}

Tile read_tile(const std::filesystem::path& stem) {
    auto bin = stem;
    bin += ".bin";
    auto side = stem;
    side += ".json";
    json meta;
    try {
        meta = json::parse(detail::read_file(side));
    } catch (const json::exception& e) {
        throw DataError("tile sidecar " + side.string() + ": " + e.what());
    }
    Tile tile(meta.at("f").get<std::size_t>(), meta.at("r").get<std::size_t>(),
              meta.at("W").get<std::size_t>(), meta.at("H").get<std::size_t>(),
              meta.at("C").get<std::size_t>());
    const auto raw = detail::read_file(bin);
    if (raw.size() != tile.pixels.size() * sizeof(float))
        throw DataError("tile " + bin.string() + " has unexpected size");
    std::copy(raw.begin(), raw.end(), reinterpret_cast<char*>(tile.pixels.data()));
    return tile;
}

}  // namespace plepi
