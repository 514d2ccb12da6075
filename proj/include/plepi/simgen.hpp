#pragma once

#include "plepi/barcode.hpp"
#include "plepi/codebook.hpp"
#include "plepi/geometry.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace plepi {

inline constexpr std::size_t kNumChannels = 4;

using Vector4 = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;

/// Synthetic experiment description. Intensities are in units where a
/// unit-gain, unit-brightness spot has peak `spot_amplitude`. The default
/// imaging model is deliberately imperfect: bright A and G channels pick up
/// C and T dye respectively, so raw per-pixel argmax labels are wrong for
/// roughly a fifth of letters.
struct SimConfig {
    std::size_t n_fields = 1;
    std::size_t n_cycles = 9;
    std::size_t width = 256;
    std::size_t height = 256;
    std::size_t n_channels = kNumChannels;
    std::size_t cells_per_field = 20;
    std::size_t spots_per_cell_min = 1;
    double spots_per_cell_mean = 5.0;
    double spot_sigma = 1.5;
    double spot_amplitude = 1.0;
    /// Log-normal sigma of per-spot brightness; 0 gives unit brightness.
    double brightness_sd = 0.3;
    /// crosstalk(channel, letter): fraction of a letter's dye seen in a channel.
    Matrix4 crosstalk = default_crosstalk();
    double phasing = 0.15;
    Vector4 channel_gain = Vector4(1.4, 0.8, 1.3, 0.8);
    double background_level = 0.1;
    double sensor_noise_sd = 0.05;
    double jitter_sd = 0.3;
    double abundance_concentration = 0.0;
    double min_spot_separation = 6.0;
    /// Minimum distance from a spot to its cell boundary.
    double spot_edge_margin = 2.0;
    /// Cell masks are Voronoi regions scaled by this factor about their site.
    double cell_shrink = 0.9;
    /// Consecutive fields imaged on one plate; 0 puts the whole well on one.
    std::size_t fields_per_plate = 0;
    /// Log-normal sigma of a per-plate, per-channel gain multiplier.
    double plate_gain_sd = 0.0;
    std::uint64_t seed = 0;

    /// Throws ConfigError.
    void validate() const;

    static Matrix4 default_crosstalk();
    /// Identity optics, unit gains, no noise, jitter, phasing or background.
    static SimConfig noiseless();
};

struct Cell {
    std::size_t id = 0;
    std::size_t field = 0;
    Point site;
    Polygon mask;
    Barcode barcode;

    friend bool operator==(const Cell&, const Cell&) = default;
};

struct Spot {
    std::size_t id = 0;
    std::size_t cell_id = 0;
    std::size_t field = 0;
    Point position;
    Barcode barcode;
    double brightness = 1.0;

    friend bool operator==(const Spot&, const Spot&) = default;
};

/// Exact ground truth for one synthetic well. The true abundance plays the
/// role of the orthogonal sequencing reference.
struct GroundTruthWell {
    std::size_t n_fields = 0;
    std::size_t n_cycles = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<Cell> cells;
    std::vector<Spot> spots;
    std::map<Barcode, std::size_t> true_abundance;

    /// Spot and cell subsets for one field, in id order.
    std::vector<const Spot*> spots_in_field(std::size_t field) const;
    std::vector<const Cell*> cells_in_field(std::size_t field) const;

    friend bool operator==(const GroundTruthWell&, const GroundTruthWell&) = default;
};

/// One W x H x C image, channel-last, row-major.
struct Tile {
    std::size_t field = 0;
    std::size_t cycle = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = kNumChannels;
    std::vector<float> pixels;

    Tile() = default;
    Tile(std::size_t f, std::size_t r, std::size_t w, std::size_t h, std::size_t c = kNumChannels)
        : field(f), cycle(r), width(w), height(h), channels(c), pixels(w * h * c, 0.0f) {}

    float& at(std::size_t x, std::size_t y, std::size_t c) noexcept {
        return pixels[(y * width + x) * channels + c];
    }
    float at(std::size_t x, std::size_t y, std::size_t c) const noexcept {
        return pixels[(y * width + x) * channels + c];
    }
    Eigen::Map<const Eigen::Vector4f> pixel(std::size_t x, std::size_t y) const noexcept {
        return Eigen::Map<const Eigen::Vector4f>(pixels.data() + (y * width + x) * channels);
    }

    /// Bilinear readout at a sub-pixel position, clamped to the tile.
    Vector4 sample(Point p) const noexcept;
};

/// Seeded cells, spots and barcodes. Throws ConfigError.
GroundTruthWell simulate_well(const SimConfig& cfg, const Codebook& cb);

/// Channel gain multiplier of the plate holding `field` (ones when plates
/// are disabled).
Vector4 plate_gain(const SimConfig& cfg, std::size_t field);

/// Noise-free per-cycle channel signal for a spot of unit brightness:
/// gain .* (crosstalk * ((1 - phasing) e(letter_r) + phasing e(letter_{r-1}))),
/// with the gain including the field's plate multiplier.
Vector4 ideal_signal(const SimConfig& cfg, const Barcode& barcode, std::size_t cycle,
                     std::size_t field = 0);

/// Renders one (field, cycle) tile. Each tile draws from its own substream,
/// so tiles can be rendered in any order or in parallel.
Tile render_tile(const GroundTruthWell& well, const SimConfig& cfg, std::size_t field,
                 std::size_t cycle);

/// All N_r tiles of one field.
std::vector<Tile> render_field(const GroundTruthWell& well, const SimConfig& cfg,
                               std::size_t field, std::size_t threads = 1);

/// All N_f x N_r tiles, field-major.
std::vector<Tile> render_tiles(const GroundTruthWell& well, const SimConfig& cfg,
                               std::size_t threads = 1);

// ---- I/O -------------------------------------------------------------------

using AbundanceTable = std::map<Barcode, std::size_t>;

AbundanceTable true_abundance_in_fields(const GroundTruthWell& well,
                                        const std::vector<std::size_t>& fields);

/// `barcode,count` CSV with header.
std::string export_reference_abundance(const GroundTruthWell& well);
std::string serialize_abundance(const AbundanceTable& table);
AbundanceTable parse_abundance(std::string_view text);

std::string well_to_json(const GroundTruthWell& well);
GroundTruthWell well_from_json(std::string_view text);

/// Writes `stem.bin` (little-endian float32) and `stem.json` sidecar.
void write_tile(const Tile& tile, const std::filesystem::path& stem);
Tile read_tile(const std::filesystem::path& stem);
std::filesystem::path tile_stem(const std::filesystem::path& dir, std::size_t field,
                                std::size_t cycle);

}  // namespace plepi
