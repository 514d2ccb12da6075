#pragma once

#include "plepi/barcode.hpp"
#include "plepi/simgen.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace plepi {

/// A point annotation in one (field, cycle) image.
struct Detection {
    std::size_t field = 0;
    std::size_t cycle = 0;
    Point position;
    Vector4 intensity = Vector4::Zero();
    double objectness = 0.0;
    Base letter = Base::A;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Index of the largest component; the lowest index wins ties.
Base argmax_letter(const Vector4& v) noexcept;

/// Cheap annotator: local maxima of the channel-max projection above
/// `threshold`, labelled with the argmax channel of the raw intensities.
std::vector<Detection> detect_spots_lq(const Tile& tile, double threshold);

struct HqParams {
    std::size_t n_cycles = 9;
    /// Percentile mapped to 1 after per-channel background removal.
    double percentile = 99.9;
    /// Detection threshold on the cross-cycle max projection, normalized units.
    double threshold = 0.25;
    /// The threshold is raised to this many robust (MAD) noise standard
    /// deviations of the normalized channels.
    double noise_k = 6.0;
};

/// Multi-step annotator over all cycles of one field: per-channel median
/// subtraction and percentile scaling, one localization on the cross-cycle
/// max projection, then per-cycle readout at the shared locations.
/// Result is indexed by cycle. Throws IncompleteField.
std::vector<std::vector<Detection>> detect_spots_hq(std::span<const Tile> tiles,
                                                    const HqParams& params);

/// Replaces each letter with a uniformly drawn different letter with
/// probability `flip_rate`.
std::vector<Detection> corrupt_labels(std::vector<Detection> dets, double flip_rate,
                                      std::uint64_t seed);

/// `field,cycle,x,y,iA,iC,iG,iT,objectness,letter` CSV with header.
std::string serialize_detections(std::span<const Detection> dets);
std::vector<Detection> parse_detections(std::string_view text);

}  // namespace plepi
