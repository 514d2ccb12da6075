#pragma once

#include "plepi/noisylabel.hpp"
#include "plepi/simgen.hpp"

#include <span>
#include <vector>

namespace plepi {

/// One cycle of a spot track.
struct TrackSlot {
    /// Raw 4-channel readout: the member detection's intensities, or a
    /// bilinear tile sample at the consensus position for a missing cycle.
    Vector4 intensity = Vector4::Zero();
    double objectness = 0.0;
    bool interpolated = false;
    /// Teacher probabilities, filled by the caller that owns the model.
    Vector4 probs = Vector4::Constant(0.25);
};

/// The group of per-cycle objects at one location of a field. Foreground is
/// decided once for the whole track.
struct SpotTrack {
    std::size_t field = 0;
    std::size_t id = 0;
    Point position;
    std::vector<TrackSlot> slots;
    double objectness = 0.0;
    bool foreground = false;

    std::size_t members() const noexcept;
};

struct TrackParams {
    std::size_t n_cycles = 9;
    double radius = 2.0;
    double objectness_threshold = 0.0;
    /// An unmatched detection this close to a track is a second maximum of
    /// the same spot and opens no track. Zero means twice `radius`.
    double duplicate_radius = 0.0;
};

/// Greedy agglomerative matching of one field's detections across cycles.
/// Cycles are processed in order; within a cycle, detection/track pairs
/// within `radius` of a track's running centroid are matched closest first.
/// Unmatched detections open new tracks unless they duplicate an existing
/// one (see `duplicate_radius`). Missing cycles are filled from
/// `tiles` (indexed by cycle) when given, otherwise left zero; either way
/// they are flagged as interpolated. Track objectness is the median over
/// all N_r slots.
std::vector<SpotTrack> build_tracks(std::span<const Detection> dets, const TrackParams& params,
                                    std::span<const Tile> tiles = {});

}  // namespace plepi
