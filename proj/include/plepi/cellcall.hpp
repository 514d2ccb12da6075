#pragma once

#include "plepi/barcode.hpp"
#include "plepi/fusion.hpp"
#include "plepi/simgen.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plepi {

/// A decoded spot: a track's resolved barcode at its consensus position.
struct SpotCall {
    std::size_t field = 0;
    std::size_t track = 0;
    Point position;
    std::optional<Barcode> barcode;  // nullopt when the track abstained
    double score = 0.0;
    LabelSource source = LabelSource::Abstained;

    bool assigned() const noexcept { return barcode.has_value(); }
};

struct CellCall {
    std::size_t cell_id = 0;
    std::optional<Barcode> barcode;
    double score = 0.0;
    /// Assigned spots inside the cell.
    std::size_t support = 0;
};

/// Assigns each spot to the cell whose mask contains it (spots outside every
/// mask are dropped) and gives each cell the barcode of its highest-scoring
/// assigned spot; equal scores go to the lowest (field, track). Spots scoring
/// below `min_score` are ignored. Returns one CellCall per cell, in cell order.
std::vector<CellCall> call_cells(std::span<const SpotCall> spots, std::span<const Cell> cells,
                                 double min_score = 0.0);

/// `field,track,x,y,barcode,score,source` CSV.
std::string serialize_spot_calls(std::span<const SpotCall> calls);
std::vector<SpotCall> parse_spot_calls(std::string_view text);

/// `cell,barcode,score,support` CSV; unassigned cells have an empty barcode.
std::string serialize_cell_calls(std::span<const CellCall> calls);
std::vector<CellCall> parse_cell_calls(std::string_view text);

}  // namespace plepi
