#pragma once

#include "plepi/cellcall.hpp"
#include "plepi/config.hpp"
#include "plepi/metrics.hpp"
#include "plepi/self_train.hpp"
#include "plepi/tracks.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace plepi {

/// Produces the N_r tiles of one field, indexed by cycle.
using TileSource = std::function<std::vector<Tile>(std::size_t field)>;

TileSource rendered_tiles(const GroundTruthWell& well, const SimConfig& cfg);
/// Reads tiles written by `write_tile`. Throws ConfigError on missing files.
TileSource stored_tiles(const std::filesystem::path& dir, std::size_t n_cycles);

/// Labels of one field from the chosen annotator (letters not yet corrupted).
std::vector<Detection> annotate_field(std::span<const Tile> tiles, Quality q, const RunConfig& cfg);

/// Applies the configured flip rate with a per-quality substream.
std::vector<Detection> corrupt(std::vector<Detection> dets, Quality q, const RunConfig& cfg);

/// Features are always taken from the raw tiles at each detection position,
/// so labeled and unlabeled data share one feature space.
LabeledSet labeled_set(std::span<const Detection> dets, const TileSource& tiles, double background);

/// Candidate detection on every cycle followed by track building.
std::vector<SpotTrack> candidate_tracks(std::span<const Tile> tiles, const RunConfig& cfg);

/// Everything training and evaluation need, computed once.
struct Workspace {
    GroundTruthWell well;
    std::map<Quality, std::vector<Detection>> labels;
    std::map<Quality, LabeledSet> labeled;
    std::vector<std::vector<SpotTrack>> unlabeled;
    std::vector<std::vector<SpotTrack>> test;
};

/// Renders each used field once (fields in parallel) and derives labels for
/// every requested quality plus candidate tracks for the unlabeled and test
/// splits.
Workspace prepare(const RunConfig& cfg, const Codebook& cb, std::span<const Quality> qualities);

struct Decoded {
    std::vector<std::vector<SpotTrack>> tracks;
    std::vector<SpotCall> calls;
};

/// Scores every test track with the model and resolves its barcode. Abstained
/// foreground tracks yield calls without a barcode.
Decoded decode(const Model& model, std::vector<std::vector<SpotTrack>> tracks, const Codebook& cb,
               const PLePIConfig& pcfg, double background, std::size_t threads);

/// One ground-truth spot paired with the track closest to it.
struct TruthPair {
    std::size_t field_index = 0;
    std::size_t track = 0;
    const Spot* spot = nullptr;
};

/// Greedy closest-first one-to-one pairing within `radius`, per field.
/// `tracks[i]` must hold the tracks of `fields[i]`.
std::vector<TruthPair> match_truth(const GroundTruthWell& well, std::span<const std::size_t> fields,
                                   std::span<const std::vector<SpotTrack>> tracks, double radius);

/// Test-track slots with their true letters; used only for monitoring.
LabeledSet heldout_set(const GroundTruthWell& well, std::span<const std::size_t> fields,
                       std::span<const std::vector<SpotTrack>> tracks, double radius, double background);

/// Calls cells and computes every metric on the test split. Spot accuracy
/// pairs call positions with the true spots.
MetricsReport evaluate_calls(const GroundTruthWell& well, const RunConfig& cfg, const Codebook& cb,
                             std::span<const SpotCall> calls, std::optional<double> letter_accuracy,
                             std::vector<CellCall>* cell_calls = nullptr);

/// As above, adding per-cycle letter accuracy from the decoded tracks.
MetricsReport evaluate_decoded(const Workspace& ws, const RunConfig& cfg, const Codebook& cb,
                               const Decoded& dec, std::vector<CellCall>* cell_calls = nullptr);

struct PipelineResult {
    Model burn_in;
    SelfTrainResult trained;
    Decoded decoded;
    std::vector<CellCall> cell_calls;
    MetricsReport report;
};

/// Full run for `cfg.quality`. When `write` is set every stage artifact goes
/// to `cfg.out`.
PipelineResult run_pipeline(const RunConfig& cfg, const Codebook& cb, bool write);

enum class Strategy { Baseline, LocationOnly, Full };
std::string_view to_string(Strategy s) noexcept;

struct AblationCell {
    Strategy strategy = Strategy::Baseline;
    Quality quality = Quality::Lq;
    MetricsReport report;
};

struct AblationResult {
    std::vector<AblationCell> cells;
    const AblationCell& at(Strategy s, Quality q) const;
};

/// Baseline (burn-in only), location-only and full self-training under both
/// label qualities. Burn-in is shared per quality; every cell is evaluated on
/// the same test tracks.
AblationResult run_ablation(const RunConfig& cfg, const Codebook& cb);

std::string ablation_markdown(const AblationResult& res);
std::string ablation_json(const AblationResult& res);

}  // namespace plepi
