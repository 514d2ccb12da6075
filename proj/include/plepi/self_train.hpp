#pragma once

#include "plepi/basecaller.hpp"
#include "plepi/codebook.hpp"
#include "plepi/fusion.hpp"
#include "plepi/tracks.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plepi {

struct TrainConfig {
    double learning_rate = 0.1;
    double lambda_u = 1.0;
    double ema_decay = 0.99;
    std::size_t batch_size = 64;
    std::size_t burnin_epochs = 20;
    std::size_t rounds = 5;
    /// Master seed; "train" and "augment" substreams derive from it.
    std::uint64_t seed = 0;
    StrongAugment augment;
    /// Intensity subtracted before featurization.
    double background_level = 0.0;

    /// Throws ConfigError.
    void validate() const;
};

/// Features and hard letters for supervised training.
struct LabeledSet {
    FeatureBatch features;
    std::vector<Base> letters;

    std::size_t size() const noexcept { return letters.size(); }
};

/// One training target derived by the teacher.
struct PseudoLabel {
    std::size_t field = 0;
    std::size_t track = 0;
    std::size_t cycle = 0;
    Base letter = Base::A;
    LabelSource source = LabelSource::Abstained;
    double score = 0.0;
};

/// Teacher output for one field mini-batch (all cycles of one field).
struct PseudoLabelBatch {
    std::size_t field = 0;
    std::size_t n_tracks = 0;
    std::size_t n_foreground = 0;
    /// One entry per foreground track, in track order.
    std::vector<PseudoBarcode> barcodes;
    /// Per-cycle training targets: confident letters, plus mediocre letters
    /// of codebook-fused tracks.
    std::vector<PseudoLabel> labels;
};

/// Fills every slot's teacher probabilities from weakly augmented features.
void assign_probs(const Model& teacher, std::vector<SpotTrack>& tracks, double background_level);

/// Partitions and resolves every foreground track of one field. The tracks
/// must already carry teacher probabilities.
PseudoLabelBatch pseudo_label_field(std::span<const SpotTrack> tracks, const Codebook& cb,
                                    const PLePIConfig& pcfg);

struct RoundRecord {
    std::size_t round = 0;
    std::size_t steps = 0;
    std::size_t tracks = 0;
    std::size_t foreground_tracks = 0;
    std::size_t all_confident = 0;
    std::size_t codebook_fused = 0;
    std::size_t abstained = 0;
    std::size_t pseudo_labels = 0;
    std::size_t fused_labels = 0;
    double abstention_rate = 0.0;
    std::optional<double> heldout_accuracy;

    std::string to_json_line() const;
};

struct SelfTrainResult {
    Model teacher;
    Model student;
    std::vector<RoundRecord> history;
    /// Pseudo-labels of each round, when requested.
    std::vector<std::vector<PseudoLabel>> dumps;
};

struct SelfTrainOptions {
    std::size_t threads = 1;
    bool keep_dumps = false;
    /// Evaluated with the teacher after each round when non-empty.
    const LabeledSet* heldout = nullptr;
};

/// Supervised burn-in of the student; the teacher is its copy.
/// Throws ConfigError on an empty labeled set.
Model burn_in(Model student, const LabeledSet& labeled, const TrainConfig& cfg);

/// Teacher-student rounds starting from given models. Each round the
/// teacher snapshot pseudo-labels every unlabeled field (in parallel), then
/// the student takes SGD steps on l_s + lambda_u * l_u, field by field, and
/// the teacher follows by EMA after every step.
SelfTrainResult run_rounds(Model teacher, Model student, const LabeledSet& labeled,
                           std::span<const std::vector<SpotTrack>> unlabeled,
                           const TrainConfig& cfg, const PLePIConfig& pcfg, const Codebook& cb,
                           const SelfTrainOptions& opt = {});

/// Burn-in followed by `cfg.rounds` self-training rounds.
SelfTrainResult self_train(Model teacher, Model student, const LabeledSet& labeled,
                           std::span<const std::vector<SpotTrack>> unlabeled,
                           const TrainConfig& cfg, const PLePIConfig& pcfg, const Codebook& cb,
                           const SelfTrainOptions& opt = {});

/// `field,track,cycle,letter,source,score` CSV with header.
std::string serialize_pseudo_labels(std::span<const PseudoLabel> labels);

}  // namespace plepi
