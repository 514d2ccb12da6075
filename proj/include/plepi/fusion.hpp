#pragma once

#include "plepi/barcode.hpp"
#include "plepi/codebook.hpp"
#include "plepi/simgen.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace plepi {

/// Thresholds and grouping parameters for pseudo-labeling.
struct PLePIConfig {
    double tau_c = 0.9;
    double tau_m = 0.5;
    std::size_t top_n = 4;
    double objectness_threshold = 0.0;
    double match_radius = 2.0;
    /// When false, mediocre cycles are left unlabeled instead of being
    /// resolved against the codebook (location evidence only).
    bool use_codebook = true;

    /// Throws ConfigError.
    void validate() const;
};

enum class CycleClass : std::uint8_t { Confident, Mediocre, Discarded };

/// Per-cycle split of a track's teacher predictions.
struct ConfidencePartition {
    std::vector<CycleClass> classes;
    /// Teacher argmax and its probability, per cycle.
    std::vector<Base> argmax;
    std::vector<double> max_prob;

    std::size_t cycles() const noexcept { return classes.size(); }
    std::vector<std::size_t> indices(CycleClass c) const;
    std::size_t count(CycleClass c) const noexcept;
};

/// Confident if max > tau_c, mediocre if max in [tau_m, tau_c], discarded
/// below tau_m. Cycles flagged in `force_mediocre` are mediocre regardless.
ConfidencePartition partition_confidence(std::span<const Vector4> probs, double tau_c,
                                         double tau_m, std::span<const bool> force_mediocre = {});

enum class LabelSource : std::uint8_t { AllConfident, CodebookFused, Abstained };

std::string_view to_string(LabelSource s) noexcept;

/// The resolved barcode of one track.
struct PseudoBarcode {
    std::size_t track = 0;
    /// Resolved letter per cycle; nullopt where the track abstains.
    std::vector<std::optional<Base>> letters;
    /// Product of the teacher probabilities of the selected letters over the
    /// confident and mediocre cycles.
    double score = 0.0;
    LabelSource source = LabelSource::Abstained;

    bool complete() const noexcept;
    /// Throws DataError if incomplete.
    Barcode barcode() const;
};

/// Resolves the mediocre cycles of a track against the codebook: among the
/// entries agreeing with every confident letter and using one of the top_n
/// teacher letters at each mediocre cycle, picks the one maximizing the
/// product of teacher probabilities over confident and mediocre cycles.
/// Ties go to the earliest entry. Confident letters are never changed.
PseudoBarcode fuse_codebook(const ConfidencePartition& partition, std::span<const Vector4> probs,
                            const Codebook& cb, std::size_t top_n);

/// Pseudo-labels without codebook evidence: confident letters only.
PseudoBarcode confident_only(const ConfidencePartition& partition, std::span<const Vector4> probs);

/// Product over cycles of the largest class probability.
double track_sequence_probability(std::span<const Vector4> probs) noexcept;

/// Bitmask of the top_n letters of `p` (descending, lower letter first on ties).
std::uint8_t top_letters(const Vector4& p, std::size_t top_n) noexcept;

}  // namespace plepi
