#pragma once

#include "plepi/cellcall.hpp"
#include "plepi/codebook.hpp"
#include "plepi/self_train.hpp"
#include "plepi/simgen.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plepi {

/// Coefficient of determination of `called` against `reference` over
/// `universe` (missing entries count as 0): 1 - SS_res / SS_tot, with SS_tot
/// taken about the reference mean. Throws UndefinedMetric when the reference
/// total or variance is zero.
double abundance_r2(const AbundanceTable& called, const AbundanceTable& reference,
                    std::span<const Barcode> universe);

/// Same, on frequencies (each table divided by its total over the universe).
double abundance_r2_frequency(const AbundanceTable& called, const AbundanceTable& reference,
                              std::span<const Barcode> universe);

/// Assigned cells over total cells. Throws UndefinedMetric if total is 0.
double cell_recovery_rate(std::span<const CellCall> calls, std::size_t total_cells);

/// Counts of assigned calls by codebook category.
struct CallCounts {
    std::size_t targeted = 0;
    std::size_t trick = 0;
    std::size_t other = 0;

    std::size_t total() const noexcept { return targeted + trick + other; }
};

struct PpvFdr {
    double ppv = 0.0;
    double fdr_trick = 0.0;
    double fdr_other = 0.0;
    CallCounts counts;
};

CallCounts categorize(std::span<const Barcode> calls, const Codebook& cb);

/// Fractions of assigned calls that are targeted, trick, or neither.
/// Throws UndefinedMetric when nothing is assigned.
PpvFdr ppv_fdr(std::span<const Barcode> calls, const Codebook& cb);

/// Trick call fraction divided by the trick fraction of the codebook.
/// Throws UndefinedMetric when there are no calls or no trick entries.
double fdr_ratio(const CallCounts& counts, const Codebook& cb);

struct LevelMetrics {
    std::optional<double> ppv;
    std::optional<double> fdr_trick;
    std::optional<double> fdr_other;
    CallCounts counts;
};

struct CountRow {
    Barcode barcode;
    EntryKind kind = EntryKind::Targeted;
    std::size_t reference = 0;
    std::size_t called_spots = 0;
    std::size_t called_cells = 0;
    std::size_t reference_cells = 0;
};

struct MetricsReport {
    static constexpr int kSchemaVersion = 1;

    std::optional<double> r2;
    std::optional<double> r2_frequency;
    std::optional<double> r2_cell;
    std::optional<double> cell_recovery_rate;
    LevelMetrics cell;
    LevelMetrics spot;
    std::optional<double> fdr_ratio_spot;
    /// Ground-truth spots whose matched track decoded to the exact barcode.
    std::optional<double> spot_accuracy;
    /// Per-cycle teacher argmax accuracy on matched tracks.
    std::optional<double> letter_accuracy;
    std::size_t total_cells = 0;
    std::size_t assigned_cells = 0;
    std::size_t spot_calls = 0;
    std::size_t truth_spots = 0;
    std::vector<CountRow> counts;
    std::vector<RoundRecord> history;

    /// Names of metrics that could not be computed.
    std::vector<std::string> undefined() const;
};

struct EvaluationInput {
    std::span<const SpotCall> spot_calls;
    std::span<const CellCall> cell_calls;
    std::span<const Cell> cells;
    /// Ground truth restricted to the evaluated fields.
    AbundanceTable reference;
    AbundanceTable reference_cells;
    std::optional<double> spot_accuracy;
    std::optional<double> letter_accuracy;
    std::size_t truth_spots = 0;
};

/// Computes every metric, recording undefined ones as empty optionals.
MetricsReport evaluate(const EvaluationInput& in, const Codebook& cb);

}  // namespace plepi
