#pragma once

#include "plepi/fusion.hpp"
#include "plepi/noisylabel.hpp"
#include "plepi/self_train.hpp"
#include "plepi/simgen.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plepi {

enum class Quality { Lq, Hq };

std::string_view to_string(Quality q) noexcept;
/// Throws ConfigError.
Quality parse_quality(std::string_view s);

/// Every knob of one run. Loaded from an INI-style file with one section per
/// module ([run], [sim], [annotate], [tracks], [train], [plepi], [decode]).
/// Relative paths resolve against the config file's directory.
struct RunConfig {
    SimConfig sim;
    TrainConfig train;
    /// tau_c is chosen by quality when unset: 1.0 for LQ, 0.9 for HQ.
    PLePIConfig plepi;
    std::optional<double> plepi_tau_c;
    /// Test-time resolution: letters above 0.5 are trusted as called, the
    /// rest are filled from the codebook.
    PLePIConfig decode{.tau_c = 0.5, .tau_m = 0.5};
    double min_cell_score = 0.0;

    std::optional<double> lq_threshold;
    HqParams hq;
    std::optional<double> detect_threshold;
    std::optional<double> objectness_threshold;

    std::uint64_t seed = 0;
    Quality quality = Quality::Lq;
    double flip_rate = 0.0;
    std::size_t threads = 1;
    bool dump_pseudo_labels = false;
    bool write_tiles = false;
    std::filesystem::path codebook;
    std::filesystem::path out = "out";

    std::vector<std::size_t> labeled_fields;
    std::vector<std::size_t> unlabeled_fields;
    std::vector<std::size_t> test_fields;

    /// Throws ConfigError on unknown keys or malformed values.
    static RunConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});
    static RunConfig load(const std::filesystem::path& path);

    /// Propagates the master seed to every module config.
    void set_seed(std::uint64_t s);

    /// Checks ranges, split disjointness and field bounds. Throws ConfigError.
    void validate() const;

    /// Annotation threshold of the cheap annotator.
    double lq_threshold_value() const;
    double detect_threshold_value() const;
    double objectness_threshold_value() const;
    PLePIConfig training_plepi(Quality q) const;
};

/// Parses "0-3,7,9" style lists.
std::vector<std::size_t> parse_field_list(std::string_view s);

}  // namespace plepi
