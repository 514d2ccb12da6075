// Helpers and independent oracles shared by the unit and acceptance tests.
#pragma once

#include "plepi/codebook.hpp"
#include "plepi/config.hpp"
#include "plepi/fusion.hpp"
#include "plepi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace testing {

using namespace plepi;

inline std::filesystem::path bench_dir() { return PLEPI_SOURCE_DIR "/bench"; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("plepi_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline Codebook make_codebook(const std::vector<std::string>& targeted,
                              const std::vector<std::string>& trick = {}) {
    std::vector<CodebookEntry> entries;
    for (std::size_t i = 0; i < targeted.size(); ++i)
        entries.push_back({Barcode::from_string(targeted[i]), "t" + std::to_string(i), EntryKind::Targeted});
    for (std::size_t i = 0; i < trick.size(); ++i)
        entries.push_back({Barcode::from_string(trick[i]), "x" + std::to_string(i), EntryKind::Trick});
    return Codebook(std::move(entries));
}

/// Largest component, lowest index first on ties.
inline Base argmax_of(const Vector4& v) {
    std::size_t k = 0;
    for (std::size_t c = 1; c < 4; ++c)
        if (v[Eigen::Index(c)] > v[Eigen::Index(k)]) k = c;
    return base_at(k);
}

inline Barcode random_barcode(Rng& rng, std::size_t n) {
    std::vector<Base> letters(n);
    for (auto& l : letters) l = base_at(uniform_index(rng, 4));
    return Barcode(std::move(letters));
}

/// Every barcode of length n, in lexicographic letter order.
inline std::vector<Barcode> all_barcodes(std::size_t n) {
    std::vector<Barcode> out;
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 4;
    for (std::uint64_t code = 0; code < total; ++code) {
        std::vector<Base> letters(n);
        std::uint64_t c = code;
        for (std::size_t r = n; r-- > 0;) {
            letters[r] = base_at(c % 4);
            c /= 4;
        }
        out.emplace_back(std::move(letters));
    }
    return out;
}

inline std::size_t naive_hamming(const std::string& a, const std::string& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

struct OracleResult {
    std::optional<std::string> barcode;
    double score = 0.0;
};

/// Exhaustive enumeration over every assignment of the mediocre cycles.
/// Each assignment is scored by the product of teacher probabilities over
/// confident and mediocre cycles (taken in cycle order); an assignment counts
/// only if some codebook entry carries it together with the confident letters.
/// The best assignment wins, earliest codebook entry first on ties.
inline OracleResult exhaustive_fusion(const std::vector<Vector4>& probs,
                                      const std::vector<CycleClass>& classes,
                                      const std::vector<std::string>& codebook, std::size_t top_n) {
    const std::size_t n = probs.size();
    auto letter_of = [](char c) -> Eigen::Index { return std::string("ACGT").find(c); };
    auto argmax = [](const Vector4& p) {
        Eigen::Index k = 0;
        for (Eigen::Index c = 1; c < 4; ++c)
            if (p[c] > p[k]) k = c;
        return k;
    };
    auto rank_ok = [&](const Vector4& p, Eigen::Index letter) {
        // Number of letters strictly ahead of `letter` (ties broken by lower index).
        std::size_t ahead = 0;
        for (Eigen::Index c = 0; c < 4; ++c)
            if (p[c] > p[letter] || (p[c] == p[letter] && c < letter)) ++ahead;
        return ahead < top_n;
    };

    std::vector<std::size_t> med;
    for (std::size_t r = 0; r < n; ++r)
        if (classes[r] == CycleClass::Mediocre) med.push_back(r);

    OracleResult best;
    // Without confident or mediocre evidence there is nothing to fuse.
    if (std::all_of(classes.begin(), classes.end(), [](CycleClass c) { return c == CycleClass::Discarded; }))
        return best;

    std::size_t combos = 1;
    for (std::size_t i = 0; i < med.size(); ++i) combos *= 4;

    std::size_t best_index = codebook.size();
    bool found = false;
    for (std::size_t code = 0; code < combos; ++code) {
        std::vector<Eigen::Index> assign(n, -1);
        std::size_t c = code;
        bool allowed = true;
        for (std::size_t r : med) {
            assign[r] = static_cast<Eigen::Index>(c % 4);
            c /= 4;
            if (!rank_ok(probs[r], assign[r])) allowed = false;
        }
        if (!allowed) continue;
        for (std::size_t r = 0; r < n; ++r)
            if (classes[r] == CycleClass::Confident) assign[r] = argmax(probs[r]);
        for (std::size_t i = 0; i < codebook.size(); ++i) {
            bool member = true;
            for (std::size_t r = 0; r < n && member; ++r)
                if (assign[r] >= 0 && letter_of(codebook[i][r]) != assign[r]) member = false;
            if (!member) continue;
            double score = 1.0;
            for (std::size_t r = 0; r < n; ++r)
                if (assign[r] >= 0) score *= probs[r][assign[r]];
            if (!found || score > best.score || (score == best.score && i < best_index)) {
                found = true;
                best.score = score;
                best.barcode = codebook[i];
                best_index = i;
            }
            break;  // later entries with the same assignment tie and lose
        }
    }
    return best;
}

/// Random probability vector whose largest entry falls in the class's band.
inline Vector4 probs_in_class(Rng& rng, CycleClass cls, double tau_c, double tau_m) {
    double lo = 0.0, hi = 0.0;
    switch (cls) {
        case CycleClass::Confident: lo = tau_c + 1e-3, hi = 1.0; break;
        case CycleClass::Mediocre: lo = std::max(tau_m, 0.26), hi = tau_c; break;
        case CycleClass::Discarded: lo = 0.26, hi = tau_m - 1e-3; break;
    }
    for (;;) {
        const double top = lo + (hi - lo) * uniform01(rng);
        Vector4 rest;
        for (int c = 0; c < 3; ++c) rest[c] = uniform01(rng) + 1e-3;
        rest[3] = 0.0;
        const double sum = rest.head<3>().sum();
        Vector4 p;
        const auto k = static_cast<Eigen::Index>(uniform_index(rng, 4));
        int j = 0;
        for (Eigen::Index c = 0; c < 4; ++c)
            p[c] = c == k ? top : (1.0 - top) * rest[j++] / sum;
        if (p.maxCoeff() == top) return p;
    }
}

/// A small noise-free run configuration suitable for end-to-end tests.
inline std::string noiseless_config_text(std::size_t fields = 4, std::size_t cells = 12,
                                         std::size_t rounds = 1) {
    return "[run]\nseed = 5\nquality = lq\nflip_rate = 0\n"
           "labeled_fields = 0\nunlabeled_fields = 1\ntest_fields = 2-" +
           std::to_string(fields - 1) +
           "\n[sim]\nn_fields = " + std::to_string(fields) +
           "\nwidth = 128\nheight = 128\ncells_per_field = " + std::to_string(cells) +
           "\nspots_per_cell_min = 2\nspots_per_cell_mean = 4\nbrightness_sd = 0\n"
           "crosstalk = 1 0 0 0  0 1 0 0  0 0 1 0  0 0 0 1\nchannel_gain = 1 1 1 1\n"
           "phasing = 0\nbackground_level = 0\nsensor_noise_sd = 0\njitter_sd = 0\n"
           "[train]\nrounds = " + std::to_string(rounds) + "\n";
}

/// A small config with the default (noisy) imaging model.
inline std::string noisy_config_text(std::size_t rounds = 2, double flip = 0.2) {
    return "[run]\nseed = 9\nquality = lq\nflip_rate = " + std::to_string(flip) +
           "\nlabeled_fields = 0-1\nunlabeled_fields = 2-4\ntest_fields = 5-6\n"
           "[sim]\nn_fields = 7\nwidth = 160\nheight = 160\ncells_per_field = 25\n"
           "spots_per_cell_min = 2\nspots_per_cell_mean = 5\n"
           "[train]\nrounds = " + std::to_string(rounds) + "\n";
}

inline Codebook bench_codebook() { return load_codebook(bench_dir() / "codebook_186.csv"); }

inline RunConfig config_from(const std::string& text) {
    auto cfg = RunConfig::parse(text, bench_dir());
    cfg.codebook = bench_dir() / "codebook_186.csv";
    return cfg;
}

}  // namespace testing
