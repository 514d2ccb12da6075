#pragma once

#include "plepi/barcode.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace plepi {

enum class EntryKind : std::uint8_t { Targeted, Trick };

std::string_view to_string(EntryKind kind) noexcept;

struct CodebookEntry {
    Barcode barcode;
    std::string name;
    EntryKind kind = EntryKind::Targeted;
};

/// Which subset of the codebook a query should consider.
enum class Selection : std::uint8_t { All, Targeted, Trick };

/// The reference barcode library. Immutable after construction; iteration
/// order is insertion order, which downstream argmax tie-breaks rely on.
class Codebook {
public:
    Codebook() = default;

    /// Validates uniqueness, common length and alphabet.
    /// Throws DuplicateEntry or LengthMismatch.
    explicit Codebook(std::vector<CodebookEntry> entries);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t cycles() const noexcept { return cycles_; }

    const std::vector<CodebookEntry>& entries() const noexcept { return entries_; }
    const CodebookEntry& operator[](std::size_t i) const noexcept { return entries_[i]; }

    std::vector<Barcode> targeted() const;
    std::vector<Barcode> trick() const;

    /// Insertion index of `b`, if present.
    std::optional<std::size_t> find(const Barcode& b) const;
    bool contains(const Barcode& b) const { return find(b).has_value(); }
    std::optional<EntryKind> kind_of(const Barcode& b) const;

    /// Letters of entry `i`, laid out contiguously for scanning.
    std::span<const Base> letters(std::size_t i) const noexcept {
        return {packed_.data() + i * cycles_, cycles_};
    }

private:
    std::vector<CodebookEntry> entries_;
    std::vector<Base> packed_;
    std::unordered_map<Barcode, std::size_t> index_;
    std::size_t cycles_ = 0;
};

/// Parses the `barcode,name,kind` CSV format. The header line is optional.
Codebook parse_codebook(std::string_view text);
std::string serialize_codebook(const Codebook& cb);

Codebook load_codebook(const std::filesystem::path& path);
void save_codebook(const Codebook& cb, const std::filesystem::path& path);

/// Generates `count` barcodes at Hamming distance >= min_dist from every
/// targeted entry of `cb` and from each other. Seeded rejection sampling,
/// then greedy farthest-point selection if rejection stalls.
/// Throws InfeasibleDesign.
std::vector<Barcode> generate_trick_barcodes(const Codebook& cb, std::size_t count,
                                             std::size_t min_dist, std::uint64_t seed);

/// Random targeted library with a minimum pairwise distance. Used to build
/// benchmark codebooks. Throws InfeasibleDesign.
std::vector<Barcode> generate_library(std::size_t count, std::size_t cycles,
                                      std::size_t min_dist, std::uint64_t seed);

/// Per-position constraint; std::nullopt leaves a cycle free.
using PartialAssignment = std::vector<std::optional<Base>>;

/// Codebook barcodes agreeing with every fixed letter, in insertion order.
std::vector<Barcode> matches_with_fixed(const Codebook& cb, const PartialAssignment& fixed,
                                        Selection selection = Selection::All);

}  // namespace plepi
