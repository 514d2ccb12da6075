#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace plepi {

/// One base letter. The numeric value doubles as the imaging channel index.
enum class Base : std::uint8_t { A = 0, C = 1, G = 2, T = 3 };

inline constexpr std::size_t kNumBases = 4;
inline constexpr std::array<char, kNumBases> kAlphabet{'A', 'C', 'G', 'T'};

constexpr char to_char(Base b) noexcept { return kAlphabet[static_cast<std::size_t>(b)]; }
constexpr std::size_t index_of(Base b) noexcept { return static_cast<std::size_t>(b); }
constexpr Base base_at(std::size_t i) noexcept { return static_cast<Base>(i); }

/// Parses one of A, C, G, T. Throws BadAlphabet otherwise.
Base base_from_char(char c);

/// A fixed-length sequence of base letters, one per imaging cycle.
class Barcode {
public:
    Barcode() = default;
    explicit Barcode(std::vector<Base> letters) : letters_(std::move(letters)) {}

    /// Throws BadAlphabet on any symbol outside {A, C, G, T}.
    static Barcode from_string(std::string_view text);

    std::string str() const;

    std::size_t size() const noexcept { return letters_.size(); }
    bool empty() const noexcept { return letters_.empty(); }
    Base operator[](std::size_t i) const noexcept { return letters_[i]; }
    Base& operator[](std::size_t i) noexcept { return letters_[i]; }
    const std::vector<Base>& letters() const noexcept { return letters_; }

    auto begin() const noexcept { return letters_.begin(); }
    auto end() const noexcept { return letters_.end(); }

    friend bool operator==(const Barcode&, const Barcode&) = default;
    friend auto operator<=>(const Barcode&, const Barcode&) = default;

private:
    std::vector<Base> letters_;
};

/// Number of positions where the letters differ. Throws LengthMismatch.
std::size_t hamming(const Barcode& a, const Barcode& b);

}  // namespace plepi

template <>
struct std::hash<plepi::Barcode> {
    std::size_t operator()(const plepi::Barcode& b) const noexcept {
        std::size_t h = 1469598103934665603ULL;
        for (auto l : b) {
            h ^= static_cast<std::size_t>(l) + 1;
            h *= 1099511628211ULL;
        }
        return h;
    }
};
