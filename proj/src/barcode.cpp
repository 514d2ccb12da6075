#include "plepi/barcode.hpp"

#include "plepi/error.hpp"

namespace plepi {

Base base_from_char(char c) {
    switch (c) {
        case 'A': return Base::A;
        case 'C': return Base::C;
        case 'G': return Base::G;
        case 'T': return Base::T;
        default: break;
    }
    throw BadAlphabet(std::string("invalid base symbol '") + c + "'");
}

Barcode Barcode::from_string(std::string_view text) {
    std::vector<Base> letters;
    letters.reserve(text.size());
    for (char c : text) letters.push_back(base_from_char(c));
    return Barcode(std::move(letters));
}

std::string Barcode::str() const {
    std::string s;
    s.reserve(letters_.size());
    for (auto l : letters_) s.push_back(to_char(l));
    return s;
}

std::size_t hamming(const Barcode& a, const Barcode& b) {
    if (a.size() != b.size())
        throw LengthMismatch("hamming: lengths " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()) + " differ");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

}  // namespace plepi
