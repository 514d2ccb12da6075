#include "plepi/codebook.hpp"

#include "plepi/error.hpp"
#include "plepi/rng.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace plepi {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

EntryKind parse_kind(std::string_view s, std::size_t line_no) {
    if (s == "targeted") return EntryKind::Targeted;
    if (s == "trick") return EntryKind::Trick;
    throw DataError("codebook line " + std::to_string(line_no) + ": kind must be 'targeted' or 'trick'");
}

Barcode barcode_from_index(std::uint64_t index, std::size_t cycles) {
    std::vector<Base> letters(cycles);
    for (std::size_t i = cycles; i-- > 0;) {
        letters[i] = base_at(index % kNumBases);
        index /= kNumBases;
    }
    return Barcode(std::move(letters));
}

Barcode random_barcode(Rng& rng, std::size_t cycles) {
    std::vector<Base> letters(cycles);
    for (auto& l : letters) l = base_at(uniform_index(rng, kNumBases));
    return Barcode(std::move(letters));
}

std::size_t min_distance(const Barcode& b, const std::vector<Barcode>& set) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (const auto& s : set) best = std::min(best, hamming(b, s));
    return best;
}

constexpr std::size_t kMaxRejections = 100000;

}  // namespace

std::string_view to_string(EntryKind kind) noexcept {
    return kind == EntryKind::Targeted ? "targeted" : "trick";
}

Codebook::Codebook(std::vector<CodebookEntry> entries) : entries_(std::move(entries)) {
    if (!entries_.empty()) cycles_ = entries_.front().barcode.size();
    packed_.reserve(entries_.size() * cycles_);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& b = entries_[i].barcode;
        if (b.size() != cycles_)
            throw LengthMismatch("codebook entry " + b.str() + " has length " +
                                 std::to_string(b.size()) + ", expected " + std::to_string(cycles_));
        if (!index_.emplace(b, i).second)
            throw DuplicateEntry("duplicate codebook barcode " + b.str());
        packed_.insert(packed_.end(), b.begin(), b.end());
    }
}

std::vector<Barcode> Codebook::targeted() const {
    std::vector<Barcode> out;
    for (const auto& e : entries_)
        if (e.kind == EntryKind::Targeted) out.push_back(e.barcode);
    return out;
}

std::vector<Barcode> Codebook::trick() const {
    std::vector<Barcode> out;
    for (const auto& e : entries_)
        if (e.kind == EntryKind::Trick) out.push_back(e.barcode);
    return out;
}

std::optional<std::size_t> Codebook::find(const Barcode& b) const {
    const auto it = index_.find(b);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<EntryKind> Codebook::kind_of(const Barcode& b) const {
    const auto i = find(b);
    if (!i) return std::nullopt;
    return entries_[*i].kind;
}

Codebook parse_codebook(std::string_view text) {
    std::vector<CodebookEntry> entries;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto cols = split_commas(line);
        if (line_no == 1 && cols[0] == "barcode") continue;
        if (cols.size() != 3)
            throw DataError("codebook line " + std::to_string(line_no) +
                            ": expected 3 columns barcode,name,kind");
        entries.push_back({Barcode::from_string(cols[0]), std::string(cols[1]),
                           parse_kind(cols[2], line_no)});
    }
    return Codebook(std::move(entries));
}

std::string serialize_codebook(const Codebook& cb) {
    std::string out = "barcode,name,kind\n";
    for (const auto& e : cb.entries()) {
        out += e.barcode.str();
        out += ',';
        out += e.name;
        out += ',';
        out += to_string(e.kind);
        out += '\n';
    }
    return out;
}

Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open codebook file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_codebook(ss.str());
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write codebook file " + path.string());
    out << serialize_codebook(cb);
}

std::vector<Barcode> generate_trick_barcodes(const Codebook& cb, std::size_t count,
                                             std::size_t min_dist, std::uint64_t seed) {
    const std::size_t cycles = cb.cycles();
    if (count == 0) throw ConfigError("generate_trick_barcodes: count must be >= 1");
    if (cycles == 0) throw ConfigError("generate_trick_barcodes: empty codebook");
    if (min_dist > cycles)
        throw InfeasibleDesign("min_dist " + std::to_string(min_dist) + " exceeds barcode length " +
                               std::to_string(cycles));

    std::vector<Barcode> avoid;
    for (const auto& e : cb.entries()) avoid.push_back(e.barcode);

    std::vector<Barcode> chosen;
    Rng rng{seed};
    std::size_t failures = 0;
    while (chosen.size() < count && failures < kMaxRejections) {
        auto candidate = random_barcode(rng, cycles);
        if (min_distance(candidate, avoid) >= min_dist) {
            avoid.push_back(candidate);
            chosen.push_back(std::move(candidate));
            failures = 0;
        } else {
            ++failures;
        }
    }
    if (chosen.size() == count) return chosen;

    // Greedy farthest-point selection over a candidate pool.
    std::vector<Barcode> pool;
    if (cycles <= 10) {
        const std::uint64_t total = std::uint64_t{1} << (2 * cycles);
        pool.reserve(total);
        for (std::uint64_t i = 0; i < total; ++i) pool.push_back(barcode_from_index(i, cycles));
    } else {
        pool.reserve(std::size_t{1} << 18);
        for (std::size_t i = 0; i < (std::size_t{1} << 18); ++i)
            pool.push_back(random_barcode(rng, cycles));
    }
    std::vector<std::size_t> dist(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) dist[i] = min_distance(pool[i], avoid);
    while (chosen.size() < count) {
        const auto best = std::max_element(dist.begin(), dist.end()) - dist.begin();
        if (dist[best] < min_dist)
            throw InfeasibleDesign("cannot place " + std::to_string(count) +
                                   " trick barcodes at distance >= " + std::to_string(min_dist));
        chosen.push_back(pool[best]);
        for (std::size_t i = 0; i < pool.size(); ++i)
            dist[i] = std::min(dist[i], hamming(pool[i], pool[best]));
    }
    return chosen;
}

std::vector<Barcode> generate_library(std::size_t count, std::size_t cycles, std::size_t min_dist,
                                      std::uint64_t seed) {
    if (min_dist > cycles) throw InfeasibleDesign("min_dist exceeds barcode length");
    std::vector<Barcode> out;
    Rng rng{seed};
    std::size_t failures = 0;
    while (out.size() < count) {
        auto candidate = random_barcode(rng, cycles);
        if (out.empty() || min_distance(candidate, out) >= std::max<std::size_t>(min_dist, 1)) {
            out.push_back(std::move(candidate));
            failures = 0;
        } else if (++failures >= kMaxRejections) {
            throw InfeasibleDesign("cannot draw " + std::to_string(count) +
                                   " barcodes at pairwise distance >= " + std::to_string(min_dist));
        }
    }
    return out;
}

std::vector<Barcode> matches_with_fixed(const Codebook& cb, const PartialAssignment& fixed,
                                        Selection selection) {
    std::vector<Barcode> out;
    for (std::size_t i = 0; i < cb.size(); ++i) {
        const auto& e = cb[i];
        if (selection == Selection::Targeted && e.kind != EntryKind::Targeted) continue;
        if (selection == Selection::Trick && e.kind != EntryKind::Trick) continue;
        const auto letters = cb.letters(i);
        bool ok = true;
        for (std::size_t p = 0; p < fixed.size() && ok; ++p)
            if (fixed[p] && (p >= letters.size() || letters[p] != *fixed[p])) ok = false;
        if (ok) out.push_back(e.barcode);
    }
    return out;
}

}  // namespace plepi
