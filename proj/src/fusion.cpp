#include "plepi/fusion.hpp"

#include "plepi/error.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace plepi {

void PLePIConfig::validate() const {
    if (!(tau_c >= 0.0 && tau_c <= 1.0 && tau_m >= 0.0 && tau_m <= 1.0))
        throw ConfigError("plepi config: tau_c and tau_m must lie in [0, 1]");
    if (tau_m > tau_c) throw ConfigError("plepi config: tau_m must not exceed tau_c");
    if (top_n < 1 || top_n > kNumBases) throw ConfigError("plepi config: top_n must be in 1..4");
    if (!(match_radius > 0.0)) throw ConfigError("plepi config: match_radius must be positive");
}

std::vector<std::size_t> ConfidencePartition::indices(CycleClass c) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < classes.size(); ++r)
        if (classes[r] == c) out.push_back(r);
    return out;
}

std::size_t ConfidencePartition::count(CycleClass c) const noexcept {
    return static_cast<std::size_t>(std::count(classes.begin(), classes.end(), c));
}

ConfidencePartition partition_confidence(std::span<const Vector4> probs, double tau_c,
                                         double tau_m, std::span<const bool> force_mediocre) {
    if (tau_m > tau_c) throw ConfigError("partition_confidence: tau_m must not exceed tau_c");
    ConfidencePartition out;
    out.classes.resize(probs.size());
    out.argmax.resize(probs.size());
    out.max_prob.resize(probs.size());
    for (std::size_t r = 0; r < probs.size(); ++r) {
        Eigen::Index k = 0;
        for (Eigen::Index c = 1; c < 4; ++c)
            if (probs[r][c] > probs[r][k]) k = c;
        const double m = probs[r][k];
        out.argmax[r] = base_at(static_cast<std::size_t>(k));
        out.max_prob[r] = m;
        if (r < force_mediocre.size() && force_mediocre[r])
            out.classes[r] = CycleClass::Mediocre;
        else if (m > tau_c)
            out.classes[r] = CycleClass::Confident;
        else if (m >= tau_m)
            out.classes[r] = CycleClass::Mediocre;
        else
            out.classes[r] = CycleClass::Discarded;
    }
    return out;
}

std::string_view to_string(LabelSource s) noexcept {
    switch (s) {
        case LabelSource::AllConfident: return "all-confident";
        case LabelSource::CodebookFused: return "codebook-fused";
        case LabelSource::Abstained: return "abstained";
    }
    return "abstained";
}

bool PseudoBarcode::complete() const noexcept {
    return source != LabelSource::Abstained &&
           std::all_of(letters.begin(), letters.end(), [](const auto& l) { return l.has_value(); });
}

Barcode PseudoBarcode::barcode() const {
    if (!complete()) throw DataError("pseudo-barcode is incomplete");
    std::vector<Base> out;
    out.reserve(letters.size());
    for (const auto& l : letters) out.push_back(*l);
    return Barcode(std::move(out));
}

std::uint8_t top_letters(const Vector4& p, std::size_t top_n) noexcept {
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return p[static_cast<Eigen::Index>(a)] > p[static_cast<Eigen::Index>(b)];
    });
    std::uint8_t mask = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(top_n, 4); ++i)
        mask |= static_cast<std::uint8_t>(1u << order[i]);
    return mask;
}

namespace {

PseudoBarcode abstain(const ConfidencePartition& part, std::span<const Vector4> probs) {
    PseudoBarcode pb;
    pb.letters.assign(part.cycles(), std::nullopt);
    pb.score = 1.0;
    bool any = false;
    for (std::size_t r = 0; r < part.cycles(); ++r) {
        if (part.classes[r] != CycleClass::Confident) continue;
        pb.letters[r] = part.argmax[r];
        pb.score *= probs[r][static_cast<Eigen::Index>(index_of(part.argmax[r]))];
        any = true;
    }
    if (!any) pb.score = 0.0;
    pb.source = LabelSource::Abstained;
    return pb;
}

PseudoBarcode all_confident(const ConfidencePartition& part, std::span<const Vector4> probs) {
    PseudoBarcode pb;
    pb.letters.resize(part.cycles());
    pb.score = 1.0;
    for (std::size_t r = 0; r < part.cycles(); ++r) {
        pb.letters[r] = part.argmax[r];
        pb.score *= probs[r][static_cast<Eigen::Index>(index_of(part.argmax[r]))];
    }
    pb.source = LabelSource::AllConfident;
    return pb;
}

}  // namespace

PseudoBarcode confident_only(const ConfidencePartition& partition, std::span<const Vector4> probs) {
    if (partition.count(CycleClass::Confident) == partition.cycles())
        return all_confident(partition, probs);
    return abstain(partition, probs);
}

PseudoBarcode fuse_codebook(const ConfidencePartition& partition, std::span<const Vector4> probs,
                            const Codebook& cb, std::size_t top_n) {
    const std::size_t n = partition.cycles();
    const std::size_t n_conf = partition.count(CycleClass::Confident);
    if (n_conf == n) return all_confident(partition, probs);
    const std::size_t n_med = partition.count(CycleClass::Mediocre);
    if (n_conf + n_med == 0 || cb.cycles() != n) return abstain(partition, probs);

    // Allowed letters per cycle as a bitmask; discarded cycles are free.
    std::vector<std::uint8_t> allowed(n, 0x0F);
    std::vector<std::size_t> scored;
    for (std::size_t r = 0; r < n; ++r) {
        switch (partition.classes[r]) {
            case CycleClass::Confident:
                allowed[r] = static_cast<std::uint8_t>(1u << index_of(partition.argmax[r]));
                scored.push_back(r);
                break;
            case CycleClass::Mediocre:
                allowed[r] = top_letters(probs[r], top_n);
                scored.push_back(r);
                break;
            case CycleClass::Discarded: break;
        }
    }

    std::optional<std::size_t> best;
    double best_score = -1.0;
    for (std::size_t i = 0; i < cb.size(); ++i) {
        const auto letters = cb.letters(i);
        bool ok = true;
        for (std::size_t r = 0; r < n; ++r)
            if (!(allowed[r] >> index_of(letters[r]) & 1u)) {
                ok = false;
                break;
            }
        if (!ok) continue;
        double score = 1.0;
        for (std::size_t r : scored) score *= probs[r][static_cast<Eigen::Index>(index_of(letters[r]))];
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    if (!best) return abstain(partition, probs);

    PseudoBarcode pb;
    const auto letters = cb.letters(*best);
    pb.letters.assign(letters.begin(), letters.end());
    pb.score = best_score;
    pb.source = LabelSource::CodebookFused;
    return pb;
}

double track_sequence_probability(std::span<const Vector4> probs) noexcept {
    double p = 1.0;
    for (const auto& v : probs) p *= v.maxCoeff();
    return p;
}

}  // namespace plepi
