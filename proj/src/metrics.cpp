#include "plepi/metrics.hpp"

#include "plepi/error.hpp"

#include <algorithm>
#include <map>

namespace plepi {

namespace {

std::size_t lookup(const AbundanceTable& t, const Barcode& b) {
    const auto it = t.find(b);
    return it == t.end() ? 0 : it->second;
}

double r2_of(const std::vector<double>& called, const std::vector<double>& ref) {
    double mean = 0.0;
    for (double v : ref) mean += v;
    mean /= static_cast<double>(ref.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        ss_res += (called[i] - ref[i]) * (called[i] - ref[i]);
        ss_tot += (ref[i] - mean) * (ref[i] - mean);
    }
    if (!(ss_tot > 0.0)) throw UndefinedMetric("R^2: reference has zero variance");
    return 1.0 - ss_res / ss_tot;
}

std::vector<Barcode> union_keys(const AbundanceTable& ref, std::span<const Barcode> universe) {
    std::vector<Barcode> keys(universe.begin(), universe.end());
    for (const auto& [b, n] : ref)
        if (std::find(keys.begin(), keys.end(), b) == keys.end()) keys.push_back(b);
    return keys;
}

}  // namespace

double abundance_r2(const AbundanceTable& called, const AbundanceTable& reference,
                    std::span<const Barcode> universe) {
    const auto keys = union_keys(reference, universe);
    std::vector<double> c, r;
    double total = 0.0;
    for (const auto& b : keys) {
        c.push_back(static_cast<double>(lookup(called, b)));
        r.push_back(static_cast<double>(lookup(reference, b)));
        total += r.back();
    }
    if (keys.empty() || !(total > 0.0)) throw UndefinedMetric("R^2: reference total is zero");
    return r2_of(c, r);
}

double abundance_r2_frequency(const AbundanceTable& called, const AbundanceTable& reference,
                              std::span<const Barcode> universe) {
    const auto keys = union_keys(reference, universe);
    std::vector<double> c, r;
    double tc = 0.0, tr = 0.0;
    for (const auto& b : keys) {
        c.push_back(static_cast<double>(lookup(called, b)));
        r.push_back(static_cast<double>(lookup(reference, b)));
        tc += c.back();
        tr += r.back();
    }
    if (keys.empty() || !(tr > 0.0)) throw UndefinedMetric("R^2: reference total is zero");
    if (!(tc > 0.0)) throw UndefinedMetric("R^2: no called barcodes to normalize");
    for (auto& v : c) v /= tc;
    for (auto& v : r) v /= tr;
    return r2_of(c, r);
}

double cell_recovery_rate(std::span<const CellCall> calls, std::size_t total_cells) {
    if (total_cells == 0) throw UndefinedMetric("cell recovery: no cells");
    const auto assigned = std::count_if(calls.begin(), calls.end(),
                                        [](const CellCall& c) { return c.barcode.has_value(); });
    return static_cast<double>(assigned) / static_cast<double>(total_cells);
}

CallCounts categorize(std::span<const Barcode> calls, const Codebook& cb) {
    CallCounts c;
    for (const auto& b : calls) {
        const auto kind = cb.kind_of(b);
        if (!kind)
            ++c.other;
        else if (*kind == EntryKind::Targeted)
            ++c.targeted;
        else
            ++c.trick;
    }
    return c;
}

PpvFdr ppv_fdr(std::span<const Barcode> calls, const Codebook& cb) {
    PpvFdr out;
    out.counts = categorize(calls, cb);
    const auto n = out.counts.total();
    if (n == 0) throw UndefinedMetric("PPV/FDR: no assigned calls");
    const double dn = static_cast<double>(n);
    out.ppv = static_cast<double>(out.counts.targeted) / dn;
    out.fdr_trick = static_cast<double>(out.counts.trick) / dn;
    out.fdr_other = static_cast<double>(out.counts.other) / dn;
    return out;
}

double fdr_ratio(const CallCounts& counts, const Codebook& cb) {
    const auto n_trick = cb.trick().size();
    if (counts.total() == 0 || n_trick == 0)
        throw UndefinedMetric("FDR ratio: needs calls and trick entries");
    const double call_rate = static_cast<double>(counts.trick) / static_cast<double>(counts.total());
    const double book_rate = static_cast<double>(n_trick) / static_cast<double>(cb.size());
    return call_rate / book_rate;
}

std::vector<std::string> MetricsReport::undefined() const {
    std::vector<std::string> out;
    auto check = [&](const std::optional<double>& v, const char* name) {
        if (!v) out.emplace_back(name);
    };
    check(r2, "r2");
    check(r2_frequency, "r2_frequency");
    check(r2_cell, "r2_cell");
    check(cell_recovery_rate, "cell_recovery_rate");
    check(cell.ppv, "ppv_cell");
    check(cell.fdr_trick, "fdr_trick_cell");
    check(cell.fdr_other, "fdr_other_cell");
    check(spot.ppv, "ppv_spot");
    check(spot.fdr_trick, "fdr_trick_spot");
    check(spot.fdr_other, "fdr_other_spot");
    check(fdr_ratio_spot, "fdr_ratio_spot");
    check(spot_accuracy, "spot_accuracy");
    check(letter_accuracy, "letter_accuracy");
    return out;
}

namespace {

template <class Fn>
std::optional<double> guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const UndefinedMetric&) {
        return std::nullopt;
    }
}

LevelMetrics level(std::span<const Barcode> calls, const Codebook& cb) {
    LevelMetrics m;
    m.counts = categorize(calls, cb);
    if (m.counts.total() > 0) {
        const auto r = ppv_fdr(calls, cb);
        m.ppv = r.ppv;
        m.fdr_trick = r.fdr_trick;
        m.fdr_other = r.fdr_other;
    }
    return m;
}

}  // namespace

MetricsReport evaluate(const EvaluationInput& in, const Codebook& cb) {
    MetricsReport rep;
    std::vector<Barcode> spot_barcodes, cell_barcodes;
    AbundanceTable called_spots, called_cells;
    for (const auto& s : in.spot_calls)
        if (s.barcode) {
            spot_barcodes.push_back(*s.barcode);
            if (cb.kind_of(*s.barcode) == EntryKind::Targeted) ++called_spots[*s.barcode];
        }
    for (const auto& c : in.cell_calls)
        if (c.barcode) {
            cell_barcodes.push_back(*c.barcode);
            if (cb.kind_of(*c.barcode) == EntryKind::Targeted) ++called_cells[*c.barcode];
        }
    const auto targeted = cb.targeted();

    rep.r2 = guarded([&] { return abundance_r2(called_spots, in.reference, targeted); });
    rep.r2_frequency = guarded([&] { return abundance_r2_frequency(called_spots, in.reference, targeted); });
    rep.r2_cell = guarded([&] { return abundance_r2(called_cells, in.reference_cells, targeted); });
    rep.total_cells = in.cells.size();
    rep.assigned_cells = cell_barcodes.size();
    rep.spot_calls = spot_barcodes.size();
    rep.truth_spots = in.truth_spots;
    rep.cell_recovery_rate = guarded([&] { return cell_recovery_rate(in.cell_calls, in.cells.size()); });
    rep.cell = level(cell_barcodes, cb);
    rep.spot = level(spot_barcodes, cb);
    rep.fdr_ratio_spot = guarded([&] { return fdr_ratio(rep.spot.counts, cb); });
    rep.spot_accuracy = in.spot_accuracy;
    rep.letter_accuracy = in.letter_accuracy;

    for (const auto& e : cb.entries()) {
        CountRow row;
        row.barcode = e.barcode;
        row.kind = e.kind;
        row.reference = lookup(in.reference, e.barcode);
        row.reference_cells = lookup(in.reference_cells, e.barcode);
        row.called_spots = static_cast<std::size_t>(
            std::count(spot_barcodes.begin(), spot_barcodes.end(), e.barcode));
        row.called_cells = static_cast<std::size_t>(
            std::count(cell_barcodes.begin(), cell_barcodes.end(), e.barcode));
        rep.counts.push_back(std::move(row));
    }
    return rep;
}

}  // namespace plepi
