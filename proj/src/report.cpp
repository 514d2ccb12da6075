#include "plepi/report.hpp"

#include "io_util.hpp"
#include "plepi/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace plepi {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

json level_json(const LevelMetrics& m) {
    return {{"ppv", opt(m.ppv)},
            {"fdr_trick", opt(m.fdr_trick)},
            {"fdr_other", opt(m.fdr_other)},
            {"targeted", m.counts.targeted},
            {"trick", m.counts.trick},
            {"other", m.counts.other}};
}

LevelMetrics level_from(const json& j) {
    LevelMetrics m;
    m.ppv = opt_from(j, "ppv");
    m.fdr_trick = opt_from(j, "fdr_trick");
    m.fdr_other = opt_from(j, "fdr_other");
    m.counts.targeted = j.at("targeted").get<std::size_t>();
    m.counts.trick = j.at("trick").get<std::size_t>();
    m.counts.other = j.at("other").get<std::size_t>();
    return m;
}

std::string fmt(const std::optional<double>& v, int digits = 4) {
    if (!v) return "undefined";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
    return buf;
}

}  // namespace

std::string emit_report(const MetricsReport& rep, ReportFormat format) {
    if (format == ReportFormat::Json) {
        json counts = json::array();
        for (const auto& r : rep.counts)
            counts.push_back({{"barcode", r.barcode.str()},
                              {"kind", std::string(to_string(r.kind))},
                              {"reference", r.reference},
                              {"reference_cells", r.reference_cells},
                              {"called_spots", r.called_spots},
                              {"called_cells", r.called_cells}});
        json history = json::array();
        for (const auto& h : rep.history) history.push_back(json::parse(h.to_json_line()));
        const json doc = {{"schema_version", MetricsReport::kSchemaVersion},
                          {"r2", opt(rep.r2)},
                          {"r2_frequency", opt(rep.r2_frequency)},
                          {"r2_cell", opt(rep.r2_cell)},
                          {"cell_recovery_rate", opt(rep.cell_recovery_rate)},
                          {"cell", level_json(rep.cell)},
                          {"spot", level_json(rep.spot)},
                          {"fdr_ratio_spot", opt(rep.fdr_ratio_spot)},
                          {"spot_accuracy", opt(rep.spot_accuracy)},
                          {"letter_accuracy", opt(rep.letter_accuracy)},
                          {"total_cells", rep.total_cells},
                          {"assigned_cells", rep.assigned_cells},
                          {"spot_calls", rep.spot_calls},
                          {"truth_spots", rep.truth_spots},
                          {"undefined", rep.undefined()},
                          {"counts", std::move(counts)},
                          {"history", std::move(history)}};
        return doc.dump(2) + "\n";
    }
    std::ostringstream os;
    os << "metric                 value\n"
       << "---------------------  ----------\n"
       << "NGS match R^2          " << fmt(rep.r2) << "\n"
       << "R^2 (frequencies)      " << fmt(rep.r2_frequency) << "\n"
       << "R^2 (cell counts)      " << fmt(rep.r2_cell) << "\n"
       << "cell recovery rate     " << fmt(rep.cell_recovery_rate) << "\n"
       << "PPV cell / spot        " << fmt(rep.cell.ppv) << " / " << fmt(rep.spot.ppv) << "\n"
       << "FDR_trick cell / spot  " << fmt(rep.cell.fdr_trick) << " / " << fmt(rep.spot.fdr_trick) << "\n"
       << "FDR_other cell / spot  " << fmt(rep.cell.fdr_other) << " / " << fmt(rep.spot.fdr_other) << "\n"
       << "FDR ratio (spot)       " << fmt(rep.fdr_ratio_spot) << "\n"
       << "spot barcode accuracy  " << fmt(rep.spot_accuracy) << "\n"
       << "letter accuracy        " << fmt(rep.letter_accuracy) << "\n"
       << "cells assigned         " << rep.assigned_cells << " / " << rep.total_cells << "\n"
       << "spot calls             " << rep.spot_calls << " (truth spots " << rep.truth_spots << ")\n";
    if (!rep.history.empty()) {
        os << "\nround  steps  fg_tracks  fused  abstained  heldout_acc\n";
        for (const auto& h : rep.history) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%5zu  %5zu  %9zu  %5zu  %9zu  %s\n", h.round, h.steps,
                          h.foreground_tracks, h.codebook_fused, h.abstained,
                          fmt(h.heldout_accuracy).c_str());
            os << buf;
        }
    }
    return os.str();
}

MetricsReport report_from_json(std::string_view text) {
    try {
        const json doc = json::parse(text);
        if (doc.at("schema_version").get<int>() != MetricsReport::kSchemaVersion)
            throw DataError("report: unsupported schema version");
        MetricsReport rep;
        rep.r2 = opt_from(doc, "r2");
        rep.r2_frequency = opt_from(doc, "r2_frequency");
        rep.r2_cell = opt_from(doc, "r2_cell");
        rep.cell_recovery_rate = opt_from(doc, "cell_recovery_rate");
        rep.cell = level_from(doc.at("cell"));
        rep.spot = level_from(doc.at("spot"));
        rep.fdr_ratio_spot = opt_from(doc, "fdr_ratio_spot");
        rep.spot_accuracy = opt_from(doc, "spot_accuracy");
        rep.letter_accuracy = opt_from(doc, "letter_accuracy");
        rep.total_cells = doc.at("total_cells").get<std::size_t>();
        rep.assigned_cells = doc.at("assigned_cells").get<std::size_t>();
        rep.spot_calls = doc.at("spot_calls").get<std::size_t>();
        rep.truth_spots = doc.at("truth_spots").get<std::size_t>();
        for (const auto& r : doc.at("counts")) {
            CountRow row;
            row.barcode = Barcode::from_string(r.at("barcode").get<std::string>());
            row.kind = r.at("kind").get<std::string>() == "trick" ? EntryKind::Trick : EntryKind::Targeted;
            row.reference = r.at("reference").get<std::size_t>();
            row.reference_cells = r.at("reference_cells").get<std::size_t>();
            row.called_spots = r.at("called_spots").get<std::size_t>();
            row.called_cells = r.at("called_cells").get<std::size_t>();
            rep.counts.push_back(std::move(row));
        }
        for (const auto& h : doc.at("history")) {
            RoundRecord rec;
            rec.round = h.at("round").get<std::size_t>();
            rec.steps = h.at("steps").get<std::size_t>();
            rec.tracks = h.at("tracks").get<std::size_t>();
            rec.foreground_tracks = h.at("foreground_tracks").get<std::size_t>();
            rec.all_confident = h.at("all_confident").get<std::size_t>();
            rec.codebook_fused = h.at("codebook_fused").get<std::size_t>();
            rec.abstained = h.at("abstained").get<std::size_t>();
            rec.pseudo_labels = h.at("pseudo_labels").get<std::size_t>();
            rec.fused_labels = h.at("fused_labels").get<std::size_t>();
            rec.abstention_rate = h.at("abstention_rate").get<double>();
            rec.heldout_accuracy = opt_from(h, "heldout_accuracy");
            rep.history.push_back(rec);
        }
        return rep;
    } catch (const json::exception& e) {
        throw DataError(std::string("report: ") + e.what());
    }
}

namespace {

constexpr double kW = 480, kH = 360, kPad = 48;

std::string svg_open(const char* title) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
       << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
       << "</text>\n"
       << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\""
       << kH - kPad << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\"" << kH - kPad
       << "\" stroke=\"black\"/>\n";
    return os.str();
}

}  // namespace

std::string abundance_scatter_svg(const MetricsReport& rep) {
    double max_v = 1.0;
    for (const auto& r : rep.counts)
        if (r.kind == EntryKind::Targeted)
            max_v = std::max({max_v, static_cast<double>(r.reference), static_cast<double>(r.called_spots)});
    std::ostringstream os;
    os << svg_open("called vs reference spot counts");
    const double span = kW - 2 * kPad;
    const double vspan = kH - 2 * kPad;
    os << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kPad + span << "\" y2=\""
       << kH - kPad - vspan << "\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n";
    for (const auto& r : rep.counts) {
        if (r.kind != EntryKind::Targeted) continue;
        const double x = kPad + span * static_cast<double>(r.reference) / max_v;
        const double y = kH - kPad - vspan * static_cast<double>(r.called_spots) / max_v;
        os << "<circle class=\"barcode\" cx=\"" << detail::format_double(x) << "\" cy=\""
           << detail::format_double(y) << "\" r=\"3\" fill=\"steelblue\"><title>" << r.barcode.str()
           << "</title></circle>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string accuracy_curve_svg(const MetricsReport& rep) {
    std::ostringstream os;
    os << svg_open("held-out letter accuracy per round");
    std::vector<std::pair<double, double>> pts;
    for (const auto& h : rep.history)
        if (h.heldout_accuracy) pts.emplace_back(static_cast<double>(h.round), *h.heldout_accuracy);
    if (!pts.empty()) {
        const double max_round = std::max(1.0, pts.back().first);
        os << "<polyline fill=\"none\" stroke=\"darkorange\" points=\"";
        for (const auto& [r, a] : pts)
            os << detail::format_double(kPad + (kW - 2 * kPad) * r / max_round) << ','
               << detail::format_double(kH - kPad - (kH - 2 * kPad) * a) << ' ';
        os << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace plepi
