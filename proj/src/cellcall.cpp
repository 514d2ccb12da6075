#include "plepi/cellcall.hpp"

#include "io_util.hpp"
#include "plepi/error.hpp"

#include <map>
#include <tuple>

namespace plepi {

std::vector<CellCall> call_cells(std::span<const SpotCall> spots, std::span<const Cell> cells,
                                 double min_score) {
    std::vector<CellCall> out(cells.size());
    std::map<std::size_t, std::vector<std::size_t>> cells_by_field;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out[i].cell_id = cells[i].id;
        cells_by_field[cells[i].field].push_back(i);
    }
    // Winning spot per cell, compared by (score desc, field asc, track asc).
    std::vector<const SpotCall*> best(cells.size(), nullptr);
    for (const auto& s : spots) {
        if (!s.assigned() || s.score < min_score) continue;
        const auto it = cells_by_field.find(s.field);
        if (it == cells_by_field.end()) continue;
        for (std::size_t ci : it->second) {
            if (!contains(cells[ci].mask, s.position)) continue;
            ++out[ci].support;
            const SpotCall* cur = best[ci];
            if (!cur || s.score > cur->score ||
                (s.score == cur->score &&
                 std::tie(s.field, s.track) < std::tie(cur->field, cur->track)))
                best[ci] = &s;
            break;
        }
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!best[i]) continue;
        out[i].barcode = best[i]->barcode;
        out[i].score = best[i]->score;
    }
    return out;
}

std::string serialize_spot_calls(std::span<const SpotCall> calls) {
    using detail::format_double;
    std::string out = "field,track,x,y,barcode,score,source\n";
    for (const auto& c : calls) {
        out += std::to_string(c.field) + ',' + std::to_string(c.track) + ',' +
               format_double(c.position.x) + ',' + format_double(c.position.y) + ',' +
               (c.barcode ? c.barcode->str() : std::string{}) + ',' + format_double(c.score) + ',' +
               std::string(to_string(c.source)) + '\n';
    }
    return out;
}

namespace {

LabelSource parse_source(std::string_view s) {
    if (s == "all-confident") return LabelSource::AllConfident;
    if (s == "codebook-fused") return LabelSource::CodebookFused;
    if (s == "abstained") return LabelSource::Abstained;
    throw DataError("unknown label source '" + std::string(s) + "'");
}

}  // namespace

std::vector<SpotCall> parse_spot_calls(std::string_view text) {
    std::vector<SpotCall> out;
    for (auto line : detail::lines(text)) {
        const auto cols = detail::split(line);
        if (cols[0] == "field") continue;
        if (cols.size() != 7) throw DataError("spot calls: malformed row '" + std::string(line) + "'");
        SpotCall c;
        c.field = static_cast<std::size_t>(detail::to_integer(cols[0]));
        c.track = static_cast<std::size_t>(detail::to_integer(cols[1]));
        c.position = {detail::to_double(cols[2]), detail::to_double(cols[3])};
        if (!cols[4].empty()) c.barcode = Barcode::from_string(cols[4]);
        c.score = detail::to_double(cols[5]);
        c.source = parse_source(cols[6]);
        out.push_back(std::move(c));
    }
    return out;
}

std::string serialize_cell_calls(std::span<const CellCall> calls) {
    std::string out = "cell,barcode,score,support\n";
    for (const auto& c : calls)
        out += std::to_string(c.cell_id) + ',' + (c.barcode ? c.barcode->str() : std::string{}) + ',' +
               detail::format_double(c.score) + ',' + std::to_string(c.support) + '\n';
    return out;
}

std::vector<CellCall> parse_cell_calls(std::string_view text) {
    std::vector<CellCall> out;
    for (auto line : detail::lines(text)) {
        const auto cols = detail::split(line);
        if (cols[0] == "cell") continue;
        if (cols.size() != 4) throw DataError("cell calls: malformed row '" + std::string(line) + "'");
        CellCall c;
        c.cell_id = static_cast<std::size_t>(detail::to_integer(cols[0]));
        if (!cols[1].empty()) c.barcode = Barcode::from_string(cols[1]);
        c.score = detail::to_double(cols[2]);
        c.support = static_cast<std::size_t>(detail::to_integer(cols[3]));
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace plepi
