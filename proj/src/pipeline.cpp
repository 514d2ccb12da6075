#include "plepi/pipeline.hpp"

#include "io_util.hpp"
#include "plepi/error.hpp"
#include "plepi/parallel.hpp"
#include "plepi/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace plepi {

TileSource rendered_tiles(const GroundTruthWell& well, const SimConfig& cfg) {
    return [&well, cfg](std::size_t field) { return render_field(well, cfg, field); };
}

TileSource stored_tiles(const std::filesystem::path& dir, std::size_t n_cycles) {
    return [dir, n_cycles](std::size_t field) {
        std::vector<Tile> tiles;
        tiles.reserve(n_cycles);
        for (std::size_t r = 0; r < n_cycles; ++r) {
            const auto stem = tile_stem(dir, field, r);
            if (!std::filesystem::exists(stem.string() + ".bin"))
                throw ConfigError("missing tile " + stem.string() + ".bin");
            tiles.push_back(read_tile(stem));
        }
        return tiles;
    };
}

std::vector<Detection> annotate_field(std::span<const Tile> tiles, Quality q, const RunConfig& cfg) {
    std::vector<Detection> out;
    if (q == Quality::Lq) {
        const double thr = cfg.lq_threshold_value();
        for (const auto& t : tiles) {
            auto d = detect_spots_lq(t, thr);
            out.insert(out.end(), d.begin(), d.end());
        }
    } else {
        for (auto& d : detect_spots_hq(tiles, cfg.hq)) out.insert(out.end(), d.begin(), d.end());
    }
    return out;
}

std::vector<Detection> corrupt(std::vector<Detection> dets, Quality q, const RunConfig& cfg) {
    return corrupt_labels(std::move(dets), cfg.flip_rate,
                          substream_seed(cfg.seed, "corrupt", q == Quality::Lq ? 0 : 1));
}

namespace {

void append_features(LabeledSet& set, std::span<const Detection> dets, std::span<const Tile> tiles,
                     double background) {
    const auto base = set.features.cols();
    set.features.conservativeResize(kFeatureDim, base + static_cast<Eigen::Index>(dets.size()));
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const auto& d = dets[i];
        if (d.cycle >= tiles.size()) throw IncompleteField("label refers to a missing cycle");
        set.features.col(base + static_cast<Eigen::Index>(i)) =
            featurize(tiles[d.cycle].sample(d.position), background);
        set.letters.push_back(d.letter);
    }
}

}  // namespace

LabeledSet labeled_set(std::span<const Detection> dets, const TileSource& tiles, double background) {
    LabeledSet set;
    set.features.resize(kFeatureDim, 0);
    std::size_t i = 0;
    while (i < dets.size()) {
        std::size_t j = i;
        while (j < dets.size() && dets[j].field == dets[i].field) ++j;
        const auto field_tiles = tiles(dets[i].field);
        append_features(set, dets.subspan(i, j - i), field_tiles, background);
        i = j;
    }
    return set;
}

std::vector<SpotTrack> candidate_tracks(std::span<const Tile> tiles, const RunConfig& cfg) {
    std::vector<Detection> dets;
    const double thr = cfg.detect_threshold_value();
    for (const auto& t : tiles) {
        auto d = detect_spots_lq(t, thr);
        dets.insert(dets.end(), d.begin(), d.end());
    }
    TrackParams p;
    p.n_cycles = cfg.sim.n_cycles;
    p.radius = cfg.plepi.match_radius;
    p.objectness_threshold = cfg.objectness_threshold_value();
    return build_tracks(dets, p, tiles);
}

Workspace prepare(const RunConfig& cfg, const Codebook& cb, std::span<const Quality> qualities) {
    cfg.validate();
    Workspace ws;
    ws.well = simulate_well(cfg.sim, cb);
    const auto source = rendered_tiles(ws.well, cfg.sim);
    const double bg = cfg.sim.background_level;

    enum class Role { Labeled, Unlabeled, Test };
    std::vector<std::pair<std::size_t, Role>> jobs;
    for (auto f : cfg.labeled_fields) jobs.emplace_back(f, Role::Labeled);
    for (auto f : cfg.unlabeled_fields) jobs.emplace_back(f, Role::Unlabeled);
    for (auto f : cfg.test_fields) jobs.emplace_back(f, Role::Test);

    struct Slot {
        std::map<Quality, std::vector<Detection>> labels;
        std::map<Quality, LabeledSet> features;
        std::vector<SpotTrack> tracks;
    };
    std::vector<Slot> slots(jobs.size());
    parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
        const auto [field, role] = jobs[i];
        const auto tiles = source(field);
        auto& s = slots[i];
        if (role == Role::Labeled) {
            for (auto q : qualities) {
                auto dets = annotate_field(tiles, q, cfg);
                LabeledSet set;
                set.features.resize(kFeatureDim, 0);
                append_features(set, dets, tiles, bg);
                s.labels[q] = std::move(dets);
                s.features[q] = std::move(set);
            }
        } else {
            s.tracks = candidate_tracks(tiles, cfg);
        }
    });

    for (auto q : qualities) {
        std::vector<Detection> all;
        LabeledSet set;
        set.features.resize(kFeatureDim, 0);
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (jobs[i].second != Role::Labeled) continue;
            auto& d = slots[i].labels[q];
            all.insert(all.end(), d.begin(), d.end());
            const auto& f = slots[i].features[q];
            const auto base = set.features.cols();
            set.features.conservativeResize(kFeatureDim, base + f.features.cols());
            set.features.rightCols(f.features.cols()) = f.features;
        }
        all = corrupt(std::move(all), q, cfg);
        for (const auto& d : all) set.letters.push_back(d.letter);
        ws.labels[q] = std::move(all);
        ws.labeled[q] = std::move(set);
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].second == Role::Unlabeled) ws.unlabeled.push_back(std::move(slots[i].tracks));
        if (jobs[i].second == Role::Test) ws.test.push_back(std::move(slots[i].tracks));
    }
    return ws;
}

Decoded decode(const Model& model, std::vector<std::vector<SpotTrack>> tracks, const Codebook& cb,
               const PLePIConfig& pcfg, double background, std::size_t threads) {
    pcfg.validate();
    std::vector<std::vector<SpotCall>> per_field(tracks.size());
    parallel_for(tracks.size(), threads, [&](std::size_t f) {
        assign_probs(model, tracks[f], background);
        const auto batch = pseudo_label_field(tracks[f], cb, pcfg);
        auto& calls = per_field[f];
        calls.reserve(batch.barcodes.size());
        for (const auto& pb : batch.barcodes) {
            SpotCall c;
            c.field = tracks[f][pb.track].field;
            c.track = pb.track;
            c.position = tracks[f][pb.track].position;
            if (pb.complete()) c.barcode = pb.barcode();
            c.score = pb.score;
            c.source = pb.source;
            calls.push_back(std::move(c));
        }
    });
    Decoded out;
    for (auto& c : per_field) out.calls.insert(out.calls.end(), c.begin(), c.end());
    out.tracks = std::move(tracks);
    return out;
}

std::vector<TruthPair> match_truth(const GroundTruthWell& well, std::span<const std::size_t> fields,
                                   std::span<const std::vector<SpotTrack>> tracks, double radius) {
    if (fields.size() != tracks.size()) throw ShapeMismatch("match_truth: fields and tracks differ in length");
    std::vector<TruthPair> out;
    const double r2 = radius * radius;
    for (std::size_t fi = 0; fi < fields.size(); ++fi) {
        const auto spots = well.spots_in_field(fields[fi]);
        const auto& ts = tracks[fi];
        struct Cand {
            double d2;
            std::size_t s, t;
        };
        std::vector<Cand> cands;
        for (std::size_t s = 0; s < spots.size(); ++s)
            for (std::size_t t = 0; t < ts.size(); ++t) {
                if (!ts[t].foreground) continue;
                const double dx = spots[s]->position.x - ts[t].position.x;
                const double dy = spots[s]->position.y - ts[t].position.y;
                if (std::abs(dx) > radius || std::abs(dy) > radius) continue;
                const double d2 = dx * dx + dy * dy;
                if (d2 <= r2) cands.push_back({d2, s, t});
            }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            return std::tie(a.d2, a.s, a.t) < std::tie(b.d2, b.s, b.t);
        });
        std::vector<char> used_s(spots.size()), used_t(ts.size());
        for (const auto& c : cands) {
            if (used_s[c.s] || used_t[c.t]) continue;
            used_s[c.s] = used_t[c.t] = 1;
            out.push_back({fi, c.t, spots[c.s]});
        }
    }
    return out;
}

LabeledSet heldout_set(const GroundTruthWell& well, std::span<const std::size_t> fields,
                       std::span<const std::vector<SpotTrack>> tracks, double radius, double background) {
    LabeledSet set;
    const auto pairs = match_truth(well, fields, tracks, radius);
    set.features.resize(kFeatureDim, static_cast<Eigen::Index>(pairs.size() * well.n_cycles));
    Eigen::Index col = 0;
    for (const auto& p : pairs) {
        const auto& t = tracks[p.field_index][p.track];
        for (std::size_t r = 0; r < t.slots.size(); ++r) {
            set.features.col(col++) = featurize(t.slots[r].intensity, background);
            set.letters.push_back(p.spot->barcode[r]);
        }
    }
    set.features.conservativeResize(kFeatureDim, col);
    return set;
}

MetricsReport evaluate_calls(const GroundTruthWell& well, const RunConfig& cfg, const Codebook& cb,
                             std::span<const SpotCall> calls, std::optional<double> letter_accuracy,
                             std::vector<CellCall>* cell_calls) {
    std::vector<Cell> cells;
    for (auto f : cfg.test_fields)
        for (const auto* c : well.cells_in_field(f)) cells.push_back(*c);
    auto cc = call_cells(calls, cells, cfg.min_cell_score);

    // Calls stand in for their tracks when pairing with the truth.
    std::vector<std::vector<SpotTrack>> pseudo(cfg.test_fields.size());
    std::vector<std::vector<const SpotCall*>> owner(cfg.test_fields.size());
    std::map<std::size_t, std::size_t> index_of;
    for (std::size_t i = 0; i < cfg.test_fields.size(); ++i) index_of[cfg.test_fields[i]] = i;
    for (const auto& c : calls) {
        const auto it = index_of.find(c.field);
        if (it == index_of.end()) continue;
        SpotTrack t;
        t.field = c.field;
        t.id = pseudo[it->second].size();
        t.position = c.position;
        t.foreground = true;
        pseudo[it->second].push_back(std::move(t));
        owner[it->second].push_back(&c);
    }
    std::size_t truth_spots = 0;
    for (auto f : cfg.test_fields) truth_spots += well.spots_in_field(f).size();
    std::size_t correct = 0;
    for (const auto& p : match_truth(well, cfg.test_fields, pseudo, cfg.plepi.match_radius)) {
        const auto* c = owner[p.field_index][p.track];
        if (c->barcode && *c->barcode == p.spot->barcode) ++correct;
    }

    EvaluationInput in;
    in.spot_calls = calls;
    in.cell_calls = cc;
    in.cells = cells;
    in.reference = true_abundance_in_fields(well, cfg.test_fields);
    for (const auto& c : cells) ++in.reference_cells[c.barcode];
    in.truth_spots = truth_spots;
    if (truth_spots) in.spot_accuracy = static_cast<double>(correct) / static_cast<double>(truth_spots);
    in.letter_accuracy = letter_accuracy;
    auto rep = evaluate(in, cb);
    if (cell_calls) *cell_calls = std::move(cc);
    return rep;
}

MetricsReport evaluate_decoded(const Workspace& ws, const RunConfig& cfg, const Codebook& cb,
                               const Decoded& dec, std::vector<CellCall>* cell_calls) {
    std::size_t ok = 0, total = 0;
    for (const auto& p : match_truth(ws.well, cfg.test_fields, dec.tracks, cfg.plepi.match_radius)) {
        const auto& t = dec.tracks[p.field_index][p.track];
        for (std::size_t r = 0; r < t.slots.size(); ++r) {
            ok += argmax_letter(t.slots[r].probs) == p.spot->barcode[r];
            ++total;
        }
    }
    std::optional<double> acc;
    if (total) acc = static_cast<double>(ok) / static_cast<double>(total);
    return evaluate_calls(ws.well, cfg, cb, dec.calls, acc, cell_calls);
}

PipelineResult run_pipeline(const RunConfig& cfg, const Codebook& cb, bool write) {
    const Quality q = cfg.quality;
    const std::vector<Quality> qs{q};
    auto ws = prepare(cfg, cb, qs);
    const double bg = cfg.sim.background_level;
    const auto& labeled = ws.labeled.at(q);

    PipelineResult res;
    res.burn_in = burn_in(Model{}, labeled, cfg.train);
    const auto heldout = heldout_set(ws.well, cfg.test_fields, ws.test, cfg.plepi.match_radius, bg);
    SelfTrainOptions opt;
    opt.threads = cfg.threads;
    opt.keep_dumps = cfg.dump_pseudo_labels;
    opt.heldout = &heldout;
    res.trained = run_rounds(res.burn_in, res.burn_in, labeled, ws.unlabeled, cfg.train,
                             cfg.training_plepi(q), cb, opt);
    res.decoded = decode(res.trained.teacher, ws.test, cb, cfg.decode, bg, cfg.threads);
    res.report = evaluate_decoded(ws, cfg, cb, res.decoded, &res.cell_calls);
    res.report.history = res.trained.history;

    if (write) {
        const auto& out = cfg.out;
        detail::write_file(out / "well.json", well_to_json(ws.well));
        detail::write_file(out / "reference_abundance.csv", export_reference_abundance(ws.well));
        detail::write_file(out / "labels.csv", serialize_detections(ws.labels.at(q)));
        if (cfg.write_tiles) {
            for (std::size_t f = 0; f < cfg.sim.n_fields; ++f)
                for (const auto& t : render_field(ws.well, cfg.sim, f, cfg.threads))
                    write_tile(t, tile_stem(out / "tiles", f, t.cycle));
        }
        detail::write_file(out / "model_burnin.json", model_to_json(res.burn_in));
        detail::write_file(out / "teacher.json", model_to_json(res.trained.teacher));
        detail::write_file(out / "student.json", model_to_json(res.trained.student));
        std::string hist;
        for (const auto& r : res.trained.history) hist += r.to_json_line() + '\n';
        detail::write_file(out / "history.jsonl", hist);
        for (std::size_t k = 0; k < res.trained.dumps.size(); ++k)
            detail::write_file(out / ("pseudo_labels_round" + std::to_string(k + 1) + ".csv"),
                               serialize_pseudo_labels(res.trained.dumps[k]));
        detail::write_file(out / "spot_calls.csv", serialize_spot_calls(res.decoded.calls));
        detail::write_file(out / "cell_calls.csv", serialize_cell_calls(res.cell_calls));
        detail::write_file(out / "report.json", emit_report(res.report, ReportFormat::Json));
        detail::write_file(out / "report.txt", emit_report(res.report, ReportFormat::Text));
        detail::write_file(out / "abundance_scatter.svg", abundance_scatter_svg(res.report));
        detail::write_file(out / "accuracy_curve.svg", accuracy_curve_svg(res.report));
    }
    return res;
}

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::Baseline: return "baseline";
        case Strategy::LocationOnly: return "location-only";
        case Strategy::Full: return "full";
    }
    return "?";
}

const AblationCell& AblationResult::at(Strategy s, Quality q) const {
    for (const auto& c : cells)
        if (c.strategy == s && c.quality == q) return c;
    throw DataError("ablation cell not present");
}

AblationResult run_ablation(const RunConfig& cfg, const Codebook& cb) {
    const std::vector<Quality> qs{Quality::Lq, Quality::Hq};
    const auto ws = prepare(cfg, cb, qs);
    const double bg = cfg.sim.background_level;
    const auto heldout = heldout_set(ws.well, cfg.test_fields, ws.test, cfg.plepi.match_radius, bg);
    SelfTrainOptions opt;
    opt.threads = cfg.threads;
    opt.heldout = &heldout;

    AblationResult res;
    for (auto q : qs) {
        const auto& labeled = ws.labeled.at(q);
        const Model base = burn_in(Model{}, labeled, cfg.train);
        auto add = [&](Strategy s, const Model& m, std::vector<RoundRecord> history) {
            const auto dec = decode(m, ws.test, cb, cfg.decode, bg, cfg.threads);
            AblationCell cell{s, q, evaluate_decoded(ws, cfg, cb, dec)};
            cell.report.history = std::move(history);
            res.cells.push_back(std::move(cell));
        };
        add(Strategy::Baseline, base, {});

        // Same thresholds, fusion bypassed: only confident letters of
        // foreground tracks become targets.
        PLePIConfig loc = cfg.training_plepi(q);
        loc.use_codebook = false;
        const auto lr = run_rounds(base, base, labeled, ws.unlabeled, cfg.train, loc, cb, opt);
        add(Strategy::LocationOnly, lr.teacher, lr.history);

        const auto fr = run_rounds(base, base, labeled, ws.unlabeled, cfg.train, cfg.training_plepi(q), cb, opt);
        add(Strategy::Full, fr.teacher, fr.history);
    }
    return res;
}

namespace {

std::string fmt(const std::optional<double>& v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

nlohmann::json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string ablation_markdown(const AblationResult& res) {
    std::string out =
        "| strategy | LQ R2 | LQ cell recovery | LQ spot accuracy | HQ R2 | HQ cell recovery | HQ spot accuracy |\n"
        "|---|---|---|---|---|---|---|\n";
    for (auto s : {Strategy::Baseline, Strategy::LocationOnly, Strategy::Full}) {
        out += "| " + std::string(to_string(s)) + " |";
        for (auto q : {Quality::Lq, Quality::Hq}) {
            const auto& r = res.at(s, q).report;
            out += " " + fmt(r.r2) + " | " + fmt(r.cell_recovery_rate) + " | " + fmt(r.spot_accuracy) + " |";
        }
        out += '\n';
    }
    return out;
}

std::string ablation_json(const AblationResult& res) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : res.cells) {
        rows.push_back({{"strategy", to_string(c.strategy)},
                        {"quality", to_string(c.quality)},
                        {"r2", opt_json(c.report.r2)},
                        {"cell_recovery_rate", opt_json(c.report.cell_recovery_rate)},
                        {"spot_accuracy", opt_json(c.report.spot_accuracy)},
                        {"letter_accuracy", opt_json(c.report.letter_accuracy)},
                        {"ppv", opt_json(c.report.cell.ppv)},
                        {"fdr_trick", opt_json(c.report.cell.fdr_trick)},
                        {"fdr_other", opt_json(c.report.cell.fdr_other)}});
    }
    return nlohmann::json{{"schema_version", 1}, {"cells", rows}}.dump(2) + '\n';
}

}  // namespace plepi
