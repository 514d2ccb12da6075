// Command-line front end: each subcommand runs one stage and exchanges
// files with the next through the run's output directory.

#include "plepi/config.hpp"
#include "plepi/error.hpp"
#include "plepi/pipeline.hpp"
#include "plepi/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace plepi;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("missing input file " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void dump(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    out << text;
}

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::size_t> rounds;
    std::optional<std::string> quality;
    std::optional<std::string> out;
};

RunConfig load_config(const Overrides& o) {
    if (o.config.empty()) throw ConfigError("--config is required");
    auto cfg = RunConfig::load(o.config);
    if (o.seed) cfg.set_seed(*o.seed);
    if (o.threads) cfg.threads = *o.threads;
    if (o.rounds) cfg.train.rounds = *o.rounds;
    if (o.quality) cfg.quality = parse_quality(*o.quality);
    if (o.out) cfg.out = *o.out;
    cfg.validate();
    return cfg;
}

Codebook codebook_of(const RunConfig& cfg) {
    if (cfg.codebook.empty()) throw ConfigError("[run] codebook is not set");
    return load_codebook(cfg.codebook);
}

GroundTruthWell load_well(const RunConfig& cfg) { return well_from_json(slurp(cfg.out / "well.json")); }

Model load_model(const fs::path& p) { return model_from_json(slurp(p)); }

std::vector<std::vector<SpotTrack>> tracks_for(const RunConfig& cfg, const std::vector<std::size_t>& fields) {
    const auto source = stored_tiles(cfg.out / "tiles", cfg.sim.n_cycles);
    std::vector<std::vector<SpotTrack>> out;
    for (auto f : fields) {
        const auto tiles = source(f);
        out.push_back(candidate_tracks(tiles, cfg));
    }
    return out;
}

void cmd_simulate(const RunConfig& cfg) {
    const auto cb = codebook_of(cfg);
    const auto well = simulate_well(cfg.sim, cb);
    dump(cfg.out / "well.json", well_to_json(well));
    dump(cfg.out / "reference_abundance.csv", export_reference_abundance(well));
    for (std::size_t f = 0; f < cfg.sim.n_fields; ++f)
        for (const auto& t : render_field(well, cfg.sim, f, cfg.threads))
            write_tile(t, tile_stem(cfg.out / "tiles", f, t.cycle));
    std::cout << "simulated " << well.cells.size() << " cells, " << well.spots.size() << " spots in "
              << cfg.sim.n_fields << " fields\n";
}

void cmd_annotate(const RunConfig& cfg) {
    const auto source = stored_tiles(cfg.out / "tiles", cfg.sim.n_cycles);
    std::vector<Detection> dets;
    for (auto f : cfg.labeled_fields) {
        const auto tiles = source(f);
        auto d = annotate_field(tiles, cfg.quality, cfg);
        dets.insert(dets.end(), d.begin(), d.end());
    }
    dets = corrupt(std::move(dets), cfg.quality, cfg);
    dump(cfg.out / "labels.csv", serialize_detections(dets));
    std::cout << "annotated " << dets.size() << " detections (" << to_string(cfg.quality) << ")\n";
}

LabeledSet labeled_from_disk(const RunConfig& cfg) {
    const auto dets = parse_detections(slurp(cfg.out / "labels.csv"));
    return labeled_set(dets, stored_tiles(cfg.out / "tiles", cfg.sim.n_cycles), cfg.sim.background_level);
}

void cmd_burnin(const RunConfig& cfg) {
    const auto set = labeled_from_disk(cfg);
    const auto model = burn_in(Model{}, set, cfg.train);
    dump(cfg.out / "model_burnin.json", model_to_json(model));
    std::cout << "burn-in on " << set.size() << " labels, training accuracy "
              << letter_accuracy(model, set.features, set.letters) << '\n';
}

void cmd_train(const RunConfig& cfg) {
    const auto cb = codebook_of(cfg);
    const auto set = labeled_from_disk(cfg);
    const auto start = load_model(cfg.out / "model_burnin.json");
    const auto unlabeled = tracks_for(cfg, cfg.unlabeled_fields);
    SelfTrainOptions opt;
    opt.threads = cfg.threads;
    opt.keep_dumps = cfg.dump_pseudo_labels;
    const auto res = run_rounds(start, start, set, unlabeled, cfg.train, cfg.training_plepi(cfg.quality), cb, opt);
    dump(cfg.out / "teacher.json", model_to_json(res.teacher));
    dump(cfg.out / "student.json", model_to_json(res.student));
    std::string hist;
    for (const auto& r : res.history) {
        hist += r.to_json_line() + '\n';
        std::cout << r.to_json_line() << '\n';
    }
    dump(cfg.out / "history.jsonl", hist);
    for (std::size_t k = 0; k < res.dumps.size(); ++k)
        dump(cfg.out / ("pseudo_labels_round" + std::to_string(k + 1) + ".csv"),
             serialize_pseudo_labels(res.dumps[k]));
}

void cmd_decode(const RunConfig& cfg) {
    const auto cb = codebook_of(cfg);
    const auto teacher = load_model(cfg.out / "teacher.json");
    const auto dec = decode(teacher, tracks_for(cfg, cfg.test_fields), cb, cfg.decode,
                            cfg.sim.background_level, cfg.threads);
    dump(cfg.out / "spot_calls.csv", serialize_spot_calls(dec.calls));
    std::cout << "decoded " << dec.calls.size() << " tracks\n";
}

void cmd_call_cells(const RunConfig& cfg) {
    const auto well = load_well(cfg);
    const auto calls = parse_spot_calls(slurp(cfg.out / "spot_calls.csv"));
    std::vector<Cell> cells;
    for (auto f : cfg.test_fields)
        for (const auto* c : well.cells_in_field(f)) cells.push_back(*c);
    const auto cc = call_cells(calls, cells, cfg.min_cell_score);
    dump(cfg.out / "cell_calls.csv", serialize_cell_calls(cc));
    std::cout << "called " << cc.size() << " cells\n";
}

void write_report(const fs::path& out, const MetricsReport& rep) {
    dump(out / "report.json", emit_report(rep, ReportFormat::Json));
    dump(out / "report.txt", emit_report(rep, ReportFormat::Text));
    dump(out / "abundance_scatter.svg", abundance_scatter_svg(rep));
    dump(out / "accuracy_curve.svg", accuracy_curve_svg(rep));
    std::cout << emit_report(rep, ReportFormat::Text);
}

void cmd_evaluate(const RunConfig& cfg) {
    const auto cb = codebook_of(cfg);
    const auto well = load_well(cfg);
    const auto calls = parse_spot_calls(slurp(cfg.out / "spot_calls.csv"));
    auto rep = evaluate_calls(well, cfg, cb, calls, std::nullopt);
    if (fs::exists(cfg.out / "history.jsonl")) {
        // Reuse the report parser for the per-round records.
        nlohmann::json j = nlohmann::json::parse(emit_report(rep, ReportFormat::Json));
        j["history"] = nlohmann::json::array();
        std::istringstream hs(slurp(cfg.out / "history.jsonl"));
        for (std::string line; std::getline(hs, line);)
            if (!line.empty()) j["history"].push_back(nlohmann::json::parse(line));
        rep = report_from_json(j.dump());
    }
    write_report(cfg.out, rep);
}

void cmd_report(const RunConfig& cfg) {
    const auto rep = report_from_json(slurp(cfg.out / "report.json"));
    write_report(cfg.out, rep);
}

void cmd_pipeline(const RunConfig& cfg) {
    const auto res = run_pipeline(cfg, codebook_of(cfg), true);
    std::cout << emit_report(res.report, ReportFormat::Text);
}

void cmd_ablate(const RunConfig& cfg) {
    const auto res = run_ablation(cfg, codebook_of(cfg));
    dump(cfg.out / "ablation.md", ablation_markdown(res));
    dump(cfg.out / "ablation.json", ablation_json(res));
    std::cout << ablation_markdown(res);
}

struct CodebookArgs {
    std::size_t targeted = 186;
    std::size_t cycles = 9;
    std::size_t min_dist = 3;
    std::size_t trick = 0;
    std::size_t trick_min_dist = 3;
    std::uint64_t seed = 0;
    std::string output;
};

void cmd_make_codebook(const CodebookArgs& a) {
    std::vector<CodebookEntry> entries;
    const auto lib = generate_library(a.targeted, a.cycles, a.min_dist, a.seed);
    for (std::size_t i = 0; i < lib.size(); ++i)
        entries.push_back({lib[i], "gene" + std::to_string(i + 1), EntryKind::Targeted});
    if (a.trick > 0) {
        const Codebook targeted(entries);
        const auto trick = generate_trick_barcodes(targeted, a.trick, a.trick_min_dist, a.seed + 1);
        for (std::size_t i = 0; i < trick.size(); ++i)
            entries.push_back({trick[i], "trick" + std::to_string(i + 1), EntryKind::Trick});
    }
    save_codebook(Codebook(std::move(entries)), a.output);
    std::cout << "wrote " << a.output << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Barcode calling for in situ sequencing with codebook-fused pseudo-labels"};
    app.require_subcommand(1);
    Overrides o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "run configuration file");
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--threads", o.threads, "worker threads");
        sub->add_option("--rounds", o.rounds, "self-training rounds");
        sub->add_option("--quality", o.quality, "label quality: lq or hq");
        sub->add_option("--out", o.out, "output directory");
    };

    using Handler = void (*)(const RunConfig&);
    const std::vector<std::tuple<const char*, const char*, Handler>> stages{
        {"simulate", "simulate a well and render its tiles", cmd_simulate},
        {"annotate", "label the labeled fields with the chosen annotator", cmd_annotate},
        {"burnin", "supervised burn-in on the labels", cmd_burnin},
        {"train", "teacher-student self-training on the unlabeled fields", cmd_train},
        {"decode", "call barcodes on the test fields", cmd_decode},
        {"call-cells", "assign spot calls to cells", cmd_call_cells},
        {"evaluate", "compute metrics against the ground truth", cmd_evaluate},
        {"report", "re-render a stored report as text and figures", cmd_report},
        {"pipeline", "run every stage in memory and write all artifacts", cmd_pipeline},
        {"ablate", "baseline / location-only / full under LQ and HQ labels", cmd_ablate},
    };
    Handler chosen = nullptr;
    for (const auto& [name, help, fn] : stages) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub);
        sub->callback([&chosen, fn = fn] { chosen = fn; });
    }

    CodebookArgs cba;
    bool make_cb = false;
    auto* mk = app.add_subcommand("make-codebook", "generate a random codebook with trick barcodes");
    mk->add_option("--targeted", cba.targeted, "number of targeted barcodes");
    mk->add_option("--cycles", cba.cycles, "barcode length");
    mk->add_option("--min-dist", cba.min_dist, "minimum Hamming distance among targeted barcodes");
    mk->add_option("--trick", cba.trick, "number of trick barcodes");
    mk->add_option("--trick-min-dist", cba.trick_min_dist, "minimum distance of trick barcodes");
    mk->add_option("--seed", cba.seed, "seed");
    mk->add_option("output", cba.output, "output CSV")->required();
    mk->callback([&] { make_cb = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (make_cb) cmd_make_codebook(cba);
        else chosen(load_config(o));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
