#include "plepi/config.hpp"

#include "io_util.hpp"
#include "plepi/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace plepi {

namespace pt = boost::property_tree;

std::string_view to_string(Quality q) noexcept { return q == Quality::Lq ? "lq" : "hq"; }

Quality parse_quality(std::string_view s) {
    if (s == "lq") return Quality::Lq;
    if (s == "hq") return Quality::Hq;
    throw ConfigError("quality must be 'lq' or 'hq', got '" + std::string(s) + "'");
}

std::vector<std::size_t> parse_field_list(std::string_view s) {
    std::vector<std::size_t> out;
    for (auto part : detail::split(s, ',')) {
        while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
        while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
        if (part.empty()) continue;
        try {
            const auto dash = part.find('-');
            if (dash == std::string_view::npos) {
                out.push_back(static_cast<std::size_t>(detail::to_integer(part)));
            } else {
                const auto lo = detail::to_integer(part.substr(0, dash));
                const auto hi = detail::to_integer(part.substr(dash + 1));
                if (lo < 0 || hi < lo) throw ConfigError("bad field range '" + std::string(part) + "'");
                for (auto i = lo; i <= hi; ++i) out.push_back(static_cast<std::size_t>(i));
            }
        } catch (const DataError&) {
            throw ConfigError("bad field list '" + std::string(s) + "'");
        }
    }
    return out;
}

namespace {

std::vector<double> numbers(const std::string& s) {
    std::vector<double> out;
    std::string token;
    std::istringstream is(s);
    while (is >> token) {
        for (auto part : detail::split(token, ','))
            if (!part.empty()) out.push_back(detail::to_double(part));
    }
    return out;
}

class Reader {
public:
    Reader(const pt::ptree& tree, std::string section) : tree_(tree), section_(std::move(section)) {}

    template <class T>
    void get(const char* key, T& value) {
        seen_.insert(key);
        const auto v = tree_.get_optional<std::string>(key);
        if (!v) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (*v == "true" || *v == "1") value = true;
                else if (*v == "false" || *v == "0") value = false;
                else throw DataError("expected true/false");
            } else if constexpr (std::is_integral_v<T>) {
                const auto n = detail::to_integer(*v);
                if (n < 0) throw DataError("expected a non-negative integer");
                value = static_cast<T>(n);
            } else {
                value = static_cast<T>(detail::to_double(*v));
            }
        } catch (const DataError& e) {
            throw ConfigError("[" + section_ + "] " + key + ": " + e.what());
        }
    }

    void get(const char* key, std::optional<double>& value) {
        double v = 0.0;
        seen_.insert(key);
        if (!tree_.get_optional<std::string>(key)) return;
        get(key, v);
        value = v;
    }

    std::optional<std::string> raw(const char* key) {
        seen_.insert(key);
        const auto v = tree_.get_optional<std::string>(key);
        if (!v) return std::nullopt;
        return *v;
    }

    void finish() const {
        for (const auto& [k, v] : tree_)
            if (!seen_.count(k)) throw ConfigError("[" + section_ + "] unknown key '" + k + "'");
    }

private:
    const pt::ptree& tree_;
    std::string section_;
    std::set<std::string> seen_;
};

}  // namespace

RunConfig RunConfig::parse(std::string_view text, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        std::istringstream is{std::string(text)};
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    RunConfig cfg;
    static const pt::ptree empty;
    auto section = [&](const char* name) -> const pt::ptree& {
        const auto child = tree.get_child_optional(name);
        return child ? *child : empty;
    };
    for (const auto& [name, sub] : tree) {
        static const std::set<std::string> known{"run", "sim", "annotate", "tracks", "train", "plepi", "decode"};
        if (!known.count(name)) throw ConfigError("config: unknown section [" + name + "]");
        if (sub.empty() && !sub.data().empty())
            throw ConfigError("config: key '" + name + "' outside a section");
    }

    {
        Reader r(section("run"), "run");
        std::uint64_t seed = 0;
        r.get("seed", seed);
        cfg.set_seed(seed);
        if (auto q = r.raw("quality")) cfg.quality = parse_quality(*q);
        r.get("flip_rate", cfg.flip_rate);
        r.get("threads", cfg.threads);
        r.get("dump_pseudo_labels", cfg.dump_pseudo_labels);
        r.get("write_tiles", cfg.write_tiles);
        if (auto p = r.raw("codebook")) cfg.codebook = base_dir / *p;
        if (auto p = r.raw("out")) cfg.out = base_dir / *p;
        if (auto s = r.raw("labeled_fields")) cfg.labeled_fields = parse_field_list(*s);
        if (auto s = r.raw("unlabeled_fields")) cfg.unlabeled_fields = parse_field_list(*s);
        if (auto s = r.raw("test_fields")) cfg.test_fields = parse_field_list(*s);
        r.finish();
    }
    {
        Reader r(section("sim"), "sim");
        auto& s = cfg.sim;
        r.get("n_fields", s.n_fields);
        r.get("n_cycles", s.n_cycles);
        r.get("width", s.width);
        r.get("height", s.height);
        r.get("n_channels", s.n_channels);
        r.get("cells_per_field", s.cells_per_field);
        r.get("spots_per_cell_min", s.spots_per_cell_min);
        r.get("spots_per_cell_mean", s.spots_per_cell_mean);
        r.get("spot_sigma", s.spot_sigma);
        r.get("spot_amplitude", s.spot_amplitude);
        r.get("brightness_sd", s.brightness_sd);
        r.get("phasing", s.phasing);
        r.get("background_level", s.background_level);
        r.get("sensor_noise_sd", s.sensor_noise_sd);
        r.get("jitter_sd", s.jitter_sd);
        r.get("abundance_concentration", s.abundance_concentration);
        r.get("min_spot_separation", s.min_spot_separation);
        r.get("spot_edge_margin", s.spot_edge_margin);
        r.get("cell_shrink", s.cell_shrink);
        r.get("fields_per_plate", s.fields_per_plate);
        r.get("plate_gain_sd", s.plate_gain_sd);
        if (auto v = r.raw("crosstalk")) {
            const auto xs = numbers(*v);
            if (xs.size() != 16) throw ConfigError("[sim] crosstalk: expected 16 numbers (row = channel)");
            for (int i = 0; i < 16; ++i) s.crosstalk(i / 4, i % 4) = xs[static_cast<std::size_t>(i)];
        }
        if (auto v = r.raw("channel_gain")) {
            const auto xs = numbers(*v);
            if (xs.size() != 4) throw ConfigError("[sim] channel_gain: expected 4 numbers");
            for (int i = 0; i < 4; ++i) s.channel_gain[i] = xs[static_cast<std::size_t>(i)];
        }
        r.finish();
    }
    {
        Reader r(section("annotate"), "annotate");
        r.get("lq_threshold", cfg.lq_threshold);
        r.get("hq_threshold", cfg.hq.threshold);
        r.get("hq_percentile", cfg.hq.percentile);
        r.get("hq_noise_k", cfg.hq.noise_k);
        r.finish();
    }
    {
        Reader r(section("tracks"), "tracks");
        r.get("detect_threshold", cfg.detect_threshold);
        r.get("objectness_threshold", cfg.objectness_threshold);
        r.get("radius", cfg.plepi.match_radius);
        r.finish();
    }
    {
        Reader r(section("train"), "train");
        auto& t = cfg.train;
        r.get("learning_rate", t.learning_rate);
        r.get("lambda_u", t.lambda_u);
        r.get("ema_decay", t.ema_decay);
        r.get("batch_size", t.batch_size);
        r.get("burnin_epochs", t.burnin_epochs);
        r.get("rounds", t.rounds);
        r.get("augment_brightness", t.augment.brightness);
        r.get("augment_jitter", t.augment.jitter);
        r.get("augment_noise_sd", t.augment.noise_sd);
        r.finish();
    }
    {
        Reader r(section("plepi"), "plepi");
        r.get("tau_c", cfg.plepi_tau_c);
        r.get("tau_m", cfg.plepi.tau_m);
        r.get("top_n", cfg.plepi.top_n);
        r.get("use_codebook", cfg.plepi.use_codebook);
        r.finish();
    }
    {
        Reader r(section("decode"), "decode");
        r.get("tau_c", cfg.decode.tau_c);
        r.get("tau_m", cfg.decode.tau_m);
        r.get("top_n", cfg.decode.top_n);
        r.get("use_codebook", cfg.decode.use_codebook);
        r.get("min_cell_score", cfg.min_cell_score);
        r.finish();
    }
    cfg.hq.n_cycles = cfg.sim.n_cycles;
    cfg.train.background_level = cfg.sim.background_level;
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = detail::read_file(path);
    } catch (const DataError&) {
        throw ConfigError("cannot read config file " + path.string());
    }
    return parse(text, path.parent_path());
}

void RunConfig::set_seed(std::uint64_t s) {
    seed = s;
    sim.seed = s;
    train.seed = s;
}

void RunConfig::validate() const {
    sim.validate();
    train.validate();
    training_plepi(quality).validate();
    auto dec = decode;
    dec.match_radius = plepi.match_radius;
    dec.validate();
    if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw ConfigError("[run] flip_rate must lie in [0, 1]");
    if (threads == 0) throw ConfigError("[run] threads must be >= 1");
    if (labeled_fields.empty()) throw ConfigError("[run] labeled_fields is empty");
    if (test_fields.empty()) throw ConfigError("[run] test_fields is empty");
    std::set<std::size_t> seen;
    for (const auto* list : {&labeled_fields, &unlabeled_fields, &test_fields})
        for (auto f : *list) {
            if (f >= sim.n_fields)
                throw ConfigError("[run] field " + std::to_string(f) + " out of range (n_fields = " +
                                  std::to_string(sim.n_fields) + ")");
            if (!seen.insert(f).second)
                throw ConfigError("[run] field " + std::to_string(f) + " appears in more than one split");
        }
    if (lq_threshold_value() <= 0.0) throw ConfigError("[annotate] lq_threshold must be positive");
}

double RunConfig::lq_threshold_value() const {
    if (lq_threshold) return *lq_threshold;
    const double floor = 0.2 * sim.spot_amplitude * sim.channel_gain.minCoeff();
    return std::max(sim.background_level + 5.0 * sim.sensor_noise_sd, sim.background_level + floor);
}

double RunConfig::detect_threshold_value() const {
    return detect_threshold ? *detect_threshold : lq_threshold_value();
}

double RunConfig::objectness_threshold_value() const {
    return objectness_threshold ? *objectness_threshold : detect_threshold_value();
}

PLePIConfig RunConfig::training_plepi(Quality q) const {
    PLePIConfig p = plepi;
    p.tau_c = plepi_tau_c ? *plepi_tau_c : (q == Quality::Lq ? 1.0 : 0.9);
    p.objectness_threshold = objectness_threshold_value();
    return p;
}

}  // namespace plepi
