#include "plepi/basecaller.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>

namespace plepi {

using nlohmann::json;

Model train_supervised(Model m, const FeatureBatch& x, std::span<const Base> labels,
                       const SgdOptions& opt, Rng& rng) {
    if (x.cols() == 0) throw ConfigError("train_supervised: empty training set");
    const auto n = static_cast<std::size_t>(x.cols());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = std::max<std::size_t>(1, opt.batch_size);
    FeatureBatch xb(kFeatureDim, static_cast<Eigen::Index>(batch));
    std::vector<Base> yb(batch);
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t len = std::min(batch, n - start);
            xb.resize(kFeatureDim, static_cast<Eigen::Index>(len));
            yb.resize(len);
            for (std::size_t j = 0; j < len; ++j) {
                xb.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(order[start + j]));
                yb[j] = labels[order[start + j]];
            }
            const auto lg = supervised_loss(m, xb, std::span<const Base>(yb));
            m = sgd_step(m, lg.gradient, opt.learning_rate);
        }
    }
    return m;
}

double letter_accuracy(const Model& m, const FeatureBatch& x, std::span<const Base> labels) {
    if (x.cols() == 0) return 0.0;
    const auto p = predict_probs_batch(m, x);
    std::size_t hits = 0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        Eigen::Index k = 0;
        p.col(j).maxCoeff(&k);
        hits += static_cast<std::size_t>(k) == index_of(labels[static_cast<std::size_t>(j)]);
    }
    return static_cast<double>(hits) / static_cast<double>(p.cols());
}

std::string model_to_json(const Model& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.weights.cols(); ++c) row.push_back(m.weights(r, c));
        rows.push_back(std::move(row));
    }
    const json doc = {{"feature_spec_version", kFeatureSpecVersion},
                      {"feature_dim", kFeatureDim},
                      {"classes", "ACGT"},
                      {"temperature", m.temperature},
                      {"weights", std::move(rows)}};
    return doc.dump(1) + "\n";
}

Model model_from_json(std::string_view text) {
    try {
        const json doc = json::parse(text);
        if (doc.at("feature_spec_version").get<int>() != kFeatureSpecVersion)
            throw DataError("model checkpoint: unsupported feature layout version");
        Model m;
        m.temperature = doc.at("temperature").get<double>();
        const auto& rows = doc.at("weights");
        if (rows.size() != 4) throw ShapeMismatch("model checkpoint: expected 4 weight rows");
        for (Eigen::Index r = 0; r < 4; ++r) {
            const auto& row = rows[static_cast<std::size_t>(r)];
            if (row.size() != static_cast<std::size_t>(kFeatureDim + 1))
                throw ShapeMismatch("model checkpoint: wrong weight row width");
            for (Eigen::Index c = 0; c <= kFeatureDim; ++c)
                m.weights(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
        if (!(m.temperature > 0.0) || !m.weights.allFinite())
            throw NumericalError("model checkpoint: invalid weights or temperature");
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("model checkpoint: ") + e.what());
    }
}

}  // namespace plepi
