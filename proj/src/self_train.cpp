#include "plepi/self_train.hpp"

#include "io_util.hpp"
#include "plepi/error.hpp"
#include "plepi/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>

namespace plepi {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train config: learning_rate must be positive");
    if (!(lambda_u >= 0.0)) throw ConfigError("train config: lambda_u must be >= 0");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0))
        throw ConfigError("train config: ema_decay must lie in [0, 1)");
    if (batch_size == 0) throw ConfigError("train config: batch_size must be positive");
    if (!(augment.brightness >= 0.0 && augment.brightness < 1.0 && augment.jitter >= 0.0 &&
          augment.jitter < 1.0 && augment.noise_sd >= 0.0))
        throw ConfigError("train config: augmentation scales must lie in [0, 1)");
}

void assign_probs(const Model& teacher, std::vector<SpotTrack>& tracks, double background_level) {
    for (auto& t : tracks)
        for (auto& s : t.slots)
            s.probs = predict_probs(teacher, augment_weak(featurize(s.intensity, background_level)));
}

PseudoLabelBatch pseudo_label_field(std::span<const SpotTrack> tracks, const Codebook& cb,
                                    const PLePIConfig& pcfg) {
    PseudoLabelBatch batch;
    batch.n_tracks = tracks.size();
    if (!tracks.empty()) batch.field = tracks.front().field;
    std::vector<Vector4> probs;
    std::vector<char> forced;
    for (const auto& t : tracks) {
        if (!t.foreground) continue;
        ++batch.n_foreground;
        const std::size_t n = t.slots.size();
        probs.resize(n);
        forced.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            probs[r] = t.slots[r].probs;
            forced[r] = t.slots[r].interpolated;
        }
        const std::span<const bool> force(reinterpret_cast<const bool*>(forced.data()), n);
        const auto part = partition_confidence(probs, pcfg.tau_c, pcfg.tau_m, force);
        auto pb = pcfg.use_codebook ? fuse_codebook(part, probs, cb, pcfg.top_n)
                                    : confident_only(part, probs);
        pb.track = t.id;
        for (std::size_t r = 0; r < n; ++r) {
            if (!pb.letters[r]) continue;
            const auto cls = part.classes[r];
            const bool trainable = cls == CycleClass::Confident ||
                                   (cls == CycleClass::Mediocre && pb.source == LabelSource::CodebookFused);
            if (!trainable) continue;
            batch.labels.push_back({t.field, t.id, r, *pb.letters[r], pb.source, pb.score});
        }
        batch.barcodes.push_back(std::move(pb));
    }
    return batch;
}

std::string RoundRecord::to_json_line() const {
    nlohmann::json j = {{"round", round},
                        {"steps", steps},
                        {"tracks", tracks},
                        {"foreground_tracks", foreground_tracks},
                        {"all_confident", all_confident},
                        {"codebook_fused", codebook_fused},
                        {"abstained", abstained},
                        {"pseudo_labels", pseudo_labels},
                        {"fused_labels", fused_labels},
                        {"abstention_rate", abstention_rate}};
    j["heldout_accuracy"] = heldout_accuracy ? nlohmann::json(*heldout_accuracy) : nlohmann::json(nullptr);
    return j.dump();
}

Model burn_in(Model student, const LabeledSet& labeled, const TrainConfig& cfg) {
    cfg.validate();
    if (labeled.size() == 0) throw ConfigError("burn-in: labeled set is empty");
    Rng rng = make_rng(cfg.seed, "train");
    return train_supervised(std::move(student), labeled.features, labeled.letters,
                            {cfg.learning_rate, cfg.batch_size, cfg.burnin_epochs}, rng);
}

SelfTrainResult run_rounds(Model teacher, Model student, const LabeledSet& labeled,
                           std::span<const std::vector<SpotTrack>> unlabeled,
                           const TrainConfig& cfg, const PLePIConfig& pcfg, const Codebook& cb,
                           const SelfTrainOptions& opt) {
    cfg.validate();
    pcfg.validate();
    if (labeled.size() == 0) throw ConfigError("self-training: labeled set is empty");

    SelfTrainResult result;
    const std::size_t batch = cfg.batch_size;
    const auto n_lab = labeled.size();
    std::vector<std::size_t> lab_order(n_lab);
    std::iota(lab_order.begin(), lab_order.end(), std::size_t{0});
    std::size_t lab_cursor = n_lab;  // forces a shuffle on first use

    FeatureBatch xs(kFeatureDim, 0), xu(kFeatureDim, 0);
    std::vector<Base> ys, yu;

    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        Rng train_rng = make_rng(cfg.seed, "train", round + 1);
        Rng aug_rng = make_rng(cfg.seed, "augment", round + 1);

        // Teacher snapshot labels every field; fields are independent.
        std::vector<PseudoLabelBatch> batches(unlabeled.size());
        parallel_for(unlabeled.size(), opt.threads, [&](std::size_t f) {
            auto tracks = unlabeled[f];
            assign_probs(teacher, tracks, cfg.background_level);
            batches[f] = pseudo_label_field(tracks, cb, pcfg);
        });

        RoundRecord rec;
        rec.round = round + 1;
        for (const auto& b : batches) {
            rec.tracks += b.n_tracks;
            rec.foreground_tracks += b.n_foreground;
            for (const auto& pb : b.barcodes) {
                rec.all_confident += pb.source == LabelSource::AllConfident;
                rec.codebook_fused += pb.source == LabelSource::CodebookFused;
                rec.abstained += pb.source == LabelSource::Abstained;
            }
            rec.pseudo_labels += b.labels.size();
            for (const auto& l : b.labels) rec.fused_labels += l.source == LabelSource::CodebookFused;
        }
        rec.abstention_rate = rec.foreground_tracks
                                  ? static_cast<double>(rec.abstained) / static_cast<double>(rec.foreground_tracks)
                                  : 0.0;

        for (std::size_t f = 0; f < batches.size(); ++f) {
            const auto& labels = batches[f].labels;
            if (labels.empty()) continue;
            const auto& tracks = unlabeled[f];
            std::vector<std::size_t> order(labels.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[uniform_index(train_rng, i)]);

            for (std::size_t start = 0; start < order.size(); start += batch) {
                const std::size_t len = std::min(batch, order.size() - start);
                xu.resize(kFeatureDim, static_cast<Eigen::Index>(len));
                yu.resize(len);
                for (std::size_t j = 0; j < len; ++j) {
                    const auto& pl = labels[order[start + j]];
                    const auto x = featurize(tracks[pl.track].slots[pl.cycle].intensity, cfg.background_level);
                    xu.col(static_cast<Eigen::Index>(j)) = augment_strong(x, aug_rng, cfg.augment);
                    yu[j] = pl.letter;
                }
                xs.resize(kFeatureDim, static_cast<Eigen::Index>(std::min(batch, n_lab)));
                ys.resize(static_cast<std::size_t>(xs.cols()));
                for (Eigen::Index j = 0; j < xs.cols(); ++j) {
                    if (lab_cursor == n_lab) {
                        for (std::size_t i = n_lab; i > 1; --i)
                            std::swap(lab_order[i - 1], lab_order[uniform_index(train_rng, i)]);
                        lab_cursor = 0;
                    }
                    const auto idx = lab_order[lab_cursor++];
                    xs.col(j) = labeled.features.col(static_cast<Eigen::Index>(idx));
                    ys[static_cast<std::size_t>(j)] = labeled.letters[idx];
                }
                const auto ls = supervised_loss(student, xs, std::span<const Base>(ys));
                const auto lu = pseudo_label_loss(student, xu, std::span<const Base>(yu), cfg.lambda_u);
                student = sgd_step(student, WeightMatrix<double>(ls.gradient + lu.gradient), cfg.learning_rate);
                teacher = ema_update(teacher, student, cfg.ema_decay);
                ++rec.steps;
            }
        }

        if (opt.heldout && opt.heldout->size() > 0)
            rec.heldout_accuracy = letter_accuracy(teacher, opt.heldout->features, opt.heldout->letters);
        if (opt.keep_dumps) {
            std::vector<PseudoLabel> dump;
            for (const auto& b : batches) dump.insert(dump.end(), b.labels.begin(), b.labels.end());
            result.dumps.push_back(std::move(dump));
        }
        result.history.push_back(rec);
    }
    result.teacher = std::move(teacher);
    result.student = std::move(student);
    return result;
}

SelfTrainResult self_train(Model /*teacher*/, Model student, const LabeledSet& labeled,
                           std::span<const std::vector<SpotTrack>> unlabeled,
                           const TrainConfig& cfg, const PLePIConfig& pcfg, const Codebook& cb,
                           const SelfTrainOptions& opt) {
    student = burn_in(std::move(student), labeled, cfg);
    return run_rounds(student, student, labeled, unlabeled, cfg, pcfg, cb, opt);
}

std::string serialize_pseudo_labels(std::span<const PseudoLabel> labels) {
    std::string out = "field,track,cycle,letter,source,score\n";
    for (const auto& l : labels) {
        out += std::to_string(l.field) + ',' + std::to_string(l.track) + ',' + std::to_string(l.cycle) +
               ',' + to_char(l.letter) + ',' + std::string(to_string(l.source)) + ',' +
               detail::format_double(l.score) + '\n';
    }
    return out;
}

}  // namespace plepi
