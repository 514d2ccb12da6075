#pragma once

#include "plepi/barcode.hpp"
#include "plepi/error.hpp"
#include "plepi/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace plepi {

/// Per-(spot, cycle) feature layout: 4 background-subtracted intensities,
/// their L2-normalized copy, and the log of their sum.
inline constexpr Eigen::Index kFeatureDim = 9;
inline constexpr int kFeatureSpecVersion = 1;
inline constexpr double kLogTotalFloor = 1e-6;

template <class Scalar>
using FeatureVector = Eigen::Matrix<Scalar, kFeatureDim, 1>;
template <class Scalar>
using FeatureMatrix = Eigen::Matrix<Scalar, kFeatureDim, Eigen::Dynamic>;
template <class Scalar>
using ProbVector = Eigen::Matrix<Scalar, 4, 1>;
template <class Scalar>
using ProbMatrix = Eigen::Matrix<Scalar, 4, Eigen::Dynamic>;
template <class Scalar>
using WeightMatrix = Eigen::Matrix<Scalar, 4, kFeatureDim + 1>;

/// Multinomial logistic regression over {A, C, G, T}. Column kFeatureDim
/// of the weight matrix is the bias.
template <class Scalar = double>
struct BaseCallerModel {
    WeightMatrix<Scalar> weights = WeightMatrix<Scalar>::Zero();
    Scalar temperature = Scalar(1);

    friend bool operator==(const BaseCallerModel& a, const BaseCallerModel& b) {
        return a.weights == b.weights && a.temperature == b.temperature;
    }
};

using Model = BaseCallerModel<double>;
using Features = FeatureVector<double>;
using FeatureBatch = FeatureMatrix<double>;

template <class Scalar = double, class Derived>
FeatureVector<Scalar> featurize_subtracted(const Eigen::MatrixBase<Derived>& v) {
    FeatureVector<Scalar> x;
    const Eigen::Matrix<Scalar, 4, 1> s = v.template cast<Scalar>();
    x.template head<4>() = s;
    const Scalar norm = s.norm();
    if (norm > Scalar(1e-12))
        x.template segment<4>(4) = s / norm;
    else
        x.template segment<4>(4).setZero();
    x[8] = std::log(std::max(s.sum(), Scalar(kLogTotalFloor)));
    return x;
}

/// Features of a raw 4-channel readout.
template <class Scalar = double, class Derived>
FeatureVector<Scalar> featurize(const Eigen::MatrixBase<Derived>& intensity, double background) {
    return featurize_subtracted<Scalar>(
        (intensity.template cast<Scalar>().array() - Scalar(background)).matrix());
}

template <class Scalar, class Derived>
ProbVector<Scalar> predict_probs(const BaseCallerModel<Scalar>& m,
                                 const Eigen::MatrixBase<Derived>& x) {
    const ProbVector<Scalar> logits =
        (m.weights.template leftCols<kFeatureDim>() * x + m.weights.col(kFeatureDim)) / m.temperature;
    const ProbVector<Scalar> e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
}

/// Column-wise probabilities for a D x N feature matrix.
template <class Scalar>
ProbMatrix<Scalar> predict_probs_batch(const BaseCallerModel<Scalar>& m,
                                       const FeatureMatrix<Scalar>& x) {
    ProbMatrix<Scalar> logits = (m.weights.template leftCols<kFeatureDim>() * x).colwise() +
                                m.weights.col(kFeatureDim);
    logits /= m.temperature;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        auto col = logits.col(j);
        col = (col.array() - col.maxCoeff()).exp();
        col /= col.sum();
    }
    return logits;
}

template <class Scalar>
struct LossAndGradient {
    Scalar loss = Scalar(0);
    WeightMatrix<Scalar> gradient = WeightMatrix<Scalar>::Zero();
};

/// Mean cross-entropy of hard labels and its gradient w.r.t. the weights.
template <class Scalar>
LossAndGradient<Scalar> supervised_loss(const BaseCallerModel<Scalar>& m,
                                        const FeatureMatrix<Scalar>& x,
                                        std::span<const Base> labels) {
    if (x.cols() == 0 || static_cast<std::size_t>(x.cols()) != labels.size())
        throw ShapeMismatch("supervised_loss: need a non-empty batch with one label per column");
    const auto n = x.cols();
    ProbMatrix<Scalar> p = predict_probs_batch(m, x);
    LossAndGradient<Scalar> out;
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto k = static_cast<Eigen::Index>(index_of(labels[static_cast<std::size_t>(j)]));
        out.loss -= std::log(std::max(p(k, j), std::numeric_limits<Scalar>::min()));
        p(k, j) -= Scalar(1);
    }
    // dL/dlogits = (p - y) / T ; logits = W [x; 1]
    out.gradient.template leftCols<kFeatureDim>() = p * x.transpose();
    out.gradient.col(kFeatureDim) = p.rowwise().sum();
    const Scalar scale = Scalar(1) / (static_cast<Scalar>(n) * m.temperature);
    out.loss /= static_cast<Scalar>(n);
    out.gradient *= scale;
    return out;
}

/// lambda_u times the cross-entropy of the student against pseudo-labels.
template <class Scalar>
LossAndGradient<Scalar> pseudo_label_loss(const BaseCallerModel<Scalar>& student,
                                          const FeatureMatrix<Scalar>& x,
                                          std::span<const Base> pseudo_labels, Scalar lambda_u) {
    if (lambda_u == Scalar(0)) {
        if (static_cast<std::size_t>(x.cols()) != pseudo_labels.size())
            throw ShapeMismatch("pseudo_label_loss: one label per column required");
        return {};
    }
    auto out = supervised_loss(student, x, pseudo_labels);
    out.loss *= lambda_u;
    out.gradient *= lambda_u;
    return out;
}

/// weights <- weights - lr * gradient. Throws NumericalError on a
/// non-finite gradient.
template <class Scalar>
BaseCallerModel<Scalar> sgd_step(BaseCallerModel<Scalar> m, const WeightMatrix<Scalar>& gradient,
                                 Scalar learning_rate) {
    if (!gradient.allFinite()) throw NumericalError("sgd_step: non-finite gradient");
    m.weights -= learning_rate * gradient;
    return m;
}

/// teacher <- alpha * teacher + (1 - alpha) * student, elementwise.
template <class Scalar>
BaseCallerModel<Scalar> ema_update(BaseCallerModel<Scalar> teacher,
                                   const BaseCallerModel<Scalar>& student, Scalar alpha) {
    if (teacher.weights.rows() != student.weights.rows() ||
        teacher.weights.cols() != student.weights.cols())
        throw ShapeMismatch("ema_update: teacher and student shapes differ");
    if (!(alpha >= Scalar(0) && alpha <= Scalar(1)))
        throw ConfigError("ema_update: decay must lie in [0, 1]");
    teacher.weights = alpha * teacher.weights + (Scalar(1) - alpha) * student.weights;
    return teacher;
}

template <class Scalar>
FeatureVector<Scalar> augment_weak(const FeatureVector<Scalar>& x) {
    return x;
}

struct StrongAugment {
    /// Half-width of a multiplicative brightness factor shared by all channels.
    double brightness = 0.3;
    /// Half-width of the multiplicative per-channel jitter. Kept small: channel
    /// ratios carry the letter, so large jitter would not preserve labels.
    double jitter = 0.05;
    /// SD of additive noise on the subtracted intensities.
    double noise_sd = 0.0;
};

/// Rescales and jitters the 4 subtracted intensities and re-derives the
/// remaining features from them.
template <class Scalar>
FeatureVector<Scalar> augment_strong(const FeatureVector<Scalar>& x, Rng& rng,
                                     const StrongAugment& aug = {}) {
    Eigen::Matrix<Scalar, 4, 1> s = x.template head<4>();
    s *= Scalar(1.0 + aug.brightness * (2.0 * uniform01(rng) - 1.0));
    for (Eigen::Index c = 0; c < 4; ++c) {
        const double factor = 1.0 + aug.jitter * (2.0 * uniform01(rng) - 1.0);
        const double noise = aug.noise_sd * standard_normal(rng);
        s[c] = s[c] * Scalar(factor) + Scalar(noise);
    }
    return featurize_subtracted<Scalar>(s);
}

struct SgdOptions {
    double learning_rate = 0.1;
    std::size_t batch_size = 64;
    std::size_t epochs = 20;
};

/// Minibatch SGD on the supervised loss with a seeded shuffle per epoch.
Model train_supervised(Model m, const FeatureBatch& x, std::span<const Base> labels,
                       const SgdOptions& opt, Rng& rng);

/// Fraction of columns whose argmax equals the label.
double letter_accuracy(const Model& m, const FeatureBatch& x, std::span<const Base> labels);

/// JSON checkpoint: weights (row-major), temperature, feature layout version.
std::string model_to_json(const Model& m);
Model model_from_json(std::string_view text);

}  // namespace plepi
