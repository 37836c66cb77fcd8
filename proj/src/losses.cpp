#include "hhe/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hhe/error.hpp"

namespace hhe {
namespace {

double positive_part(double x) {
    return x > 0.0 ? x : 0.0;
}

// Row-wise softmax probabilities with max subtraction, shared by the
// cross-entropy value and gradient paths.
Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        double mx = row[0];
        for (double z : row) mx = std::max(mx, z);
        double sum = 0.0;
        for (std::size_t k = 0; k < logits.cols(); ++k) {
            p(i, k) = std::exp(row[k] - mx);
            sum += p(i, k);
        }
        for (std::size_t k = 0; k < logits.cols(); ++k) p(i, k) /= sum;
    }
    return p;
}

void check_labels(std::span<const int> labels, std::size_t count, std::size_t num_classes) {
    if (labels.size() != count) {
        throw ShapeMismatchError("labels: expected " + std::to_string(count) + " entries, got " +
                                 std::to_string(labels.size()));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw LabelOutOfRangeError("label " + std::to_string(labels[i]) + " at row " +
                                       std::to_string(i) + " outside [0, " +
                                       std::to_string(num_classes) + ")");
        }
    }
}

struct TripletTerms {
    BatchHardSelection sel;
    std::vector<double> hinge;  // per-anchor hinge value (possibly 0)
    LossValue loss;
};

TripletTerms hinge_terms(const Matrix& dist, std::span<const int> labels, double margin) {
    TripletTerms t;
    t.sel = batch_hard(dist, labels);
    const std::size_t b = dist.rows();
    t.hinge.resize(b);
    double sum = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double h =
            positive_part(dist(i, t.sel.farthest_positive[i]) - dist(i, t.sel.closest_negative[i]) + margin);
        t.hinge[i] = h;
        sum += h;
        if (h > 0.0) ++t.loss.active_triplets;
    }
    t.loss.value = sum / static_cast<double>(b);
    return t;
}

}  // namespace

Variant variant_from_name(std::string_view name) {
    if (name == "C") return Variant::kClassification;
    if (name == "T") return Variant::kTriplet;
    if (name == "C+T") return Variant::kClassificationTriplet;
    if (name == "JAL") return Variant::kJointAngular;
    if (name == "JAL_o") return Variant::kJointAngularOrtho;
    throw InvalidConfigError("unknown variant '" + std::string(name) +
                             "' (expected C, T, C+T, JAL or JAL_o)");
}

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::kClassification: return "C";
        case Variant::kTriplet: return "T";
        case Variant::kClassificationTriplet: return "C+T";
        case Variant::kJointAngular: return "JAL";
        case Variant::kJointAngularOrtho: return "JAL_o";
    }
    return "?";
}

void LossConfig::validate() const {
    if (!(lambda >= 0.0)) throw InvalidConfigError("lambda must be >= 0");
    if (!(theta_margin >= 0.0 && theta_margin < kPi))
        throw InvalidConfigError("theta_margin must lie in [0, pi)");
    if (!(alpha > 0.0)) throw InvalidConfigError("alpha must be > 0");
    if (!(gamma >= 0.0)) throw InvalidConfigError("gamma must be >= 0");
    if (!(margin >= 0.0)) throw InvalidConfigError("margin must be >= 0");
}

BatchHardSelection batch_hard(const Matrix& dist, std::span<const int> labels) {
    const std::size_t b = dist.rows();
    if (dist.cols() != b) throw ShapeMismatchError("batch_hard: distance matrix must be square");
    if (labels.size() != b) throw ShapeMismatchError("batch_hard: one label per row required");

    BatchHardSelection sel;
    sel.farthest_positive.resize(b);
    sel.closest_negative.resize(b);
    for (std::size_t i = 0; i < b; ++i) {
        bool has_pos = false;
        bool has_neg = false;
        std::size_t fp = 0;
        std::size_t cn = 0;
        double fp_dist = -std::numeric_limits<double>::infinity();
        double cn_dist = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            if (labels[j] == labels[i]) {
                if (!has_pos || dist(i, j) > fp_dist) {
                    has_pos = true;
                    fp = j;
                    fp_dist = dist(i, j);
                }
            } else {
                if (!has_neg || dist(i, j) < cn_dist) {
                    has_neg = true;
                    cn = j;
                    cn_dist = dist(i, j);
                }
            }
        }
        if (!has_pos) {
            throw DegenerateBatchError("batch_hard: anchor " + std::to_string(i) +
                                       " has no positive sample");
        }
        if (!has_neg) {
            throw DegenerateBatchError("batch_hard: anchor " + std::to_string(i) +
                                       " has no negative sample");
        }
        sel.farthest_positive[i] = fp;
        sel.closest_negative[i] = cn;
    }
    return sel;
}

Matrix squared_euclidean_distances(const Matrix& x) {
    const std::size_t b = x.rows();
    Matrix out(b, b);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = i + 1; j < b; ++j) {
            const double d2 = squared_distance(x.row(i), x.row(j));
            out(i, j) = d2;
            out(j, i) = d2;
        }
    }
    return out;
}

LossValue triplet_hard_euclidean(const Matrix& features, std::span<const int> labels,
                                 double margin) {
    return hinge_terms(squared_euclidean_distances(features), labels, margin).loss;
}

LossValue angular_triplet(const Matrix& unit_features, std::span<const int> labels,
                          double theta_margin) {
    return hinge_terms(pairwise_angles(unit_features), labels, theta_margin).loss;
}

LossValue softmax_ce(const Matrix& logits, std::span<const int> labels) {
    check_labels(labels, logits.rows(), logits.cols());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        double mx = row[0];
        for (double z : row) mx = std::max(mx, z);
        double denom = 0.0;
        for (double z : row) denom += std::exp(z - mx);
        sum += -(row[static_cast<std::size_t>(labels[i])] - mx - std::log(denom));
    }
    return {sum / static_cast<double>(logits.rows()), 0};
}

Matrix angular_logits(const Matrix& unit_features, const Matrix& class_weights, double alpha) {
    if (unit_features.cols() != class_weights.cols()) {
        throw DimensionMismatchError("angular_logits: feature dim " +
                                     std::to_string(unit_features.cols()) + " vs weight dim " +
                                     std::to_string(class_weights.cols()));
    }
    if (!(alpha >= 0.0)) throw InvalidConfigError("angular_logits: alpha must be >= 0");
    const ScaledWeights unit_weights = normalize_weights(class_weights, 1.0);
    Matrix logits = matmul_bt(unit_features, unit_weights.rows);
    for (double& z : logits.values()) z *= alpha;
    return logits;
}

LossValue angular_classification(const Matrix& unit_features, const Matrix& class_weights,
                                 std::span<const int> labels, double alpha) {
    return softmax_ce(angular_logits(unit_features, class_weights, alpha), labels);
}

LossValue joint_angular(const Matrix& unit_features, const Matrix& class_weights,
                        std::span<const int> labels, const LossConfig& config) {
    const LossValue at = angular_triplet(unit_features, labels, config.theta_margin);
    const LossValue ac = angular_classification(unit_features, class_weights, labels, config.alpha);
    return {at.value + config.lambda * ac.value, at.active_triplets};
}

double orthogonal_regularizer(const Matrix& embedding_weight) {
    Matrix g = gram(embedding_weight);
    for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
    return frobenius_squared(g);
}

double orthogonality_score(const Matrix& embedding_weight) {
    const Matrix g = gram(embedding_weight);
    double diag = 0.0;
    double all = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i) {
        diag += g(i, i);
        for (std::size_t j = 0; j < g.cols(); ++j) all += std::abs(g(i, j));
    }
    if (all == 0.0) {
        throw DegenerateWeightsError("orthogonality_score: Gram matrix is all-zero");
    }
    return diag / all;
}

LossBreakdown total_loss_breakdown(const Matrix& features, const Matrix& class_weights,
                                   const Matrix& embedding_weight, std::span<const int> labels,
                                   const LossConfig& config) {
    config.validate();
    LossBreakdown out;
    switch (config.variant) {
        case Variant::kClassification: {
            const LossValue ce = softmax_ce(matmul_bt(features, class_weights), labels);
            out.weighted_classification = ce.value;
            break;
        }
        case Variant::kTriplet: {
            const LossValue t = triplet_hard_euclidean(features, labels, config.margin);
            out.triplet = t.value;
            out.active_triplets = t.active_triplets;
            out.anchors = features.rows();
            break;
        }
        case Variant::kClassificationTriplet: {
            const LossValue t = triplet_hard_euclidean(features, labels, config.margin);
            const LossValue ce = softmax_ce(matmul_bt(features, class_weights), labels);
            out.triplet = t.value;
            out.weighted_classification = config.lambda * ce.value;
            out.active_triplets = t.active_triplets;
            out.anchors = features.rows();
            break;
        }
        case Variant::kJointAngular:
        case Variant::kJointAngularOrtho: {
            const Matrix unit = l2_normalize_rows(features);
            const LossValue at = angular_triplet(unit, labels, config.theta_margin);
            const LossValue ac =
                angular_classification(unit, class_weights, labels, config.alpha);
            out.triplet = at.value;
            out.weighted_classification = config.lambda * ac.value;
            out.active_triplets = at.active_triplets;
            out.anchors = features.rows();
            if (config.variant == Variant::kJointAngularOrtho) {
                out.weighted_regularizer = config.gamma * orthogonal_regularizer(embedding_weight);
            }
            break;
        }
    }
    out.total = out.triplet + out.weighted_classification + out.weighted_regularizer;
    return out;
}

LossValue total_loss(const Matrix& features, const Matrix& class_weights,
                     const Matrix& embedding_weight, std::span<const int> labels,
                     const LossConfig& config) {
    const LossBreakdown b =
        total_loss_breakdown(features, class_weights, embedding_weight, labels, config);
    return {b.total, b.active_triplets};
}

// ---- gradients ----------------------------------------------------------

FeatureGrad triplet_hard_euclidean_grad(const Matrix& features, std::span<const int> labels,
                                        double margin) {
    const Matrix d2 = squared_euclidean_distances(features);
    const TripletTerms t = hinge_terms(d2, labels, margin);
    const std::size_t b = features.rows();
    const double inv_b = 1.0 / static_cast<double>(b);

    FeatureGrad out{t.loss, Matrix(b, features.cols())};
    for (std::size_t i = 0; i < b; ++i) {
        if (t.hinge[i] <= 0.0) continue;
        const std::size_t p = t.sel.farthest_positive[i];
        const std::size_t n = t.sel.closest_negative[i];
        for (std::size_t c = 0; c < features.cols(); ++c) {
            const double dp = features(i, c) - features(p, c);
            const double dn = features(i, c) - features(n, c);
            out.d_features(i, c) += 2.0 * inv_b * (dp - dn);
            out.d_features(p, c) -= 2.0 * inv_b * dp;
            out.d_features(n, c) += 2.0 * inv_b * dn;
        }
    }
    return out;
}

FeatureGrad angular_triplet_grad(const Matrix& unit_features, std::span<const int> labels,
                                 double theta_margin) {
    const TripletTerms t = hinge_terms(pairwise_angles(unit_features), labels, theta_margin);
    const std::size_t b = unit_features.rows();
    const double inv_b = 1.0 / static_cast<double>(b);

    FeatureGrad out{t.loss, Matrix(b, unit_features.cols())};
    // d theta / d x_i = (x_i - x_j) / (c sqrt(1 - c^2/4)); the chord c is
    // clamped away from 0 and 2 to keep the derivative finite.
    const auto accumulate_pair = [&](std::size_t i, std::size_t j, double weight) {
        double chord = std::sqrt(squared_distance(unit_features.row(i), unit_features.row(j)));
        chord = std::clamp(chord, kChordClamp, 2.0 - kChordClamp);
        const double coeff = weight / (chord * std::sqrt(1.0 - chord * chord / 4.0));
        for (std::size_t c = 0; c < unit_features.cols(); ++c) {
            const double diff = unit_features(i, c) - unit_features(j, c);
            out.d_features(i, c) += coeff * diff;
            out.d_features(j, c) -= coeff * diff;
        }
    };
    for (std::size_t i = 0; i < b; ++i) {
        if (t.hinge[i] <= 0.0) continue;
        accumulate_pair(i, t.sel.farthest_positive[i], inv_b);
        accumulate_pair(i, t.sel.closest_negative[i], -inv_b);
    }
    return out;
}

SoftmaxGrad softmax_ce_grad(const Matrix& logits, std::span<const int> labels) {
    const LossValue loss = softmax_ce(logits, labels);
    Matrix g = softmax_rows(logits);
    const double inv_b = 1.0 / static_cast<double>(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        g(i, static_cast<std::size_t>(labels[i])) -= 1.0;
        for (std::size_t k = 0; k < logits.cols(); ++k) g(i, k) *= inv_b;
    }
    return {loss, std::move(g)};
}

ClassifierGrad angular_classification_grad(const Matrix& unit_features,
                                           const Matrix& class_weights,
                                           std::span<const int> labels, double alpha) {
    if (unit_features.cols() != class_weights.cols()) {
        throw DimensionMismatchError("angular_classification_grad: dimension mismatch");
    }
    // Same logits path as the forward-only loss, so both report identical values.
    const Matrix logits = angular_logits(unit_features, class_weights, alpha);
    const Matrix w_hat = normalize_weights(class_weights, 1.0).rows;

    const SoftmaxGrad sg = softmax_ce_grad(logits, labels);

    ClassifierGrad out;
    out.loss = sg.loss;
    // d x_i = alpha * sum_l g_il w_hat_l
    out.d_features = matmul(sg.d_logits, w_hat);
    for (double& v : out.d_features.values()) v *= alpha;

    // d w_l = alpha / ||w_l|| * (s_l - (s_l . w_hat_l) w_hat_l),
    // s_l = sum_i g_il x_i
    const Matrix s = matmul_at(sg.d_logits, unit_features);  // K x d
    out.d_class_weights = Matrix(class_weights.rows(), class_weights.cols());
    for (std::size_t l = 0; l < class_weights.rows(); ++l) {
        const double r = norm2(class_weights.row(l));
        const double proj = dot(s.row(l), w_hat.row(l));
        for (std::size_t c = 0; c < class_weights.cols(); ++c) {
            out.d_class_weights(l, c) = alpha / r * (s(l, c) - proj * w_hat(l, c));
        }
    }
    return out;
}

ClassifierGrad plain_classification_grad(const Matrix& features, const Matrix& class_weights,
                                         std::span<const int> labels) {
    if (features.cols() != class_weights.cols()) {
        throw DimensionMismatchError("plain_classification_grad: dimension mismatch");
    }
    const SoftmaxGrad sg = softmax_ce_grad(matmul_bt(features, class_weights), labels);
    ClassifierGrad out;
    out.loss = sg.loss;
    out.d_features = matmul(sg.d_logits, class_weights);
    out.d_class_weights = matmul_at(sg.d_logits, features);
    return out;
}

Matrix orthogonal_regularizer_grad(const Matrix& embedding_weight) {
    Matrix g = gram(embedding_weight);
    for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
    Matrix out = matmul(embedding_weight, g);
    for (double& v : out.values()) v *= 4.0;
    return out;
}

Matrix l2_normalize_rows_backward(const Matrix& raw, const Matrix& unit, const Matrix& d_unit) {
    assert(raw.same_shape(unit) && raw.same_shape(d_unit));
    Matrix out(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        const double r = norm2(raw.row(i));
        const double proj = dot(d_unit.row(i), unit.row(i));
        for (std::size_t c = 0; c < raw.cols(); ++c) {
            out(i, c) = (d_unit(i, c) - proj * unit(i, c)) / r;
        }
    }
    return out;
}

}  // namespace hhe
