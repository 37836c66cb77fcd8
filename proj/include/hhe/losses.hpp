#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "hhe/geometry.hpp"
#include "hhe/matrix.hpp"

namespace hhe {

// Training objectives: plain classification, hard-mined Euclidean triplet,
// their weighted combination, the joint angular loss, and the joint angular
// loss with the orthogonality regularizer.
enum class Variant {
    kClassification,         // "C"
    kTriplet,                // "T"
    kClassificationTriplet,  // "C+T"
    kJointAngular,           // "JAL"
    kJointAngularOrtho,      // "JAL_o"
};

Variant variant_from_name(std::string_view name);
std::string_view variant_name(Variant v);
inline constexpr Variant kAllVariants[] = {
    Variant::kClassification, Variant::kTriplet, Variant::kClassificationTriplet,
    Variant::kJointAngular, Variant::kJointAngularOrtho};

struct LossConfig {
    double lambda = 0.2;                      // classification weight in joint losses
    double theta_margin = 3.0 * kPi / 180.0;  // angular margin, radians
    double alpha = 12.0;                      // weight-sphere radius
    double gamma = 1e-3;                      // orthogonality regularizer weight
    double margin = 0.5;                      // Euclidean triplet margin
    Variant variant = Variant::kJointAngularOrtho;

    // Throws InvalidConfigError when a field is out of range.
    void validate() const;
};

// Per-anchor hardest positive / closest negative, chosen within a batch.
struct BatchHardSelection {
    std::vector<std::size_t> farthest_positive;
    std::vector<std::size_t> closest_negative;
};

struct LossValue {
    double value = 0.0;
    std::size_t active_triplets = 0;  // hinge terms strictly > 0
};

// dist is a symmetric B x B distance (or angle) matrix. Ties break toward
// the lowest index. Throws DegenerateBatchError when an anchor lacks a
// positive or a negative.
BatchHardSelection batch_hard(const Matrix& dist, std::span<const int> labels);

Matrix squared_euclidean_distances(const Matrix& x);

// Mean over anchors of [d2(a, fp) - d2(a, cn) + margin]_+ with squared
// Euclidean distances on raw features.
LossValue triplet_hard_euclidean(const Matrix& features, std::span<const int> labels,
                                 double margin);

// Mean over anchors of [theta_ap - theta_an + theta_margin]_+ on unit rows.
LossValue angular_triplet(const Matrix& unit_features, std::span<const int> labels,
                          double theta_margin);

// Mean cross-entropy of row-wise softmax, computed with max subtraction.
LossValue softmax_ce(const Matrix& logits, std::span<const int> labels);

// Entry (i, l) = alpha * cos(angle between class center l and unit row i).
// The class weights are normalized internally; no bias term exists.
Matrix angular_logits(const Matrix& unit_features, const Matrix& class_weights,
                      double alpha);

LossValue angular_classification(const Matrix& unit_features, const Matrix& class_weights,
                                 std::span<const int> labels, double alpha);

// Angular triplet plus lambda-weighted angular classification.
LossValue joint_angular(const Matrix& unit_features, const Matrix& class_weights,
                        std::span<const int> labels, const LossConfig& config);

// || W^T W - I ||_F^2 over the columns of the embedding weight.
double orthogonal_regularizer(const Matrix& embedding_weight);

// S(W) = sum_i g_ii / sum_ij |g_ij| with g the column Gram matrix; ranges
// in [1/k, 1], k = number of columns. Throws DegenerateWeightsError when
// the Gram matrix is all-zero.
double orthogonality_score(const Matrix& embedding_weight);

struct LossBreakdown {
    double total = 0.0;
    double triplet = 0.0;                  // triplet component (0 for C)
    double weighted_classification = 0.0;  // lambda-weighted where combined
    double weighted_regularizer = 0.0;     // gamma * R_e (JAL_o only)
    std::size_t active_triplets = 0;
    std::size_t anchors = 0;  // 0 when the variant has no triplet term
};

// The variant's full objective on raw network outputs. Angular variants
// normalize the feature rows internally; C/T/C+T use them as-is.
LossBreakdown total_loss_breakdown(const Matrix& features, const Matrix& class_weights,
                                   const Matrix& embedding_weight, std::span<const int> labels,
                                   const LossConfig& config);
LossValue total_loss(const Matrix& features, const Matrix& class_weights,
                     const Matrix& embedding_weight, std::span<const int> labels,
                     const LossConfig& config);

// ---- analytic gradients -------------------------------------------------
//
// Batch-hard indices are constants of the forward pass; hinge subgradient
// at the kink is 0. The arcsin derivative clamps the chord to
// [kChordClamp, 2 - kChordClamp] so gradients stay bounded near angle 0
// and pi (the clamp is applied in the gradient only, never in the loss).

inline constexpr double kChordClamp = 1e-7;

struct FeatureGrad {
    LossValue loss;
    Matrix d_features;
};

struct SoftmaxGrad {
    LossValue loss;
    Matrix d_logits;
};

struct ClassifierGrad {
    LossValue loss;
    Matrix d_features;
    Matrix d_class_weights;
};

FeatureGrad triplet_hard_euclidean_grad(const Matrix& features, std::span<const int> labels,
                                        double margin);
FeatureGrad angular_triplet_grad(const Matrix& unit_features, std::span<const int> labels,
                                 double theta_margin);
SoftmaxGrad softmax_ce_grad(const Matrix& logits, std::span<const int> labels);
ClassifierGrad angular_classification_grad(const Matrix& unit_features,
                                           const Matrix& class_weights,
                                           std::span<const int> labels, double alpha);
// Plain inner-product logits (variant C path), no bias.
ClassifierGrad plain_classification_grad(const Matrix& features, const Matrix& class_weights,
                                         std::span<const int> labels);
// dR/dW = 4 W (W^T W - I)
Matrix orthogonal_regularizer_grad(const Matrix& embedding_weight);

// Backprop through row-wise L2 normalization: given raw rows, their unit
// rows and dL/d(unit rows), returns dL/d(raw rows).
Matrix l2_normalize_rows_backward(const Matrix& raw, const Matrix& unit,
                                  const Matrix& d_unit);

}  // namespace hhe
