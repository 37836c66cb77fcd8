#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hhe/error.hpp"
#include "hhe/losses.hpp"

using namespace hhe;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                     double sigma = 1.0) {
    Matrix m(rows, cols);
    std::normal_distribution<double> normal(0.0, sigma);
    for (double& v : m.values()) v = normal(rng);
    return m;
}

// Labels 0,0,..,1,1,.. with per_class repeats.
std::vector<int> grouped_labels(std::size_t classes, std::size_t per_class) {
    std::vector<int> labels(classes * per_class);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i / per_class);
    return labels;
}

// Exhaustive per-anchor scan, the mining oracle.
BatchHardSelection exhaustive_hard(const Matrix& dist, const std::vector<int>& labels) {
    const std::size_t b = dist.rows();
    BatchHardSelection sel;
    sel.farthest_positive.assign(b, 0);
    sel.closest_negative.assign(b, 0);
    for (std::size_t i = 0; i < b; ++i) {
        double best_pos = -1.0;
        double best_neg = 1e300;
        std::size_t fp = b;
        std::size_t cn = b;
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            if (labels[j] == labels[i]) {
                if (fp == b || dist(i, j) > best_pos) {
                    best_pos = dist(i, j);
                    fp = j;
                }
            } else if (cn == b || dist(i, j) < best_neg) {
                best_neg = dist(i, j);
                cn = j;
            }
        }
        sel.farthest_positive[i] = fp;
        sel.closest_negative[i] = cn;
    }
    return sel;
}

Matrix symmetric_distances(const std::vector<std::vector<double>>& upper, std::size_t b) {
    Matrix d(b, b);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = i + 1; j < b; ++j) {
            d(i, j) = upper[i][j - i - 1];
            d(j, i) = d(i, j);
        }
    }
    return d;
}

}  // namespace

TEST_CASE("batch_hard hand-built selection") {
    // labels (1,1,2,2); d(0,1)=0.2, d(0,2)=0.5, d(0,3)=0.3,
    // d(1,2)=0.4, d(1,3)=0.6, d(2,3)=0.1
    const Matrix d = symmetric_distances({{0.2, 0.5, 0.3}, {0.4, 0.6}, {0.1}}, 4);
    const std::vector<int> labels = {1, 1, 2, 2};
    const BatchHardSelection sel = batch_hard(d, labels);
    CHECK(sel.farthest_positive[0] == 1);
    CHECK(sel.closest_negative[0] == 3);
    CHECK(sel.farthest_positive[1] == 0);
    CHECK(sel.closest_negative[1] == 2);
    CHECK(sel.farthest_positive[2] == 3);
    CHECK(sel.closest_negative[2] == 1);
    CHECK(sel.farthest_positive[3] == 2);
    CHECK(sel.closest_negative[3] == 0);
}

TEST_CASE("batch_hard ties break toward the lowest index") {
    Matrix d(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) d(i, j) = i == j ? 0.0 : 1.0;
    const std::vector<int> labels = {0, 0, 1, 1};
    const BatchHardSelection sel = batch_hard(d, labels);
    CHECK(sel.farthest_positive[0] == 1);
    CHECK(sel.closest_negative[0] == 2);
    CHECK(sel.farthest_positive[1] == 0);
    CHECK(sel.closest_negative[1] == 2);
    CHECK(sel.farthest_positive[2] == 3);
    CHECK(sel.closest_negative[2] == 0);
    CHECK(sel.farthest_positive[3] == 2);
    CHECK(sel.closest_negative[3] == 0);
}

TEST_CASE("batch_hard degenerate batches") {
    Matrix d(3, 3);
    const std::vector<int> same = {1, 1, 1};
    CHECK_THROWS_AS(batch_hard(d, same), DegenerateBatchError);
    const std::vector<int> lonely = {1, 1, 2};  // anchor 2 has no positive
    CHECK_THROWS_AS(batch_hard(d, lonely), DegenerateBatchError);
}

TEST_CASE("batch_hard equals the exhaustive scan on random batches") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t classes = 2 + trial % 4;
        const std::size_t per_class = 2 + trial % 3;
        const std::vector<int> labels = grouped_labels(classes, per_class);
        const Matrix x = random_matrix(labels.size(), 6, rng);
        const Matrix d2 = squared_euclidean_distances(x);
        const BatchHardSelection sel = batch_hard(d2, labels);
        const BatchHardSelection oracle = exhaustive_hard(d2, labels);
        CHECK(sel.farthest_positive == oracle.farthest_positive);
        CHECK(sel.closest_negative == oracle.closest_negative);
    }
}

TEST_CASE("triplet_hard_euclidean hand arithmetic") {
    // Coincident same-label pairs, cross distance beyond sqrt(margin): zero loss.
    Matrix x(4, 2);
    x(2, 0) = 2.0;
    x(3, 0) = 2.0;
    const std::vector<int> labels = {0, 0, 1, 1};
    const LossValue zero = triplet_hard_euclidean(x, labels, 0.5);
    CHECK(zero.value == 0.0);
    CHECK(zero.active_triplets == 0);

    // Collinear 1-D case: anchors 0,1 labeled A at 0 and 1; B at 1.5 and 10.
    // Terms: [1-2.25+0.5]+ = 0, [1-0.25+0.5]+ = 1.25, [72.25-0.25+0.5]+ = 72.5,
    // [72.25-81+0.5]+ = 0; mean 18.4375.
    Matrix line(4, 1);
    line(0, 0) = 0.0;
    line(1, 0) = 1.0;
    line(2, 0) = 1.5;
    line(3, 0) = 10.0;
    const LossValue loss = triplet_hard_euclidean(line, labels, 0.5);
    CHECK(loss.value == doctest::Approx(18.4375).epsilon(1e-12));
    CHECK(loss.active_triplets == 2);
}

TEST_CASE("triplet_hard_euclidean matches the all-triplets brute force") {
    std::mt19937_64 rng(211);
    for (int trial = 0; trial < 30; ++trial) {
        const std::vector<int> labels = grouped_labels(3, 3);
        const Matrix x = random_matrix(labels.size(), 4, rng);
        const double margin = 0.5;
        const LossValue fast = triplet_hard_euclidean(x, labels, margin);

        // O(B^3): for each anchor scan every (positive, negative) pair and
        // keep the hardest combination.
        const std::size_t b = labels.size();
        double sum = 0.0;
        std::size_t active = 0;
        for (std::size_t a = 0; a < b; ++a) {
            double worst = -1e300;
            bool found = false;
            for (std::size_t p = 0; p < b; ++p) {
                if (p == a || labels[p] != labels[a]) continue;
                for (std::size_t n = 0; n < b; ++n) {
                    if (labels[n] == labels[a]) continue;
                    const double term = squared_distance(x.row(a), x.row(p)) -
                                        squared_distance(x.row(a), x.row(n)) + margin;
                    worst = std::max(worst, term);
                    found = true;
                }
            }
            REQUIRE(found);
            if (worst > 0.0) {
                sum += worst;
                ++active;
            }
        }
        CHECK(fast.value == doctest::Approx(sum / static_cast<double>(b)).epsilon(1e-12));
        CHECK(fast.active_triplets == active);
    }
}

TEST_CASE("angular_triplet hand arithmetic") {
    const std::vector<int> labels = {0, 0, 1, 1};
    const double theta_m = 3.0 * kPi / 180.0;

    // Coincident positives, orthogonal negatives: margin satisfied.
    Matrix x(4, 2);
    x(0, 0) = 1.0;
    x(1, 0) = 1.0;
    x(2, 1) = 1.0;
    x(3, 1) = 1.0;
    const LossValue zero = angular_triplet(x, labels, theta_m);
    CHECK(zero.value == 0.0);
    CHECK(zero.active_triplets == 0);

    // All four mutually orthogonal: every anchor contributes exactly theta_m.
    Matrix ortho(4, 4);
    for (std::size_t i = 0; i < 4; ++i) ortho(i, i) = 1.0;
    const LossValue margin_only = angular_triplet(ortho, labels, theta_m);
    CHECK(margin_only.value == doctest::Approx(theta_m).epsilon(1e-12));
    CHECK(margin_only.active_triplets == 4);
}

TEST_CASE("softmax_ce known values") {
    Matrix uniform(2, 4);
    const std::vector<int> labels = {1, 3};
    const LossValue loss = softmax_ce(uniform, labels);
    CHECK(loss.value == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    Matrix peaked(1, 5);
    peaked(0, 2) = 1000.0;
    CHECK(softmax_ce(peaked, std::vector<int>{2}).value <= 1e-10);

    CHECK_THROWS_AS(softmax_ce(uniform, std::vector<int>{1, 4}), LabelOutOfRangeError);
    CHECK_THROWS_AS(softmax_ce(uniform, std::vector<int>{-1, 0}), LabelOutOfRangeError);
}

TEST_CASE("softmax_ce matches the direct formula and is shift invariant") {
    std::mt19937_64 rng(307);
    const Matrix logits = random_matrix(3, 5, rng, 2.0);
    const std::vector<int> labels = {0, 4, 2};
    const LossValue loss = softmax_ce(logits, labels);

    double direct = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        double denom = 0.0;
        for (std::size_t k = 0; k < 5; ++k) denom += std::exp(logits(i, k));
        direct += -std::log(std::exp(logits(i, static_cast<std::size_t>(labels[i]))) / denom);
    }
    CHECK(loss.value == doctest::Approx(direct / 3.0).epsilon(1e-12));

    for (double shift : {-50.0, 3.5, 1000.0}) {
        Matrix shifted = logits;
        for (double& v : shifted.values()) v += shift;
        CHECK(std::abs(softmax_ce(shifted, labels).value - loss.value) <= 1e-12);
    }
}

TEST_CASE("angular_logits known values") {
    Matrix features(2, 3);
    features(0, 0) = 1.0;  // e1
    features(1, 1) = 1.0;  // e2
    Matrix weights(2, 3);
    weights(0, 0) = 5.0;  // aligned with e1, non-unit norm
    weights(1, 2) = 7.0;  // orthogonal to both features
    const Matrix logits = angular_logits(features, weights, 12.0);
    CHECK(logits(0, 0) == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(logits(0, 1) == doctest::Approx(0.0));
    CHECK(logits(1, 0) == doctest::Approx(0.0));
    CHECK(logits(1, 1) == doctest::Approx(0.0));

    Matrix degenerate(2, 3);
    degenerate(0, 0) = 1.0;  // row 1 all zero
    CHECK_THROWS_AS(angular_logits(features, degenerate, 12.0), ZeroVectorError);
}

TEST_CASE("angular_classification limits") {
    // Orthogonal class centers, each feature sitting on its own center.
    const Matrix eye = Matrix::identity(3);
    const std::vector<int> labels = {0, 1, 2};
    CHECK(angular_classification(eye, eye, labels, 30.0).value < 1e-10);

    // alpha = 0: uniform posterior, loss = log K for any input.
    std::mt19937_64 rng(401);
    const Matrix w = random_matrix(4, 3, rng);
    CHECK(angular_classification(eye, w, labels, 0.0).value ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));

    // Composition oracle: softmax_ce over angular_logits.
    const Matrix feats = l2_normalize_rows(random_matrix(3, 3, rng));
    const LossValue composed = softmax_ce(angular_logits(feats, w, 12.0), labels);
    CHECK(angular_classification(feats, w, labels, 12.0).value ==
          doctest::Approx(composed.value).epsilon(1e-15));
}

TEST_CASE("joint_angular composition") {
    std::mt19937_64 rng(503);
    const Matrix feats = l2_normalize_rows(random_matrix(6, 4, rng));
    const Matrix w = random_matrix(3, 4, rng);
    const std::vector<int> labels = grouped_labels(3, 2);

    LossConfig config;
    config.lambda = 0.0;
    const LossValue no_class = joint_angular(feats, w, labels, config);
    const LossValue at = angular_triplet(feats, labels, config.theta_margin);
    CHECK(no_class.value == at.value);
    CHECK(no_class.active_triplets == at.active_triplets);

    config.lambda = 0.2;
    const LossValue joint = joint_angular(feats, w, labels, config);
    const LossValue ac = angular_classification(feats, w, labels, config.alpha);
    CHECK(std::abs(joint.value - (at.value + 0.2 * ac.value)) <= 1e-12);
}

TEST_CASE("orthogonal_regularizer hand arithmetic") {
    // Orthonormal columns.
    Matrix tall(4, 2);
    tall(0, 0) = 1.0;
    tall(1, 1) = 1.0;
    CHECK(orthogonal_regularizer(tall) == 0.0);

    // 2I: Gram 4I, deviation (4-1)^2 * 2 = 18.
    Matrix twice = Matrix::identity(2);
    for (double& v : twice.values()) v *= 2.0;
    CHECK(orthogonal_regularizer(twice) == doctest::Approx(18.0).epsilon(1e-12));

    // Duplicated unit column pair: off-diagonals 1 -> 2.
    Matrix dup(3, 2);
    dup(0, 0) = 1.0;
    dup(0, 1) = 1.0;
    CHECK(orthogonal_regularizer(dup) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("orthogonality_score known values and range") {
    Matrix tall(4, 2);
    tall(0, 0) = 1.0;
    tall(1, 1) = 1.0;
    CHECK(orthogonality_score(tall) == doctest::Approx(1.0).epsilon(1e-12));

    // Orthogonal but not orthonormal columns still score 1.
    Matrix scaled(2, 2);
    scaled(0, 0) = 2.0;
    scaled(1, 1) = 3.0;
    CHECK(orthogonality_score(scaled) == doctest::Approx(1.0).epsilon(1e-12));

    // k identical unit columns -> 1/k.
    Matrix dup(5, 4);
    for (std::size_t j = 0; j < 4; ++j) dup(2, j) = 1.0;
    CHECK(orthogonality_score(dup) == doctest::Approx(0.25).epsilon(1e-12));

    CHECK_THROWS_AS(orthogonality_score(Matrix(3, 2)), DegenerateWeightsError);

    std::mt19937_64 rng(601);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 1 + trial % 6;
        const Matrix w = random_matrix(4 + trial % 3, k, rng);
        const double s = orthogonality_score(w);
        CHECK(s >= 1.0 / static_cast<double>(k) - 1e-12);
        CHECK(s <= 1.0 + 1e-12);
    }
}

TEST_CASE("orthogonality_score is 1 exactly for orthogonal columns") {
    std::mt19937_64 rng(607);
    // Random diagonal-rescaled identity: columns orthogonal by construction.
    Matrix w(5, 5);
    for (std::size_t j = 0; j < 5; ++j) {
        w(j, j) = std::uniform_real_distribution<double>(0.5, 3.0)(rng);
    }
    CHECK(orthogonality_score(w) == doctest::Approx(1.0).epsilon(1e-12));

    // Near-orthogonal Gram off-diagonals imply a score near 1 and vice versa.
    Matrix almost = w;
    almost(0, 1) = 1e-12;
    CHECK(orthogonality_score(almost) >= 1.0 - 1e-9);
}

TEST_CASE("total_loss composes the variant objectives") {
    std::mt19937_64 rng(701);
    const std::vector<int> labels = grouped_labels(3, 2);
    const Matrix features = random_matrix(6, 4, rng);
    const Matrix w = random_matrix(3, 4, rng);
    const Matrix w_e = random_matrix(5, 4, rng);

    LossConfig config;

    SUBCASE("JAL_o with gamma 0 equals the joint angular loss") {
        config.variant = Variant::kJointAngularOrtho;
        config.gamma = 0.0;
        const LossValue total = total_loss(features, w, w_e, labels, config);
        const LossValue joint = joint_angular(l2_normalize_rows(features), w, labels, config);
        CHECK(total.value == doctest::Approx(joint.value).epsilon(1e-15));
    }

    SUBCASE("JAL_o sums oracle parts") {
        config.variant = Variant::kJointAngularOrtho;
        const Matrix unit = l2_normalize_rows(features);
        const double expected = angular_triplet(unit, labels, config.theta_margin).value +
                                config.lambda *
                                    angular_classification(unit, w, labels, config.alpha).value +
                                config.gamma * orthogonal_regularizer(w_e);
        CHECK(std::abs(total_loss(features, w, w_e, labels, config).value - expected) <= 1e-12);
    }

    SUBCASE("C+T sums oracle parts") {
        config.variant = Variant::kClassificationTriplet;
        const double expected =
            triplet_hard_euclidean(features, labels, config.margin).value +
            config.lambda * softmax_ce(matmul_bt(features, w), labels).value;
        CHECK(std::abs(total_loss(features, w, w_e, labels, config).value - expected) <= 1e-12);
    }

    SUBCASE("C and T reduce to their single components") {
        config.variant = Variant::kClassification;
        CHECK(total_loss(features, w, w_e, labels, config).value ==
              softmax_ce(matmul_bt(features, w), labels).value);
        config.variant = Variant::kTriplet;
        CHECK(total_loss(features, w, w_e, labels, config).value ==
              triplet_hard_euclidean(features, labels, config.margin).value);
    }
}

TEST_CASE("angular losses are invariant to positive feature scaling") {
    std::mt19937_64 rng(809);
    const std::vector<int> labels = grouped_labels(3, 3);
    const Matrix raw = random_matrix(9, 5, rng);
    const Matrix w = random_matrix(3, 5, rng);

    LossConfig config;
    const Matrix unit = l2_normalize_rows(raw);
    const double at = angular_triplet(unit, labels, config.theta_margin).value;
    const double ac = angular_classification(unit, w, labels, config.alpha).value;
    const BatchHardSelection sel = batch_hard(pairwise_angles(unit), labels);

    for (double s : {0.02, 3.7, 250.0}) {
        Matrix scaled = raw;
        for (double& v : scaled.values()) v *= s;
        const Matrix unit_s = l2_normalize_rows(scaled);
        CHECK(std::abs(angular_triplet(unit_s, labels, config.theta_margin).value - at) <= 1e-9);
        CHECK(std::abs(angular_classification(unit_s, w, labels, config.alpha).value - ac) <=
              1e-9);
        const BatchHardSelection sel_s = batch_hard(pairwise_angles(unit_s), labels);
        CHECK(sel_s.farthest_positive == sel.farthest_positive);
        CHECK(sel_s.closest_negative == sel.closest_negative);
    }

    // Per-row positive rescaling of W leaves the angular logits unchanged.
    Matrix w_scaled = w;
    std::uniform_real_distribution<double> scale(0.1, 9.0);
    for (std::size_t l = 0; l < w.rows(); ++l) {
        const double s = scale(rng);
        for (std::size_t c = 0; c < w.cols(); ++c) w_scaled(l, c) *= s;
    }
    const Matrix logits_a = angular_logits(unit, w, 12.0);
    const Matrix logits_b = angular_logits(unit, w_scaled, 12.0);
    for (std::size_t i = 0; i < logits_a.size(); ++i) {
        CHECK(std::abs(logits_a.values()[i] - logits_b.values()[i]) <= 1e-9);
    }
}

TEST_CASE("triplet losses are nonnegative and bounded by max distance plus margin") {
    std::mt19937_64 rng(907);
    for (int trial = 0; trial < 50; ++trial) {
        const std::vector<int> labels = grouped_labels(2 + trial % 3, 2 + trial % 2);
        const Matrix x = random_matrix(labels.size(), 4, rng);

        const double m = 0.5;
        const Matrix d2 = squared_euclidean_distances(x);
        double max_d2 = 0.0;
        for (double v : d2.values()) max_d2 = std::max(max_d2, v);
        const LossValue te = triplet_hard_euclidean(x, labels, m);
        CHECK(te.value >= 0.0);
        CHECK(te.value <= max_d2 + m);

        const double theta_m = 3.0 * kPi / 180.0;
        const Matrix unit = l2_normalize_rows(x);
        const Matrix angles = pairwise_angles(unit);
        double max_angle = 0.0;
        for (double v : angles.values()) max_angle = std::max(max_angle, v);
        const LossValue ta = angular_triplet(unit, labels, theta_m);
        CHECK(ta.value >= 0.0);
        CHECK(ta.value <= max_angle + theta_m);
    }
}
