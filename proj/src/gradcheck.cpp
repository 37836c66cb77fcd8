#include "hhe/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "hhe/error.hpp"

namespace hhe {

NetworkGradients finite_difference_gradients(const EmbeddingNetwork& net, const Matrix& inputs,
                                             std::span<const int> labels,
                                             const LossConfig& config, double step) {
    EmbeddingNetwork probe = net;
    NetworkGradients grads = zero_gradients_like(net);
    auto params = parameter_arrays(probe);
    auto grad_arrays = parameter_arrays(grads);

    const auto loss_at = [&]() {
        const Matrix embeddings = forward(probe, inputs);
        return total_loss(embeddings, probe.class_weights, probe.embedding_weight, labels,
                          config)
            .value;
    };

    for (std::size_t a = 0; a < params.size(); ++a) {
        for (std::size_t i = 0; i < params[a]->size(); ++i) {
            const double original = (*params[a])[i];
            (*params[a])[i] = original + step;
            const double plus = loss_at();
            (*params[a])[i] = original - step;
            const double minus = loss_at();
            (*params[a])[i] = original;
            (*grad_arrays[a])[i] = (plus - minus) / (2.0 * step);
        }
    }
    return grads;
}

double max_relative_error(const NetworkGradients& analytic, const NetworkGradients& numeric,
                          double denom_floor) {
    auto a_arrays = parameter_arrays(analytic);
    auto n_arrays = parameter_arrays(numeric);
    double worst = 0.0;
    for (std::size_t a = 0; a < a_arrays.size(); ++a) {
        for (std::size_t i = 0; i < a_arrays[a]->size(); ++i) {
            const double x = (*a_arrays[a])[i];
            const double y = (*n_arrays[a])[i];
            const double denom = std::max({std::abs(x), std::abs(y), denom_floor});
            worst = std::max(worst, std::abs(x - y) / denom);
        }
    }
    return worst;
}

namespace {

bool needs_triplet(Variant v) {
    return v != Variant::kClassification;
}

bool is_angular(Variant v) {
    return v == Variant::kJointAngular || v == Variant::kJointAngularOrtho;
}

// The hinge terms and mined indices must be robust to the O(step)
// perturbations finite differences apply: margins away from the kink,
// candidate distances away from ties.
bool triplet_terms_smooth(const Matrix& dist, std::span<const int> labels, double margin,
                          const GradCheckConfig& check) {
    const std::size_t b = dist.rows();
    const BatchHardSelection sel = batch_hard(dist, labels);
    for (std::size_t i = 0; i < b; ++i) {
        const double d_fp = dist(i, sel.farthest_positive[i]);
        const double d_cn = dist(i, sel.closest_negative[i]);
        if (std::abs(d_fp - d_cn + margin) < check.kink_margin) return false;
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            if (labels[j] == labels[i] && j != sel.farthest_positive[i] &&
                std::abs(dist(i, j) - d_fp) < check.tie_margin) {
                return false;
            }
            if (labels[j] != labels[i] && j != sel.closest_negative[i] &&
                std::abs(dist(i, j) - d_cn) < check.tie_margin) {
                return false;
            }
        }
    }
    return true;
}

bool instance_is_smooth(const GradCheckInstance& instance, const LossConfig& config,
                        const GradCheckConfig& check) {
    // Walk the hidden layers, rejecting pre-activations near the rectifier kink.
    Matrix act = instance.inputs;
    for (const auto& layer : instance.net.hidden) {
        Matrix pre = matmul(act, layer.weight);
        for (std::size_t i = 0; i < pre.rows(); ++i)
            for (std::size_t j = 0; j < pre.cols(); ++j) pre(i, j) += layer.bias[j];
        for (double v : pre.values()) {
            if (std::abs(v) < check.relu_margin) return false;
        }
        act = pre;
        for (double& v : act.values()) v = v > 0.0 ? v : 0.0;
    }
    const Matrix embeddings = matmul(act, instance.net.embedding_weight);

    for (std::size_t i = 0; i < embeddings.rows(); ++i) {
        if (norm2(embeddings.row(i)) < check.min_embedding_norm) return false;
    }

    if (is_angular(config.variant)) {
        const Matrix unit = l2_normalize_rows(embeddings);
        const Matrix angles = pairwise_angles(unit);
        for (std::size_t i = 0; i < angles.rows(); ++i) {
            for (std::size_t j = i + 1; j < angles.cols(); ++j) {
                if (angles(i, j) < check.angle_margin || angles(i, j) > kPi - check.angle_margin) {
                    return false;
                }
            }
        }
        if (!triplet_terms_smooth(angles, instance.labels, config.theta_margin, check)) {
            return false;
        }
        // Feature/class-center angles drive the softmax; only the arcsin
        // path is singular, so no constraint is needed there.
    } else if (needs_triplet(config.variant)) {
        const Matrix d2 = squared_euclidean_distances(embeddings);
        if (!triplet_terms_smooth(d2, instance.labels, config.margin, check)) return false;
    }
    return true;
}

}  // namespace

GradCheckInstance draw_gradcheck_instance(Variant variant, const LossConfig& base,
                                          std::mt19937_64& rng, const GradCheckConfig& check) {
    LossConfig config = base;
    config.variant = variant;

    constexpr std::size_t kInputDim = 6;
    constexpr std::size_t kEmbedDim = 5;
    constexpr std::size_t kClasses = 3;
    constexpr std::size_t kPerClass = 3;
    const NetworkDims dims{kInputDim, {7}, kEmbedDim};

    std::normal_distribution<double> unit_normal(0.0, 1.0);
    for (int attempt = 0; attempt < 500; ++attempt) {
        GradCheckInstance instance;
        instance.net = init_network(dims, kClasses, rng());
        // Bias draws keep the rectifier pattern diverse across trials.
        for (auto& layer : instance.net.hidden) {
            for (double& b : layer.bias) b = 0.1 * unit_normal(rng);
        }
        instance.inputs = Matrix(kClasses * kPerClass, kInputDim);
        for (double& v : instance.inputs.values()) v = unit_normal(rng);
        instance.labels.resize(kClasses * kPerClass);
        for (std::size_t i = 0; i < instance.labels.size(); ++i) {
            instance.labels[i] = static_cast<int>(i / kPerClass);
        }
        if (instance_is_smooth(instance, config, check)) return instance;
    }
    throw Error("draw_gradcheck_instance: no smooth instance found in 500 attempts");
}

GradCheckResult gradcheck_variant(Variant variant, const LossConfig& base, std::size_t trials,
                                  std::uint64_t seed, const GradCheckConfig& check) {
    LossConfig config = base;
    config.variant = variant;

    std::mt19937_64 rng(seed);
    GradCheckResult result;
    result.variant = variant;
    result.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        const GradCheckInstance instance = draw_gradcheck_instance(variant, base, rng, check);
        const NetworkGradients analytic =
            loss_and_grad(instance.net, instance.inputs, instance.labels, config).second;
        const NetworkGradients numeric = finite_difference_gradients(
            instance.net, instance.inputs, instance.labels, config, check.step);
        result.max_rel_error =
            std::max(result.max_rel_error, max_relative_error(analytic, numeric, check.denom_floor));
    }
    result.pass = result.max_rel_error <= check.tolerance;
    return result;
}

}  // namespace hhe
