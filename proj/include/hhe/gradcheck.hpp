#pragma once

#include <random>

#include "hhe/model.hpp"

namespace hhe {

// Finite-difference verification of the analytic gradients. Random draws
// avoid the non-smooth neighborhoods of the objective: hinge kinks, mining
// ties, rectifier kinks, and pairwise angles near 0 or pi (where the arcsin
// derivative is singular).
struct GradCheckConfig {
    double step = 1e-5;       // central-difference h
    double tolerance = 1e-4;  // max relative error accepted
    double denom_floor = 1e-6;
    double kink_margin = 1e-3;
    double tie_margin = 1e-3;
    double angle_margin = 1e-3;
    double relu_margin = 1e-3;
    double min_embedding_norm = 1e-2;
};

// Central differences of the forward loss over every parameter. Uses only
// forward() and total_loss(), never the analytic gradient path.
NetworkGradients finite_difference_gradients(const EmbeddingNetwork& net, const Matrix& inputs,
                                             std::span<const int> labels,
                                             const LossConfig& config, double step);

double max_relative_error(const NetworkGradients& analytic, const NetworkGradients& numeric,
                          double denom_floor);

struct GradCheckInstance {
    EmbeddingNetwork net;
    Matrix inputs;
    std::vector<int> labels;
};

// Small random network and batch whose loss surface is smooth at the drawn
// point for the given variant. Throws Error if no valid draw is found.
GradCheckInstance draw_gradcheck_instance(Variant variant, const LossConfig& base,
                                          std::mt19937_64& rng, const GradCheckConfig& check);

struct GradCheckResult {
    Variant variant = Variant::kJointAngular;
    std::size_t trials = 0;
    double max_rel_error = 0.0;
    bool pass = false;
};

GradCheckResult gradcheck_variant(Variant variant, const LossConfig& base, std::size_t trials,
                                  std::uint64_t seed, const GradCheckConfig& check = {});

}  // namespace hhe
