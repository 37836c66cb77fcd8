#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "hhe/data.hpp"
#include "hhe/losses.hpp"
#include "hhe/matrix.hpp"

namespace hhe {

struct AffineLayer {
    Matrix weight;             // in x out
    std::vector<double> bias;  // out

    friend bool operator==(const AffineLayer&, const AffineLayer&) = default;
};

// Feed-forward embedding network: rectified affine hidden layers, a linear
// embedding layer without bias, and a bias-free classifier row per class.
struct EmbeddingNetwork {
    std::vector<AffineLayer> hidden;
    Matrix embedding_weight;  // last hidden dim x embed dim
    Matrix class_weights;     // num classes x embed dim

    std::size_t input_dim() const {
        return hidden.empty() ? embedding_weight.rows() : hidden.front().weight.rows();
    }
    std::size_t embed_dim() const { return embedding_weight.cols(); }
    std::size_t num_classes() const { return class_weights.rows(); }

    friend bool operator==(const EmbeddingNetwork&, const EmbeddingNetwork&) = default;
};

struct NetworkDims {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t embed_dim = 0;
};

// Zero-mean init with per-layer variance 2/fan_in; biases start at zero.
// Deterministic for a given seed. Throws InvalidArchitectureError.
EmbeddingNetwork init_network(const NetworkDims& dims, std::size_t num_classes,
                              std::uint64_t seed);

// Raw (pre-normalization) embeddings, B x embed_dim.
Matrix forward(const EmbeddingNetwork& net, const Matrix& inputs);

struct NetworkGradients {
    std::vector<AffineLayer> hidden;
    Matrix embedding_weight;
    Matrix class_weights;
};

NetworkGradients zero_gradients_like(const EmbeddingNetwork& net);

// Flat views over every parameter array, in a fixed order shared by the
// optimizer, the finite-difference checker and serialization.
std::vector<std::vector<double>*> parameter_arrays(EmbeddingNetwork& net);
std::vector<const std::vector<double>*> parameter_arrays(const EmbeddingNetwork& net);
std::vector<std::vector<double>*> parameter_arrays(NetworkGradients& grads);
std::vector<const std::vector<double>*> parameter_arrays(const NetworkGradients& grads);

// Forward pass plus analytic gradients of the variant's full objective.
// Batch-hard indices are constants of the forward pass; ReLU and hinge
// subgradients at their kinks are 0.
std::pair<LossBreakdown, NetworkGradients> loss_and_grad(const EmbeddingNetwork& net,
                                                         const Matrix& inputs,
                                                         std::span<const int> labels,
                                                         const LossConfig& config);

// Piecewise-constant schedule: initial_rate for the first stage, then a
// decay factor at each stage boundary. The long default first stage is what
// the orthogonality regularizer needs to drive S(W_e) close to 1 at desk
// scale (an epoch here is only a handful of optimizer steps).
struct LearningRateSchedule {
    double initial_rate = 1e-3;
    std::vector<std::size_t> stage_epochs = {2800, 200, 200};
    double decay = 0.1;

    double rate_for_epoch(std::size_t epoch) const;
    std::size_t total_epochs() const;
};

enum class OptimizerMode { kAdam, kMomentum };

struct OptimizerConfig {
    OptimizerMode mode = OptimizerMode::kAdam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double momentum = 0.9;  // Nesterov momentum for the kMomentum mode
};

class Optimizer {
  public:
    Optimizer(const EmbeddingNetwork& net, OptimizerConfig config);

    // Throws ShapeMismatchError when gradient shapes do not match.
    void step(EmbeddingNetwork& net, const NetworkGradients& grads, double learning_rate);

    std::size_t step_count() const { return step_count_; }

  private:
    OptimizerConfig config_;
    std::vector<std::vector<double>> first_moment_;   // Adam m / momentum velocity
    std::vector<std::vector<double>> second_moment_;  // Adam v
    std::size_t step_count_ = 0;
};

struct TrainConfig {
    LossConfig loss;
    std::vector<std::size_t> hidden_dims = {64, 64};
    std::size_t embed_dim = 32;
    std::size_t p_identities = 8;
    std::size_t n_samples = 4;
    LearningRateSchedule schedule;   // adaptive-mode rates
    double momentum_rate = 1e-2;     // initial rate for the variant-C momentum baseline
    std::uint64_t seed = 42;
};

struct EpochStats {
    std::size_t epoch = 0;
    double loss = 0.0;
    double triplet = 0.0;
    double weighted_classification = 0.0;
    double weighted_regularizer = 0.0;
    double s_we = 0.0;
    double active_fraction = 0.0;
};

struct TrainLog {
    double initial_s_we = 0.0;
    std::vector<EpochStats> epochs;
    std::vector<double> step_losses;
};

struct TrainResult {
    EmbeddingNetwork net;
    TrainLog log;
    std::vector<int> class_labels;  // class index -> dataset identity label
};

// Deterministic end-to-end training on a labeled dataset. The variant-C
// baseline uses Nesterov momentum, everything else Adam; both follow the
// same staged schedule shape. Throws DegenerateDatasetError when the data
// cannot form PK batches.
TrainResult train(const Dataset& dataset, const TrainConfig& config);

// Versioned text container with shape headers and shortest round-trip
// values; load(save(net)) == net exactly.
void save_model(const EmbeddingNetwork& net, const std::filesystem::path& path);
EmbeddingNetwork load_model(const std::filesystem::path& path);

}  // namespace hhe
