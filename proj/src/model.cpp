#include "hhe/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "hhe/error.hpp"
#include "hhe/sampling.hpp"
#include "hhe/text_io.hpp"

namespace hhe {

EmbeddingNetwork init_network(const NetworkDims& dims, std::size_t num_classes,
                              std::uint64_t seed) {
    if (dims.input_dim < 1 || dims.embed_dim < 1) {
        throw InvalidArchitectureError("input_dim and embed_dim must be >= 1");
    }
    for (std::size_t h : dims.hidden_dims) {
        if (h < 1) throw InvalidArchitectureError("hidden layer width must be >= 1");
    }
    if (num_classes < 2) throw InvalidArchitectureError("need >= 2 classes");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    const auto fill = [&](Matrix& m, std::size_t fan_in) {
        const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (double& v : m.values()) v = sigma * unit_normal(rng);
    };

    EmbeddingNetwork net;
    std::size_t prev = dims.input_dim;
    for (std::size_t h : dims.hidden_dims) {
        AffineLayer layer{Matrix(prev, h), std::vector<double>(h, 0.0)};
        fill(layer.weight, prev);
        net.hidden.push_back(std::move(layer));
        prev = h;
    }
    net.embedding_weight = Matrix(prev, dims.embed_dim);
    fill(net.embedding_weight, prev);
    net.class_weights = Matrix(num_classes, dims.embed_dim);
    fill(net.class_weights, dims.embed_dim);
    return net;
}

namespace {

struct ForwardCache {
    std::vector<Matrix> activations;      // [0] = inputs, then ReLU outputs
    std::vector<Matrix> pre_activations;  // per hidden layer
    Matrix embeddings;
};

Matrix affine(const Matrix& x, const AffineLayer& layer) {
    Matrix out = matmul(x, layer.weight);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += layer.bias[j];
    return out;
}

ForwardCache forward_cached(const EmbeddingNetwork& net, const Matrix& inputs) {
    if (inputs.cols() != net.input_dim()) {
        throw DimensionMismatchError("forward: input dim " + std::to_string(inputs.cols()) +
                                     ", network expects " + std::to_string(net.input_dim()));
    }
    ForwardCache cache;
    cache.activations.push_back(inputs);
    for (const auto& layer : net.hidden) {
        Matrix pre = affine(cache.activations.back(), layer);
        Matrix act = pre;
        for (double& v : act.values()) v = v > 0.0 ? v : 0.0;
        cache.pre_activations.push_back(std::move(pre));
        cache.activations.push_back(std::move(act));
    }
    cache.embeddings = matmul(cache.activations.back(), net.embedding_weight);
    return cache;
}

}  // namespace

Matrix forward(const EmbeddingNetwork& net, const Matrix& inputs) {
    return forward_cached(net, inputs).embeddings;
}

NetworkGradients zero_gradients_like(const EmbeddingNetwork& net) {
    NetworkGradients g;
    for (const auto& layer : net.hidden) {
        g.hidden.push_back({Matrix(layer.weight.rows(), layer.weight.cols()),
                            std::vector<double>(layer.bias.size(), 0.0)});
    }
    g.embedding_weight = Matrix(net.embedding_weight.rows(), net.embedding_weight.cols());
    g.class_weights = Matrix(net.class_weights.rows(), net.class_weights.cols());
    return g;
}

template <typename Net>
static auto collect_arrays(Net& net) {
    std::vector<decltype(&net.embedding_weight.values())> out;
    for (auto& layer : net.hidden) {
        out.push_back(&layer.weight.values());
        out.push_back(&layer.bias);
    }
    out.push_back(&net.embedding_weight.values());
    out.push_back(&net.class_weights.values());
    return out;
}

std::vector<std::vector<double>*> parameter_arrays(EmbeddingNetwork& net) {
    return collect_arrays(net);
}
std::vector<const std::vector<double>*> parameter_arrays(const EmbeddingNetwork& net) {
    return collect_arrays(net);
}
std::vector<std::vector<double>*> parameter_arrays(NetworkGradients& grads) {
    return collect_arrays(grads);
}
std::vector<const std::vector<double>*> parameter_arrays(const NetworkGradients& grads) {
    return collect_arrays(grads);
}

std::pair<LossBreakdown, NetworkGradients> loss_and_grad(const EmbeddingNetwork& net,
                                                         const Matrix& inputs,
                                                         std::span<const int> labels,
                                                         const LossConfig& config) {
    config.validate();
    const ForwardCache cache = forward_cached(net, inputs);
    const Matrix& embeddings = cache.embeddings;
    const std::size_t batch = inputs.rows();

    NetworkGradients grads = zero_gradients_like(net);
    LossBreakdown breakdown;
    Matrix d_embeddings(batch, net.embed_dim());

    switch (config.variant) {
        case Variant::kClassification: {
            ClassifierGrad cg = plain_classification_grad(embeddings, net.class_weights, labels);
            breakdown.weighted_classification = cg.loss.value;
            d_embeddings = std::move(cg.d_features);
            grads.class_weights = std::move(cg.d_class_weights);
            break;
        }
        case Variant::kTriplet: {
            FeatureGrad tg = triplet_hard_euclidean_grad(embeddings, labels, config.margin);
            breakdown.triplet = tg.loss.value;
            breakdown.active_triplets = tg.loss.active_triplets;
            breakdown.anchors = batch;
            d_embeddings = std::move(tg.d_features);
            break;
        }
        case Variant::kClassificationTriplet: {
            FeatureGrad tg = triplet_hard_euclidean_grad(embeddings, labels, config.margin);
            ClassifierGrad cg = plain_classification_grad(embeddings, net.class_weights, labels);
            breakdown.triplet = tg.loss.value;
            breakdown.weighted_classification = config.lambda * cg.loss.value;
            breakdown.active_triplets = tg.loss.active_triplets;
            breakdown.anchors = batch;
            d_embeddings = std::move(tg.d_features);
            for (std::size_t i = 0; i < d_embeddings.size(); ++i) {
                d_embeddings.values()[i] += config.lambda * cg.d_features.values()[i];
            }
            grads.class_weights = std::move(cg.d_class_weights);
            for (double& v : grads.class_weights.values()) v *= config.lambda;
            break;
        }
        case Variant::kJointAngular:
        case Variant::kJointAngularOrtho: {
            const Matrix unit = l2_normalize_rows(embeddings);
            FeatureGrad at = angular_triplet_grad(unit, labels, config.theta_margin);
            ClassifierGrad ac =
                angular_classification_grad(unit, net.class_weights, labels, config.alpha);
            breakdown.triplet = at.loss.value;
            breakdown.weighted_classification = config.lambda * ac.loss.value;
            breakdown.active_triplets = at.loss.active_triplets;
            breakdown.anchors = batch;

            Matrix d_unit = std::move(at.d_features);
            for (std::size_t i = 0; i < d_unit.size(); ++i) {
                d_unit.values()[i] += config.lambda * ac.d_features.values()[i];
            }
            d_embeddings = l2_normalize_rows_backward(embeddings, unit, d_unit);
            grads.class_weights = std::move(ac.d_class_weights);
            for (double& v : grads.class_weights.values()) v *= config.lambda;

            if (config.variant == Variant::kJointAngularOrtho) {
                breakdown.weighted_regularizer =
                    config.gamma * orthogonal_regularizer(net.embedding_weight);
            }
            break;
        }
    }
    breakdown.total =
        breakdown.triplet + breakdown.weighted_classification + breakdown.weighted_regularizer;

    // Embedding layer (no bias): E = H W_e.
    grads.embedding_weight = matmul_at(cache.activations.back(), d_embeddings);
    if (config.variant == Variant::kJointAngularOrtho && config.gamma != 0.0) {
        const Matrix reg = orthogonal_regularizer_grad(net.embedding_weight);
        for (std::size_t i = 0; i < reg.size(); ++i) {
            grads.embedding_weight.values()[i] += config.gamma * reg.values()[i];
        }
    }

    Matrix d_act = matmul_bt(d_embeddings, net.embedding_weight);
    for (std::size_t k = net.hidden.size(); k-- > 0;) {
        Matrix d_pre = std::move(d_act);
        const Matrix& pre = cache.pre_activations[k];
        for (std::size_t i = 0; i < d_pre.size(); ++i) {
            if (pre.values()[i] <= 0.0) d_pre.values()[i] = 0.0;
        }
        grads.hidden[k].weight = matmul_at(cache.activations[k], d_pre);
        for (std::size_t i = 0; i < d_pre.rows(); ++i) {
            for (std::size_t j = 0; j < d_pre.cols(); ++j) {
                grads.hidden[k].bias[j] += d_pre(i, j);
            }
        }
        if (k > 0) d_act = matmul_bt(d_pre, net.hidden[k].weight);
    }
    return {breakdown, std::move(grads)};
}

double LearningRateSchedule::rate_for_epoch(std::size_t epoch) const {
    double rate = initial_rate;
    std::size_t boundary = 0;
    for (std::size_t stage : stage_epochs) {
        boundary += stage;
        if (epoch < boundary) return rate;
        rate *= decay;
    }
    // Past the end: keep the final stage's rate.
    return stage_epochs.empty() ? initial_rate : rate / decay;
}

std::size_t LearningRateSchedule::total_epochs() const {
    std::size_t total = 0;
    for (std::size_t e : stage_epochs) total += e;
    return total;
}

Optimizer::Optimizer(const EmbeddingNetwork& net, OptimizerConfig config) : config_(config) {
    for (const auto* arr : parameter_arrays(net)) {
        first_moment_.emplace_back(arr->size(), 0.0);
        if (config_.mode == OptimizerMode::kAdam) {
            second_moment_.emplace_back(arr->size(), 0.0);
        }
    }
}

void Optimizer::step(EmbeddingNetwork& net, const NetworkGradients& grads,
                     double learning_rate) {
    auto params = parameter_arrays(net);
    auto grad_arrays = parameter_arrays(grads);
    if (params.size() != first_moment_.size() || grad_arrays.size() != first_moment_.size()) {
        throw ShapeMismatchError("optimizer: parameter/gradient array count mismatch");
    }
    ++step_count_;
    for (std::size_t a = 0; a < params.size(); ++a) {
        std::vector<double>& p = *params[a];
        const std::vector<double>& g = *grad_arrays[a];
        if (p.size() != first_moment_[a].size() || g.size() != first_moment_[a].size()) {
            throw ShapeMismatchError("optimizer: array " + std::to_string(a) +
                                     " shape changed since construction");
        }
        if (config_.mode == OptimizerMode::kAdam) {
            const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
            const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
            for (std::size_t i = 0; i < p.size(); ++i) {
                double& m = first_moment_[a][i];
                double& v = second_moment_[a][i];
                m = config_.beta1 * m + (1.0 - config_.beta1) * g[i];
                v = config_.beta2 * v + (1.0 - config_.beta2) * g[i] * g[i];
                const double m_hat = m / bc1;
                const double v_hat = v / bc2;
                p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
            }
        } else {
            for (std::size_t i = 0; i < p.size(); ++i) {
                double& v = first_moment_[a][i];
                v = config_.momentum * v + g[i];
                p[i] -= learning_rate * (g[i] + config_.momentum * v);
            }
        }
    }
}

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
    config.loss.validate();
    const std::size_t dim = feature_dim(dataset);
    if (dim == 0) throw DegenerateDatasetError("train: empty dataset");

    std::vector<int> raw_labels(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) raw_labels[i] = dataset[i].label;
    const IdentityGroups groups(raw_labels);
    if (groups.num_identities() < 2) {
        throw DegenerateDatasetError("train: need >= 2 identities");
    }
    for (const auto& members : groups.groups()) {
        if (members.size() < 2) {
            throw DegenerateDatasetError("train: every identity needs >= 2 samples");
        }
    }

    TrainResult result;
    result.class_labels = groups.identity_labels();
    result.net = init_network({dim, config.hidden_dims, config.embed_dim},
                              groups.num_identities(), config.seed);
    result.log.initial_s_we = orthogonality_score(result.net.embedding_weight);

    // Class index of each dataset position.
    std::vector<int> class_of(dataset.size(), 0);
    for (std::size_t g = 0; g < groups.groups().size(); ++g) {
        for (std::size_t i : groups.groups()[g]) class_of[i] = static_cast<int>(g);
    }

    const bool momentum_mode = config.loss.variant == Variant::kClassification;
    OptimizerConfig opt_config;
    opt_config.mode = momentum_mode ? OptimizerMode::kMomentum : OptimizerMode::kAdam;
    Optimizer optimizer(result.net, opt_config);
    LearningRateSchedule schedule = config.schedule;
    if (momentum_mode) schedule.initial_rate = config.momentum_rate;

    std::mt19937_64 sampler_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const std::size_t batch_size = config.p_identities * config.n_samples;

    for (std::size_t epoch = 0; epoch < schedule.total_epochs(); ++epoch) {
        const double rate = schedule.rate_for_epoch(epoch);
        const auto batches =
            epoch_batches(groups, config.p_identities, config.n_samples, sampler_rng);

        EpochStats stats;
        stats.epoch = epoch;
        std::size_t active = 0;
        std::size_t anchors = 0;
        for (const PKBatch& batch : batches) {
            Matrix inputs(batch_size, dim);
            std::vector<int> labels(batch_size);
            for (std::size_t r = 0; r < batch.indices.size(); ++r) {
                const auto& sample = dataset[batch.indices[r]];
                std::copy(sample.vector.begin(), sample.vector.end(), inputs.row(r).begin());
                labels[r] = class_of[batch.indices[r]];
            }
            auto [breakdown, grads] = loss_and_grad(result.net, inputs, labels, config.loss);
            optimizer.step(result.net, grads, rate);

            stats.loss += breakdown.total;
            stats.triplet += breakdown.triplet;
            stats.weighted_classification += breakdown.weighted_classification;
            stats.weighted_regularizer += breakdown.weighted_regularizer;
            active += breakdown.active_triplets;
            anchors += breakdown.anchors;
            result.log.step_losses.push_back(breakdown.total);
        }
        const double inv = 1.0 / static_cast<double>(batches.size());
        stats.loss *= inv;
        stats.triplet *= inv;
        stats.weighted_classification *= inv;
        stats.weighted_regularizer *= inv;
        stats.s_we = orthogonality_score(result.net.embedding_weight);
        stats.active_fraction =
            anchors == 0 ? 0.0 : static_cast<double>(active) / static_cast<double>(anchors);
        result.log.epochs.push_back(stats);
    }
    return result;
}

// ---- serialization ------------------------------------------------------

namespace {

void write_matrix(std::ostream& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::string line;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j > 0) line += ' ';
            line += format_double(m(i, j));
        }
        out << line << '\n';
    }
}

class LineReader {
  public:
    LineReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

    std::string next() {
        std::string line;
        if (!std::getline(in_, line)) {
            throw FormatError(name_ + " line " + std::to_string(line_no_ + 1) +
                              ": unexpected end of file");
        }
        ++line_no_;
        return line;
    }
    std::string where() const { return name_ + " line " + std::to_string(line_no_); }

  private:
    std::istream& in_;
    std::string name_;
    std::size_t line_no_ = 0;
};

Matrix read_matrix(LineReader& reader, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const std::string line = reader.next();
        const auto tokens = split(line, ' ');
        if (tokens.size() != cols) {
            throw FormatError(reader.where() + ": expected " + std::to_string(cols) +
                              " values, got " + std::to_string(tokens.size()));
        }
        for (std::size_t j = 0; j < cols; ++j) {
            m(i, j) = parse_double(tokens[j], reader.where());
        }
    }
    return m;
}

// Returns owned copies: the record line is a temporary at every call site.
std::vector<std::string> expect_fields(LineReader& reader, const std::string& line,
                                       std::string_view keyword, std::size_t count) {
    const auto fields = split(line, ' ');
    if (fields.size() != count || fields[0] != keyword) {
        throw FormatError(reader.where() + ": expected '" + std::string(keyword) + "' record");
    }
    return {fields.begin(), fields.end()};
}

}  // namespace

void save_model(const EmbeddingNetwork& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "HHEMODEL v1\n";
    out << "hidden " << net.hidden.size() << '\n';
    for (const auto& layer : net.hidden) {
        out << "layer " << layer.weight.rows() << ' ' << layer.weight.cols() << '\n';
        write_matrix(out, layer.weight);
        std::string line;
        for (std::size_t j = 0; j < layer.bias.size(); ++j) {
            if (j > 0) line += ' ';
            line += format_double(layer.bias[j]);
        }
        out << line << '\n';
    }
    out << "embedding " << net.embedding_weight.rows() << ' ' << net.embedding_weight.cols()
        << '\n';
    write_matrix(out, net.embedding_weight);
    out << "classifier " << net.class_weights.rows() << ' ' << net.class_weights.cols() << '\n';
    write_matrix(out, net.class_weights);
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

EmbeddingNetwork load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    LineReader reader(in, path.string());

    if (reader.next() != "HHEMODEL v1") {
        throw FormatError(reader.where() + ": expected 'HHEMODEL v1' header");
    }
    const auto hidden_fields = expect_fields(reader, reader.next(), "hidden", 2);
    const long long hidden_count = parse_int(hidden_fields[1], reader.where());
    if (hidden_count < 0) throw FormatError(reader.where() + ": negative layer count");

    EmbeddingNetwork net;
    for (long long k = 0; k < hidden_count; ++k) {
        const auto fields = expect_fields(reader, reader.next(), "layer", 3);
        const auto rows = parse_int(fields[1], reader.where());
        const auto cols = parse_int(fields[2], reader.where());
        if (rows < 1 || cols < 1) throw FormatError(reader.where() + ": bad layer shape");
        AffineLayer layer;
        layer.weight = read_matrix(reader, static_cast<std::size_t>(rows),
                                   static_cast<std::size_t>(cols));
        const std::string bias_line = reader.next();
        const auto tokens = split(bias_line, ' ');
        if (tokens.size() != static_cast<std::size_t>(cols)) {
            throw FormatError(reader.where() + ": expected " + std::to_string(cols) +
                              " bias values");
        }
        layer.bias.resize(tokens.size());
        for (std::size_t j = 0; j < tokens.size(); ++j) {
            layer.bias[j] = parse_double(tokens[j], reader.where());
        }
        net.hidden.push_back(std::move(layer));
    }
    {
        const auto fields = expect_fields(reader, reader.next(), "embedding", 3);
        const auto rows = parse_int(fields[1], reader.where());
        const auto cols = parse_int(fields[2], reader.where());
        if (rows < 1 || cols < 1) throw FormatError(reader.where() + ": bad embedding shape");
        net.embedding_weight = read_matrix(reader, static_cast<std::size_t>(rows),
                                           static_cast<std::size_t>(cols));
    }
    {
        const auto fields = expect_fields(reader, reader.next(), "classifier", 3);
        const auto rows = parse_int(fields[1], reader.where());
        const auto cols = parse_int(fields[2], reader.where());
        if (rows < 1 || cols < 1) throw FormatError(reader.where() + ": bad classifier shape");
        net.class_weights = read_matrix(reader, static_cast<std::size_t>(rows),
                                        static_cast<std::size_t>(cols));
    }
    return net;
}

}  // namespace hhe
