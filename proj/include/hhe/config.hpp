#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hhe/data.hpp"
#include "hhe/eval.hpp"
#include "hhe/losses.hpp"
#include "hhe/model.hpp"

namespace hhe {

// Flat run configuration shared by every CLI command. Angles are degrees
// here (converted to radians in loss_config()). Defaults follow the
// recommended operating point: lambda 0.2, theta_m 3 degrees, alpha 12,
// gamma 1e-3, margin 0.5.
struct RunConfig {
    // loss
    double lambda = 0.2;
    double theta_m_deg = 3.0;
    double alpha = 12.0;
    double gamma = 1e-3;
    double margin = 0.5;
    std::string variant = "JAL_o";

    // synthetic data
    std::size_t identities = 32;
    std::size_t samples_per_identity = 20;
    std::size_t cameras = 4;
    std::size_t input_dim = 64;
    double intra_spread = 0.1;
    double camera_shift = 0.2;

    // model / training
    std::vector<std::size_t> hidden_dims = {64, 64};
    std::size_t embed_dim = 32;
    std::size_t p_identities = 8;
    std::size_t n_samples = 4;
    std::vector<std::size_t> stage_epochs = {2800, 200, 200};
    double learning_rate = 1e-3;
    double momentum_learning_rate = 1e-2;

    // evaluation
    std::string protocol = "market";
    std::size_t eval_repeats = 10;
    std::size_t top_k = 10;
    double query_fraction = 0.25;
    std::size_t tta_count = 1;
    double tta_sigma = 0.05;
    bool trapezoidal_ap = false;

    std::uint64_t seed = 42;
    std::string out_dir = "out";

    LossConfig loss_config() const;
    SynthConfig synth_config() const;
    TrainConfig train_config() const;
    EvalConfig eval_config() const;
};

// Applies one `key = value` assignment; throws InvalidConfigError for
// unknown keys or unparsable values.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

// Flat text file: one `key = value` per line, '#' comments, blank lines
// ignored.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace hhe
