#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hhe/config.hpp"
#include "hhe/eval.hpp"
#include "hhe/gradcheck.hpp"
#include "hhe/model.hpp"

namespace hhe {

// Library-side implementations of the CLI subcommands, reused directly by
// the tests. Every command is deterministic given config + seed.

struct SynthOutputs {
    std::filesystem::path feature_file;
    std::size_t samples = 0;
    std::size_t identities = 0;
    std::size_t cameras = 0;
};

SynthOutputs cmd_synth(const RunConfig& config, const std::filesystem::path& out_file);

struct TrainOutputs {
    std::filesystem::path model_file;
    std::filesystem::path log_file;
    double final_loss = 0.0;
    double final_s_we = 0.0;
};

// Writes <out_dir>/model.hhm and <out_dir>/train_log.csv (fixed schema:
// epoch,loss,triplet_loss,classification_loss_weighted,ortho_reg_weighted,
// s_we,active_triplet_fraction).
TrainOutputs cmd_train(const RunConfig& config, const std::filesystem::path& features_file);

struct EvalOutputs {
    std::filesystem::path report_file;
    EvalReport report;
};

// Splits the feature file into query/gallery, embeds both through the
// model (averaging tta_count jittered copies per sample when tta_count >
// 1) and writes <out_dir>/eval_report.csv (schema: metric,value with rows
// cmc_1..cmc_K, map, rank1, repeats).
EvalOutputs cmd_eval(const RunConfig& config, const std::filesystem::path& model_file,
                     const std::filesystem::path& features_file);

// One finite-difference check per variant; pass/fail per row.
std::vector<GradCheckResult> cmd_gradcheck(const RunConfig& config, std::size_t trials);

struct AblateRow {
    std::string variant;
    double top1 = 0.0;
    double top5 = 0.0;
    double top10 = 0.0;
    double map = 0.0;
    double s_we = 0.0;
};

// Trains and evaluates every variant on shared data and seed; writes
// <out_dir>/ablation.csv (schema: variant,top1,top5,top10,map,s_we) plus
// per-variant train logs. When no feature file is given the synthetic
// dataset from the config is generated in memory.
std::vector<AblateRow> cmd_ablate(const RunConfig& config,
                                  const std::optional<std::filesystem::path>& features_file = {});

// Embeds every sample; with tta_count > 1 each sample's embedding is the
// mean over the original and tta_count-1 input-jittered copies.
Dataset embed_dataset(const EmbeddingNetwork& net, const Dataset& data, std::size_t tta_count,
                      double tta_sigma, std::uint64_t seed);

}  // namespace hhe
