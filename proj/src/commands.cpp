#include "hhe/commands.hpp"

#include <fstream>
#include <random>
#include <set>

#include "hhe/error.hpp"
#include "hhe/text_io.hpp"

namespace hhe {
namespace {

// Distinct deterministic streams derived from the run seed.
constexpr std::uint64_t kSplitSalt = 0x73706c6974ULL;  // dataset split
constexpr std::uint64_t kTtaSalt = 0x7474612dULL;      // tta jitter

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void write_train_log(const std::filesystem::path& path, const TrainLog& log) {
    std::ofstream out = open_out(path);
    out << "epoch,loss,triplet_loss,classification_loss_weighted,ortho_reg_weighted,s_we,"
           "active_triplet_fraction\n";
    for (const EpochStats& e : log.epochs) {
        out << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.triplet) << ','
            << format_double(e.weighted_classification) << ','
            << format_double(e.weighted_regularizer) << ',' << format_double(e.s_we) << ','
            << format_double(e.active_fraction) << '\n';
    }
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_eval_report(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream out = open_out(path);
    out << "metric,value\n";
    for (std::size_t k = 0; k < report.cmc.size(); ++k) {
        out << "cmc_" << (k + 1) << ',' << format_double(report.cmc[k]) << '\n';
    }
    out << "map," << format_double(report.map) << '\n';
    out << "rank1," << format_double(report.rank1) << '\n';
    out << "repeats," << report.repeats << '\n';
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string variant_file_tag(const std::string& name) {
    std::string tag = name;
    for (char& c : tag) {
        if (c == '+') c = 'p';
    }
    return tag;
}

}  // namespace

Dataset embed_dataset(const EmbeddingNetwork& net, const Dataset& data, std::size_t tta_count,
                      double tta_sigma, std::uint64_t seed) {
    const std::size_t dim = feature_dim(data);
    if (!data.empty() && dim != net.input_dim()) {
        throw DimensionMismatchError("embed: features have dim " + std::to_string(dim) +
                                     ", model expects " + std::to_string(net.input_dim()));
    }
    std::mt19937_64 rng(seed ^ kTtaSalt);
    std::normal_distribution<double> unit_normal(0.0, 1.0);

    Dataset out;
    out.reserve(data.size());
    Matrix input(1, dim);
    for (const auto& sample : data) {
        std::vector<std::vector<double>> variants;
        variants.reserve(std::max<std::size_t>(tta_count, 1));
        std::copy(sample.vector.begin(), sample.vector.end(), input.row(0).begin());
        Matrix embedded = forward(net, input);
        variants.emplace_back(embedded.row(0).begin(), embedded.row(0).end());
        for (std::size_t copy = 1; copy < tta_count; ++copy) {
            for (std::size_t j = 0; j < dim; ++j) {
                input(0, j) = sample.vector[j] + tta_sigma * unit_normal(rng);
            }
            embedded = forward(net, input);
            variants.emplace_back(embedded.row(0).begin(), embedded.row(0).end());
        }
        LabeledFeature e = sample;
        e.vector = tta_average(variants);
        out.push_back(std::move(e));
    }
    return out;
}

SynthOutputs cmd_synth(const RunConfig& config, const std::filesystem::path& out_file) {
    const Dataset dataset = generate_synthetic(config.synth_config());
    if (out_file.has_parent_path()) ensure_dir(out_file.parent_path());
    save_features(dataset, out_file);

    std::set<int> cameras;
    for (const auto& s : dataset) cameras.insert(s.camera);
    return {out_file, dataset.size(), distinct_labels_sorted(dataset).size(), cameras.size()};
}

TrainOutputs cmd_train(const RunConfig& config, const std::filesystem::path& features_file) {
    const Dataset dataset = load_features(features_file);
    const TrainResult result = train(dataset, config.train_config());

    ensure_dir(config.out_dir);
    TrainOutputs out;
    out.model_file = std::filesystem::path(config.out_dir) / "model.hhm";
    out.log_file = std::filesystem::path(config.out_dir) / "train_log.csv";
    save_model(result.net, out.model_file);
    write_train_log(out.log_file, result.log);
    out.final_loss = result.log.epochs.empty() ? 0.0 : result.log.epochs.back().loss;
    out.final_s_we = result.log.epochs.empty() ? result.log.initial_s_we
                                               : result.log.epochs.back().s_we;
    return out;
}

EvalOutputs cmd_eval(const RunConfig& config, const std::filesystem::path& model_file,
                     const std::filesystem::path& features_file) {
    const EmbeddingNetwork net = load_model(model_file);
    const Dataset dataset = load_features(features_file);

    std::mt19937_64 split_rng(config.seed ^ kSplitSalt);
    const QueryGallerySplit split =
        split_query_gallery(dataset, split_rng, config.query_fraction);
    const Dataset queries =
        embed_dataset(net, split.query, config.tta_count, config.tta_sigma, config.seed);
    const Dataset gallery =
        embed_dataset(net, split.gallery, config.tta_count, config.tta_sigma, config.seed + 1);

    EvalOutputs out;
    out.report = evaluate(queries, gallery, config.eval_config());
    ensure_dir(config.out_dir);
    out.report_file = std::filesystem::path(config.out_dir) / "eval_report.csv";
    write_eval_report(out.report_file, out.report);
    return out;
}

std::vector<GradCheckResult> cmd_gradcheck(const RunConfig& config, std::size_t trials) {
    if (trials < 1) throw InvalidConfigError("gradcheck: trials must be >= 1");
    const LossConfig base = config.loss_config();
    std::vector<GradCheckResult> rows;
    std::uint64_t variant_seed = config.seed;
    for (Variant variant : kAllVariants) {
        rows.push_back(gradcheck_variant(variant, base, trials, variant_seed++));
    }
    return rows;
}

std::vector<AblateRow> cmd_ablate(const RunConfig& config,
                                  const std::optional<std::filesystem::path>& features_file) {
    const Dataset dataset =
        features_file ? load_features(*features_file) : generate_synthetic(config.synth_config());
    ensure_dir(config.out_dir);

    std::vector<AblateRow> rows;
    for (Variant variant : kAllVariants) {
        RunConfig run = config;
        run.variant = variant_name(variant);

        const TrainResult result = train(dataset, run.train_config());
        const std::string tag = variant_file_tag(run.variant);
        save_model(result.net, std::filesystem::path(config.out_dir) / ("model_" + tag + ".hhm"));
        write_train_log(std::filesystem::path(config.out_dir) / ("train_log_" + tag + ".csv"),
                        result.log);

        // Shared split and eval seed: every variant sees the same task.
        std::mt19937_64 split_rng(config.seed ^ kSplitSalt);
        const QueryGallerySplit split =
            split_query_gallery(dataset, split_rng, config.query_fraction);
        const Dataset queries =
            embed_dataset(result.net, split.query, config.tta_count, config.tta_sigma, config.seed);
        const Dataset gallery = embed_dataset(result.net, split.gallery, config.tta_count,
                                              config.tta_sigma, config.seed + 1);
        const EvalReport report = evaluate(queries, gallery, config.eval_config());

        AblateRow row;
        row.variant = run.variant;
        row.top1 = report.cmc.size() > 0 ? report.cmc[0] : 0.0;
        row.top5 = report.cmc.size() > 4 ? report.cmc[4] : report.cmc.back();
        row.top10 = report.cmc.size() > 9 ? report.cmc[9] : report.cmc.back();
        row.map = report.map;
        row.s_we = orthogonality_score(result.net.embedding_weight);
        rows.push_back(row);
    }

    std::ofstream out = open_out(std::filesystem::path(config.out_dir) / "ablation.csv");
    out << "variant,top1,top5,top10,map,s_we\n";
    for (const AblateRow& r : rows) {
        out << r.variant << ',' << format_double(r.top1) << ',' << format_double(r.top5) << ','
            << format_double(r.top10) << ',' << format_double(r.map) << ','
            << format_double(r.s_we) << '\n';
    }
    return rows;
}

}  // namespace hhe
