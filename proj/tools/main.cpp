#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hhe/commands.hpp"
#include "hhe/error.hpp"
#include "hhe/text_io.hpp"

namespace {

// Options shared across subcommands; explicit flags override config-file
// values.
struct SharedOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string variant;
    std::string protocol;
    std::size_t tta = 0;
    std::string out_dir;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* variant_opt = nullptr;
    CLI::Option* protocol_opt = nullptr;
    CLI::Option* tta_opt = nullptr;
    CLI::Option* out_opt = nullptr;

    void attach(CLI::App& cmd) {
        cmd.add_option("--config", config_path, "flat key = value config file");
        seed_opt = cmd.add_option("--seed", seed, "run seed");
        variant_opt = cmd.add_option("--variant", variant, "loss variant: C, T, C+T, JAL, JAL_o");
        protocol_opt = cmd.add_option("--protocol", protocol, "evaluation protocol: market, cuhk");
        tta_opt = cmd.add_option("--tta", tta, "test-time augmentation count (>= 1)");
        out_opt = cmd.add_option("--out", out_dir, "output directory");
    }

    hhe::RunConfig resolve() const {
        hhe::RunConfig config =
            config_path.empty() ? hhe::RunConfig{} : hhe::load_run_config(config_path);
        if (seed_opt->count() > 0) config.seed = seed;
        if (variant_opt->count() > 0) config.variant = variant;
        if (protocol_opt->count() > 0) config.protocol = protocol;
        if (tta_opt->count() > 0) config.tta_count = tta;
        if (out_opt->count() > 0) config.out_dir = out_dir;
        return config;
    }
};

void print_eval_report(const hhe::EvalReport& report) {
    std::cout << "metric,value\n";
    for (std::size_t k = 0; k < report.cmc.size(); ++k) {
        std::cout << "cmc_" << (k + 1) << ',' << hhe::format_double(report.cmc[k]) << '\n';
    }
    std::cout << "map," << hhe::format_double(report.map) << '\n';
    std::cout << "rank1," << hhe::format_double(report.rank1) << '\n';
    std::cout << "repeats," << report.repeats << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"homocentric hypersphere embedding trainer and retrieval evaluator"};
    app.require_subcommand(1);

    SharedOptions synth_shared, train_shared, eval_shared, grad_shared, ablate_shared;
    std::string synth_file = "features.hhe";
    std::string train_features, eval_features, eval_model;
    std::string ablate_features;
    std::size_t gradcheck_trials = 20;

    auto* synth = app.add_subcommand("synth", "generate a synthetic multi-camera feature file");
    synth_shared.attach(*synth);
    synth->add_option("--file", synth_file, "output file name inside --out");

    auto* train = app.add_subcommand("train", "train an embedding model on a feature file");
    train_shared.attach(*train);
    train->add_option("--features", train_features, "HHE v1 feature file")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a model with CMC/mAP retrieval metrics");
    eval_shared.attach(*eval);
    eval->add_option("--model", eval_model, "trained model file")->required();
    eval->add_option("--features", eval_features, "HHE v1 feature file")->required();

    auto* gradcheck =
        app.add_subcommand("gradcheck", "finite-difference check of every loss variant");
    grad_shared.attach(*gradcheck);
    gradcheck->add_option("--trials", gradcheck_trials, "random draws per variant");

    auto* ablate = app.add_subcommand("ablate", "train and score every loss variant");
    ablate_shared.attach(*ablate);
    ablate->add_option("--features", ablate_features,
                       "feature file (defaults to generating synthetic data)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const hhe::RunConfig config = synth_shared.resolve();
            const auto out = hhe::cmd_synth(config, std::filesystem::path(config.out_dir) / synth_file);
            std::cout << "wrote " << out.samples << " samples, " << out.identities
                      << " identities, " << out.cameras << " cameras -> "
                      << out.feature_file.string() << '\n';
        } else if (train->parsed()) {
            const hhe::RunConfig config = train_shared.resolve();
            const auto out = hhe::cmd_train(config, train_features);
            std::cout << "variant " << config.variant << ": final loss "
                      << hhe::format_double(out.final_loss) << ", S(W_e) "
                      << hhe::format_double(out.final_s_we) << '\n';
            std::cout << "model -> " << out.model_file.string() << '\n';
            std::cout << "log   -> " << out.log_file.string() << '\n';
        } else if (eval->parsed()) {
            const hhe::RunConfig config = eval_shared.resolve();
            const auto out = hhe::cmd_eval(config, eval_model, eval_features);
            print_eval_report(out.report);
            std::cout << "report -> " << out.report_file.string() << '\n';
        } else if (gradcheck->parsed()) {
            const hhe::RunConfig config = grad_shared.resolve();
            const auto rows = hhe::cmd_gradcheck(config, gradcheck_trials);
            bool all_pass = true;
            std::cout << "variant,max_rel_error,status\n";
            for (const auto& row : rows) {
                std::cout << hhe::variant_name(row.variant) << ','
                          << hhe::format_double(row.max_rel_error) << ','
                          << (row.pass ? "pass" : "FAIL") << '\n';
                all_pass = all_pass && row.pass;
            }
            return all_pass ? 0 : 1;
        } else if (ablate->parsed()) {
            const hhe::RunConfig config = ablate_shared.resolve();
            std::optional<std::filesystem::path> features;
            if (!ablate_features.empty()) features = ablate_features;
            const auto rows = hhe::cmd_ablate(config, features);
            std::cout << "variant,top1,top5,top10,map,s_we\n";
            for (const auto& row : rows) {
                std::cout << row.variant << ',' << hhe::format_double(row.top1) << ','
                          << hhe::format_double(row.top5) << ',' << hhe::format_double(row.top10)
                          << ',' << hhe::format_double(row.map) << ','
                          << hhe::format_double(row.s_we) << '\n';
            }
        }
    } catch (const hhe::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
