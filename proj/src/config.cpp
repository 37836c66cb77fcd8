#include "hhe/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "hhe/error.hpp"
#include "hhe/text_io.hpp"

namespace hhe {

LossConfig RunConfig::loss_config() const {
    LossConfig loss;
    loss.lambda = lambda;
    loss.theta_margin = theta_m_deg * kPi / 180.0;
    loss.alpha = alpha;
    loss.gamma = gamma;
    loss.margin = margin;
    loss.variant = variant_from_name(variant);
    loss.validate();
    return loss;
}

SynthConfig RunConfig::synth_config() const {
    SynthConfig synth;
    synth.num_identities = identities;
    synth.samples_per_identity = samples_per_identity;
    synth.num_cameras = cameras;
    synth.input_dim = input_dim;
    synth.intra_spread = intra_spread;
    synth.camera_shift = camera_shift;
    synth.seed = seed;
    synth.validate();
    return synth;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig train;
    train.loss = loss_config();
    train.hidden_dims = hidden_dims;
    train.embed_dim = embed_dim;
    train.p_identities = p_identities;
    train.n_samples = n_samples;
    train.schedule.initial_rate = learning_rate;
    train.schedule.stage_epochs = stage_epochs;
    train.momentum_rate = momentum_learning_rate;
    train.seed = seed;
    return train;
}

EvalConfig RunConfig::eval_config() const {
    EvalConfig eval;
    eval.protocol = protocol_from_name(protocol);
    eval.repeats = eval_repeats;
    eval.seed = seed;
    eval.top_k = top_k;
    eval.trapezoidal_ap = trapezoidal_ap;
    return eval;
}

namespace {

std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::size_t> parse_size_list(const std::string& value, const std::string& where) {
    std::vector<std::size_t> out;
    if (trim(value).empty()) return out;
    for (const auto token : split(value, ',')) {
        const long long v = parse_int(trim(token), where);
        if (v < 0) throw InvalidConfigError(where + ": negative entry in list");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

bool parse_bool(const std::string& value, const std::string& where) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw InvalidConfigError(where + ": expected a boolean, got '" + value + "'");
}

}  // namespace

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
    const std::string where = "config key '" + key + "'";
    const auto as_double = [&] { return parse_double(value, where); };
    const auto as_size = [&] {
        const long long v = parse_int(value, where);
        if (v < 0) throw InvalidConfigError(where + ": must be non-negative");
        return static_cast<std::size_t>(v);
    };

    using Setter = std::function<void()>;
    const std::map<std::string, Setter> setters = {
        {"lambda", [&] { config.lambda = as_double(); }},
        {"theta_m_deg", [&] { config.theta_m_deg = as_double(); }},
        {"alpha", [&] { config.alpha = as_double(); }},
        {"gamma", [&] { config.gamma = as_double(); }},
        {"margin", [&] { config.margin = as_double(); }},
        {"variant", [&] { config.variant = value; }},
        {"identities", [&] { config.identities = as_size(); }},
        {"samples_per_identity", [&] { config.samples_per_identity = as_size(); }},
        {"cameras", [&] { config.cameras = as_size(); }},
        {"input_dim", [&] { config.input_dim = as_size(); }},
        {"intra_spread", [&] { config.intra_spread = as_double(); }},
        {"camera_shift", [&] { config.camera_shift = as_double(); }},
        {"hidden_dims", [&] { config.hidden_dims = parse_size_list(value, where); }},
        {"embed_dim", [&] { config.embed_dim = as_size(); }},
        {"p_identities", [&] { config.p_identities = as_size(); }},
        {"n_samples", [&] { config.n_samples = as_size(); }},
        {"stage_epochs", [&] { config.stage_epochs = parse_size_list(value, where); }},
        {"learning_rate", [&] { config.learning_rate = as_double(); }},
        {"momentum_learning_rate", [&] { config.momentum_learning_rate = as_double(); }},
        {"protocol", [&] { config.protocol = value; }},
        {"eval_repeats", [&] { config.eval_repeats = as_size(); }},
        {"top_k", [&] { config.top_k = as_size(); }},
        {"query_fraction", [&] { config.query_fraction = as_double(); }},
        {"tta_count", [&] { config.tta_count = as_size(); }},
        {"tta_sigma", [&] { config.tta_sigma = as_double(); }},
        {"trapezoidal_ap", [&] { config.trapezoidal_ap = parse_bool(value, where); }},
        {"seed", [&] { config.seed = static_cast<std::uint64_t>(parse_int(value, where)); }},
        {"out_dir", [&] { config.out_dir = value; }},
    };

    const auto it = setters.find(key);
    if (it == setters.end()) {
        throw InvalidConfigError("unknown config key '" + key + "'");
    }
    it->second();
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");

    RunConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line.resize(comment);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw InvalidConfigError(path.string() + " line " + std::to_string(line_no) +
                                     ": expected 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            apply_config_entry(config, key, value);
        } catch (const Error& e) {
            throw InvalidConfigError(path.string() + " line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return config;
}

}  // namespace hhe
