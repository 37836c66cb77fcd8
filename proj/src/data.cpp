#include "hhe/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "hhe/error.hpp"
#include "hhe/geometry.hpp"
#include "hhe/text_io.hpp"

namespace hhe {

void SynthConfig::validate() const {
    if (num_identities < 2) throw InvalidConfigError("synthetic data needs >= 2 identities");
    if (samples_per_identity < 2)
        throw InvalidConfigError("synthetic data needs >= 2 samples per identity");
    if (num_cameras < 2) throw InvalidConfigError("synthetic data needs >= 2 cameras");
    if (input_dim < 2) throw InvalidConfigError("synthetic input_dim must be >= 2");
    if (!(intra_spread > 0.0)) throw InvalidConfigError("intra_spread must be > 0");
    if (!(camera_shift >= 0.0)) throw InvalidConfigError("camera_shift must be >= 0");
}

Dataset generate_synthetic(const SynthConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> unit_normal(0.0, 1.0);

    const auto draw = [&](std::size_t n, double sigma) {
        std::vector<double> v(n);
        for (double& x : v) x = sigma * unit_normal(rng);
        return v;
    };

    // Identity prototypes on the unit sphere.
    std::vector<std::vector<double>> prototypes;
    prototypes.reserve(config.num_identities);
    for (std::size_t l = 0; l < config.num_identities; ++l) {
        prototypes.push_back(l2_normalize(draw(config.input_dim, 1.0)).components());
    }
    // One fixed offset vector per camera.
    std::vector<std::vector<double>> camera_offsets;
    camera_offsets.reserve(config.num_cameras);
    for (std::size_t c = 0; c < config.num_cameras; ++c) {
        camera_offsets.push_back(draw(config.input_dim, config.camera_shift));
    }

    Dataset out;
    out.reserve(config.num_identities * config.samples_per_identity);
    std::int64_t next_id = 0;
    for (std::size_t l = 0; l < config.num_identities; ++l) {
        for (std::size_t t = 0; t < config.samples_per_identity; ++t) {
            const std::size_t cam = t % config.num_cameras;
            LabeledFeature sample;
            sample.sample_id = next_id++;
            sample.label = static_cast<int>(l);
            sample.camera = static_cast<int>(cam);
            sample.vector = draw(config.input_dim, config.intra_spread);
            for (std::size_t j = 0; j < config.input_dim; ++j) {
                sample.vector[j] += prototypes[l][j] + camera_offsets[cam][j];
            }
            out.push_back(std::move(sample));
        }
    }
    return out;
}

std::size_t feature_dim(const Dataset& dataset) {
    if (dataset.empty()) return 0;
    const std::size_t dim = dataset.front().vector.size();
    for (const auto& s : dataset) {
        if (s.vector.size() != dim) {
            throw DegenerateDatasetError("dataset has non-uniform feature dimensions");
        }
    }
    return dim;
}

std::vector<int> distinct_labels_sorted(const Dataset& dataset) {
    std::set<int> labels;
    for (const auto& s : dataset) labels.insert(s.label);
    return {labels.begin(), labels.end()};
}

void save_features(const Dataset& dataset, const std::filesystem::path& path) {
    const std::size_t dim = feature_dim(dataset);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");

    std::string line = "HHE v1 " + std::to_string(dataset.size()) + " " + std::to_string(dim);
    out << line << '\n';
    for (const auto& s : dataset) {
        line.clear();
        line += std::to_string(s.sample_id);
        line += ',';
        line += std::to_string(s.label);
        line += ',';
        line += std::to_string(s.camera);
        for (double v : s.vector) {
            line += ',';
            line += format_double(v);
        }
        out << line << '\n';
    }
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

Dataset load_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");

    std::string header;
    if (!std::getline(in, header)) throw FormatError(path.string() + " line 1: missing header");
    const auto head = split(header, ' ');
    if (head.size() != 4 || head[0] != "HHE" || head[1] != "v1") {
        throw FormatError(path.string() + " line 1: expected 'HHE v1 <count> <dim>'");
    }
    const long long count = parse_int(head[2], path.string() + " line 1");
    const long long dim = parse_int(head[3], path.string() + " line 1");
    if (count < 0 || dim < 0) throw FormatError(path.string() + " line 1: negative header field");

    Dataset out;
    out.reserve(static_cast<std::size_t>(count));
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() && out.size() == static_cast<std::size_t>(count)) continue;
        const std::string where = path.string() + " line " + std::to_string(line_no);
        const auto cols = split(line, ',');
        if (cols.size() != static_cast<std::size_t>(3 + dim)) {
            throw FormatError(where + ": expected " + std::to_string(3 + dim) +
                              " columns, got " + std::to_string(cols.size()));
        }
        LabeledFeature s;
        s.sample_id = parse_int(cols[0], where);
        s.label = static_cast<int>(parse_int(cols[1], where));
        s.camera = static_cast<int>(parse_int(cols[2], where));
        s.vector.resize(static_cast<std::size_t>(dim));
        for (long long j = 0; j < dim; ++j) {
            s.vector[static_cast<std::size_t>(j)] =
                parse_double(cols[static_cast<std::size_t>(3 + j)], where);
        }
        out.push_back(std::move(s));
        if (out.size() > static_cast<std::size_t>(count)) {
            throw FormatError(where + ": more rows than the header count " +
                              std::to_string(count));
        }
    }
    if (out.size() != static_cast<std::size_t>(count)) {
        throw FormatError(path.string() + ": header promised " + std::to_string(count) +
                          " rows, found " + std::to_string(out.size()));
    }
    return out;
}

namespace {

// True when every member of `chosen` still has a cross-camera sample left
// in the remaining pool described by per-camera counts.
bool cross_camera_covered(const std::vector<int>& chosen_cameras,
                          const std::map<int, std::size_t>& remaining_per_camera,
                          std::size_t remaining_total) {
    for (int cam : chosen_cameras) {
        const auto it = remaining_per_camera.find(cam);
        const std::size_t same = it == remaining_per_camera.end() ? 0 : it->second;
        if (remaining_total - same == 0) return false;
    }
    return true;
}

}  // namespace

QueryGallerySplit split_query_gallery(const Dataset& dataset, std::mt19937_64& rng,
                                      double query_fraction) {
    feature_dim(dataset);
    if (dataset.empty()) throw DegenerateDatasetError("split: empty dataset");
    if (!(query_fraction > 0.0)) {
        throw DegenerateDatasetError("split: query fraction yields an empty query set");
    }
    if (!(query_fraction < 1.0)) {
        throw DegenerateDatasetError("split: query fraction leaves no gallery");
    }

    std::map<int, std::vector<std::size_t>> by_identity;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        by_identity[dataset[i].label].push_back(i);
    }
    for (const auto& [label, members] : by_identity) {
        std::set<int> cams;
        for (std::size_t i : members) cams.insert(dataset[i].camera);
        if (members.size() < 2 || cams.size() < 2) {
            throw DegenerateDatasetError("split: identity " + std::to_string(label) +
                                         " needs >= 2 samples in >= 2 cameras");
        }
    }

    std::vector<char> is_query(dataset.size(), 0);
    for (auto& [label, members] : by_identity) {
        std::vector<std::size_t> order = members;
        std::shuffle(order.begin(), order.end(), rng);
        std::size_t want = static_cast<std::size_t>(
            std::floor(query_fraction * static_cast<double>(members.size())));
        want = std::clamp<std::size_t>(want, 1, members.size() - 1);

        std::map<int, std::size_t> remaining_per_camera;
        for (std::size_t i : members) ++remaining_per_camera[dataset[i].camera];
        std::size_t remaining_total = members.size();

        std::vector<int> chosen_cameras;
        std::size_t taken = 0;
        for (std::size_t i : order) {
            if (taken == want) break;
            const int cam = dataset[i].camera;
            // Tentatively remove the candidate and keep it only if every
            // query picked so far (including it) retains a cross-camera
            // gallery sample.
            --remaining_per_camera[cam];
            --remaining_total;
            chosen_cameras.push_back(cam);
            if (cross_camera_covered(chosen_cameras, remaining_per_camera, remaining_total)) {
                is_query[i] = 1;
                ++taken;
            } else {
                ++remaining_per_camera[cam];
                ++remaining_total;
                chosen_cameras.pop_back();
            }
        }
        if (taken == 0) {
            throw DegenerateDatasetError("split: identity " + std::to_string(label) +
                                         " admits no valid query");
        }
    }

    QueryGallerySplit out;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        (is_query[i] ? out.query : out.gallery).push_back(dataset[i]);
    }
    return out;
}

}  // namespace hhe
