#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

namespace hhe {

// One sample: identity label, camera id and a raw feature vector.
struct LabeledFeature {
    std::int64_t sample_id = 0;
    int label = 0;
    int camera = 0;
    std::vector<double> vector;

    friend bool operator==(const LabeledFeature&, const LabeledFeature&) = default;
};

using Dataset = std::vector<LabeledFeature>;

// Synthetic multi-camera identity task: every identity is a unit prototype,
// samples scatter around it with per-component spread intra_spread, and each
// camera adds a fixed offset vector drawn with per-component spread
// camera_shift. Cameras are assigned round-robin over each identity's
// samples.
struct SynthConfig {
    std::size_t num_identities = 32;
    std::size_t samples_per_identity = 20;
    std::size_t num_cameras = 4;
    std::size_t input_dim = 64;
    double intra_spread = 0.1;
    double camera_shift = 0.2;
    std::uint64_t seed = 42;

    void validate() const;  // throws InvalidConfigError
};

Dataset generate_synthetic(const SynthConfig& config);

// "HHE v1" feature file: one header line `HHE v1 <count> <dim>`, then one
// sample per line `sample_id,label,camera,v1,...,vd`. Doubles are written
// in shortest round-trip form, so load(save(d)) == d exactly.
void save_features(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_features(const std::filesystem::path& path);

struct QueryGallerySplit {
    Dataset query;
    Dataset gallery;
};

// Per-identity split; every query keeps at least one cross-camera gallery
// sample of the same identity. Requires each identity to have >= 2 samples
// in >= 2 cameras.
QueryGallerySplit split_query_gallery(const Dataset& dataset, std::mt19937_64& rng,
                                      double query_fraction);

// 0 for an empty dataset; throws DegenerateDatasetError on ragged dims.
std::size_t feature_dim(const Dataset& dataset);
std::vector<int> distinct_labels_sorted(const Dataset& dataset);

}  // namespace hhe
