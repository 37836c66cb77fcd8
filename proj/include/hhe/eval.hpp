#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "hhe/data.hpp"

namespace hhe {

// One query's ranked gallery after protocol exclusion: indices into the
// gallery ordered by ascending angular distance (ties by gallery index),
// with relevance flags (same identity).
struct RankingResult {
    std::int64_t query_sample_id = 0;
    std::vector<std::size_t> gallery_order;
    std::vector<char> relevant;
    std::vector<double> distances;
};

enum class Protocol {
    kMarket,  // full gallery, CMC + mAP
    kCuhk,    // single-gallery-shot CMC averaged over repeats
};

Protocol protocol_from_name(std::string_view name);
std::string_view protocol_name(Protocol p);

struct EvalConfig {
    Protocol protocol = Protocol::kMarket;
    std::size_t repeats = 10;  // single-gallery-shot repetitions
    std::uint64_t seed = 0;
    std::size_t top_k = 10;
    bool trapezoidal_ap = false;  // reference-tool AP interpolation
};

struct EvalReport {
    std::vector<double> cmc;  // cmc[k-1] = top-k match rate, non-decreasing
    double map = 0.0;
    double rank1 = 0.0;  // == cmc[0]
    std::size_t repeats = 1;
    std::vector<double> per_repeat_rank1;
    std::vector<double> per_repeat_map;
};

// Features are L2-normalized internally; gallery entries sharing both the
// query's identity and camera are excluded. Throws EmptyGalleryError when
// nothing remains.
RankingResult rank_query(const LabeledFeature& query, const Dataset& gallery);

// AP over the ranked list. The default averages precision at each relevant
// hit; the trapezoidal form follows the common reference evaluation code.
// Throws NoRelevantError when the list has no relevant entry.
double average_precision(const RankingResult& ranking, bool trapezoidal = false);

EvalReport evaluate(const Dataset& queries, const Dataset& gallery, const EvalConfig& config);

// Componentwise mean of feature variants (test-time augmentation).
std::vector<double> tta_average(const std::vector<std::vector<double>>& variants);

}  // namespace hhe
