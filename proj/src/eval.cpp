#include "hhe/eval.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <string>

#include "hhe/error.hpp"
#include "hhe/geometry.hpp"

namespace hhe {

Protocol protocol_from_name(std::string_view name) {
    if (name == "market") return Protocol::kMarket;
    if (name == "cuhk") return Protocol::kCuhk;
    throw InvalidConfigError("unknown protocol '" + std::string(name) +
                             "' (expected market or cuhk)");
}

std::string_view protocol_name(Protocol p) {
    return p == Protocol::kMarket ? "market" : "cuhk";
}

RankingResult rank_query(const LabeledFeature& query, const Dataset& gallery) {
    const UnitVector q = l2_normalize(query.vector);

    struct Entry {
        double distance;
        std::size_t index;
    };
    std::vector<Entry> entries;
    entries.reserve(gallery.size());
    for (std::size_t g = 0; g < gallery.size(); ++g) {
        const auto& item = gallery[g];
        if (item.label == query.label && item.camera == query.camera) continue;
        entries.push_back({angular_distance(q, l2_normalize(item.vector)), g});
    }
    if (entries.empty()) {
        throw EmptyGalleryError("rank_query: gallery empty after same-camera exclusion for query " +
                                std::to_string(query.sample_id));
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.index < b.index;
    });

    RankingResult out;
    out.query_sample_id = query.sample_id;
    out.gallery_order.reserve(entries.size());
    out.relevant.reserve(entries.size());
    out.distances.reserve(entries.size());
    for (const Entry& e : entries) {
        out.gallery_order.push_back(e.index);
        out.relevant.push_back(gallery[e.index].label == query.label ? 1 : 0);
        out.distances.push_back(e.distance);
    }
    return out;
}

double average_precision(const RankingResult& ranking, bool trapezoidal) {
    std::size_t total_relevant = 0;
    for (char r : ranking.relevant) total_relevant += r;
    if (total_relevant == 0) {
        throw NoRelevantError("average_precision: no relevant gallery item for query " +
                              std::to_string(ranking.query_sample_id));
    }

    if (!trapezoidal) {
        double sum = 0.0;
        std::size_t hits = 0;
        for (std::size_t k = 0; k < ranking.relevant.size(); ++k) {
            if (!ranking.relevant[k]) continue;
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
        return sum / static_cast<double>(total_relevant);
    }

    // Reference-tool interpolation: trapezoid between consecutive
    // (recall, precision) points, precision starting at 1.
    double ap = 0.0;
    double old_recall = 0.0;
    double old_precision = 1.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < ranking.relevant.size(); ++k) {
        if (ranking.relevant[k]) ++hits;
        const double recall = static_cast<double>(hits) / static_cast<double>(total_relevant);
        const double precision = static_cast<double>(hits) / static_cast<double>(k + 1);
        ap += (recall - old_recall) * (old_precision + precision) / 2.0;
        old_recall = recall;
        old_precision = precision;
    }
    return ap;
}

namespace {

std::size_t first_relevant_rank(const std::vector<char>& relevant) {
    for (std::size_t k = 0; k < relevant.size(); ++k) {
        if (relevant[k]) return k + 1;
    }
    return relevant.size() + 1;
}

void accumulate_cmc(std::vector<double>& cmc, std::size_t rank) {
    for (std::size_t k = rank - 1; k < cmc.size(); ++k) cmc[k] += 1.0;
}

EvalReport evaluate_market(const Dataset& queries, const Dataset& gallery,
                           const EvalConfig& config) {
    EvalReport report;
    report.cmc.assign(config.top_k, 0.0);
    for (const auto& query : queries) {
        const RankingResult ranking = rank_query(query, gallery);
        report.map += average_precision(ranking, config.trapezoidal_ap);
        accumulate_cmc(report.cmc, first_relevant_rank(ranking.relevant));
    }
    const double inv = 1.0 / static_cast<double>(queries.size());
    for (double& v : report.cmc) v *= inv;
    report.map *= inv;
    report.rank1 = report.cmc.empty() ? 0.0 : report.cmc.front();
    report.repeats = 1;
    return report;
}

// Single-gallery-shot: per query and repeat, keep one uniformly sampled
// instance of every gallery identity among the entries that survive the
// exclusion, then score the reduced ranking.
EvalReport evaluate_single_shot(const Dataset& queries, const Dataset& gallery,
                                const EvalConfig& config) {
    if (config.repeats == 0) throw InvalidConfigError("evaluate: repeats must be >= 1");

    // Rankings are deterministic; compute them once.
    std::vector<RankingResult> rankings;
    rankings.reserve(queries.size());
    for (const auto& query : queries) rankings.push_back(rank_query(query, gallery));

    EvalReport report;
    report.cmc.assign(config.top_k, 0.0);
    report.repeats = config.repeats;
    std::mt19937_64 rng(config.seed);

    for (std::size_t repeat = 0; repeat < config.repeats; ++repeat) {
        std::vector<double> cmc(config.top_k, 0.0);
        double map = 0.0;
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            const RankingResult& full = rankings[qi];
            // Positions of each identity's entries within the ranked list.
            std::map<int, std::vector<std::size_t>> positions;
            for (std::size_t k = 0; k < full.gallery_order.size(); ++k) {
                positions[gallery[full.gallery_order[k]].label].push_back(k);
            }
            std::vector<char> keep(full.gallery_order.size(), 0);
            for (const auto& [label, entry_positions] : positions) {
                std::uniform_int_distribution<std::size_t> pick(0, entry_positions.size() - 1);
                keep[entry_positions[pick(rng)]] = 1;
            }
            RankingResult reduced;
            reduced.query_sample_id = full.query_sample_id;
            for (std::size_t k = 0; k < keep.size(); ++k) {
                if (!keep[k]) continue;
                reduced.gallery_order.push_back(full.gallery_order[k]);
                reduced.relevant.push_back(full.relevant[k]);
                reduced.distances.push_back(full.distances[k]);
            }
            map += average_precision(reduced, config.trapezoidal_ap);
            accumulate_cmc(cmc, first_relevant_rank(reduced.relevant));
        }
        const double inv = 1.0 / static_cast<double>(queries.size());
        for (double& v : cmc) v *= inv;
        map *= inv;
        report.per_repeat_rank1.push_back(cmc.empty() ? 0.0 : cmc.front());
        report.per_repeat_map.push_back(map);
        for (std::size_t k = 0; k < cmc.size(); ++k) report.cmc[k] += cmc[k];
        report.map += map;
    }
    const double inv_repeats = 1.0 / static_cast<double>(config.repeats);
    for (double& v : report.cmc) v *= inv_repeats;
    report.map *= inv_repeats;
    report.rank1 = report.cmc.empty() ? 0.0 : report.cmc.front();
    return report;
}

}  // namespace

EvalReport evaluate(const Dataset& queries, const Dataset& gallery, const EvalConfig& config) {
    if (queries.empty()) throw DegenerateDatasetError("evaluate: empty query set");
    if (gallery.empty()) throw DegenerateDatasetError("evaluate: empty gallery");
    if (config.top_k == 0) throw InvalidConfigError("evaluate: top_k must be >= 1");
    return config.protocol == Protocol::kMarket ? evaluate_market(queries, gallery, config)
                                                : evaluate_single_shot(queries, gallery, config);
}

std::vector<double> tta_average(const std::vector<std::vector<double>>& variants) {
    if (variants.empty()) throw EmptyListError("tta_average: no feature variants");
    const std::size_t dim = variants.front().size();
    std::vector<double> out(dim, 0.0);
    for (const auto& v : variants) {
        if (v.size() != dim) {
            throw DimensionMismatchError("tta_average: variant dim " + std::to_string(v.size()) +
                                         " vs " + std::to_string(dim));
        }
        for (std::size_t j = 0; j < dim; ++j) out[j] += v[j];
    }
    const double inv = 1.0 / static_cast<double>(variants.size());
    for (double& x : out) x *= inv;
    return out;
}

}  // namespace hhe
