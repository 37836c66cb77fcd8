// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Criterion 5's ablation run is shared by criteria 6 and 9.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hhe/commands.hpp"
#include "hhe/error.hpp"
#include "hhe/eval.hpp"
#include "hhe/gradcheck.hpp"
#include "hhe/losses.hpp"
#include "hhe/model.hpp"

using namespace hhe;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Outcome& outcome) {
    std::printf("criterion %d: %-28s %s  (%s)\n", id, title.c_str(),
                outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    Matrix m(rows, cols);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : m.values()) v = normal(rng);
    return m;
}

// ---- criterion 1: analytic gradients vs central finite differences -------

Outcome criterion_gradients() {
    const auto start = Clock::now();
    const LossConfig base;
    double worst = 0.0;
    bool pass = true;
    std::uint64_t seed = 20240;
    for (Variant variant : kAllVariants) {
        const GradCheckResult result = gradcheck_variant(variant, base, 20, seed++);
        worst = std::max(worst, result.max_rel_error);
        pass = pass && result.pass;
    }
    const double elapsed = seconds_since(start);
    pass = pass && elapsed < 30.0;
    return {pass, "max rel err " + fmt(worst) + " over 5 variants x 20 draws, tol 1e-4, " +
                      fmt(elapsed) + " s"};
}

// ---- criterion 2: batch-hard mining vs exhaustive scan -------------------

Outcome criterion_mining() {
    const auto start = Clock::now();
    std::mt19937_64 rng(31007);
    bool pass = true;
    std::size_t max_batch = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t classes = 2 + trial % 7;
        const std::size_t per_class = 2 + trial % 7;
        const std::size_t b = classes * per_class;
        max_batch = std::max(max_batch, b);
        std::vector<int> labels(b);
        for (std::size_t i = 0; i < b; ++i) labels[i] = static_cast<int>(i / per_class);

        const Matrix x = random_matrix(b, 8, rng);
        const Matrix d2 = squared_euclidean_distances(x);
        const Matrix angles = pairwise_angles(l2_normalize_rows(x));

        for (const Matrix* dist : {&d2, &angles}) {
            const BatchHardSelection sel = batch_hard(*dist, labels);
            for (std::size_t i = 0; i < b; ++i) {
                std::size_t fp = b, cn = b;
                double best_pos = -1.0, best_neg = 1e300;
                for (std::size_t j = 0; j < b; ++j) {
                    if (j == i) continue;
                    if (labels[j] == labels[i]) {
                        if (fp == b || (*dist)(i, j) > best_pos) {
                            best_pos = (*dist)(i, j);
                            fp = j;
                        }
                    } else if (cn == b || (*dist)(i, j) < best_neg) {
                        best_neg = (*dist)(i, j);
                        cn = j;
                    }
                }
                pass = pass && sel.farthest_positive[i] == fp && sel.closest_negative[i] == cn;
            }
        }
    }
    const double elapsed = seconds_since(start);
    pass = pass && elapsed < 5.0;
    return {pass, "100 batches up to B=" + std::to_string(max_batch) +
                      ", euclidean + angular, exact, " + fmt(elapsed) + " s"};
}

// ---- criterion 3: geometry consistency ------------------------------------

Outcome criterion_geometry() {
    std::mt19937_64 rng(40009);
    double worst_pair = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const UnitVector u = l2_normalize(random_matrix(1, 8, rng).row(0));
        const UnitVector v = l2_normalize(random_matrix(1, 8, rng).row(0));
        worst_pair = std::max(worst_pair,
                              std::abs(angular_distance(u, v) - std::acos(cosine(u, v))));
    }

    std::vector<int> labels(12);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i / 3);
    const Matrix raw = random_matrix(12, 6, rng);
    const Matrix w = random_matrix(4, 6, rng);
    const LossConfig config;
    const Matrix unit = l2_normalize_rows(raw);
    const double at = angular_triplet(unit, labels, config.theta_margin).value;
    const double ac = angular_classification(unit, w, labels, config.alpha).value;
    double worst_scale = 0.0;
    for (double s : {0.001, 0.6, 42.0, 5000.0}) {
        Matrix scaled = raw;
        for (double& v : scaled.values()) v *= s;
        const Matrix unit_s = l2_normalize_rows(scaled);
        worst_scale = std::max(
            worst_scale,
            std::abs(angular_triplet(unit_s, labels, config.theta_margin).value - at));
        worst_scale = std::max(
            worst_scale,
            std::abs(angular_classification(unit_s, w, labels, config.alpha).value - ac));
    }
    const bool pass = worst_pair <= 1e-9 && worst_scale <= 1e-9;
    return {pass, "chord/arccos gap " + fmt(worst_pair) + " on 1000 pairs, scale-invariance gap " +
                      fmt(worst_scale)};
}

// ---- criterion 4: orthogonality score range --------------------------------

Outcome criterion_score() {
    std::mt19937_64 rng(50021);
    bool pass = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 1 + trial % 8;
        const std::size_t d = k + trial % 5;
        const double s = orthogonality_score(random_matrix(d, k, rng));
        pass = pass && s >= 1.0 / static_cast<double>(k) - 1e-12 && s <= 1.0 + 1e-12;
    }

    // Orthonormal columns score exactly 1.
    Matrix ortho(6, 3);
    ortho(0, 0) = 1.0;
    ortho(1, 1) = 1.0;
    ortho(2, 2) = 1.0;
    pass = pass && std::abs(orthogonality_score(ortho) - 1.0) <= 1e-12;

    // k duplicated unit columns score exactly 1/k.
    for (std::size_t k = 2; k <= 6; ++k) {
        Matrix dup(4, k);
        for (std::size_t j = 0; j < k; ++j) dup(1, j) = 1.0;
        pass = pass && std::abs(orthogonality_score(dup) - 1.0 / static_cast<double>(k)) <= 1e-12;
    }
    return {pass, "1000 random matrices in [1/k, 1]; orthonormal = 1; duplicated = 1/k"};
}

// ---- criteria 5 + 6 + 9: desk-scale ablation ladder -----------------------

struct AblationArtifacts {
    std::vector<AblateRow> rows;
    fs::path out_dir;
    fs::path feature_file;
    RunConfig config;
    double elapsed = 0.0;
};

AblationArtifacts run_ablation() {
    AblationArtifacts artifacts;
    artifacts.out_dir = fs::temp_directory_path() / "hhe_acceptance";
    fs::remove_all(artifacts.out_dir);
    fs::create_directories(artifacts.out_dir);

    // Paper-default operating point on the default synthetic task:
    // K=32 identities, 20 samples, 4 cameras, d_in=64, d_embed=32,
    // lambda=0.2, theta_m=3 deg, alpha=12, gamma=1e-3, fixed seed.
    artifacts.config = RunConfig{};
    artifacts.config.out_dir = artifacts.out_dir.string();

    const auto start = Clock::now();
    const SynthOutputs synth =
        cmd_synth(artifacts.config, artifacts.out_dir / "features.hhe");
    artifacts.feature_file = synth.feature_file;
    artifacts.rows = cmd_ablate(artifacts.config, artifacts.feature_file);
    artifacts.elapsed = seconds_since(start);
    return artifacts;
}

Outcome criterion_ablation(const AblationArtifacts& artifacts) {
    const auto& rows = artifacts.rows;
    const double map_c = rows[0].map;
    const double map_t = rows[1].map;
    const double map_ct = rows[2].map;
    const double map_jal = rows[3].map;
    const double map_jalo = rows[4].map;
    const double slack = 0.01;

    const bool ordering = map_jalo >= map_jal - slack && map_jal >= map_ct - slack &&
                          map_ct >= std::max(map_c, map_t) - slack;
    const bool rank1_ok = rows[4].top1 >= 0.95;
    const bool time_ok = artifacts.elapsed < 600.0;
    return {ordering && rank1_ok && time_ok,
            "mAP C=" + fmt(map_c) + " T=" + fmt(map_t) + " C+T=" + fmt(map_ct) + " JAL=" +
                fmt(map_jal) + " JAL_o=" + fmt(map_jalo) + ", JAL_o rank1=" + fmt(rows[4].top1) +
                ", " + fmt(artifacts.elapsed) + " s"};
}

Outcome criterion_orthogonality_effect(const AblationArtifacts& artifacts) {
    const double s_jal = artifacts.rows[3].s_we;    // gamma = 0
    const double s_jalo = artifacts.rows[4].s_we;   // gamma = 1e-3
    const bool pass = s_jalo >= 0.99 && s_jal < s_jalo;
    return {pass, "S(W_e) gamma=1e-3: " + fmt(s_jalo) + ", gamma=0: " + fmt(s_jal)};
}

Outcome criterion_tta(const AblationArtifacts& artifacts) {
    RunConfig config = artifacts.config;
    const fs::path model = artifacts.out_dir / "model_JAL_o.hhm";

    config.out_dir = (artifacts.out_dir / "tta1").string();
    config.tta_count = 1;
    const EvalOutputs plain = cmd_eval(config, model, artifacts.feature_file);

    config.out_dir = (artifacts.out_dir / "tta8").string();
    config.tta_count = 8;
    const EvalOutputs jittered = cmd_eval(config, model, artifacts.feature_file);

    const bool pass = jittered.report.map >= plain.report.map - 0.01;
    return {pass, "mAP plain " + fmt(plain.report.map) + " vs tta8 " + fmt(jittered.report.map)};
}

// ---- criterion 7: evaluation oracle ----------------------------------------

Dataset grid_dataset(std::size_t identities, std::size_t cameras, std::size_t per_cell,
                     std::size_t dim, std::mt19937_64& rng, std::int64_t id_base) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset out;
    std::int64_t next = id_base;
    for (std::size_t l = 0; l < identities; ++l) {
        for (std::size_t c = 0; c < cameras; ++c) {
            for (std::size_t k = 0; k < per_cell; ++k) {
                LabeledFeature s;
                s.sample_id = next++;
                s.label = static_cast<int>(l);
                s.camera = static_cast<int>(c);
                for (std::size_t j = 0; j < dim; ++j) s.vector.push_back(normal(rng));
                out.push_back(std::move(s));
            }
        }
    }
    return out;
}

Outcome criterion_eval_oracle() {
    std::mt19937_64 rng(60013);
    bool exact = true;
    bool monotone = true;

    for (int trial = 0; trial < 5; ++trial) {
        const Dataset gallery = grid_dataset(4, 2, 3, 6, rng, 0);         // 24 <= 100
        const Dataset queries = grid_dataset(4, 2, 2, 6, rng, 10000);     // 16 queries
        EvalConfig config;
        const EvalReport fast = evaluate(queries, gallery, config);

        // Brute-force per-query recomputation.
        std::vector<double> cmc(config.top_k, 0.0);
        double map = 0.0;
        for (const auto& q : queries) {
            std::vector<std::size_t> keep;
            std::vector<double> dist;
            const UnitVector qn = l2_normalize(q.vector);
            for (std::size_t g = 0; g < gallery.size(); ++g) {
                if (gallery[g].label == q.label && gallery[g].camera == q.camera) continue;
                keep.push_back(g);
                dist.push_back(angular_distance(qn, l2_normalize(gallery[g].vector)));
            }
            for (std::size_t a = 0; a < keep.size(); ++a) {
                std::size_t best = a;
                for (std::size_t b = a + 1; b < keep.size(); ++b) {
                    if (dist[b] < dist[best] ||
                        (dist[b] == dist[best] && keep[b] < keep[best])) {
                        best = b;
                    }
                }
                std::swap(keep[a], keep[best]);
                std::swap(dist[a], dist[best]);
            }
            std::size_t total_relevant = 0;
            for (std::size_t g : keep) total_relevant += gallery[g].label == q.label;
            double ap = 0.0;
            std::size_t hits = 0, first = 0;
            for (std::size_t k = 0; k < keep.size(); ++k) {
                if (gallery[keep[k]].label != q.label) continue;
                ++hits;
                if (first == 0) first = k + 1;
                ap += static_cast<double>(hits) / static_cast<double>(k + 1);
            }
            map += ap / static_cast<double>(total_relevant);
            for (std::size_t k = first - 1; k < cmc.size(); ++k) cmc[k] += 1.0;
        }
        const double inv = 1.0 / static_cast<double>(queries.size());
        for (double& v : cmc) v *= inv;
        map *= inv;

        exact = exact && fast.map == map && fast.cmc == cmc && fast.rank1 == cmc.front();
        for (std::size_t k = 1; k < fast.cmc.size(); ++k) {
            monotone = monotone && fast.cmc[k] >= fast.cmc[k - 1];
        }
    }

    // Chance level: balanced gallery of K identities x C cameras, random
    // features. Expected top-1 rate is (C-1)/(KC-1), which approaches 1/K.
    const std::size_t k_ids = 10, cams = 10;
    const Dataset gallery = grid_dataset(k_ids, cams, 2, 16, rng, 0);
    const Dataset queries = grid_dataset(k_ids, cams, 3, 16, rng, 50000);
    EvalConfig config;
    const EvalReport chance = evaluate(queries, gallery, config);
    const double p = static_cast<double>(cams - 1) / static_cast<double>(k_ids * cams - 1);
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(queries.size()));
    const bool chance_ok = std::abs(chance.rank1 - p) <= 3.0 * sigma;

    return {exact && monotone && chance_ok,
            std::string("oracle exact on 5 datasets; cmc monotone; chance rank1 ") +
                fmt(chance.rank1) + " vs 1/K-level " + fmt(p) + " +- " + fmt(3.0 * sigma)};
}

// ---- criterion 8: byte-identical determinism -------------------------------

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

Outcome criterion_determinism(const AblationArtifacts& artifacts) {
    RunConfig config = artifacts.config;
    bool pass = true;
    fs::path log_a, log_b, report_a, report_b;
    for (int run = 0; run < 2; ++run) {
        config.out_dir =
            (artifacts.out_dir / (run == 0 ? "determinism_a" : "determinism_b")).string();
        const TrainOutputs trained = cmd_train(config, artifacts.feature_file);
        const EvalOutputs evaluated = cmd_eval(config, trained.model_file, artifacts.feature_file);
        (run == 0 ? log_a : log_b) = trained.log_file;
        (run == 0 ? report_a : report_b) = evaluated.report_file;
    }
    pass = pass && read_bytes(log_a) == read_bytes(log_b);
    pass = pass && read_bytes(report_a) == read_bytes(report_b);
    return {pass, "train log + eval report byte-identical across two runs"};
}

}  // namespace

int main() {
    try {
        report(1, "gradient correctness", criterion_gradients());
        report(2, "mining oracle", criterion_mining());
        report(3, "geometry consistency", criterion_geometry());
        report(4, "orthogonality metric", criterion_score());

        const AblationArtifacts artifacts = run_ablation();
        report(5, "ablation ordering", criterion_ablation(artifacts));
        report(6, "orthogonality effect", criterion_orthogonality_effect(artifacts));
        report(7, "evaluation oracle", criterion_eval_oracle());
        report(8, "determinism", criterion_determinism(artifacts));
        report(9, "tta direction", criterion_tta(artifacts));
    } catch (const std::exception& e) {
        std::printf("acceptance suite aborted: %s\n", e.what());
        return 99;
    }
    std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "PASS" : "FAIL", failures);
    return failures;
}
