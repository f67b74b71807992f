#include "novelty/crossval.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <map>
#include <set>

using namespace novelty;

namespace {

std::vector<ScoredSet> scored(const std::vector<double>& novel, const std::vector<double>& known) {
    std::vector<ScoredSet> out;
    for (double v : novel) out.push_back({v, true});
    for (double v : known) out.push_back({v, false});
    return out;
}

bool has_point(const RocCurve& c, double fpr, double tpr) {
    return std::any_of(c.points.begin(), c.points.end(),
                       [&](const RocPoint& p) { return std::abs(p.fpr - fpr) < 1e-15 && std::abs(p.tpr - tpr) < 1e-15; });
}

void expect_valid_curve(const RocCurve& c) {
    ASSERT_GE(c.points.size(), 3u);
    EXPECT_EQ(c.points.front().threshold, std::numeric_limits<double>::infinity());
    EXPECT_EQ(c.points.back().threshold, -std::numeric_limits<double>::infinity());
    EXPECT_EQ(c.points.front().fpr, 0.0);
    EXPECT_EQ(c.points.front().tpr, 0.0);
    EXPECT_EQ(c.points.back().fpr, 1.0);
    EXPECT_EQ(c.points.back().tpr, 1.0);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        EXPECT_LT(c.points[i].threshold, c.points[i - 1].threshold);
        EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
        EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
        EXPECT_LE(c.points[i].fpr, 1.0);
        EXPECT_LE(c.points[i].tpr, 1.0);
    }
}

LabeledDataset small_dataset(std::uint64_t seed = 5) {
    SynthSpec spec;
    spec.num_classes = 8;
    spec.dim = 5;
    spec.examples_per_class = 30;
    spec.center_spread = 1.5;
    spec.within_std = 0.7;
    spec.superclasses = 2;
    spec.subclass_spread = 0.6;
    spec.seed = seed;
    return generate_synthetic(spec);
}

CvConfig small_cv() {
    CvConfig cfg;
    cfg.folds = 4;
    cfg.repeats = 2;
    cfg.set_sizes = {1, 3};
    cfg.split.multiclass_fraction = 0.6;
    cfg.split.binary_fraction = 0.2;
    cfg.ensemble.num_partitions = 5;
    cfg.ensemble.novel_fraction = 0.2;
    cfg.ensemble.softmax.max_epochs = 100;
    cfg.ensemble.svm.iterations = 300;
    cfg.extra_ensemble_sizes = {2};
    cfg.seed = 31;
    cfg.parallelism = 1;
    return cfg;
}

} // namespace

// ---------------------------------------------------------------------------
// Test sets

TEST(TestSets, ChunkingAndLabels) {
    Matrix x = Matrix::Random(12, 2);
    std::vector<ClassId> labels{0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    LabeledDataset ds(x, labels, {"a", "b"});
    const std::vector<ClassId> novel{1};
    EXPECT_EQ(sample_test_sets(ds, novel, 1, 0).size(), 12u);
    const auto sets = sample_test_sets(ds, novel, 3, 0);
    ASSERT_EQ(sets.size(), 2u + 1u);
    for (const auto& t : sets) {
        EXPECT_EQ(t.features.rows(), 3);
        EXPECT_EQ(t.is_novel, t.label == 1);
        for (Eigen::Index r = 0; r < 3; ++r) {
            bool found = false;
            for (Eigen::Index i = 0; i < 12; ++i)
                if (x.row(i) == t.features.row(r)) found = found || labels[static_cast<std::size_t>(i)] == t.label;
            EXPECT_TRUE(found);
        }
    }
    EXPECT_THROW(sample_test_sets(ds, novel, 8, 0), Error);
}

// ---------------------------------------------------------------------------
// ROC, AUC, EER

TEST(Roc, HandExamples) {
    const auto c = roc_curve(scored({0.9, 0.4}, {0.6, 0.1}));
    expect_valid_curve(c);
    EXPECT_TRUE(has_point(c, 0.0, 0.5));
    EXPECT_TRUE(has_point(c, 0.5, 1.0));
    EXPECT_DOUBLE_EQ(auc(c), 0.75);

    const auto e = roc_curve(scored({0.9, 0.8, 0.4}, {0.7, 0.2, 0.1}));
    EXPECT_NEAR(eer(e), 1.0 / 3.0, 1e-15);
}

TEST(Roc, PerfectSeparation) {
    const auto c = roc_curve(scored({5, 6, 7}, {1, 2}));
    EXPECT_TRUE(has_point(c, 0.0, 1.0));
    EXPECT_EQ(auc(c), 1.0);
    EXPECT_EQ(eer(c), 0.0);
}

TEST(Roc, AllScoresEqual) {
    const auto c = roc_curve(scored({2, 2}, {2, 2, 2}));
    expect_valid_curve(c);
    EXPECT_EQ(c.points.size(), 3u);
    EXPECT_EQ(auc(c), 0.5);
    EXPECT_EQ(eer(c), 0.5);
}

TEST(Roc, SameMultisetIsChance) {
    const std::vector<double> v{0.3, 1.2, 0.3, 4.0, -2.0};
    const auto c = roc_curve(scored(v, v));
    EXPECT_NEAR(auc(c), 0.5, 1e-15);
    EXPECT_NEAR(eer(c), 0.5, 1e-15);
}

TEST(Roc, InvertingLabelsComplementsAuc) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        auto [a, b] = oracle::random_tied_scores(rng);
        EXPECT_NEAR(auc(roc_curve(scored(a, b))) + auc(roc_curve(scored(b, a))), 1.0, 1e-12);
    }
}

TEST(Roc, RejectsBadInput) {
    EXPECT_THROW(roc_curve(scored({1, 2}, {})), Error);
    EXPECT_THROW(roc_curve(scored({}, {1})), Error);
    EXPECT_THROW(roc_curve(scored({std::nan("")}, {1})), Error);
    EXPECT_THROW(roc_curve(scored({std::numeric_limits<double>::infinity()}, {1})), Error);
}

TEST(Roc, MatchesBruteForceOracles) {
    std::mt19937_64 rng(2024);
    const auto start = std::chrono::steady_clock::now();
    double worst_auc = 0, worst_eer = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto [novel, known] = oracle::random_tied_scores(rng);
        const auto c = roc_curve(scored(novel, known));
        expect_valid_curve(c);
        // same operating points as the rescanning oracle, in the same order
        const auto pts = oracle::scan_operating_points(novel, known);
        ASSERT_EQ(pts.size(), c.points.size()) << "trial " << trial;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            EXPECT_EQ(pts[i].first, c.points[i].fpr);
            EXPECT_EQ(pts[i].second, c.points[i].tpr);
        }
        worst_auc = std::max(worst_auc, std::abs(auc(c) - oracle::pairwise_auc(novel, known)));
        worst_eer = std::max(worst_eer, std::abs(eer(c) - oracle::scan_eer(novel, known)));
        EXPECT_GE(auc(c), 0.0);
        EXPECT_LE(auc(c), 1.0);
        EXPECT_GE(eer(c), 0.0);
        EXPECT_LE(eer(c), 1.0);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LE(worst_auc, 1e-9);
    EXPECT_LE(worst_eer, 1e-9);
    EXPECT_LE(seconds, 10.0);
}

// ---------------------------------------------------------------------------
// Folds and cross-validation

TEST(Folds, EachClassHeldOutOncePerRepeat) {
    for (std::size_t classes : {20u, 23u, 7u}) {
        for (int folds : {2, 5, 7}) {
            if (static_cast<std::size_t>(folds) > classes) continue;
            const auto chunks = held_out_folds(classes, folds, 1234 + classes);
            ASSERT_EQ(chunks.size(), static_cast<std::size_t>(folds));
            std::vector<int> seen(classes, 0);
            std::size_t lo = classes, hi = 0;
            for (const auto& c : chunks) {
                lo = std::min(lo, c.size());
                hi = std::max(hi, c.size());
                for (ClassId k : c) ++seen[static_cast<std::size_t>(k)];
            }
            EXPECT_LE(hi - lo, 1u);
            for (int s : seen) EXPECT_EQ(s, 1);
        }
    }
    const auto twenty = held_out_folds(20, 10, 9);
    for (const auto& c : twenty) EXPECT_EQ(c.size(), 2u);
    EXPECT_EQ(held_out_folds(20, 10, 9), twenty);
    EXPECT_NE(held_out_folds(20, 10, 10), twenty);
}

TEST(Folds, FoldDataKeepsHeldOutClassesOutOfTraining) {
    const auto ds = small_dataset();
    const auto cfg = small_cv();
    const std::vector<ClassId> held{2, 5};
    const auto data = detail::prepare_fold(ds, cfg, 0, 1, held);
    EXPECT_EQ(data.multiclass_train.num_classes(), 6u);
    EXPECT_EQ(data.binary_train.num_classes(), 6u);
    for (const auto& name : data.multiclass_train.class_names()) EXPECT_TRUE(name != "c2" && name != "c5") << name;
    EXPECT_EQ(data.test.num_classes(), 8u);
    for (ClassId c = 0; c < 8; ++c) EXPECT_EQ(data.test.rows_of_class(c).size(), 6u);  // 30 - 18 - 6
}

TEST(CrossValidation, RowsCoverEveryCellInOrder) {
    const auto ds = small_dataset();
    auto cfg = small_cv();
    cfg.run_ensemble_normalized = true;
    cfg.run_ocsvm = cfg.run_knn = cfg.run_knfst = true;
    cfg.knn_k = {1, 2};
    cfg.representations = {Representation::parse("confidence"), Representation::parse("pca:3")};
    const auto report = run_cross_validation(ds, cfg);

    const std::vector<std::pair<std::string, std::string>> methods{
        {"ensemble", "original"},   {"ensemble_L2", "original"}, {"ensemble_normalized", "original"},
        {"threshold", "original"},  {"maxconf", "original"},     {"ocsvm", "confidence"},
        {"knn_k1", "confidence"},   {"knn_k2", "confidence"},    {"knfst", "confidence"},
        {"ocsvm", "pca:3"},         {"knn_k1", "pca:3"},         {"knn_k2", "pca:3"},
        {"knfst", "pca:3"}};
    ASSERT_EQ(report.rows.size(), 2u * 4u * methods.size() * 2u);
    ASSERT_EQ(report.curves.size(), report.rows.size());
    std::size_t i = 0;
    for (int r = 0; r < 2; ++r)
        for (int f = 0; f < 4; ++f)
            for (const auto& [m, rep] : methods)
                for (std::size_t s : {1u, 3u}) {
                    const auto& row = report.rows[i];
                    EXPECT_EQ(row.method, m);
                    EXPECT_EQ(row.representation, rep);
                    EXPECT_EQ(row.set_size, s);
                    EXPECT_EQ(row.repeat, r);
                    EXPECT_EQ(row.fold, r * 4 + f);
                    EXPECT_GE(row.auc, 0.0);
                    EXPECT_LE(row.auc, 1.0);
                    EXPECT_GE(row.eer, 0.0);
                    EXPECT_LE(row.eer, 1.0);
                    EXPECT_DOUBLE_EQ(row.auc, auc(report.curves[i]));
                    expect_valid_curve(report.curves[i]);
                    ++i;
                }
    EXPECT_EQ(report.diagnostics.size(), 8u);
    EXPECT_FALSE(report.scatter.empty());

    const auto agg = report.aggregate();
    EXPECT_EQ(agg.size(), methods.size() * 2);
    for (const auto& a : agg) EXPECT_EQ(a.count, 8u);
    EXPECT_TRUE(std::isnan(report.mean_auc("nonexistent", 1)));
}

TEST(CrossValidation, AggregateUsesSampleStandardDeviation) {
    EvalReport r;
    r.rows = {{"m", "original", 1, 0, 0, 0.6, 0.3}, {"m", "original", 1, 1, 0, 0.8, 0.1}, {"m", "original", 2, 0, 0, 0.9, 0.2}};
    const auto agg = r.aggregate();
    ASSERT_EQ(agg.size(), 2u);
    EXPECT_NEAR(agg[0].auc_mean, 0.7, 1e-15);
    EXPECT_NEAR(agg[0].auc_std, std::sqrt(0.02), 1e-15);
    EXPECT_NEAR(agg[0].eer_std, std::sqrt(0.02), 1e-15);
    EXPECT_EQ(agg[1].auc_std, 0.0);
    EXPECT_NEAR(r.mean_auc("m", 2), 0.9, 1e-15);
}

TEST(CrossValidation, IndependentOfParallelism) {
    const auto ds = small_dataset(8);
    auto cfg = small_cv();
    cfg.repeats = 1;
    cfg.run_knn = true;
    cfg.knn_k = {1};
    const auto a = run_cross_validation(ds, cfg);
    cfg.parallelism = 3;
    const auto b = run_cross_validation(ds, cfg);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].method, b.rows[i].method);
        EXPECT_EQ(a.rows[i].auc, b.rows[i].auc);
        EXPECT_EQ(a.rows[i].eer, b.rows[i].eer);
    }
}

TEST(CrossValidation, ErrorsCarryContext) {
    const auto ds = small_dataset();
    auto cfg = small_cv();
    cfg.repeats = 1;
    cfg.run_ensemble = false;
    cfg.diagnostics = false;
    cfg.run_threshold = cfg.run_maxconf = false;
    cfg.run_knn = true;
    cfg.knn_k = {5000};
    try {
        run_cross_validation(ds, cfg);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("repeat 0, fold 0"), std::string::npos) << msg;
        EXPECT_NE(msg.find("representation"), std::string::npos) << msg;
    }
}

TEST(CrossValidation, RejectsImpossibleConfigs) {
    const auto ds = small_dataset();
    auto cfg = small_cv();
    cfg.folds = 9;
    EXPECT_THROW(validate_for(cfg, ds), ConfigError);
    cfg = small_cv();
    cfg.folds = 1;
    EXPECT_THROW(validate_for(cfg, ds), ConfigError);
    cfg = small_cv();
    cfg.run_ensemble = cfg.run_threshold = cfg.run_maxconf = false;
    EXPECT_THROW(validate_for(cfg, ds), ConfigError);
    cfg = small_cv();
    cfg.extra_ensemble_sizes = {6};
    EXPECT_THROW(validate_for(cfg, ds), ConfigError);
    cfg = small_cv();
    cfg.split.multiclass_fraction = 0.9;
    cfg.split.binary_fraction = 0.1;
    EXPECT_THROW(validate_for(cfg, ds), ConfigError);
    EXPECT_THROW(Representation::parse("pca:0"), ConfigError);
    EXPECT_THROW(Representation::parse("raw"), ConfigError);
    EXPECT_EQ(Representation::parse("pca:4").name(), "pca:4");
}

TEST(CrossValidation, ParallelRunnerReportsLowestFailingJob) {
    std::vector<int> hits(20, 0);
    try {
        run_parallel(20, 4, [&](std::size_t i) {
            hits[i] = 1;
            if (i == 13 || i == 7) throw Error("job " + std::to_string(i));
        });
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "job 7");
    }
    EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 20);
}
