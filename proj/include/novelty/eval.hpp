#ifndef NOVELTY_EVAL_HPP
#define NOVELTY_EVAL_HPP

#include "novelty/ensemble.hpp"

#include <limits>

namespace novelty {

/// A group of test points sharing one label.
struct TestSet {
    Matrix features;
    ClassId label = 0;
    bool is_novel = false;
};

/// Per class: seeded shuffle, disjoint size-s chunks, remainder dropped.
inline std::vector<TestSet> sample_test_sets(const LabeledDataset& test, std::span<const ClassId> novel_classes,
                                             std::size_t s, std::uint64_t seed) {
    auto subsets = equal_label_subsets(test.labels(), s, seed);
    if (subsets.empty()) throw Error("no class has " + std::to_string(s) + " test examples");
    std::vector<TestSet> out;
    out.reserve(subsets.size());
    for (const auto& rows : subsets) {
        TestSet t;
        t.features = test.gather(rows);
        t.label = test.label(rows.front());
        t.is_novel = std::find(novel_classes.begin(), novel_classes.end(), t.label) != novel_classes.end();
        out.push_back(std::move(t));
    }
    return out;
}

struct ScoredSet {
    double score = 0.0;
    bool is_novel = false;
};

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

/// Operating points for thresholds strictly decreasing from +inf to -inf; a set
/// is called novel when its score is >= the threshold.
struct RocCurve {
    std::vector<RocPoint> points;
};

inline RocCurve roc_curve(std::span<const ScoredSet> scored) {
    std::size_t positives = 0;
    for (const auto& s : scored) {
        if (!std::isfinite(s.score)) throw Error("non-finite novelty score");
        positives += s.is_novel ? 1 : 0;
    }
    const std::size_t negatives = scored.size() - positives;
    if (positives == 0 || negatives == 0) throw Error("ROC needs at least one novel and one known entry");

    std::vector<ScoredSet> sorted(scored.begin(), scored.end());
    std::sort(sorted.begin(), sorted.end(), [](const ScoredSet& a, const ScoredSet& b) { return a.score > b.score; });

    RocCurve curve;
    const double inf = std::numeric_limits<double>::infinity();
    curve.points.push_back({inf, 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double t = sorted[i].score;
        for (; i < sorted.size() && sorted[i].score == t; ++i) (sorted[i].is_novel ? tp : fp) += 1;
        curve.points.push_back({t, static_cast<double>(fp) / static_cast<double>(negatives),
                                static_cast<double>(tp) / static_cast<double>(positives)});
    }
    curve.points.push_back({-inf, 1.0, 1.0});
    return curve;
}

/// Trapezoidal area under the ROC polyline.
inline double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return area;
}

/// Crossing of the ROC polyline with tpr = 1 - fpr, interpolated within a segment.
inline double eer(const RocCurve& curve) {
    const auto& pts = curve.points;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double h0 = pts[i - 1].fpr + pts[i - 1].tpr - 1.0;
        const double h1 = pts[i].fpr + pts[i].tpr - 1.0;
        if (h0 <= 0.0 && h1 >= 0.0) {
            if (h1 == h0) return pts[i - 1].fpr;
            const double lambda = -h0 / (h1 - h0);
            return pts[i - 1].fpr + lambda * (pts[i].fpr - pts[i - 1].fpr);
        }
    }
    return 0.5;  // unreachable for a valid curve: h runs from -1 to 1
}

} // namespace novelty

#endif
