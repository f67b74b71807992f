#ifndef NOVELTY_BASELINES_KNN_HPP
#define NOVELTY_BASELINES_KNN_HPP

#include "novelty/common.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace novelty {

namespace detail {

inline double euclidean(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        const double diff = a(j) - b(j);
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

struct Neighbor {
    double distance;
    std::size_t index;
};

/// k nearest training rows by (distance, index); `skip` excludes one row.
inline std::vector<Neighbor> nearest(const Matrix& points, const Eigen::Ref<const RowVector>& x, std::size_t k,
                                     std::size_t skip = static_cast<std::size_t>(-1)) {
    std::vector<Neighbor> all;
    all.reserve(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        if (static_cast<std::size_t>(i) == skip) continue;
        all.push_back({euclidean(points.row(i), x), static_cast<std::size_t>(i)});
    }
    auto less = [](const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
    all.resize(k);
    return all;
}

inline double mean_distance(const std::vector<Neighbor>& nn) {
    double sum = 0.0;
    for (const auto& n : nn) sum += n.distance;
    return sum / static_cast<double>(nn.size());
}

} // namespace detail

/// Brute-force index with each training point's own mean k-NN distance
/// (self excluded) cached for the ratio's denominator.
class KnnIndex {
public:
    KnnIndex(Matrix points, std::size_t k) : points_(std::move(points)), k_(k) {
        if (points_.rows() < 1) throw Error("k-NN index is empty");
        if (k_ < 1 || k_ >= static_cast<std::size_t>(points_.rows()))
            throw ConfigError("k-NN requires 1 <= k < number of training points");
        own_.resize(static_cast<std::size_t>(points_.rows()));
        for (Eigen::Index i = 0; i < points_.rows(); ++i)
            own_[static_cast<std::size_t>(i)] =
                detail::mean_distance(detail::nearest(points_, points_.row(i), k_, static_cast<std::size_t>(i)));
    }

    std::size_t k() const noexcept { return k_; }
    const Matrix& points() const noexcept { return points_; }

    /// Mean distance from training row i to its own k nearest other rows.
    double own_mean_distance(std::size_t i) const { return own_.at(i); }

    /// Mean distance to the k nearest training points over the same quantity at
    /// the single nearest training point (the anchor). Denominator floored at 1e-12.
    double point_score(const Eigen::Ref<const RowVector>& x) const {
        if (x.size() != points_.cols()) throw Error("feature dimension mismatch");
        auto nn = detail::nearest(points_, x, k_);
        const double numerator = detail::mean_distance(nn);
        const double denominator = std::max(own_[nn.front().index], 1e-12);
        return numerator / denominator;
    }

private:
    Matrix points_;
    std::size_t k_;
    std::vector<double> own_;
};

/// Mean of per-point ratio scores over the set.
inline double knn_novelty_score(const KnnIndex& index, const Matrix& set) {
    if (set.rows() < 1) throw Error("cannot score an empty set");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < set.rows(); ++i) sum += index.point_score(set.row(i));
    return sum / static_cast<double>(set.rows());
}

} // namespace novelty

#endif
