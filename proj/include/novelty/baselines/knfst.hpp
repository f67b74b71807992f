#ifndef NOVELTY_BASELINES_KNFST_HPP
#define NOVELTY_BASELINES_KNFST_HPP

#include "novelty/baselines/kernel.hpp"
#include "novelty/dataset.hpp"

#include <Eigen/Eigenvalues>

#include <limits>

namespace novelty {

/// Kernel null-space model: a kernel vector k(x) = [K(x_i, x)] maps to
/// null-space coordinates projection^T k(x); every known class collapses to
/// one target point there.
struct KnfstModel {
    Matrix training_points;
    Matrix projection;     // n x q
    Matrix class_targets;  // classes x q
    Matrix training_coordinates;  // n x q, from the ridged Gram matrix; collapses per class
    KernelSpec kernel;

    std::size_t null_dim() const noexcept { return static_cast<std::size_t>(projection.cols()); }

    /// Null-space coordinates of each row of x (one row per input).
    Matrix project(const Matrix& x) const {
        if (x.cols() != training_points.cols()) throw Error("feature dimension mismatch");
        return kernel_matrix(kernel, x, training_points) * projection;
    }
};

struct KnfstOptions {
    std::size_t max_points = 3000;  // dense n x n eigendecomposition
    double range_tolerance = 1e-9;  // kernel eigenvalues kept above this fraction of the largest
    double null_tolerance = 1e-9;   // relative to the largest total-scatter eigenvalue
    // Added to the training Gram diagonal, relative to its mean. Smooth kernels on
    // low-dimensional data are numerically rank-deficient, which leaves no
    // within-class null space; a ridge restores one of dimension classes - 1.
    // With a ridge, new points no longer land exactly on their class targets.
    double ridge = 0.0;
};

namespace detail {

inline Matrix scatter(const Matrix& cols_points, const Matrix& centers_per_point) {
    Matrix centered = cols_points - centers_per_point;
    return centered * centered.transpose();
}

} // namespace detail

/// Builds an orthonormal basis of the kernel's range, takes the null space of
/// the within-class scatter there, and keeps the directions of that null space
/// that carry total scatter.
inline KnfstModel knfst_train(const LabeledDataset& ds, const KernelSpec& kernel, const KnfstOptions& opt = {}) {
    kernel.validate();
    if (ds.num_classes() < 2) throw Error("KNFST needs at least 2 classes");
    if (ds.size() > opt.max_points)
        throw ConfigError("KNFST limited to " + std::to_string(opt.max_points) + " training points");
    const Matrix& x = ds.features();
    if (!(opt.ridge >= 0.0)) throw ConfigError("KNFST ridge must be non-negative");
    Matrix k = kernel_matrix(kernel, x, x);
    k.diagonal().array() += opt.ridge * k.diagonal().mean();

    Eigen::SelfAdjointEigenSolver<Matrix> keig(k);
    if (keig.info() != Eigen::Success) throw Error("KNFST kernel eigendecomposition failed");
    const double kmax = keig.eigenvalues().maxCoeff();
    if (!(kmax > 0.0)) throw Error("KNFST kernel matrix has no positive eigenvalues");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < keig.eigenvalues().size(); ++i)
        if (keig.eigenvalues()(i) > opt.range_tolerance * kmax) keep.push_back(i);
    // coefficients of an orthonormal range basis in terms of the training points
    Matrix basis = keig.eigenvectors()(Eigen::all, keep);
    for (Eigen::Index c = 0; c < basis.cols(); ++c) basis.col(c) /= std::sqrt(keig.eigenvalues()(keep[c]));
    const Matrix coords = basis.transpose() * k;  // r x n

    const auto classes = static_cast<Eigen::Index>(ds.num_classes());
    Matrix class_means = Matrix::Zero(coords.rows(), classes);
    std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        class_means.col(ds.label(i)) += coords.col(static_cast<Eigen::Index>(i));
        counts[static_cast<std::size_t>(ds.label(i))] += 1.0;
    }
    for (Eigen::Index c = 0; c < classes; ++c) class_means.col(c) /= counts[static_cast<std::size_t>(c)];
    Matrix own_mean(coords.rows(), coords.cols());
    for (std::size_t i = 0; i < ds.size(); ++i) own_mean.col(static_cast<Eigen::Index>(i)) = class_means.col(ds.label(i));
    Vector overall = coords.rowwise().mean();
    const Matrix within = detail::scatter(coords, own_mean);
    const Matrix total = detail::scatter(coords, overall.replicate(1, coords.cols()));

    Eigen::SelfAdjointEigenSolver<Matrix> teig(total);
    const double tmax = teig.eigenvalues().maxCoeff();
    if (!(tmax > 0.0)) throw Error("KNFST: training data has no scatter");
    const double cutoff = opt.null_tolerance * tmax;

    Eigen::SelfAdjointEigenSolver<Matrix> weig(within);
    std::vector<Eigen::Index> null_idx;
    for (Eigen::Index i = 0; i < weig.eigenvalues().size(); ++i)
        if (weig.eigenvalues()(i) < cutoff) null_idx.push_back(i);
    if (null_idx.empty())
        throw Error("KNFST null space is empty: within-class scatter has full rank in the kernel range");
    const Matrix null_basis = weig.eigenvectors()(Eigen::all, null_idx);

    Eigen::SelfAdjointEigenSolver<Matrix> neig(null_basis.transpose() * total * null_basis);
    std::vector<Eigen::Index> informative;
    for (Eigen::Index i = neig.eigenvalues().size() - 1; i >= 0; --i)
        if (neig.eigenvalues()(i) > cutoff) informative.push_back(i);
    if (informative.empty()) throw Error("KNFST null space carries no between-class scatter");
    const Matrix directions = null_basis * neig.eigenvectors()(Eigen::all, informative);

    KnfstModel model;
    model.training_points = x;
    model.kernel = kernel;
    model.projection = basis * directions;
    model.training_coordinates = k * model.projection;
    const Matrix& projected = model.training_coordinates;
    model.class_targets = Matrix::Zero(classes, projected.cols());
    for (std::size_t i = 0; i < ds.size(); ++i) model.class_targets.row(ds.label(i)) += projected.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index c = 0; c < classes; ++c) model.class_targets.row(c) /= counts[static_cast<std::size_t>(c)];
    return model;
}

/// Mean over the set of each point's distance to the nearest class target.
inline double knfst_score(const KnfstModel& model, const Matrix& set) {
    if (set.rows() < 1) throw Error("cannot score an empty set");
    const Matrix z = model.project(set);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < model.class_targets.rows(); ++c)
            best = std::min(best, (z.row(i) - model.class_targets.row(c)).norm());
        sum += best;
    }
    return sum / static_cast<double>(z.rows());
}

} // namespace novelty

#endif
