#ifndef NOVELTY_PCA_HPP
#define NOVELTY_PCA_HPP

#include "novelty/dataset.hpp"

#include <Eigen/Eigenvalues>

namespace novelty {

/// Mean and top-m principal axes (columns of `components`, orthonormal).
struct PcaModel {
    Vector mean;
    Matrix components;   // d x m
    Vector eigenvalues;  // top-m covariance eigenvalues, descending

    std::size_t target_dim() const noexcept { return static_cast<std::size_t>(components.cols()); }
    std::size_t input_dim() const noexcept { return static_cast<std::size_t>(components.rows()); }

    Matrix project(const Matrix& x) const {
        if (static_cast<std::size_t>(x.cols()) != input_dim()) throw Error("PCA input dimension mismatch");
        return (x.rowwise() - mean.transpose()) * components;
    }
};

/// Sample covariance (N-1 denominator) eigendecomposition. Each axis is signed
/// so that its largest-magnitude entry is positive.
inline PcaModel fit_pca(const Matrix& x, std::size_t m) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    if (m < 1 || m > std::min(n, d))
        throw ConfigError("PCA target dimension " + std::to_string(m) + " must lie in [1, min(N, d)] = [1, " +
                          std::to_string(std::min(n, d)) + "]");
    PcaModel model;
    model.mean = x.colwise().mean().transpose();
    Matrix centered = x.rowwise() - model.mean.transpose();
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    Matrix cov = (centered.transpose() * centered) / denom;

    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");

    model.components.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    model.eigenvalues.resize(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
        const auto src = static_cast<Eigen::Index>(d - 1 - j);  // ascending order from Eigen
        Vector axis = solver.eigenvectors().col(src);
        Eigen::Index pivot = 0;
        axis.cwiseAbs().maxCoeff(&pivot);
        if (axis(pivot) < 0) axis = -axis;
        model.components.col(static_cast<Eigen::Index>(j)) = axis;
        model.eigenvalues(static_cast<Eigen::Index>(j)) = solver.eigenvalues()(src);
    }
    return model;
}

inline PcaModel fit_pca(const LabeledDataset& ds, std::size_t m) { return fit_pca(ds.features(), m); }

inline LabeledDataset apply_pca(const PcaModel& model, const LabeledDataset& ds) {
    return LabeledDataset(model.project(ds.features()), ds.labels(), ds.class_names());
}

} // namespace novelty

#endif
