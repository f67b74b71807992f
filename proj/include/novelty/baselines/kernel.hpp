#ifndef NOVELTY_BASELINES_KERNEL_HPP
#define NOVELTY_BASELINES_KERNEL_HPP

#include "novelty/common.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace novelty {

enum class KernelType { Linear, Rbf, Polynomial };

struct KernelSpec {
    KernelType type = KernelType::Rbf;
    double gamma = 1.0;   // rbf width / polynomial scale
    double coef0 = 1.0;   // polynomial offset
    int degree = 2;

    double operator()(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b) const {
        switch (type) {
        case KernelType::Linear: return a.dot(b);
        case KernelType::Rbf: return std::exp(-gamma * (a - b).squaredNorm());
        case KernelType::Polynomial: return std::pow(gamma * a.dot(b) + coef0, degree);
        }
        return 0.0;
    }

    void validate() const {
        if (type != KernelType::Linear && !(gamma > 0.0)) throw ConfigError("kernel gamma must be positive");
        if (type == KernelType::Polynomial && degree < 1) throw ConfigError("polynomial degree must be positive");
    }

    std::string describe() const {
        switch (type) {
        case KernelType::Linear: return "linear";
        case KernelType::Rbf: return "rbf(gamma=" + std::to_string(gamma) + ")";
        case KernelType::Polynomial:
            return "poly(degree=" + std::to_string(degree) + ",gamma=" + std::to_string(gamma) +
                   ",coef0=" + std::to_string(coef0) + ")";
        }
        return "?";
    }
};

/// Gram matrix between the rows of a and the rows of b.
inline Matrix kernel_matrix(const KernelSpec& k, const Matrix& a, const Matrix& b) {
    if (k.type == KernelType::Linear) return a * b.transpose();
    if (k.type == KernelType::Polynomial)
        return ((k.gamma * (a * b.transpose())).array() + k.coef0).pow(k.degree).matrix();
    Vector an = a.rowwise().squaredNorm();
    Vector bn = b.rowwise().squaredNorm();
    Matrix d2 = (-2.0 * (a * b.transpose())).colwise() + an;
    d2.rowwise() += bn.transpose();
    return (-k.gamma * d2.cwiseMax(0.0)).array().exp().matrix();
}

/// 1 / (d * median pairwise squared distance) over the rows of x.
inline double median_heuristic_gamma(const Matrix& x) {
    const auto n = x.rows();
    if (n < 2) throw Error("gamma heuristic needs at least 2 points");
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) d2.push_back((x.row(i) - x.row(j)).squaredNorm());
    auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
    std::nth_element(d2.begin(), mid, d2.end());
    const double med = *mid;
    if (!(med > 0.0)) throw Error("gamma heuristic: median pairwise distance is zero");
    return 1.0 / (static_cast<double>(x.cols()) * med);
}

} // namespace novelty

#endif
