#ifndef NOVELTY_BASELINES_OCSVM_HPP
#define NOVELTY_BASELINES_OCSVM_HPP

#include "novelty/baselines/kernel.hpp"

#include <limits>

namespace novelty {

struct OcsvmModel {
    Matrix support_vectors;
    Vector alphas;
    double rho = 0.0;
    double gamma = 1.0;
    double nu = 0.5;
    // solver diagnostics
    double kkt_residual = 0.0;
    long iterations = 0;

    /// g(x) = sum_i alpha_i exp(-gamma ||x_i - x||^2) - rho
    double decision(const Eigen::Ref<const RowVector>& x) const {
        if (x.size() != support_vectors.cols()) throw Error("feature dimension mismatch");
        double sum = 0.0;
        for (Eigen::Index i = 0; i < support_vectors.rows(); ++i)
            sum += alphas(i) * std::exp(-gamma * (support_vectors.row(i) - x).squaredNorm());
        return sum - rho;
    }
};

struct OcsvmOptions {
    double tolerance = 1e-4;
    long max_iterations = 10'000'000;
    std::size_t max_points = 4000;  // the full Gram matrix is held in memory
};

/// nu-one-class SVM, scaled so that sum(alpha) = 1 and 0 <= alpha_i <= 1/(nu n).
/// SMO with second-order working-set selection; stops when the maximal KKT
/// violation drops to the tolerance.
inline OcsvmModel ocsvm_train(const Matrix& x, double nu, double gamma, const OcsvmOptions& opt = {}) {
    const auto n = x.rows();
    if (n < 2) throw Error("one-class SVM needs at least 2 points");
    if (!x.allFinite()) throw Error("non-finite feature value");
    if (!(nu > 0.0 && nu <= 1.0)) throw ConfigError("nu must lie in (0,1]");
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (nu * static_cast<double>(n) < 1.0) throw ConfigError("nu * n must be at least 1");
    if (static_cast<std::size_t>(n) > opt.max_points)
        throw ConfigError("one-class SVM limited to " + std::to_string(opt.max_points) + " training points");

    const double upper = 1.0 / (nu * static_cast<double>(n));
    const Matrix q = kernel_matrix(KernelSpec{KernelType::Rbf, gamma}, x, x);

    Vector alpha = Vector::Zero(n);
    {
        double remaining = 1.0;
        for (Eigen::Index i = 0; i < n && remaining > 0.0; ++i) {
            alpha(i) = std::min(upper, remaining);
            remaining -= alpha(i);
        }
    }
    Vector grad = q * alpha;

    const double tau = 1e-12;
    auto is_upper = [&](Eigen::Index t) { return alpha(t) >= upper; };
    auto is_lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };

    OcsvmModel model;
    model.gamma = gamma;
    model.nu = nu;
    long iter = 0;
    double residual = 0.0;
    for (;; ++iter) {
        // i: steepest feasible increase; j: second-order choice among decreasable
        Eigen::Index i = -1;
        double gmax = -std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            if (!is_upper(t) && -grad(t) > gmax) {
                gmax = -grad(t);
                i = t;
            }
        }
        double gmin = std::numeric_limits<double>::infinity();
        Eigen::Index j = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            if (is_lower(t)) continue;
            gmin = std::min(gmin, -grad(t));
            if (i == -1) continue;
            const double b = gmax + grad(t);
            if (b > 0.0) {
                double a = q(i, i) + q(t, t) - 2.0 * q(i, t);
                if (a <= 0.0) a = tau;
                const double obj = -(b * b) / a;
                if (obj < best) {
                    best = obj;
                    j = t;
                }
            }
        }
        residual = gmax - gmin;
        if (i == -1 || j == -1 || residual <= opt.tolerance) break;
        if (iter >= opt.max_iterations)
            throw Error("one-class SVM did not converge in " + std::to_string(opt.max_iterations) +
                        " iterations (KKT residual " + std::to_string(residual) + ")");

        double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
        if (quad <= 0.0) quad = tau;
        const double old_i = alpha(i), old_j = alpha(j);
        const double delta = (grad(j) - grad(i)) / quad;  // move mass from j to i
        const double sum = old_i + old_j;
        double ai = old_i + delta;
        double aj = old_j - delta;
        if (sum > upper) {
            if (ai > upper) { ai = upper; aj = sum - upper; }
        } else if (aj < 0.0) {
            aj = 0.0; ai = sum;
        }
        if (sum > upper) {
            if (aj > upper) { aj = upper; ai = sum - upper; }
        } else if (ai < 0.0) {
            ai = 0.0; aj = sum;
        }
        alpha(i) = ai;
        alpha(j) = aj;
        const double di = ai - old_i, dj = aj - old_j;
        grad += q.col(i) * di + q.col(j) * dj;
    }

    // rho: mean gradient over free alphas, else midpoint of the feasible interval
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    long free_count = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (is_upper(t)) lb = std::max(lb, grad(t));
        else if (is_lower(t)) ub = std::min(ub, grad(t));
        else {
            free_sum += grad(t);
            ++free_count;
        }
    }
    model.rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);
    model.kkt_residual = residual;
    model.iterations = iter;

    std::vector<Eigen::Index> sv;
    for (Eigen::Index t = 0; t < n; ++t)
        if (alpha(t) > 0.0) sv.push_back(t);
    model.support_vectors = x(sv, Eigen::all);
    model.alphas = alpha(sv);
    return model;
}

/// Negated mean decision value over the set.
inline double ocsvm_score(const OcsvmModel& model, const Matrix& set) {
    if (set.rows() < 1) throw Error("cannot score an empty set");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < set.rows(); ++i) sum += model.decision(set.row(i));
    return -sum / static_cast<double>(set.rows());
}

} // namespace novelty

#endif
