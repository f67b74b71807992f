#include "novelty/baselines/confidence.hpp"
#include "novelty/baselines/knfst.hpp"
#include "novelty/baselines/knn.hpp"
#include "novelty/baselines/ocsvm.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

using namespace novelty;

namespace {

Matrix gaussian(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double shift = 0.0, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = shift + scale * normal(rng);
    return m;
}

LabeledDataset gaussian_classes(std::mt19937_64& rng, int classes, int per, int d, double spread, double std_dev) {
    Matrix x(classes * per, d);
    std::vector<ClassId> labels;
    std::vector<std::string> names;
    for (int c = 0; c < classes; ++c) {
        names.push_back("k" + std::to_string(c));
        const Matrix centre = gaussian(rng, 1, d, 0.0, spread);
        const Matrix pts = gaussian(rng, per, d, 0.0, std_dev);
        for (int i = 0; i < per; ++i) {
            x.row(c * per + i) = centre + pts.row(i);
            labels.push_back(c);
        }
    }
    return LabeledDataset(x, labels, names);
}

Matrix row(std::initializer_list<double> v) {
    Matrix m(1, static_cast<Eigen::Index>(v.size()));
    Eigen::Index j = 0;
    for (double x : v) m(0, j++) = x;
    return m;
}

} // namespace

// ---------------------------------------------------------------------------
// One-class SVM

TEST(Ocsvm, NuPropertyAndDualFeasibility) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> nus(0.05, 0.6);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 100, d = 2 + trial % 4;
        Matrix x = gaussian(rng, n, d);
        if (trial % 3 == 0) x.topRows(10).array() += 4.0;  // a distant clump
        const double nu = nus(rng);
        const auto model = ocsvm_train(x, nu, median_heuristic_gamma(x));

        EXPECT_NEAR(model.alphas.sum(), 1.0, 1e-6);
        EXPECT_GE(model.alphas.minCoeff(), 0.0);
        EXPECT_LE(model.alphas.maxCoeff(), 1.0 / (nu * static_cast<double>(n)) + 1e-9);
        EXPECT_LE(model.kkt_residual, 1e-4);

        // margin points have g = 0 only up to the solver's KKT tolerance
        const double band = OcsvmOptions{}.tolerance;
        int outside = 0;
        for (Eigen::Index i = 0; i < n; ++i) outside += model.decision(x.row(i)) < -band ? 1 : 0;
        const double slack = 1.0 / static_cast<double>(n);
        const double out_frac = outside / static_cast<double>(n);
        const double sv_frac = static_cast<double>(model.alphas.size()) / static_cast<double>(n);
        EXPECT_LE(out_frac, nu + slack) << "trial " << trial << " nu " << nu;
        EXPECT_GE(sv_frac, nu - slack) << "trial " << trial << " nu " << nu;
    }
}

TEST(Ocsvm, FarAwayScoreApproachesRho) {
    std::mt19937_64 rng(3);
    const Matrix x = gaussian(rng, 40, 3);
    const auto model = ocsvm_train(x, 0.2, 0.5);
    const Matrix far = row({1e3, -1e3, 1e3});
    EXPECT_NEAR(model.decision(far.row(0)), -model.rho, 1e-12);
    EXPECT_NEAR(ocsvm_score(model, far), model.rho, 1e-12);
}

TEST(Ocsvm, SetScoreIsMeanMargin) {
    std::mt19937_64 rng(4);
    const Matrix x = gaussian(rng, 30, 2);
    const auto model = ocsvm_train(x, 0.3, 1.0);
    const Matrix q = row({0.3, -0.2});
    EXPECT_DOUBLE_EQ(ocsvm_score(model, q), -model.decision(q.row(0)));
    Matrix twice(2, 2);
    twice << q, q;
    EXPECT_DOUBLE_EQ(ocsvm_score(model, twice), ocsvm_score(model, q));
    EXPECT_THROW(ocsvm_score(model, Matrix(1, 3)), Error);
}

TEST(Ocsvm, SingleLocationScoreGrowsWithDistance) {
    const Matrix x = Matrix::Constant(12, 2, 1.5);
    const auto model = ocsvm_train(x, 0.5, 0.7);
    double prev = -std::numeric_limits<double>::infinity();
    for (double r = 0.0; r < 5.0; r += 0.25) {
        const double s = ocsvm_score(model, row({1.5 + r * 0.6, 1.5 - r * 0.8}));
        EXPECT_GT(s, prev - 1e-15);
        prev = s;
    }
}

TEST(Ocsvm, RejectsBadInput) {
    EXPECT_THROW(ocsvm_train(Matrix::Zero(1, 2), 0.5, 1.0), Error);
    EXPECT_THROW(ocsvm_train(Matrix::Random(10, 2), 0.05, 1.0), ConfigError);  // nu * n < 1
    EXPECT_THROW(ocsvm_train(Matrix::Random(10, 2), 1.5, 1.0), ConfigError);
    EXPECT_THROW(ocsvm_train(Matrix::Random(10, 2), 0.5, 0.0), ConfigError);
    OcsvmOptions tight;
    tight.max_iterations = 0;
    std::mt19937_64 rng(5);
    EXPECT_THROW(ocsvm_train(gaussian(rng, 50, 2), 0.3, 1.0, tight), Error);
}

// ---------------------------------------------------------------------------
// k-NN ratio

TEST(Knn, Examples) {
    const Matrix train = (Matrix(2, 1) << 1.0, 3.0).finished();
    KnnIndex index(train, 1);
    EXPECT_DOUBLE_EQ(knn_novelty_score(index, row({0.0})), 0.5);
    EXPECT_DOUBLE_EQ(knn_novelty_score(index, row({3.0})), 0.0);
    EXPECT_DOUBLE_EQ(knn_novelty_score(index, row({2.0})), 0.5);
    EXPECT_DOUBLE_EQ(knn_novelty_score(index, (Matrix(2, 1) << 0.0, 3.0).finished()), 0.25);
}

TEST(Knn, MatchesExhaustiveOracle) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> grid(-3, 3);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index d = 1 + trial % 4;
        const std::size_t k = 1 + static_cast<std::size_t>(trial % 5);
        Matrix train(30, d);
        const bool on_grid = trial % 2 == 0;  // integer grid forces many distance ties
        for (Eigen::Index i = 0; i < train.size(); ++i) train(i) = on_grid ? grid(rng) : gaussian(rng, 1, 1)(0);
        KnnIndex index(train, k);
        for (int q = 0; q < 10; ++q) {
            Eigen::RowVectorXd x(d);
            if (q < 3) x = train.row(static_cast<Eigen::Index>(rng() % 30));
            else
                for (Eigen::Index j = 0; j < d; ++j) x(j) = on_grid ? grid(rng) : gaussian(rng, 1, 1)(0);
            EXPECT_EQ(index.point_score(x), oracle::knn_ratio(train, x, k)) << "trial " << trial << " query " << q;
            ++checked;
        }
        // a training point never counts itself among its own neighbours
        for (std::size_t i = 0; i < 30; ++i) {
            const auto nn = detail::nearest(train, train.row(static_cast<Eigen::Index>(i)), k, i);
            for (const auto& n : nn) EXPECT_NE(n.index, i);
        }
    }
    EXPECT_EQ(checked, 1000);
}

TEST(Knn, RejectsBadIndex) {
    EXPECT_THROW(KnnIndex(Matrix(0, 2), 1), Error);
    EXPECT_THROW(KnnIndex(Matrix::Zero(3, 2), 3), ConfigError);
    EXPECT_THROW(KnnIndex(Matrix::Zero(3, 2), 0), ConfigError);
    KnnIndex ok(Matrix::Random(4, 2), 1);
    EXPECT_THROW(knn_novelty_score(ok, Matrix::Zero(1, 3)), Error);
    EXPECT_THROW(knn_novelty_score(ok, Matrix(0, 2)), Error);
}

// ---------------------------------------------------------------------------
// Confidence-based scores

namespace {

SoftLabelModel fixed_output(std::vector<double> conf) {
    Vector b(static_cast<Eigen::Index>(conf.size()));
    std::vector<std::string> names;
    for (std::size_t i = 0; i < conf.size(); ++i) {
        b(static_cast<Eigen::Index>(i)) = std::log(conf[i]);
        names.push_back("c" + std::to_string(i));
    }
    return SoftLabelModel(Matrix::Zero(b.size(), 2), b, names);
}

} // namespace

TEST(MaxConfidence, Examples) {
    EXPECT_NEAR(max_confidence_score(fixed_output({0.7, 0.2, 0.1}), Matrix::Zero(3, 2)), -0.7, 1e-12);
    EXPECT_NEAR(max_confidence_score(fixed_output({0.25, 0.25, 0.25, 0.25}), Matrix::Zero(1, 2)), -0.25, 1e-12);
    EXPECT_THROW(max_confidence_score(fixed_output({0.5, 0.5}), Matrix::Zero(1, 3)), Error);
}

TEST(SimpleThreshold, Examples) {
    EXPECT_NEAR(simple_threshold_score(fixed_output({0.6, 0.3, 0.1}), Matrix::Zero(1, 2)), -2.0, 1e-12);
    EXPECT_NEAR(simple_threshold_score(fixed_output({0.2, 0.2, 0.2, 0.2, 0.2}), Matrix::Zero(1, 2)), -1.0, 1e-12);
}

TEST(ConfidenceScores, MemberOrderAndRatioReversal) {
    std::mt19937_64 rng(6);
    Matrix w = gaussian(rng, 4, 3);
    SoftLabelModel model(w, Vector::Zero(4), {"a", "b", "c", "d"});
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix a = gaussian(rng, 1 + trial % 4, 3), b = gaussian(rng, 1 + trial % 3, 3);
        Matrix rev = a.colwise().reverse();
        EXPECT_NEAR(max_confidence_score(model, rev), max_confidence_score(model, a), 1e-15);
        EXPECT_NEAR(simple_threshold_score(model, rev), simple_threshold_score(model, a), 1e-12);
        const double ta = raw_novelty_score(ConfidenceSet(model.predict_confidences(a)));
        const double tb = raw_novelty_score(ConfidenceSet(model.predict_confidences(b)));
        if (ta != tb) EXPECT_EQ(ta < tb, simple_threshold_score(model, a) > simple_threshold_score(model, b));
        EXPECT_LE(simple_threshold_score(model, a), -1.0);
    }
}

// ---------------------------------------------------------------------------
// Kernel null space

namespace {

/// Mean squared distance of training coordinates to their class target, and of
/// class targets to the overall centre.
std::pair<double, double> within_between(const KnfstModel& m, const LabeledDataset& ds) {
    const Matrix& z = m.training_coordinates;
    double within = 0.0, between = 0.0;
    const Eigen::RowVectorXd centre = z.colwise().mean();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        within += (z.row(r) - m.class_targets.row(ds.label(i))).squaredNorm();
        between += (m.class_targets.row(ds.label(i)) - centre).squaredNorm();
    }
    return {within / static_cast<double>(ds.size()), between / static_cast<double>(ds.size())};
}

/// Orthonormal basis of the column space of a, from a full SVD.
Matrix column_basis(const Matrix& a, double tol = 1e-10) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU);
    Eigen::Index r = 0;
    while (r < svd.singularValues().size() && svd.singularValues()(r) > tol * svd.singularValues()(0)) ++r;
    return svd.matrixU().leftCols(r);
}

} // namespace

TEST(Knfst, DuplicatedPointsCollapseOntoTargets) {
    Matrix x(9, 2);
    std::vector<ClassId> labels;
    const double centres[3][2] = {{0, 0}, {1, 2}, {-2, 1}};
    for (int i = 0; i < 9; ++i) {
        x(i, 0) = centres[i / 3][0];
        x(i, 1) = centres[i / 3][1];
        labels.push_back(i / 3);
    }
    LabeledDataset ds(x, labels, {"a", "b", "c"});
    const auto m = knfst_train(ds, KernelSpec{KernelType::Rbf, 0.5});
    EXPECT_EQ(m.null_dim(), 2u);
    const Matrix z = m.project(x);
    for (int i = 0; i < 9; ++i) EXPECT_LT((z.row(i) - m.class_targets.row(i / 3)).norm(), 1e-8);
}

TEST(Knfst, TrainingPointScoresZeroAndWithinVarianceVanishes) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        const auto ds = gaussian_classes(rng, 3 + trial % 2, 8, 12, 3.0, 1.0);
        const auto m = knfst_train(ds, KernelSpec{KernelType::Rbf, median_heuristic_gamma(ds.features())});
        EXPECT_EQ(m.null_dim(), ds.num_classes() - 1);
        const auto [within, between] = within_between(m, ds);
        EXPECT_LE(within, 1e-10 * between) << "trial " << trial;
        const Matrix z = m.project(ds.features());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            EXPECT_LT((z.row(r) - m.class_targets.row(ds.label(i))).norm(), 1e-6);
            EXPECT_LT(knfst_score(m, ds.features().row(r)), 1e-6);
        }
    }
}

TEST(Knfst, LinearKernelInPlaneNeedsRidge) {
    std::mt19937_64 rng(31);
    const auto ds = gaussian_classes(rng, 3, 15, 2, 4.0, 1.0);
    // n points in R^2 span two kernel directions, fewer than the within-class rank
    EXPECT_THROW(knfst_train(ds, KernelSpec{KernelType::Linear}), Error);
    KnfstOptions opt;
    opt.ridge = 1e-3;
    const auto m = knfst_train(ds, KernelSpec{KernelType::Linear}, opt);
    double min_sep = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) min_sep = std::min(min_sep, (m.class_targets.row(a) - m.class_targets.row(b)).norm());
    EXPECT_GT(min_sep, 1e-6);
    const auto [within, between] = within_between(m, ds);
    EXPECT_LE(within, 1e-10 * between);
    opt.ridge = -1.0;
    EXPECT_THROW(knfst_train(ds, KernelSpec{KernelType::Linear}, opt), ConfigError);
}

TEST(Knfst, MidpointOfTwoTargetsScoresHalfTheSeparation) {
    // Linear kernel with more dimensions than points: the null space can be
    // built directly in input space and used as an oracle.
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 10; ++trial) {
        const auto ds = gaussian_classes(rng, 2, 6, 20, 2.0, 1.0);
        const Matrix& x = ds.features();
        const auto m = knfst_train(ds, KernelSpec{KernelType::Linear});
        ASSERT_EQ(m.null_dim(), 1u);

        const auto rows0 = ds.rows_of_class(0), rows1 = ds.rows_of_class(1);
        const Eigen::RowVectorXd m0 = ds.gather(rows0).colwise().mean(), m1 = ds.gather(rows1).colwise().mean();
        Matrix diffs(x.cols(), x.rows());
        for (std::size_t i = 0; i < ds.size(); ++i)
            diffs.col(static_cast<Eigen::Index>(i)) = (x.row(static_cast<Eigen::Index>(i)) - (ds.label(i) == 0 ? m0 : m1)).transpose();
        const Matrix span = column_basis(x.transpose());
        const Matrix within = column_basis(diffs);
        // null directions: the part of span(X) orthogonal to every within-class difference
        Eigen::JacobiSVD<Matrix> svd(within.transpose() * span, Eigen::ComputeFullV);
        Eigen::Index rank = 0;
        while (rank < svd.singularValues().size() && svd.singularValues()(rank) > 1e-10) ++rank;
        const Matrix null = span * svd.matrixV().rightCols(span.cols() - rank);
        const double separation = (null.transpose() * (m0 - m1).transpose()).norm();

        EXPECT_NEAR((m.class_targets.row(0) - m.class_targets.row(1)).norm(), separation, 1e-8 * separation);
        const Matrix mid = 0.5 * (x.row(static_cast<Eigen::Index>(rows0[0])) + x.row(static_cast<Eigen::Index>(rows1[0])));
        EXPECT_NEAR(knfst_score(m, mid), 0.5 * separation, 1e-8 * separation);
    }
}

TEST(Knfst, SetScoreIsMeanDistance) {
    std::mt19937_64 rng(9);
    const auto ds = gaussian_classes(rng, 3, 6, 10, 3.0, 1.0);
    const auto m = knfst_train(ds, KernelSpec{KernelType::Rbf, median_heuristic_gamma(ds.features())});
    const Matrix q = gaussian(rng, 3, 10);
    double mean = 0.0;
    for (Eigen::Index i = 0; i < 3; ++i) mean += knfst_score(m, q.row(i)) / 3.0;
    EXPECT_NEAR(knfst_score(m, q), mean, 1e-12);
    EXPECT_THROW(knfst_score(m, Matrix::Zero(1, 4)), Error);
}

TEST(Knfst, RejectsBadInput) {
    LabeledDataset one(Matrix::Random(4, 2), {0, 0, 0, 0}, {"a"});
    EXPECT_THROW(knfst_train(one, KernelSpec{}), Error);
    std::mt19937_64 rng(2);
    const auto ds = gaussian_classes(rng, 2, 5, 2, 1.0, 1.0);
    KnfstOptions small;
    small.max_points = 5;
    EXPECT_THROW(knfst_train(ds, KernelSpec{}, small), ConfigError);
    EXPECT_THROW(knfst_train(ds, KernelSpec{KernelType::Polynomial, 1.0, 1.0, 0}), ConfigError);
}

TEST(Kernels, MedianHeuristicAndGram) {
    Matrix x(3, 1);
    x << 0.0, 1.0, 3.0;  // squared distances 1, 4, 9 -> median 4
    EXPECT_DOUBLE_EQ(median_heuristic_gamma(x), 0.25);
    const Matrix g = kernel_matrix(KernelSpec{KernelType::Rbf, 0.25}, x, x);
    EXPECT_NEAR(g(0, 2), std::exp(-0.25 * 9), 1e-15);
    EXPECT_EQ(g.diagonal(), Vector::Ones(3));
    const KernelSpec poly{KernelType::Polynomial, 2.0, 1.0, 3};
    EXPECT_NEAR(kernel_matrix(poly, x, x)(1, 2), std::pow(2.0 * 3.0 + 1.0, 3), 1e-9);
    EXPECT_THROW(median_heuristic_gamma(Matrix::Zero(4, 2)), Error);
}
