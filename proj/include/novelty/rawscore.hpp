#ifndef NOVELTY_RAWSCORE_HPP
#define NOVELTY_RAWSCORE_HPP

#include "novelty/softlabel.hpp"

#include <cmath>

namespace novelty {

/// Confidence vectors (rows) of the members of one set S.
class ConfidenceSet {
public:
    explicit ConfidenceSet(Matrix vectors) : vectors_(std::move(vectors)) {
        if (vectors_.rows() < 1) throw Error("confidence set must have at least one member");
        if (vectors_.cols() < 2) throw Error("confidence vectors need at least 2 classes");
        for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
            if (!(vectors_.row(i).minCoeff() > 0.0)) throw Error("confidences must be strictly positive");
            if (std::abs(vectors_.row(i).sum() - 1.0) > 1e-9) throw Error("confidences must sum to 1");
        }
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(vectors_.rows()); }
    std::size_t num_classes() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }
    const Matrix& vectors() const noexcept { return vectors_; }

private:
    Matrix vectors_;
};

inline Vector set_mean_confidence(const ConfidenceSet& cs) {
    return cs.vectors().colwise().mean().transpose();
}

/// Argmax with ties resolved toward the lowest index.
inline ClassId argmax_lowest(const Vector& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v(i) > v(best)) best = i;
    }
    return static_cast<ClassId>(best);
}

inline ClassId predicted_assignment(const ConfidenceSet& cs) { return argmax_lowest(set_mean_confidence(cs)); }

/// Largest over second-largest entry of a positive confidence vector.
inline double top_two_ratio(const Vector& mean) {
    if (mean.size() < 2) throw Error("ratio score needs at least 2 classes");
    double first = -1.0, second = -1.0;
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        const double v = mean(i);
        if (v > first) {
            second = first;
            first = v;
        } else if (v > second) {
            second = v;
        }
    }
    return first / second;
}

inline double raw_novelty_score(const ConfidenceSet& cs) { return top_two_ratio(set_mean_confidence(cs)); }

/// Ratio score of the class's calibration examples taken together as one set.
inline double class_novelty_score(const SoftLabelModel& model, const Matrix& calibration_examples) {
    if (calibration_examples.rows() < 1) throw Error("class calibration set is empty");
    return raw_novelty_score(ConfidenceSet(model.predict_confidences(calibration_examples)));
}

} // namespace novelty

#endif
