#ifndef NOVELTY_BASELINES_CONFIDENCE_HPP
#define NOVELTY_BASELINES_CONFIDENCE_HPP

#include "novelty/rawscore.hpp"

namespace novelty {

/// Negated largest entry of the set's mean confidence vector.
inline double max_confidence_score(const SoftLabelModel& model, const Matrix& set) {
    if (set.rows() < 1) throw Error("cannot score an empty set");
    return -set_mean_confidence(ConfidenceSet(model.predict_confidences(set))).maxCoeff();
}

/// Negated ratio score of the set under the global model; -1 is the most novel value.
inline double simple_threshold_score(const SoftLabelModel& model, const Matrix& set) {
    if (set.rows() < 1) throw Error("cannot score an empty set");
    return -raw_novelty_score(ConfidenceSet(model.predict_confidences(set)));
}

} // namespace novelty

#endif
