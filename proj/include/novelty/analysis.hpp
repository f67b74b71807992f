#ifndef NOVELTY_ANALYSIS_HPP
#define NOVELTY_ANALYSIS_HPP

#include "novelty/eval.hpp"

#include <cmath>
#include <random>

namespace novelty {

// ---------------------------------------------------------------------------
// Chernoff bounds on the vote count

struct ChernoffBounds {
    double upper_tail = 1.0;  // bound on P[X > (1 + delta) mu]
    double lower_tail = 1.0;  // bound on P[X < (1 - delta) mu]
};

inline ChernoffBounds chernoff_upper_bounds(double mu, double delta) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("Chernoff bound needs a positive mean");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("Chernoff deviation must lie in (0,1)");
    // exponents evaluated in log space to stay accurate for large mu
    const double log_upper = delta - (1.0 + delta) * std::log1p(delta);
    const double log_lower = -delta - (1.0 - delta) * std::log1p(-delta);
    return {std::exp(mu * log_upper), std::exp(mu * log_lower)};
}

// ---------------------------------------------------------------------------
// Independent-vote simulation

/// Per-classifier vote probabilities. p: novel vote on truly novel input;
/// q: novel vote on a known input the classifier treats as presumed-known.
/// When novel_assignment[l] is set, the known input's class is presumed-novel in
/// partition l and that classifier votes novel with probability p[l] instead.
struct VoteRates {
    std::vector<double> p;
    std::vector<double> q;
    std::vector<bool> novel_assignment;

    static VoteRates uniform(std::size_t classifiers, double p, double q) {
        return {std::vector<double>(classifiers, p), std::vector<double>(classifiers, q),
                std::vector<bool>(classifiers, false)};
    }

    std::size_t size() const noexcept { return p.size(); }

    void validate() const {
        if (p.empty()) throw ConfigError("vote rates are empty");
        if (q.size() != p.size() || novel_assignment.size() != p.size())
            throw ConfigError("vote rate vectors differ in length");
        for (double v : p)
            if (!(v > 0.0 && v <= 1.0)) throw ConfigError("novel-detection rates must lie in (0,1]");
        for (double v : q)
            if (!(v >= 0.0 && v < 1.0)) throw ConfigError("false-novel rates must lie in [0,1)");
    }

    double psi(std::size_t l) const { return novel_assignment[l] ? p[l] : q[l]; }
    double mu_novel() const { return std::accumulate(p.begin(), p.end(), 0.0); }
    double mu_known() const {
        double s = 0.0;
        for (std::size_t l = 0; l < size(); ++l) s += psi(l);
        return s;
    }
};

struct VoteSimulation {
    std::vector<long> novel_counts;  // histogram of X over [0, L] for novel inputs
    std::vector<long> known_counts;
    long trials = 0;
    double mu_novel = 0.0;
    double mu_known = 0.0;
    double midpoint = 0.0;
    double miss_rate = 0.0;         // P[X < midpoint | novel]
    double false_alarm_rate = 0.0;  // P[X > midpoint | known]

    /// Equal-prior error at the midpoint threshold.
    double total_error() const { return 0.5 * (miss_rate + false_alarm_rate); }
};

/// Fraction of histogram mass strictly above t.
inline double tail_above(const std::vector<long>& hist, double t) {
    long total = 0, above = 0;
    for (std::size_t x = 0; x < hist.size(); ++x) {
        total += hist[x];
        if (static_cast<double>(x) > t) above += hist[x];
    }
    return total == 0 ? 0.0 : static_cast<double>(above) / static_cast<double>(total);
}

/// Fraction of histogram mass strictly below t.
inline double tail_below(const std::vector<long>& hist, double t) {
    long total = 0, below = 0;
    for (std::size_t x = 0; x < hist.size(); ++x) {
        total += hist[x];
        if (static_cast<double>(x) < t) below += hist[x];
    }
    return total == 0 ? 0.0 : static_cast<double>(below) / static_cast<double>(total);
}

/// Votes are drawn independently per classifier and trial.
inline VoteSimulation simulate_vote_distribution(const VoteRates& rates, long trials, std::uint64_t seed) {
    rates.validate();
    if (trials < 1) throw ConfigError("trials must be positive");
    const std::size_t L = rates.size();
    VoteSimulation sim;
    sim.trials = trials;
    sim.novel_counts.assign(L + 1, 0);
    sim.known_counts.assign(L + 1, 0);
    sim.mu_novel = rates.mu_novel();
    sim.mu_known = rates.mu_known();
    sim.midpoint = 0.5 * (sim.mu_novel + sim.mu_known);

    std::mt19937_64 novel_rng(derive_seed(seed, {0}));
    std::mt19937_64 known_rng(derive_seed(seed, {1}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (long t = 0; t < trials; ++t) {
        std::size_t xn = 0, xk = 0;
        for (std::size_t l = 0; l < L; ++l) {
            xn += unit(novel_rng) < rates.p[l] ? 1 : 0;
            xk += unit(known_rng) < rates.psi(l) ? 1 : 0;
        }
        ++sim.novel_counts[xn];
        ++sim.known_counts[xk];
    }
    sim.miss_rate = tail_below(sim.novel_counts, sim.midpoint);
    sim.false_alarm_rate = tail_above(sim.known_counts, sim.midpoint);
    return sim;
}

// ---------------------------------------------------------------------------
// Empirical checks of the two requirements behind the method

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw Error("KS statistic needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                                 static_cast<double>(j) / static_cast<double>(b.size())));
    }
    return d;
}

enum class SetCategory { Known, PresumedNovel, TrulyNovel };

inline const char* category_name(SetCategory c) {
    switch (c) {
    case SetCategory::Known: return "known";
    case SetCategory::PresumedNovel: return "presumed_novel";
    case SetCategory::TrulyNovel: return "truly_novel";
    }
    return "?";
}

struct ScatterRow {
    double theta_set = 1.0;
    double theta_class = 1.0;
    SetCategory category = SetCategory::Known;
};

struct RequirementDiagnostics {
    double r1_auc = 0.5;  // -theta_S separating truly-novel from known sets
    double r2_ks = 0.0;   // theta_S on presumed-novel vs truly-novel sets
    std::vector<ScatterRow> scatter;
    std::vector<double> p_hat;  // per classifier: novel-vote rate on truly-novel sets
    std::vector<double> q_hat;  // per classifier: novel-vote rate on its presumed-known sets
    double mu_novel = 0.0;
    double mu_known = 0.0;

    double gap() const { return mu_novel - mu_known; }
};

/// Diagnostics for partition `partition_index` of a trained ensemble. Test-set
/// labels are resolved by name; labels unknown to the global model are truly
/// novel. Vote rates ignore eligibility, as the independence analysis does.
inline RequirementDiagnostics requirement_diagnostics(const EnsembleModel& model, std::size_t partition_index,
                                                      const LabeledDataset& test, std::size_t s, std::uint64_t seed) {
    if (partition_index >= model.size()) throw Error("partition index out of range");
    const auto& names = model.global_model->class_names();
    auto global_index = [&](ClassId test_class) -> std::optional<ClassId> {
        const auto& n = test.class_names()[test_class];
        for (std::size_t c = 0; c < names.size(); ++c)
            if (names[c] == n) return static_cast<ClassId>(c);
        return std::nullopt;
    };
    std::vector<ClassId> novel;
    for (std::size_t c = 0; c < test.num_classes(); ++c)
        if (!global_index(static_cast<ClassId>(c))) novel.push_back(static_cast<ClassId>(c));
    const auto sets = sample_test_sets(test, novel, s, seed);

    // classifier l's own features: assignment under its partition model
    auto features = [&](const BinaryNoveltyClassifier& h, const Matrix& set) {
        Vector mean = set_mean_confidence(ConfidenceSet(h.partition_model->predict_confidences(set)));
        const ClassId assigned = h.partition.presumed_known[static_cast<std::size_t>(argmax_lowest(mean))];
        return ScorePair{top_two_ratio(mean), h.theta_table.at(assigned)};
    };

    RequirementDiagnostics out;
    const auto& focus = model.classifiers[partition_index];
    std::vector<ScoredSet> r1;
    std::vector<double> theta_presumed, theta_truly;
    std::vector<std::optional<ClassId>> set_class;
    for (const auto& t : sets) {
        auto g = global_index(t.label);
        set_class.push_back(g);
        SetCategory cat = !g ? SetCategory::TrulyNovel
                             : (focus.partition.is_novel(*g) ? SetCategory::PresumedNovel : SetCategory::Known);
        const ScorePair d = features(focus, t.features);
        out.scatter.push_back({d.theta_set, d.theta_class, cat});
        if (cat == SetCategory::Known) r1.push_back({-d.theta_set, false});
        if (cat == SetCategory::TrulyNovel) {
            r1.push_back({-d.theta_set, true});
            theta_truly.push_back(d.theta_set);
        }
        if (cat == SetCategory::PresumedNovel) theta_presumed.push_back(d.theta_set);
    }
    if (theta_truly.empty()) throw Error("diagnostics: no truly-novel test sets");
    if (theta_presumed.empty()) throw Error("diagnostics: no presumed-novel test sets");
    if (r1.size() == theta_truly.size()) throw Error("diagnostics: no presumed-known test sets");
    out.r1_auc = auc(roc_curve(r1));
    out.r2_ks = ks_statistic(theta_presumed, theta_truly);

    const std::size_t L = model.size();
    out.p_hat.assign(L, 0.0);
    out.q_hat.assign(L, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
        const auto& h = model.classifiers[l];
        std::size_t novel_sets = 0, known_sets = 0;
        for (std::size_t i = 0; i < sets.size(); ++i) {
            const bool vote = h.separator.decision(features(h, sets[i].features)) > 0.0;
            if (!set_class[i]) {
                ++novel_sets;
                out.p_hat[l] += vote ? 1.0 : 0.0;
            } else if (h.partition.is_known(*set_class[i])) {
                ++known_sets;
                out.q_hat[l] += vote ? 1.0 : 0.0;
            }
        }
        if (novel_sets) out.p_hat[l] /= static_cast<double>(novel_sets);
        if (known_sets) out.q_hat[l] /= static_cast<double>(known_sets);
    }
    out.mu_novel = std::accumulate(out.p_hat.begin(), out.p_hat.end(), 0.0);
    double known_sum = 0.0;
    std::size_t known_count = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (!set_class[i]) continue;
        double psi = 0.0;
        for (std::size_t l = 0; l < L; ++l)
            psi += model.classifiers[l].partition.is_novel(*set_class[i]) ? out.p_hat[l] : out.q_hat[l];
        known_sum += psi;
        ++known_count;
    }
    out.mu_known = known_count ? known_sum / static_cast<double>(known_count) : 0.0;
    return out;
}

} // namespace novelty

#endif
