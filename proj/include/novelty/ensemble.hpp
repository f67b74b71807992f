#ifndef NOVELTY_ENSEMBLE_HPP
#define NOVELTY_ENSEMBLE_HPP

#include "novelty/rawscore.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <span>

namespace novelty {

// ---------------------------------------------------------------------------
// Partitions of the training classes into presumed-known / presumed-novel

struct Partition {
    int index = 0;
    std::vector<ClassId> presumed_known;  // ascending
    std::vector<ClassId> presumed_novel;  // ascending

    bool is_known(ClassId c) const { return std::binary_search(presumed_known.begin(), presumed_known.end(), c); }
    bool is_novel(ClassId c) const { return std::binary_search(presumed_novel.begin(), presumed_novel.end(), c); }
};

/// Number of presumed-novel classes per partition.
inline std::size_t novel_count(std::size_t num_classes, double novel_fraction) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(novel_fraction * static_cast<double>(num_classes))));
}

/// Seeded permutations of the class list are concatenated and cut into L groups
/// of m; group l is partition l's presumed-novel set. A group that straddles two
/// permutations has repeats pushed later in the new permutation, so every class
/// is presumed-novel either floor(L*m/|C|) or ceil(L*m/|C|) times.
///
/// Partitions are prefix-stable: the first L' partitions for L > L' equal the
/// partitions produced for L'.
inline std::vector<Partition> make_partitions(std::size_t num_classes, int num_partitions, double novel_fraction,
                                              std::uint64_t seed) {
    if (num_partitions < 1) throw ConfigError("number of partitions must be positive");
    if (!(novel_fraction > 0.0 && novel_fraction < 1.0)) throw ConfigError("novel_fraction must lie in (0,1)");
    const std::size_t m = novel_count(num_classes, novel_fraction);
    if (m >= num_classes)
        throw ConfigError("novel_fraction leaves no presumed-known classes (" + std::to_string(m) + " of " +
                          std::to_string(num_classes) + " would be presumed novel)");

    std::vector<Partition> out;
    std::vector<ClassId> perm;
    std::size_t cursor = 0;
    std::uint64_t round = 0;
    std::vector<ClassId> group;
    while (out.size() < static_cast<std::size_t>(num_partitions)) {
        if (cursor == perm.size()) {
            perm.resize(num_classes);
            std::iota(perm.begin(), perm.end(), 0);
            std::mt19937_64 rng(derive_seed(seed, {round++}));
            std::shuffle(perm.begin(), perm.end(), rng);
            // stable_partition keeps the seeded order among non-repeats
            std::stable_partition(perm.begin(), perm.end(), [&](ClassId c) {
                return std::find(group.begin(), group.end(), c) == group.end();
            });
            cursor = 0;
        }
        group.push_back(perm[cursor++]);
        if (group.size() == m) {
            Partition p;
            p.index = static_cast<int>(out.size());
            p.presumed_novel = group;
            std::sort(p.presumed_novel.begin(), p.presumed_novel.end());
            for (std::size_t c = 0; c < num_classes; ++c) {
                if (!p.is_novel(static_cast<ClassId>(c))) p.presumed_known.push_back(static_cast<ClassId>(c));
            }
            out.push_back(std::move(p));
            group.clear();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Step 1: per-partition soft-label representation

/// Confidence vectors of labelled examples; labels index the full class set.
struct ConfidenceRows {
    Matrix confidences;
    std::vector<ClassId> labels;
};

struct PartitionRepresentation {
    std::shared_ptr<const SoftLabelModel> model;  // over presumed_known, in that order
    ConfidenceRows known;                          // Z'
    ConfidenceRows novel;                          // Z''
};

namespace detail {

inline ConfidenceRows confidences_for(const SoftLabelModel& model, const LabeledDataset& ds,
                                      const std::vector<ClassId>& classes) {
    std::vector<std::size_t> rows;
    ConfidenceRows out;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (std::binary_search(classes.begin(), classes.end(), ds.label(i))) {
            rows.push_back(i);
            out.labels.push_back(ds.label(i));
        }
    }
    out.confidences = rows.empty() ? Matrix(0, static_cast<Eigen::Index>(model.num_classes()))
                                   : model.predict_confidences(ds.gather(rows));
    return out;
}

inline void require_same_classes(const LabeledDataset& a, const LabeledDataset& b) {
    if (a.class_names() != b.class_names())
        throw Error("multiclass and binary training sets must share a class table");
    if (a.dim() != b.dim()) throw Error("multiclass and binary training sets differ in dimension");
}

} // namespace detail

inline PartitionRepresentation represent_partition(const Partition& partition, const LabeledDataset& multiclass_train,
                                                   const LabeledDataset& binary_train, const TrainConfig& cfg) {
    detail::require_same_classes(multiclass_train, binary_train);
    if (partition.presumed_novel.empty()) throw Error("partition has no presumed-novel classes");
    if (partition.presumed_known.size() < 2) throw Error("partition needs at least 2 presumed-known classes");
    for (ClassId c : partition.presumed_known) {
        if (multiclass_train.rows_of_class(c).empty())
            throw Error("presumed-known class '" + multiclass_train.class_names()[c] + "' has no multiclass-train examples");
    }
    auto known_train = restrict_to_classes(multiclass_train, partition.presumed_known);
    PartitionRepresentation rep;
    rep.model = std::make_shared<const SoftLabelModel>(train_softmax(known_train, cfg));
    rep.known = detail::confidences_for(*rep.model, binary_train, partition.presumed_known);
    rep.novel = detail::confidences_for(*rep.model, binary_train, partition.presumed_novel);
    return rep;
}

// ---------------------------------------------------------------------------
// Step 2: score pairs and the binary novelty classifier

/// Per-class calibration scores for the presumed-known classes of one partition.
struct ThetaTable {
    std::vector<ClassId> classes;  // ascending
    std::vector<double> theta;

    double at(ClassId c) const {
        auto it = std::lower_bound(classes.begin(), classes.end(), c);
        if (it == classes.end() || *it != c) throw Error("class not present in calibration table");
        return theta[static_cast<std::size_t>(it - classes.begin())];
    }
};

/// Calibration from the held-out (binary-train) rows of each presumed-known class.
inline ThetaTable compute_theta_table(const Partition& partition, const ConfidenceRows& known) {
    ThetaTable table;
    for (ClassId c : partition.presumed_known) {
        std::vector<Eigen::Index> rows;
        for (std::size_t i = 0; i < known.labels.size(); ++i)
            if (known.labels[i] == c) rows.push_back(static_cast<Eigen::Index>(i));
        if (rows.empty()) throw Error("presumed-known class " + std::to_string(c) + " has no calibration examples");
        Matrix members = known.confidences(rows, Eigen::all);
        table.classes.push_back(c);
        table.theta.push_back(raw_novelty_score(ConfidenceSet(std::move(members))));
    }
    return table;
}

struct ScorePair {
    double theta_set = 1.0;
    double theta_class = 1.0;
};

struct TrainingPairs {
    std::vector<ScorePair> novel;  // Psi_P
    std::vector<ScorePair> known;  // Psi_N
};

/// Disjoint equal-label subsets of size s: per class, a seeded shuffle followed
/// by consecutive chunks, remainder dropped. Returns row indices per subset.
inline std::vector<std::vector<std::size_t>> equal_label_subsets(const std::vector<ClassId>& labels, std::size_t s,
                                                                 std::uint64_t seed) {
    if (s < 1) throw ConfigError("set size must be positive");
    std::vector<ClassId> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::vector<std::vector<std::size_t>> out;
    for (ClassId c : classes) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) rows.push_back(i);
        std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(c)}));
        std::shuffle(rows.begin(), rows.end(), rng);
        for (std::size_t start = 0; start + s <= rows.size(); start += s)
            out.emplace_back(rows.begin() + static_cast<std::ptrdiff_t>(start),
                             rows.begin() + static_cast<std::ptrdiff_t>(start + s));
    }
    return out;
}

inline std::vector<ScorePair> score_pairs_for(const ConfidenceRows& rows, const Partition& partition,
                                              const ThetaTable& table, std::size_t s, std::uint64_t seed) {
    std::vector<ScorePair> out;
    for (const auto& subset : equal_label_subsets(rows.labels, s, seed)) {
        std::vector<Eigen::Index> idx(subset.begin(), subset.end());
        ConfidenceSet cs(rows.confidences(idx, Eigen::all));
        Vector mean = set_mean_confidence(cs);
        const ClassId assigned = partition.presumed_known[static_cast<std::size_t>(argmax_lowest(mean))];
        out.push_back({top_two_ratio(mean), table.at(assigned)});
    }
    return out;
}

inline TrainingPairs build_training_pairs(const PartitionRepresentation& rep, const Partition& partition,
                                          const ThetaTable& table, std::size_t s, std::uint64_t seed) {
    TrainingPairs pairs;
    pairs.novel = score_pairs_for(rep.novel, partition, table, s, derive_seed(seed, {0}));
    pairs.known = score_pairs_for(rep.known, partition, table, s, derive_seed(seed, {1}));
    if (pairs.novel.empty() && pairs.known.empty()) throw Error("no class yields a subset of size " + std::to_string(s));
    return pairs;
}

/// Per-feature z-score parameters.
struct Standardizer {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Vector2d scale = Eigen::Vector2d::Ones();

    Eigen::Vector2d apply(const ScorePair& p) const {
        return {(p.theta_set - mean(0)) / scale(0), (p.theta_class - mean(1)) / scale(1)};
    }
};

struct LinearSeparator {
    Eigen::Vector2d w = Eigen::Vector2d::Zero();
    double b = 0.0;
    Standardizer standardizer;

    /// Positive means novel.
    double decision(const ScorePair& p) const { return w.dot(standardizer.apply(p)) + b; }
};

struct SvmConfig {
    double c_reg = 10.0;
    int iterations = 3000;
    double step = 0.5;

    void validate() const {
        if (!(c_reg > 0.0)) throw ConfigError("svm c_reg must be positive");
        if (iterations < 1) throw ConfigError("svm iterations must be positive");
        if (!(step > 0.0)) throw ConfigError("svm step must be positive");
    }
};

namespace detail {

// Group sums are accumulated separately and combined at the end, so swapping
// the two groups produces an exactly negated solution.
struct GroupSums {
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    Eigen::Vector2d sq = Eigen::Vector2d::Zero();
};

inline GroupSums sums_of(const std::vector<ScorePair>& pts) {
    GroupSums g;
    for (const auto& p : pts) g.sum += Eigen::Vector2d(p.theta_set, p.theta_class);
    return g;
}

inline Eigen::Vector2d centered_sq(const std::vector<ScorePair>& pts, const Eigen::Vector2d& mean) {
    Eigen::Vector2d sq = Eigen::Vector2d::Zero();
    for (const auto& p : pts) {
        Eigen::Vector2d d = Eigen::Vector2d(p.theta_set, p.theta_class) - mean;
        sq += d.cwiseProduct(d);
    }
    return sq;
}

} // namespace detail

/// Class-balanced hinge loss plus ||w||^2 / (2 c_reg), minimized by full-batch
/// subgradient descent with a 1/sqrt(t) step; the best iterate is returned.
/// Novel pairs are the positive class.
inline LinearSeparator train_linear_svm(const std::vector<ScorePair>& novel, const std::vector<ScorePair>& known,
                                        const SvmConfig& cfg) {
    cfg.validate();
    if (novel.empty() || known.empty()) throw Error("linear SVM needs both novel and known training pairs");
    const double n = static_cast<double>(novel.size() + known.size());

    LinearSeparator sep;
    sep.standardizer.mean = (detail::sums_of(novel).sum + detail::sums_of(known).sum) / n;
    Eigen::Vector2d var = (detail::centered_sq(novel, sep.standardizer.mean) +
                           detail::centered_sq(known, sep.standardizer.mean)) / n;
    const double scale_floor = 1e-12;
    if (var(0) <= scale_floor * scale_floor && var(1) <= scale_floor * scale_floor)
        throw Error("degenerate SVM features: both coordinates have zero variance");
    for (int j = 0; j < 2; ++j) sep.standardizer.scale(j) = var(j) > scale_floor * scale_floor ? std::sqrt(var(j)) : 1.0;

    auto standardize = [&](const std::vector<ScorePair>& pts) {
        std::vector<Eigen::Vector2d> z;
        z.reserve(pts.size());
        for (const auto& p : pts) z.push_back(sep.standardizer.apply(p));
        return z;
    };
    const auto zp = standardize(novel);
    const auto zn = standardize(known);
    const double ap = 0.5 / static_cast<double>(novel.size());
    const double an = 0.5 / static_cast<double>(known.size());

    Eigen::Vector2d w = Eigen::Vector2d::Zero();
    double b = 0.0;
    auto objective = [&](const Eigen::Vector2d& w_, double b_, Eigen::Vector2d* gw, double* gb) {
        double hp = 0.0, hn = 0.0;
        Eigen::Vector2d sp = Eigen::Vector2d::Zero(), sn = Eigen::Vector2d::Zero();
        double bp = 0.0, bn = 0.0;
        for (const auto& z : zp) {
            const double margin = w_.dot(z) + b_;
            if (margin < 1.0) {
                hp += 1.0 - margin;
                sp += z;
                bp += 1.0;
            }
        }
        for (const auto& z : zn) {
            const double margin = -(w_.dot(z) + b_);
            if (margin < 1.0) {
                hn += 1.0 - margin;
                sn += z;
                bn += 1.0;
            }
        }
        if (gw) *gw = w_ / cfg.c_reg - (ap * sp - an * sn);
        if (gb) *gb = -(ap * bp - an * bn);
        return 0.5 * w_.squaredNorm() / cfg.c_reg + (ap * hp + an * hn);
    };

    Eigen::Vector2d best_w = w;
    double best_b = b;
    Eigen::Vector2d gw;
    double gb = 0.0;
    double best = objective(w, b, &gw, &gb);
    for (int t = 1; t <= cfg.iterations; ++t) {
        const double eta = cfg.step / std::sqrt(static_cast<double>(t));
        w -= eta * gw;
        b -= eta * gb;
        const double value = objective(w, b, &gw, &gb);
        if (value < best) {
            best = value;
            best_w = w;
            best_b = b;
        }
    }
    sep.w = best_w;
    sep.b = best_b;
    return sep;
}

// ---------------------------------------------------------------------------
// The ensemble

struct BinaryNoveltyClassifier {
    Partition partition;
    std::shared_ptr<const SoftLabelModel> partition_model;
    ThetaTable theta_table;
    LinearSeparator separator;
};

struct EnsembleModel {
    std::shared_ptr<const SoftLabelModel> global_model;
    std::vector<BinaryNoveltyClassifier> classifiers;
    std::size_t set_size = 1;

    std::size_t size() const noexcept { return classifiers.size(); }
};

struct EnsembleConfig {
    int num_partitions = 30;
    double novel_fraction = 0.10;
    std::size_t set_size = 1;
    TrainConfig softmax;
    SvmConfig svm;

    void validate() const {
        if (num_partitions < 1) throw ConfigError("ensemble needs at least one partition");
        if (!(novel_fraction > 0.0 && novel_fraction < 1.0)) throw ConfigError("novel_fraction must lie in (0,1)");
        if (set_size < 1) throw ConfigError("set size must be positive");
        softmax.validate();
        svm.validate();
    }
};

/// Trains one ensemble per requested set size. Partition models and the global
/// model do not depend on s and are shared between the returned ensembles.
/// A pre-trained global model may be supplied; it must cover the same classes.
inline std::vector<EnsembleModel> train_ensembles(const LabeledDataset& multiclass_train,
                                                  const LabeledDataset& binary_train, const EnsembleConfig& cfg,
                                                  std::span<const std::size_t> set_sizes, std::uint64_t seed,
                                                  std::shared_ptr<const SoftLabelModel> global_model = nullptr) {
    cfg.validate();
    detail::require_same_classes(multiclass_train, binary_train);
    if (set_sizes.empty()) throw ConfigError("no set sizes requested");
    const auto partitions =
        make_partitions(multiclass_train.num_classes(), cfg.num_partitions, cfg.novel_fraction, derive_seed(seed, {1}));

    if (!global_model) {
        global_model = std::make_shared<const SoftLabelModel>(train_softmax(multiclass_train, cfg.softmax));
    } else if (global_model->class_names() != multiclass_train.class_names()) {
        throw Error("supplied global model does not match the training classes");
    }

    std::vector<EnsembleModel> out(set_sizes.size());
    for (std::size_t i = 0; i < set_sizes.size(); ++i) {
        if (set_sizes[i] < 1) throw ConfigError("set size must be positive");
        out[i].global_model = global_model;
        out[i].set_size = set_sizes[i];
    }
    for (const auto& partition : partitions) {
        try {
            auto rep = represent_partition(partition, multiclass_train, binary_train, cfg.softmax);
            auto table = compute_theta_table(partition, rep.known);
            for (std::size_t i = 0; i < set_sizes.size(); ++i) {
                auto pairs = build_training_pairs(rep, partition, table, set_sizes[i],
                                                  derive_seed(seed, {2, static_cast<std::uint64_t>(partition.index),
                                                                     set_sizes[i]}));
                auto sep = train_linear_svm(pairs.novel, pairs.known, cfg.svm);
                out[i].classifiers.push_back({partition, rep.model, table, sep});
            }
        } catch (const Error& e) {
            throw Error("partition " + std::to_string(partition.index) + ": " + e.what());
        }
    }
    return out;
}

inline EnsembleModel train_ensemble(const LabeledDataset& multiclass_train, const LabeledDataset& binary_train,
                                    const EnsembleConfig& cfg, std::uint64_t seed) {
    const std::size_t s = cfg.set_size;
    return std::move(train_ensembles(multiclass_train, binary_train, cfg, std::span(&s, 1), seed).front());
}

/// The first L classifiers; identical to training with L partitions and the same seed.
inline EnsembleModel truncate_ensemble(const EnsembleModel& model, std::size_t num_partitions) {
    if (num_partitions < 1 || num_partitions > model.size()) throw ConfigError("cannot truncate ensemble to that size");
    EnsembleModel out;
    out.global_model = model.global_model;
    out.set_size = model.set_size;
    out.classifiers.assign(model.classifiers.begin(),
                           model.classifiers.begin() + static_cast<std::ptrdiff_t>(num_partitions));
    return out;
}

// ---------------------------------------------------------------------------
// Scoring

enum class Vote { Ineligible, Known, Novel };

struct VoteTrace {
    ClassId assignment = 0;  // global-model assignment of the set
    std::vector<Vote> votes;
    std::vector<ScorePair> features;  // per classifier; unset for ineligible ones

    int novel_votes() const { return static_cast<int>(std::count(votes.begin(), votes.end(), Vote::Novel)); }
    int eligible() const {
        return static_cast<int>(votes.size()) - static_cast<int>(std::count(votes.begin(), votes.end(), Vote::Ineligible));
    }
};

inline VoteTrace ensemble_vote_trace(const EnsembleModel& model, const Matrix& set) {
    if (!model.global_model) throw Error("ensemble has no global model");
    if (set.rows() < 1) throw Error("cannot score an empty set");
    if (static_cast<std::size_t>(set.cols()) != model.global_model->dim()) throw Error("feature dimension mismatch");

    VoteTrace trace;
    trace.assignment = predicted_assignment(ConfidenceSet(model.global_model->predict_confidences(set)));
    trace.votes.reserve(model.size());
    trace.features.resize(model.size());
    for (std::size_t l = 0; l < model.size(); ++l) {
        const auto& h = model.classifiers[l];
        if (!h.partition.is_known(trace.assignment)) {
            trace.votes.push_back(Vote::Ineligible);
            continue;
        }
        ScorePair d{raw_novelty_score(ConfidenceSet(h.partition_model->predict_confidences(set))),
                    h.theta_table.at(trace.assignment)};
        trace.features[l] = d;
        trace.votes.push_back(h.separator.decision(d) > 0.0 ? Vote::Novel : Vote::Known);
    }
    return trace;
}

/// Count of eligible classifiers voting novel, in [0, L].
inline int ensemble_novelty_score(const EnsembleModel& model, const Matrix& set) {
    return ensemble_vote_trace(model, set).novel_votes();
}

/// Novel votes over eligible votes; 0 when no classifier is eligible.
inline double ensemble_novelty_score_normalized(const EnsembleModel& model, const Matrix& set) {
    auto trace = ensemble_vote_trace(model, set);
    const int eligible = trace.eligible();
    return eligible == 0 ? 0.0 : static_cast<double>(trace.novel_votes()) / eligible;
}

// ---------------------------------------------------------------------------
// Directory serialization
//
//   ensemble.txt          set_size,<s> / partitions,<L>
//   global.model          soft-label model over all training classes
//   partition_<l>.txt     index, known/novel membership, theta table, w, b, standardizer
//   partition_<l>.model   soft-label model over the presumed-known classes

namespace detail {

inline void write_partition(const BinaryNoveltyClassifier& h, std::ostream& out) {
    out << "index," << h.partition.index << '\n';
    for (std::size_t j = 0; j < h.partition.presumed_known.size(); ++j)
        out << "known," << j << ',' << h.partition.presumed_known[j] << '\n';
    for (std::size_t j = 0; j < h.partition.presumed_novel.size(); ++j)
        out << "novel," << j << ',' << h.partition.presumed_novel[j] << '\n';
    for (std::size_t j = 0; j < h.theta_table.classes.size(); ++j)
        out << "theta," << h.theta_table.classes[j] << ',' << format_double(h.theta_table.theta[j]) << '\n';
    for (int j = 0; j < 2; ++j) out << "w," << j << ',' << format_double(h.separator.w(j)) << '\n';
    out << "b," << format_double(h.separator.b) << '\n';
    for (int j = 0; j < 2; ++j) out << "mean," << j << ',' << format_double(h.separator.standardizer.mean(j)) << '\n';
    for (int j = 0; j < 2; ++j) out << "scale," << j << ',' << format_double(h.separator.standardizer.scale(j)) << '\n';
}

inline BinaryNoveltyClassifier read_partition(std::istream& in) {
    BinaryNoveltyClassifier h;
    std::string line;
    std::size_t lineno = 0;
    auto num = [&](std::string_view s) {
        auto v = parse_double(s);
        if (!v) throw ParseError("bad number in partition file", lineno);
        return *v;
    };
    auto coord = [&](std::string_view s) {
        const double v = num(s);
        if (v != 0.0 && v != 1.0) throw ParseError("coordinate index must be 0 or 1", lineno);
        return static_cast<int>(v);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto f = split_commas(trim(line));
        if (f[0] == "index" && f.size() == 2) h.partition.index = static_cast<int>(num(f[1]));
        else if (f[0] == "known" && f.size() == 3) h.partition.presumed_known.push_back(static_cast<ClassId>(num(f[2])));
        else if (f[0] == "novel" && f.size() == 3) h.partition.presumed_novel.push_back(static_cast<ClassId>(num(f[2])));
        else if (f[0] == "theta" && f.size() == 3) {
            h.theta_table.classes.push_back(static_cast<ClassId>(num(f[1])));
            h.theta_table.theta.push_back(num(f[2]));
        } else if (f[0] == "w" && f.size() == 3) h.separator.w(coord(f[1])) = num(f[2]);
        else if (f[0] == "b" && f.size() == 2) h.separator.b = num(f[1]);
        else if (f[0] == "mean" && f.size() == 3) h.separator.standardizer.mean(coord(f[1])) = num(f[2]);
        else if (f[0] == "scale" && f.size() == 3) h.separator.standardizer.scale(coord(f[1])) = num(f[2]);
        else throw ParseError("unrecognized partition line", lineno);
    }
    if (h.theta_table.classes != h.partition.presumed_known)
        throw ParseError("theta table does not cover exactly the presumed-known classes");
    if (!(h.separator.standardizer.scale.minCoeff() > 0.0)) throw ParseError("standardizer scale must be positive");
    return h;
}

} // namespace detail

inline void save_ensemble(const EnsembleModel& model, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [](const fs::path& p) {
        std::ofstream out(p);
        if (!out) throw Error("cannot write '" + p.string() + "'");
        return out;
    };
    {
        auto out = open(dir / "ensemble.txt");
        out << "set_size," << model.set_size << '\n' << "partitions," << model.size() << '\n';
    }
    {
        auto out = open(dir / "global.model");
        write_model(*model.global_model, out);
    }
    for (std::size_t l = 0; l < model.size(); ++l) {
        auto txt = open(dir / ("partition_" + std::to_string(l) + ".txt"));
        detail::write_partition(model.classifiers[l], txt);
        auto mdl = open(dir / ("partition_" + std::to_string(l) + ".model"));
        write_model(*model.classifiers[l].partition_model, mdl);
    }
}

inline EnsembleModel load_ensemble(const std::filesystem::path& dir) {
    auto open = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) throw ParseError("cannot open '" + p.string() + "'");
        return in;
    };
    EnsembleModel model;
    std::size_t count = 0;
    {
        auto in = open(dir / "ensemble.txt");
        std::string line;
        while (std::getline(in, line)) {
            auto f = detail::split_commas(detail::trim(line));
            if (f.size() != 2) continue;
            auto v = detail::parse_double(f[1]);
            if (!v) throw ParseError("bad ensemble manifest");
            if (f[0] == "set_size") model.set_size = static_cast<std::size_t>(*v);
            if (f[0] == "partitions") count = static_cast<std::size_t>(*v);
        }
    }
    {
        auto in = open(dir / "global.model");
        model.global_model = std::make_shared<const SoftLabelModel>(read_model(in));
    }
    for (std::size_t l = 0; l < count; ++l) {
        auto txt = open(dir / ("partition_" + std::to_string(l) + ".txt"));
        auto h = detail::read_partition(txt);
        auto mdl = open(dir / ("partition_" + std::to_string(l) + ".model"));
        h.partition_model = std::make_shared<const SoftLabelModel>(read_model(mdl));
        model.classifiers.push_back(std::move(h));
    }
    return model;
}

} // namespace novelty

#endif
