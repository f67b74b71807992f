#ifndef NOVELTY_CROSSVAL_HPP
#define NOVELTY_CROSSVAL_HPP

#include "novelty/analysis.hpp"
#include "novelty/baselines/confidence.hpp"
#include "novelty/baselines/knfst.hpp"
#include "novelty/baselines/knn.hpp"
#include "novelty/baselines/ocsvm.hpp"
#include "novelty/log.hpp"
#include "novelty/pca.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <thread>

namespace novelty {

/// Feature space handed to the geometric baselines (OCSVM, k-NN, KNFST).
struct Representation {
    enum class Kind { Confidence, Original, Pca };
    Kind kind = Kind::Original;
    std::size_t pca_dim = 0;

    static Representation parse(std::string_view text) {
        if (text == "confidence") return {Kind::Confidence, 0};
        if (text == "original") return {Kind::Original, 0};
        if (text.starts_with("pca:")) {
            const auto m = detail::parse_double(text.substr(4));
            if (!m || *m < 1 || *m != std::floor(*m)) throw ConfigError("bad PCA dimension in '" + std::string(text) + "'");
            return {Kind::Pca, static_cast<std::size_t>(*m)};
        }
        throw ConfigError("unknown representation '" + std::string(text) + "' (expected confidence, original or pca:<m>)");
    }

    std::string name() const {
        switch (kind) {
        case Kind::Confidence: return "confidence";
        case Kind::Original: return "original";
        case Kind::Pca: return "pca:" + std::to_string(pca_dim);
        }
        return "?";
    }
};

struct CvConfig {
    int folds = 10;
    int repeats = 3;
    std::vector<std::size_t> set_sizes{1};
    SplitSpec split;
    EnsembleConfig ensemble;
    std::vector<int> extra_ensemble_sizes;  // scored by truncating the trained ensemble

    bool run_ensemble = true;
    bool run_ensemble_normalized = false;
    bool run_threshold = true;
    bool run_maxconf = true;
    bool run_ocsvm = false;
    bool run_knn = false;
    bool run_knfst = false;

    std::vector<Representation> representations{Representation{Representation::Kind::Confidence, 0},
                                                Representation{Representation::Kind::Original, 0}};
    std::vector<std::size_t> knn_k{1, 2, 5};
    double ocsvm_nu = 0.1;
    double ocsvm_gamma = 0.0;  // <= 0: median heuristic on the training features
    OcsvmOptions ocsvm_options;
    KernelSpec knfst_kernel{KernelType::Rbf, 0.0};  // rbf gamma <= 0: median heuristic
    KnfstOptions knfst_options{3000, 1e-9, 1e-9, 1e-6};

    bool diagnostics = true;  // requirement diagnostics per fold (needs the ensemble)
    std::size_t diagnostics_partition = 0;

    std::uint64_t seed = 0;
    std::size_t parallelism = 0;  // 0: hardware concurrency

    void validate(std::size_t num_classes) const {
        if (folds < 2) throw ConfigError("cv.folds must be at least 2");
        if (repeats < 1) throw ConfigError("cv.repeats must be positive");
        if (static_cast<std::size_t>(folds) > num_classes)
            throw ConfigError("cv.folds (" + std::to_string(folds) + ") exceeds the number of classes (" +
                              std::to_string(num_classes) + ")");
        const std::size_t max_held = (num_classes + static_cast<std::size_t>(folds) - 1) / static_cast<std::size_t>(folds);
        if (num_classes - max_held < 2) throw ConfigError("folds leave fewer than 2 known classes");
        if (set_sizes.empty()) throw ConfigError("no set sizes given");
        for (auto s : set_sizes)
            if (s < 1) throw ConfigError("set sizes must be positive");
        split.validate();
        ensemble.validate();
        const bool any = run_ensemble || run_ensemble_normalized || run_threshold || run_maxconf || run_ocsvm ||
                         run_knn || run_knfst;
        if (!any) throw ConfigError("no methods enabled");
        for (int l : extra_ensemble_sizes)
            if (l < 1 || l > ensemble.num_partitions)
                throw ConfigError("extra ensemble size " + std::to_string(l) + " must lie in [1, L]");
        if (run_ensemble || run_ensemble_normalized || diagnostics) {
            const std::size_t known_min = num_classes - max_held;
            if (novel_count(known_min, ensemble.novel_fraction) >= known_min)
                throw ConfigError("ensemble.novel_fraction leaves no presumed-known classes");
        }
        if (diagnostics && diagnostics_partition >= static_cast<std::size_t>(ensemble.num_partitions))
            throw ConfigError("diagnostics partition index exceeds L");
        if ((run_ocsvm || run_knn || run_knfst) && representations.empty())
            throw ConfigError("baselines enabled but no representations given");
        for (const auto& r : representations)
            if (r.kind == Representation::Kind::Pca && r.pca_dim < 1) throw ConfigError("PCA dimension must be positive");
        if (run_knn) {
            if (knn_k.empty()) throw ConfigError("knn.k is empty");
            for (auto k : knn_k)
                if (k < 1) throw ConfigError("knn.k entries must be positive");
        }
        if (run_ocsvm && !(ocsvm_nu > 0.0 && ocsvm_nu <= 1.0)) throw ConfigError("ocsvm.nu must lie in (0,1]");
        if (run_knfst && knfst_kernel.type != KernelType::Rbf) knfst_kernel.validate();
    }
};

struct EvalRow {
    std::string method;
    std::string representation;
    std::size_t set_size = 1;
    int fold = 0;  // global index: repeat * folds + fold-within-repeat
    int repeat = 0;
    double auc = 0.5;
    double eer = 0.5;
};

struct AggregateRow {
    std::string method;
    std::string representation;
    std::size_t set_size = 1;
    std::size_t count = 0;
    double auc_mean = 0.0, auc_std = 0.0;
    double eer_mean = 0.0, eer_std = 0.0;
};

struct FoldDiagnostics {
    int repeat = 0;
    int fold = 0;
    double r1_auc = 0.5;
    double r2_ks = 0.0;
    double mu_novel = 0.0;
    double mu_known = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::vector<RocCurve> curves;  // parallel to rows
    std::vector<FoldDiagnostics> diagnostics;
    std::vector<ScatterRow> scatter;  // first fold of the first repeat
    double seconds = 0.0;

    /// Mean and sample standard deviation per (method, representation, s),
    /// in order of first appearance.
    std::vector<AggregateRow> aggregate() const {
        std::vector<AggregateRow> out;
        std::vector<std::vector<const EvalRow*>> members;
        for (const auto& r : rows) {
            std::size_t i = 0;
            while (i < out.size() && !(out[i].method == r.method && out[i].representation == r.representation &&
                                       out[i].set_size == r.set_size))
                ++i;
            if (i == out.size()) {
                out.push_back({r.method, r.representation, r.set_size});
                members.emplace_back();
            }
            members[i].push_back(&r);
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
            const auto& m = members[i];
            const double n = static_cast<double>(m.size());
            double sa = 0, se = 0;
            for (auto* r : m) {
                sa += r->auc;
                se += r->eer;
            }
            out[i].count = m.size();
            out[i].auc_mean = sa / n;
            out[i].eer_mean = se / n;
            double va = 0, ve = 0;
            for (auto* r : m) {
                va += (r->auc - out[i].auc_mean) * (r->auc - out[i].auc_mean);
                ve += (r->eer - out[i].eer_mean) * (r->eer - out[i].eer_mean);
            }
            out[i].auc_std = m.size() > 1 ? std::sqrt(va / (n - 1)) : 0.0;
            out[i].eer_std = m.size() > 1 ? std::sqrt(ve / (n - 1)) : 0.0;
        }
        return out;
    }

    /// Mean AUC of one (method, representation, s) cell; NaN when absent.
    double mean_auc(std::string_view method, std::size_t s, std::string_view representation = "original") const {
        for (const auto& a : aggregate())
            if (a.method == method && a.set_size == s && a.representation == representation) return a.auc_mean;
        return std::numeric_limits<double>::quiet_NaN();
    }
};

/// Classes held out in each fold of one repeat: a seeded permutation cut into
/// `folds` chunks whose sizes differ by at most one.
inline std::vector<std::vector<ClassId>> held_out_folds(std::size_t num_classes, int folds, std::uint64_t seed) {
    std::vector<ClassId> perm(num_classes);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto f = static_cast<std::size_t>(folds);
    std::vector<std::vector<ClassId>> out(f);
    for (std::size_t i = 0; i < f; ++i) {
        out[i].assign(perm.begin() + static_cast<std::ptrdiff_t>(i * num_classes / f),
                      perm.begin() + static_cast<std::ptrdiff_t>((i + 1) * num_classes / f));
        std::sort(out[i].begin(), out[i].end());
    }
    return out;
}

namespace detail {

struct FoldResult {
    std::vector<EvalRow> rows;
    std::vector<RocCurve> curves;
    std::optional<FoldDiagnostics> diagnostics;
    std::vector<ScatterRow> scatter;
};

/// Maps raw features into one baseline representation.
struct FeatureMap {
    Representation rep;
    std::shared_ptr<const SoftLabelModel> global;
    std::optional<PcaModel> pca;

    Matrix operator()(const Matrix& x) const {
        switch (rep.kind) {
        case Representation::Kind::Confidence: return global->predict_confidences(x);
        case Representation::Kind::Original: return x;
        case Representation::Kind::Pca: return pca->project(x);
        }
        return x;
    }
};

struct FoldData {
    LabeledDataset multiclass_train;  // known classes only
    LabeledDataset binary_train;      // known classes only
    LabeledDataset test;              // every class, truly-novel ones included
    std::uint64_t seed;
};

inline FoldData prepare_fold(const LabeledDataset& ds, const CvConfig& cfg, int repeat, int fold,
                             const std::vector<ClassId>& held_out) {
    const std::uint64_t fseed =
        derive_seed(cfg.seed, {static_cast<std::uint64_t>(repeat), static_cast<std::uint64_t>(fold)});
    std::vector<ClassId> known;
    for (std::size_t c = 0; c < ds.num_classes(); ++c)
        if (!std::binary_search(held_out.begin(), held_out.end(), static_cast<ClassId>(c)))
            known.push_back(static_cast<ClassId>(c));
    SplitSpec split = cfg.split;
    split.seed = derive_seed(fseed, {0});
    DatasetSplit parts = split_per_class(ds, split);
    return FoldData{restrict_to_classes(parts.multiclass_train, known),
                    restrict_to_classes(parts.binary_train, known), std::move(parts.test), fseed};
}

inline FoldResult run_fold(const LabeledDataset& ds, const CvConfig& cfg, int repeat, int fold,
                           const std::vector<ClassId>& held_out) {
    const FoldData data = prepare_fold(ds, cfg, repeat, fold, held_out);
    const std::uint64_t fseed = data.seed;
    const int global_fold = repeat * cfg.folds + fold;
    const LabeledDataset& mc = data.multiclass_train;
    const LabeledDataset& bt = data.binary_train;
    const LabeledDataset& test = data.test;

    auto global = std::make_shared<const SoftLabelModel>(train_softmax(mc, cfg.ensemble.softmax));
    const bool need_ensemble = cfg.run_ensemble || cfg.run_ensemble_normalized || cfg.diagnostics;
    std::vector<EnsembleModel> ensembles;
    if (need_ensemble) ensembles = train_ensembles(mc, bt, cfg.ensemble, cfg.set_sizes, derive_seed(fseed, {1}), global);

    // baselines see every training example of the known classes
    std::optional<LabeledDataset> base_train;
    if (cfg.run_ocsvm || cfg.run_knn || cfg.run_knfst) base_train = concatenate(mc, bt);

    using Scorer = std::function<double(const Matrix&)>;
    struct Method {
        std::string name;
        std::string representation;
        std::vector<Scorer> per_s;  // one scorer per set size, or a single shared one
    };
    std::vector<Method> methods;

    if (cfg.run_ensemble) {
        Method m{"ensemble", "original", {}};
        for (const auto& e : ensembles)
            m.per_s.push_back([&e](const Matrix& set) { return static_cast<double>(ensemble_novelty_score(e, set)); });
        methods.push_back(std::move(m));
        for (int l : cfg.extra_ensemble_sizes) {
            Method t{"ensemble_L" + std::to_string(l), "original", {}};
            for (const auto& e : ensembles) {
                auto cut = std::make_shared<const EnsembleModel>(truncate_ensemble(e, static_cast<std::size_t>(l)));
                t.per_s.push_back([cut](const Matrix& set) { return static_cast<double>(ensemble_novelty_score(*cut, set)); });
            }
            methods.push_back(std::move(t));
        }
    }
    if (cfg.run_ensemble_normalized) {
        Method m{"ensemble_normalized", "original", {}};
        for (const auto& e : ensembles)
            m.per_s.push_back([&e](const Matrix& set) { return ensemble_novelty_score_normalized(e, set); });
        methods.push_back(std::move(m));
    }
    if (cfg.run_threshold)
        methods.push_back({"threshold", "original", {[global](const Matrix& set) { return simple_threshold_score(*global, set); }}});
    if (cfg.run_maxconf)
        methods.push_back({"maxconf", "original", {[global](const Matrix& set) { return max_confidence_score(*global, set); }}});

    for (const auto& rep : (base_train ? cfg.representations : std::vector<Representation>{})) {
        auto map = std::make_shared<FeatureMap>(FeatureMap{rep, global, std::nullopt});
        if (rep.kind == Representation::Kind::Pca) map->pca = fit_pca(base_train->features(), rep.pca_dim);
        const Matrix train_x = (*map)(base_train->features());
        const std::string rname = rep.name();
        try {
            if (cfg.run_ocsvm) {
                const double gamma = cfg.ocsvm_gamma > 0.0 ? cfg.ocsvm_gamma : median_heuristic_gamma(train_x);
                auto model = std::make_shared<const OcsvmModel>(ocsvm_train(train_x, cfg.ocsvm_nu, gamma, cfg.ocsvm_options));
                methods.push_back({"ocsvm", rname, {[model, map](const Matrix& set) { return ocsvm_score(*model, (*map)(set)); }}});
            }
            if (cfg.run_knn) {
                for (auto k : cfg.knn_k) {
                    auto index = std::make_shared<const KnnIndex>(train_x, k);
                    methods.push_back({"knn_k" + std::to_string(k), rname,
                                       {[index, map](const Matrix& set) { return knn_novelty_score(*index, (*map)(set)); }}});
                }
            }
            if (cfg.run_knfst) {
                KernelSpec kernel = cfg.knfst_kernel;
                if (kernel.type == KernelType::Rbf && !(kernel.gamma > 0.0)) kernel.gamma = median_heuristic_gamma(train_x);
                LabeledDataset mapped(train_x, base_train->labels(), base_train->class_names());
                auto model = std::make_shared<const KnfstModel>(knfst_train(mapped, kernel, cfg.knfst_options));
                methods.push_back({"knfst", rname, {[model, map](const Matrix& set) { return knfst_score(*model, (*map)(set)); }}});
            }
        } catch (const Error& e) {
            throw Error("representation " + rname + ": " + e.what());
        }
    }

    FoldResult result;
    std::vector<std::vector<EvalRow>> rows_by_method(methods.size());
    std::vector<std::vector<RocCurve>> curves_by_method(methods.size());
    for (std::size_t si = 0; si < cfg.set_sizes.size(); ++si) {
        const std::size_t s = cfg.set_sizes[si];
        const auto sets = sample_test_sets(test, held_out, s, derive_seed(fseed, {2, s}));
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            const auto& m = methods[mi];
            try {
                const auto& score = m.per_s.size() == 1 ? m.per_s.front() : m.per_s.at(si);
                std::vector<ScoredSet> scored;
                scored.reserve(sets.size());
                for (const auto& t : sets) scored.push_back({score(t.features), t.is_novel});
                RocCurve curve = roc_curve(scored);
                rows_by_method[mi].push_back({m.name, m.representation, s, global_fold, repeat, auc(curve), eer(curve)});
                curves_by_method[mi].push_back(std::move(curve));
            } catch (const Error& e) {
                throw Error("method " + m.name + " (" + m.representation + ", s=" + std::to_string(s) + "): " + e.what());
            }
        }
    }
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        for (std::size_t i = 0; i < rows_by_method[mi].size(); ++i) {
            result.rows.push_back(std::move(rows_by_method[mi][i]));
            result.curves.push_back(std::move(curves_by_method[mi][i]));
        }
    }

    if (cfg.diagnostics) {
        try {
            auto d = requirement_diagnostics(ensembles.front(), cfg.diagnostics_partition, test, cfg.set_sizes.front(),
                                             derive_seed(fseed, {3}));
            result.diagnostics = FoldDiagnostics{repeat, global_fold, d.r1_auc, d.r2_ks, d.mu_novel, d.mu_known};
            if (repeat == 0 && fold == 0) result.scatter = std::move(d.scatter);
        } catch (const Error& e) {
            throw Error(std::string("diagnostics: ") + e.what());
        }
    }
    return result;
}

} // namespace detail

/// Runs `count` independent jobs on up to `workers` threads. Each job writes
/// only its own slot; the first failure (lowest index) is rethrown.
inline void run_parallel(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        loop();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline std::uint64_t fold_permutation_seed(std::uint64_t seed, int repeat) {
    return derive_seed(seed, {0xF01D, static_cast<std::uint64_t>(repeat)});
}

/// Checks the configuration against the data before any training starts.
inline void validate_for(const CvConfig& cfg, const LabeledDataset& ds) {
    cfg.validate(ds.num_classes());
    for (std::size_t c = 0; c < ds.num_classes(); ++c) {
        const auto n = ds.rows_of_class(static_cast<ClassId>(c)).size();
        const auto sizes = split_sizes(n, cfg.split);
        if (sizes[2] == 0)
            throw ConfigError("class '" + ds.class_names()[c] + "' has " + std::to_string(n) +
                              " examples, too few for the configured split");
    }
}

/// Requirement diagnostics for one fold, on the same data and seeds as the
/// corresponding cross-validation fold.
inline RequirementDiagnostics diagnose_fold(const LabeledDataset& ds, const CvConfig& cfg, int repeat, int fold) {
    validate_for(cfg, ds);
    if (fold < 0 || fold >= cfg.folds || repeat < 0) throw ConfigError("fold index out of range");
    const auto held = held_out_folds(ds.num_classes(), cfg.folds, fold_permutation_seed(cfg.seed, repeat));
    const auto data = detail::prepare_fold(ds, cfg, repeat, fold, held[static_cast<std::size_t>(fold)]);
    const std::size_t s = cfg.set_sizes.front();
    auto ensembles = train_ensembles(data.multiclass_train, data.binary_train, cfg.ensemble, std::span(&s, 1),
                                     derive_seed(data.seed, {1}));
    return requirement_diagnostics(ensembles.front(), cfg.diagnostics_partition, data.test, s,
                                   derive_seed(data.seed, {3}));
}

/// Class-held-out cross-validation. Every repeat draws a fresh class permutation;
/// each fold holds out one chunk of it as truly-novel. Rows come out in
/// (repeat, fold, method, s) order regardless of parallelism.
inline EvalReport run_cross_validation(const LabeledDataset& ds, const CvConfig& cfg) {
    validate_for(cfg, ds);
    const auto start = std::chrono::steady_clock::now();

    struct Job {
        int repeat, fold;
        std::vector<ClassId> held_out;
    };
    std::vector<Job> jobs;
    for (int r = 0; r < cfg.repeats; ++r) {
        auto chunks = held_out_folds(ds.num_classes(), cfg.folds, fold_permutation_seed(cfg.seed, r));
        for (int f = 0; f < cfg.folds; ++f) jobs.push_back({r, f, std::move(chunks[static_cast<std::size_t>(f)])});
    }

    std::vector<detail::FoldResult> results(jobs.size());
    run_parallel(jobs.size(), cfg.parallelism, [&](std::size_t i) {
        const auto& j = jobs[i];
        try {
            results[i] = detail::run_fold(ds, cfg, j.repeat, j.fold, j.held_out);
        } catch (const Error& e) {
            throw Error("repeat " + std::to_string(j.repeat) + ", fold " + std::to_string(j.fold) + ": " + e.what());
        }
        log::info("repeat " + std::to_string(j.repeat) + " fold " + std::to_string(j.fold) + " done");
    });

    EvalReport report;
    for (auto& r : results) {
        for (std::size_t i = 0; i < r.rows.size(); ++i) {
            report.rows.push_back(std::move(r.rows[i]));
            report.curves.push_back(std::move(r.curves[i]));
        }
        if (r.diagnostics) report.diagnostics.push_back(*r.diagnostics);
        if (!r.scatter.empty()) report.scatter = std::move(r.scatter);
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

} // namespace novelty

#endif
