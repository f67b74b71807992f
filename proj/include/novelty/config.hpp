#ifndef NOVELTY_CONFIG_HPP
#define NOVELTY_CONFIG_HPP

#include "novelty/crossval.hpp"

#include <filesystem>
#include <map>

namespace novelty {

/// Flat `key = value` file. `#` starts a comment; keys may be dotted.
class KeyValueFile {
public:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    static KeyValueFile parse(std::istream& in) {
        KeyValueFile kv;
        std::string raw;
        std::size_t line = 0;
        while (std::getline(in, raw)) {
            ++line;
            std::string_view text(raw);
            if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
            text = detail::trim(text);
            if (text.empty()) continue;
            const auto eq = text.find('=');
            if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line);
            const std::string key(detail::trim(text.substr(0, eq)));
            const std::string value(detail::trim(text.substr(eq + 1)));
            if (key.empty()) throw ParseError("empty key", line);
            if (!kv.entries_.emplace(key, Entry{value, line}).second) throw ParseError("duplicate key '" + key + "'", line);
        }
        return kv;
    }

    static KeyValueFile load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
        try {
            return parse(in);
        } catch (const ParseError& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    /// Removes and returns the entry; consumed keys are not reported as unknown.
    std::optional<Entry> take(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        Entry e = it->second;
        entries_.erase(it);
        return e;
    }

    const std::map<std::string, Entry>& remaining() const noexcept { return entries_; }

private:
    std::map<std::string, Entry> entries_;
};

namespace detail {

inline ConfigError bad_value(const std::string& key, const KeyValueFile::Entry& e, const std::string& expected) {
    return ConfigError("key '" + key + "' (line " + std::to_string(e.line) + "): expected " + expected + ", got '" +
                       e.value + "'");
}

inline std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    for (auto part : split_commas(value)) {
        auto t = trim(part);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

/// Typed readers over a KeyValueFile; each consumes its key.
class Reader {
public:
    explicit Reader(KeyValueFile& kv) : kv_(kv) {}

    void real(const std::string& key, double& out) {
        if (auto e = kv_.take(key)) {
            auto v = parse_double(e->value);
            if (!v) throw bad_value(key, *e, "a number");
            out = *v;
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (auto e = kv_.take(key)) out = to_int<Int>(key, *e, e->value);
    }

    void boolean(const std::string& key, bool& out) {
        if (auto e = kv_.take(key)) {
            if (e->value == "true" || e->value == "1" || e->value == "yes") out = true;
            else if (e->value == "false" || e->value == "0" || e->value == "no") out = false;
            else throw bad_value(key, *e, "true or false");
        }
    }

    void text(const std::string& key, std::string& out) {
        if (auto e = kv_.take(key)) out = e->value;
    }

    void path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) {
        if (auto e = kv_.take(key)) {
            if (e->value.empty()) throw bad_value(key, *e, "a path");
            std::filesystem::path p(e->value);
            out = p.is_absolute() ? p : base / p;
        }
    }

    /// "auto" maps to 0.
    void real_or_auto(const std::string& key, double& out) {
        if (auto e = kv_.take(key)) {
            if (e->value == "auto") {
                out = 0.0;
                return;
            }
            auto v = parse_double(e->value);
            if (!v || !(*v > 0.0)) throw bad_value(key, *e, "a positive number or 'auto'");
            out = *v;
        }
    }

    template <class Int>
    void integer_list(const std::string& key, std::vector<Int>& out) {
        if (auto e = kv_.take(key)) {
            out.clear();
            for (const auto& item : split_list(e->value)) out.push_back(to_int<Int>(key, *e, item));
            if (out.empty()) throw bad_value(key, *e, "a non-empty list");
        }
    }

    void real_list(const std::string& key, std::vector<double>& out) {
        if (auto e = kv_.take(key)) {
            out.clear();
            for (const auto& item : split_list(e->value)) {
                auto v = parse_double(item);
                if (!v) throw bad_value(key, *e, "a list of numbers");
                out.push_back(*v);
            }
            if (out.empty()) throw bad_value(key, *e, "a non-empty list");
        }
    }

private:
    template <class Int>
    static Int to_int(const std::string& key, const KeyValueFile::Entry& e, std::string_view s) {
        long long v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) throw bad_value(key, e, "an integer");
        if constexpr (std::is_unsigned_v<Int>) {
            if (v < 0) throw bad_value(key, e, "a non-negative integer");
        }
        return static_cast<Int>(v);
    }

    KeyValueFile& kv_;
};

} // namespace detail

/// Everything the command-line tool reads from one config file.
struct RunConfig {
    // data source: a CSV path, or synthetic generation when absent
    std::optional<std::filesystem::path> data_csv;
    SynthSpec synth;
    std::filesystem::path synth_output;

    CvConfig cv;
    std::filesystem::path output_dir;

    // vote simulation grid
    double sim_p = 0.7;
    double sim_q = 0.3;
    std::vector<int> sim_sizes{10, 25, 50, 100};
    long sim_trials = 100000;
    std::vector<double> sim_deltas;  // empty: (mu_novel - mu_known) / (mu_novel + mu_known)

    int diagnose_fold = 0;  // fold of repeat 0 used by the diagnose command

    void validate() const {
        if (!data_csv) synth.validate();
        if (sim_sizes.empty()) throw ConfigError("simulate.L is empty");
        for (int l : sim_sizes)
            if (l < 1) throw ConfigError("simulate.L entries must be positive");
        if (sim_trials < 1) throw ConfigError("simulate.trials must be positive");
        if (!(sim_p > 0.0 && sim_p <= 1.0)) throw ConfigError("simulate.p must lie in (0,1]");
        if (!(sim_q >= 0.0 && sim_q < 1.0)) throw ConfigError("simulate.q must lie in [0,1)");
        for (double d : sim_deltas)
            if (!(d > 0.0 && d < 1.0)) throw ConfigError("simulate.delta entries must lie in (0,1)");
        if (diagnose_fold < 0 || diagnose_fold >= cv.folds) throw ConfigError("diagnostics.fold must lie in [0, cv.folds)");
    }
};

/// Relative paths resolve against `base_dir` (the config file's directory).
inline RunConfig parse_run_config(KeyValueFile kv, const std::filesystem::path& base_dir) {
    RunConfig rc;
    detail::Reader r(kv);

    r.integer("seed", rc.cv.seed);
    r.integer("parallelism", rc.cv.parallelism);
    rc.output_dir = base_dir / "out";
    r.path("output", rc.output_dir, base_dir);

    std::filesystem::path csv;
    r.path("data.csv", csv, base_dir);
    if (!csv.empty()) rc.data_csv = csv;
    r.integer("synth.classes", rc.synth.num_classes);
    r.integer("synth.dim", rc.synth.dim);
    r.integer("synth.per_class", rc.synth.examples_per_class);
    r.real("synth.center_spread", rc.synth.center_spread);
    r.real("synth.within_std", rc.synth.within_std);
    r.integer("synth.superclasses", rc.synth.superclasses);
    r.real("synth.subclass_spread", rc.synth.subclass_spread);
    r.integer("synth.seed", rc.synth.seed);
    rc.synth_output = rc.output_dir / "dataset.csv";
    r.path("synth.output", rc.synth_output, base_dir);

    r.real("split.multiclass", rc.cv.split.multiclass_fraction);
    r.real("split.binary", rc.cv.split.binary_fraction);

    auto& ens = rc.cv.ensemble;
    r.integer("ensemble.L", ens.num_partitions);
    r.real("ensemble.novel_fraction", ens.novel_fraction);
    r.integer_list("ensemble.extra_L", rc.cv.extra_ensemble_sizes);
    r.real("ensemble.learning_rate", ens.softmax.learning_rate);
    r.real("ensemble.l2_penalty", ens.softmax.l2_penalty);
    r.integer("ensemble.max_epochs", ens.softmax.max_epochs);
    r.real("ensemble.tolerance", ens.softmax.tolerance);
    r.real("ensemble.svm_c", ens.svm.c_reg);
    r.integer("ensemble.svm_iterations", ens.svm.iterations);
    r.real("ensemble.svm_step", ens.svm.step);

    r.integer_list("eval.s", rc.cv.set_sizes);
    r.integer("cv.folds", rc.cv.folds);
    r.integer("cv.repeats", rc.cv.repeats);

    r.boolean("methods.ensemble", rc.cv.run_ensemble);
    r.boolean("methods.ensemble_normalized", rc.cv.run_ensemble_normalized);
    r.boolean("methods.threshold", rc.cv.run_threshold);
    r.boolean("methods.maxconf", rc.cv.run_maxconf);
    r.boolean("methods.ocsvm", rc.cv.run_ocsvm);
    r.boolean("methods.knn", rc.cv.run_knn);
    r.boolean("methods.knfst", rc.cv.run_knfst);

    if (auto e = kv.take("baselines.representations")) {
        rc.cv.representations.clear();
        for (const auto& item : detail::split_list(e->value)) {
            try {
                rc.cv.representations.push_back(Representation::parse(item));
            } catch (const ConfigError&) {
                throw detail::bad_value("baselines.representations", *e, "confidence, original or pca:<m>");
            }
        }
    }
    r.integer_list("knn.k", rc.cv.knn_k);
    r.real("ocsvm.nu", rc.cv.ocsvm_nu);
    r.real_or_auto("ocsvm.gamma", rc.cv.ocsvm_gamma);
    r.real("ocsvm.tolerance", rc.cv.ocsvm_options.tolerance);
    if (auto e = kv.take("knfst.kernel")) {
        if (e->value == "rbf") rc.cv.knfst_kernel.type = KernelType::Rbf;
        else if (e->value == "linear") rc.cv.knfst_kernel.type = KernelType::Linear;
        else if (e->value == "poly") rc.cv.knfst_kernel.type = KernelType::Polynomial;
        else throw detail::bad_value("knfst.kernel", *e, "rbf, linear or poly");
    }
    r.real_or_auto("knfst.gamma", rc.cv.knfst_kernel.gamma);
    r.integer("knfst.degree", rc.cv.knfst_kernel.degree);
    r.real("knfst.coef0", rc.cv.knfst_kernel.coef0);
    r.real("knfst.ridge", rc.cv.knfst_options.ridge);
    if (rc.cv.knfst_kernel.type == KernelType::Polynomial && !(rc.cv.knfst_kernel.gamma > 0.0))
        rc.cv.knfst_kernel.gamma = 1.0;

    r.boolean("diagnostics.enabled", rc.cv.diagnostics);
    r.integer("diagnostics.partition", rc.cv.diagnostics_partition);
    r.integer("diagnostics.fold", rc.diagnose_fold);

    r.real("simulate.p", rc.sim_p);
    r.real("simulate.q", rc.sim_q);
    r.integer_list("simulate.L", rc.sim_sizes);
    r.integer("simulate.trials", rc.sim_trials);
    if (auto e = kv.take("simulate.delta")) {
        if (e->value != "auto") {
            std::vector<double> deltas;
            for (const auto& item : detail::split_list(e->value)) {
                auto v = detail::parse_double(item);
                if (!v) throw detail::bad_value("simulate.delta", *e, "'auto' or a list of numbers");
                deltas.push_back(*v);
            }
            rc.sim_deltas = std::move(deltas);
        }
    }

    if (!kv.remaining().empty()) {
        const auto& [key, e] = *kv.remaining().begin();
        throw ConfigError("unknown key '" + key + "' (line " + std::to_string(e.line) + ")");
    }
    rc.validate();
    return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    auto kv = KeyValueFile::load(path);
    return parse_run_config(std::move(kv), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

} // namespace novelty

#endif
