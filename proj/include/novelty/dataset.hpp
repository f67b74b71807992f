#ifndef NOVELTY_DATASET_HPP
#define NOVELTY_DATASET_HPP

#include "novelty/common.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace novelty {

/// Feature vectors (one per row) with class labels.
///
/// Labels are stored as dense indices into `class_names()`; the mapping is the
/// dataset's class index. Every class in the table has at least one row.
class LabeledDataset {
public:
    LabeledDataset(Matrix features, std::vector<ClassId> labels, std::vector<std::string> class_names)
        : features_(std::move(features)), labels_(std::move(labels)), class_names_(std::move(class_names)) {
        if (features_.rows() < 1) throw Error("dataset must contain at least one example");
        if (features_.cols() < 1) throw Error("dataset feature dimension must be at least 1");
        if (static_cast<std::size_t>(features_.rows()) != labels_.size())
            throw Error("dataset label count does not match row count");
        std::vector<std::size_t> counts(class_names_.size(), 0);
        for (ClassId c : labels_) {
            if (c < 0 || static_cast<std::size_t>(c) >= class_names_.size())
                throw Error("dataset label outside the class index");
            ++counts[c];
        }
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (counts[c] == 0) throw Error("class '" + class_names_[c] + "' has no examples");
        }
        std::unordered_map<std::string, ClassId> seen;
        for (std::size_t c = 0; c < class_names_.size(); ++c) {
            if (!seen.emplace(class_names_[c], static_cast<ClassId>(c)).second)
                throw Error("duplicate class name '" + class_names_[c] + "'");
        }
    }

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(features_.cols()); }
    std::size_t num_classes() const noexcept { return class_names_.size(); }

    const Matrix& features() const noexcept { return features_; }
    const std::vector<ClassId>& labels() const noexcept { return labels_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }

    ClassId label(std::size_t i) const { return labels_.at(i); }
    auto row(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)); }

    std::optional<ClassId> find_class(std::string_view name) const {
        for (std::size_t c = 0; c < class_names_.size(); ++c) {
            if (class_names_[c] == name) return static_cast<ClassId>(c);
        }
        return std::nullopt;
    }

    /// Row indices of class `c`, in dataset order.
    std::vector<std::size_t> rows_of_class(ClassId c) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i] == c) out.push_back(i);
        }
        return out;
    }

    Matrix gather(std::span<const std::size_t> rows) const {
        Matrix out(static_cast<Eigen::Index>(rows.size()), features_.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            out.row(static_cast<Eigen::Index>(r)) = features_.row(static_cast<Eigen::Index>(rows[r]));
        }
        return out;
    }

private:
    Matrix features_;
    std::vector<ClassId> labels_;
    std::vector<std::string> class_names_;
};

/// Keeps only the rows whose class is listed, re-indexing classes so that
/// `classes[j]` becomes class j of the result.
inline LabeledDataset restrict_to_classes(const LabeledDataset& ds, std::span<const ClassId> classes) {
    std::vector<ClassId> remap(ds.num_classes(), -1);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < classes.size(); ++j) {
        ClassId c = classes[j];
        if (c < 0 || static_cast<std::size_t>(c) >= ds.num_classes()) throw Error("class index out of range");
        if (remap[c] != -1) throw Error("duplicate class in restriction list");
        remap[c] = static_cast<ClassId>(j);
        names.push_back(ds.class_names()[c]);
    }
    std::vector<std::size_t> rows;
    std::vector<ClassId> labels;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ClassId m = remap[ds.label(i)]; m != -1) {
            rows.push_back(i);
            labels.push_back(m);
        }
    }
    if (rows.empty()) throw Error("class restriction selects no examples");
    return LabeledDataset(ds.gather(rows), std::move(labels), std::move(names));
}

/// Stacks two datasets that share a class table.
inline LabeledDataset concatenate(const LabeledDataset& a, const LabeledDataset& b) {
    if (a.class_names() != b.class_names()) throw Error("cannot concatenate datasets with different class tables");
    if (a.dim() != b.dim()) throw Error("cannot concatenate datasets with different dimensions");
    Matrix f(static_cast<Eigen::Index>(a.size() + b.size()), a.features().cols());
    f << a.features(), b.features();
    std::vector<ClassId> labels = a.labels();
    labels.insert(labels.end(), b.labels().begin(), b.labels().end());
    return LabeledDataset(std::move(f), std::move(labels), a.class_names());
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Parses `label,f0,...,f{d-1}` CSV. Classes are indexed by first appearance.
inline LabeledDataset read_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ParseError("missing header", 1);
    auto header = detail::split_commas(line);
    if (header.size() < 2 || detail::trim(header[0]) != "label")
        throw ParseError("header must be 'label,f0,...,f{d-1}'", 1);
    const std::size_t d = header.size() - 1;
    for (std::size_t j = 0; j < d; ++j) {
        if (detail::trim(header[j + 1]) != "f" + std::to_string(j))
            throw ParseError("header column " + std::to_string(j + 1) + " must be 'f" + std::to_string(j) + "'", 1);
    }

    std::vector<double> values;
    std::vector<ClassId> labels;
    std::vector<std::string> names;
    std::unordered_map<std::string, ClassId> index;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_commas(line);
        if (fields.size() != d + 1)
            throw ParseError("expected " + std::to_string(d + 1) + " fields, found " + std::to_string(fields.size()), lineno);
        std::string name(detail::trim(fields[0]));
        if (name.empty()) throw ParseError("empty label", lineno);
        auto [it, inserted] = index.emplace(name, static_cast<ClassId>(names.size()));
        if (inserted) names.push_back(name);
        labels.push_back(it->second);
        for (std::size_t j = 0; j < d; ++j) {
            auto v = detail::parse_double(fields[j + 1]);
            if (!v || !std::isfinite(*v))
                throw ParseError("non-numeric feature in column " + std::to_string(j + 1), lineno);
            values.push_back(*v);
        }
    }
    if (labels.empty()) throw ParseError("file has no data rows", 2);

    Matrix features(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) features(i, j) = values[i * d + j];
    }
    return LabeledDataset(std::move(features), std::move(labels), std::move(names));
}

inline LabeledDataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return read_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void write_csv(const LabeledDataset& ds, std::ostream& out) {
    out << "label";
    for (std::size_t j = 0; j < ds.dim(); ++j) out << ",f" << j;
    out << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.class_names()[ds.label(i)];
        for (std::size_t j = 0; j < ds.dim(); ++j) out << ',' << detail::format_double(ds.features()(i, j));
        out << '\n';
    }
}

inline void save_csv(const LabeledDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    write_csv(ds, out);
    if (!out) throw Error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Per-class three-way split

struct SplitSpec {
    double multiclass_fraction = 0.6;
    double binary_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(multiclass_fraction > 0.0 && multiclass_fraction < 1.0) || !(binary_fraction > 0.0 && binary_fraction < 1.0))
            throw ConfigError("split fractions must lie in (0,1)");
        if (multiclass_fraction + binary_fraction > 1.0)
            throw ConfigError("split fractions must sum to at most 1");
    }
};

struct DatasetSplit {
    LabeledDataset multiclass_train;
    LabeledDataset binary_train;
    LabeledDataset test;
};

/// Per-class allotment sizes (multiclass, binary, test) for a class of n examples.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
    auto part = [n](double f) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9)));
    };
    std::size_t a = part(spec.multiclass_fraction);
    std::size_t b = part(spec.binary_fraction);
    if (a + b >= n) return {0, 0, 0};
    return {a, b, n - a - b};
}

/// All three parts keep the parent's class table; every class appears in each.
inline DatasetSplit split_per_class(const LabeledDataset& ds, const SplitSpec& spec) {
    spec.validate();
    std::vector<std::size_t> parts[3];
    for (std::size_t c = 0; c < ds.num_classes(); ++c) {
        auto rows = ds.rows_of_class(static_cast<ClassId>(c));
        auto sizes = split_sizes(rows.size(), spec);
        if (sizes[2] == 0)
            throw Error("class '" + ds.class_names()[c] + "' has " + std::to_string(rows.size()) +
                        " examples, too few for a three-way split");
        std::mt19937_64 rng(derive_seed(spec.seed, {c}));
        std::shuffle(rows.begin(), rows.end(), rng);
        auto it = rows.begin();
        for (int p = 0; p < 3; ++p) {
            auto end = it + static_cast<std::ptrdiff_t>(sizes[p]);
            parts[p].insert(parts[p].end(), it, end);
            it = end;
        }
    }
    auto build = [&](std::vector<std::size_t>& rows) {
        std::sort(rows.begin(), rows.end());
        std::vector<ClassId> labels;
        labels.reserve(rows.size());
        for (auto r : rows) labels.push_back(ds.label(r));
        return LabeledDataset(ds.gather(rows), std::move(labels), ds.class_names());
    };
    return DatasetSplit{build(parts[0]), build(parts[1]), build(parts[2])};
}

// ---------------------------------------------------------------------------
// Synthetic class-structured data

struct SynthSpec {
    int num_classes = 20;
    int dim = 16;
    int examples_per_class = 100;
    double center_spread = 1.0;
    double within_std = 0.5;
    std::uint64_t seed = 0;
    // Optional two-level structure: class c sits around superclass c % superclasses
    // with spread subclass_spread. Zero superclasses places every centre directly.
    int superclasses = 0;
    double subclass_spread = 0.0;

    void validate() const {
        if (num_classes < 2) throw ConfigError("synthetic data needs at least 2 classes");
        if (dim < 1) throw ConfigError("synthetic dimension must be positive");
        if (examples_per_class < 1) throw ConfigError("examples_per_class must be positive");
        if (!(center_spread > 0.0)) throw ConfigError("center_spread must be positive");
        if (!(within_std > 0.0)) throw ConfigError("within_std must be positive");
        if (superclasses < 0 || superclasses > num_classes) throw ConfigError("superclasses must lie in [0, num_classes]");
        if (superclasses > 0 && !(subclass_spread > 0.0)) throw ConfigError("subclass_spread must be positive");
    }
};

/// Isotropic Gaussian classes around isotropically drawn centres. Rows are
/// grouped by class; class c is named "c<c>".
inline LabeledDataset generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto k = static_cast<Eigen::Index>(spec.num_classes);
    const auto d = static_cast<Eigen::Index>(spec.dim);
    const auto per = static_cast<Eigen::Index>(spec.examples_per_class);

    Matrix centers(k, d);
    if (spec.superclasses == 0) {
        for (Eigen::Index c = 0; c < k; ++c)
            for (Eigen::Index j = 0; j < d; ++j) centers(c, j) = spec.center_spread * normal(rng);
    } else {
        Matrix super(spec.superclasses, d);
        for (Eigen::Index g = 0; g < super.rows(); ++g)
            for (Eigen::Index j = 0; j < d; ++j) super(g, j) = spec.center_spread * normal(rng);
        for (Eigen::Index c = 0; c < k; ++c)
            for (Eigen::Index j = 0; j < d; ++j)
                centers(c, j) = super(c % spec.superclasses, j) + spec.subclass_spread * normal(rng);
    }

    Matrix features(k * per, d);
    std::vector<ClassId> labels;
    std::vector<std::string> names;
    for (Eigen::Index c = 0; c < k; ++c) {
        names.push_back("c" + std::to_string(c));
        for (Eigen::Index e = 0; e < per; ++e) {
            for (Eigen::Index j = 0; j < d; ++j)
                features(c * per + e, j) = centers(c, j) + spec.within_std * normal(rng);
            labels.push_back(static_cast<ClassId>(c));
        }
    }
    return LabeledDataset(std::move(features), std::move(labels), std::move(names));
}

} // namespace novelty

#endif
