#ifndef NOVELTY_SOFTLABEL_HPP
#define NOVELTY_SOFTLABEL_HPP

#include "novelty/dataset.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace novelty {

/// Smallest confidence any class receives after flooring.
inline constexpr double kConfidenceFloor = 1e-12;

struct TrainConfig {
    double learning_rate = 0.5;
    double l2_penalty = 1e-3;
    int max_epochs = 400;
    double tolerance = 1e-7;
    // Weights start at zero (the objective is convex), so the seed only keys
    // the model's identity in serialized output.
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
        if (!(l2_penalty >= 0.0) || !std::isfinite(l2_penalty)) throw ConfigError("l2_penalty must be finite and non-negative");
        if (max_epochs < 1) throw ConfigError("max_epochs must be positive");
        if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    }
};

/// Multinomial logistic model; emits strictly positive confidence vectors.
class SoftLabelModel {
public:
    SoftLabelModel(Matrix weights, Vector biases, std::vector<std::string> class_names)
        : weights_(std::move(weights)), biases_(std::move(biases)), class_names_(std::move(class_names)) {
        if (class_names_.size() < 2) throw Error("soft-label model needs at least 2 classes");
        if (static_cast<std::size_t>(weights_.rows()) != class_names_.size() ||
            static_cast<std::size_t>(biases_.size()) != class_names_.size())
            throw Error("soft-label model parameter shapes do not match class count");
    }

    std::size_t num_classes() const noexcept { return class_names_.size(); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(weights_.cols()); }
    const Matrix& weights() const noexcept { return weights_; }
    const Vector& biases() const noexcept { return biases_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }

    Vector predict_one(const Eigen::Ref<const Vector>& x) const {
        if (static_cast<std::size_t>(x.size()) != dim()) throw Error("feature dimension mismatch");
        if (!x.allFinite()) throw Error("non-finite feature value");
        Vector scores = weights_ * x + biases_;
        return confidences_from_scores(scores);
    }

    /// Row-wise confidences for a batch of examples.
    Matrix predict_confidences(const Matrix& x) const {
        if (static_cast<std::size_t>(x.cols()) != dim()) throw Error("feature dimension mismatch");
        if (!x.allFinite()) throw Error("non-finite feature value");
        Matrix scores = (x * weights_.transpose()).rowwise() + biases_.transpose();
        Matrix out(scores.rows(), scores.cols());
        for (Eigen::Index i = 0; i < scores.rows(); ++i)
            out.row(i) = confidences_from_scores(scores.row(i).transpose()).transpose();
        return out;
    }

    /// Softmax with the confidence floor applied, then renormalized.
    static Vector confidences_from_scores(const Vector& scores) {
        Vector p = (scores.array() - scores.maxCoeff()).exp().matrix();
        p /= p.sum();
        p = p.cwiseMax(kConfidenceFloor);
        return p / p.sum();
    }

private:
    Matrix weights_;
    Vector biases_;
    std::vector<std::string> class_names_;
};

/// Mean cross-entropy plus l2/2 * ||W||^2 (biases unpenalized), with gradients.
struct SoftmaxObjective {
    const Matrix& x;
    const std::vector<ClassId>& labels;
    double l2_penalty;

    double evaluate(const Matrix& w, const Vector& b, Matrix* grad_w = nullptr, Vector* grad_b = nullptr) const {
        const auto n = x.rows();
        Matrix scores = (x * w.transpose()).rowwise() + b.transpose();
        double loss = 0.0;
        Matrix residual(scores.rows(), scores.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mx = scores.row(i).maxCoeff();
            RowVector e = (scores.row(i).array() - mx).exp().matrix();
            const double z = e.sum();
            const ClassId y = labels[static_cast<std::size_t>(i)];
            loss += std::log(z) + mx - scores(i, y);
            residual.row(i) = e / z;
            residual(i, y) -= 1.0;
        }
        loss = loss / static_cast<double>(n) + 0.5 * l2_penalty * w.squaredNorm();
        if (grad_w) *grad_w = residual.transpose() * x / static_cast<double>(n) + l2_penalty * w;
        if (grad_b) *grad_b = residual.colwise().sum().transpose() / static_cast<double>(n);
        return loss;
    }
};

struct SoftmaxTrace {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    int accepted_epochs = 0;
    std::vector<double> losses;  // loss after each accepted epoch
};

/// Full-batch gradient descent with a fixed step. A step that would raise the
/// loss is rejected and the step size halved, so accepted losses never increase.
inline SoftLabelModel train_softmax(const LabeledDataset& ds, const TrainConfig& cfg, SoftmaxTrace* trace = nullptr) {
    cfg.validate();
    if (ds.num_classes() < 2) throw Error("softmax training needs at least 2 classes");
    if (!ds.features().allFinite()) throw Error("non-finite feature value in training data");

    const auto k = static_cast<Eigen::Index>(ds.num_classes());
    const auto d = static_cast<Eigen::Index>(ds.dim());
    SoftmaxObjective objective{ds.features(), ds.labels(), cfg.l2_penalty};

    Matrix w = Matrix::Zero(k, d);
    Vector b = Vector::Zero(k);
    Matrix gw;
    Vector gb;
    double loss = objective.evaluate(w, b, &gw, &gb);
    SoftmaxTrace local;
    local.initial_loss = loss;
    double step = cfg.learning_rate;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Matrix w_next = w - step * gw;
        Vector b_next = b - step * gb;
        Matrix gw_next;
        Vector gb_next;
        const double next = objective.evaluate(w_next, b_next, &gw_next, &gb_next);
        if (!std::isfinite(next) || next > loss) {
            step *= 0.5;
            if (step < 1e-14) break;
            continue;
        }
        const double improvement = loss - next;
        w = std::move(w_next);
        b = std::move(b_next);
        gw = std::move(gw_next);
        gb = std::move(gb_next);
        loss = next;
        ++local.accepted_epochs;
        if (trace) local.losses.push_back(loss);
        if (improvement < cfg.tolerance) break;
    }
    local.final_loss = loss;
    if (trace) *trace = std::move(local);
    return SoftLabelModel(std::move(w), std::move(b), ds.class_names());
}

// ---------------------------------------------------------------------------
// Flat text serialization: one `name,index...,value` line per parameter.

inline void write_model(const SoftLabelModel& model, std::ostream& out) {
    out << "classes," << model.num_classes() << '\n';
    out << "dim," << model.dim() << '\n';
    for (std::size_t c = 0; c < model.num_classes(); ++c) out << "class," << c << ',' << model.class_names()[c] << '\n';
    for (std::size_t c = 0; c < model.num_classes(); ++c)
        for (std::size_t j = 0; j < model.dim(); ++j)
            out << "weight," << c << ',' << j << ',' << detail::format_double(model.weights()(c, j)) << '\n';
    for (std::size_t c = 0; c < model.num_classes(); ++c)
        out << "bias," << c << ',' << detail::format_double(model.biases()(c)) << '\n';
}

inline SoftLabelModel read_model(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    long k = -1, d = -1;
    std::vector<std::string> names;
    Matrix w;
    Vector b;
    auto index = [&](std::string_view s, long bound) {
        auto v = detail::parse_double(s);
        if (!v || *v < 0 || *v >= static_cast<double>(bound) || std::floor(*v) != *v)
            throw ParseError("bad index in model file", lineno);
        return static_cast<Eigen::Index>(*v);
    };
    auto value = [&](std::string_view s) {
        auto v = detail::parse_double(s);
        if (!v) throw ParseError("bad value in model file", lineno);
        return *v;
    };
    std::vector<bool> seen;  // weights, then class names, then biases
    auto mark = [&](std::size_t slot) {
        if (seen[slot]) throw ParseError("duplicate model entry", lineno);
        seen[slot] = true;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto f = detail::split_commas(detail::trim(line));
        const std::string_view key = f[0];
        if (key == "classes" && f.size() == 2) {
            k = static_cast<long>(value(f[1]));
            names.assign(static_cast<std::size_t>(std::max(k, 0L)), "");
        } else if (key == "dim" && f.size() == 2) {
            d = static_cast<long>(value(f[1]));
            if (k < 1 || d < 1) throw ParseError("model header must declare classes then dim", lineno);
            w = Matrix::Zero(k, d);
            b = Vector::Zero(k);
            seen.assign(static_cast<std::size_t>(k * (d + 2)), false);
        } else if (key == "class" && f.size() == 3 && d > 0) {
            const auto c = index(f[1], k);
            mark(static_cast<std::size_t>(k * d + c));
            names[static_cast<std::size_t>(c)] = std::string(f[2]);
        } else if (key == "weight" && f.size() == 4 && d > 0) {
            const auto c = index(f[1], k), j = index(f[2], d);
            mark(static_cast<std::size_t>(c * d + j));
            w(c, j) = value(f[3]);
        } else if (key == "bias" && f.size() == 3 && d > 0) {
            const auto c = index(f[1], k);
            mark(static_cast<std::size_t>(k * (d + 1) + c));
            b(c) = value(f[2]);
        } else {
            throw ParseError("unrecognized model line", lineno);
        }
    }
    if (k < 2 || d < 1 || std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ParseError("incomplete model file");
    return SoftLabelModel(std::move(w), std::move(b), std::move(names));
}

} // namespace novelty

#endif
