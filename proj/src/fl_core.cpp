#include "nomafl/fl_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nomafl/errors.hpp"

namespace nomafl::fl {

namespace {

using RowMap = Eigen::Map<const Matrix>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;

// Views into a flat parameter vector.
template <class T>
struct Layers {
    T* w1 = nullptr;
    T* b1 = nullptr;
    T* w2 = nullptr;
    T* b2 = nullptr;
};

template <class T>
Layers<T> split(const ModelShape& s, T* p) {
    Layers<T> l;
    if (s.hidden == 0) {
        l.w2 = p;
        l.b2 = p + static_cast<std::size_t>(s.classes) * s.inputs;
        return l;
    }
    l.w1 = p;
    l.b1 = l.w1 + static_cast<std::size_t>(s.hidden) * s.inputs;
    l.w2 = l.b1 + s.hidden;
    l.b2 = l.w2 + static_cast<std::size_t>(s.classes) * s.hidden;
    return l;
}

void check(const ModelShape& shape, std::span<const double> params, const Matrix& features) {
    shape.validate();
    if (params.size() != shape.parameter_count()) {
        throw DimensionMismatch("model: expected " + std::to_string(shape.parameter_count()) +
                                " parameters, got " + std::to_string(params.size()));
    }
    if (features.cols() != shape.inputs) {
        throw DimensionMismatch("model: feature dimension " + std::to_string(features.cols()) +
                                " != model inputs " + std::to_string(shape.inputs));
    }
}

// Row-wise log-softmax with max subtraction.
Matrix log_softmax(const Matrix& z) {
    Matrix out = z;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double m = out.row(i).maxCoeff();
        out.row(i).array() -= m;
        const double lse = std::log(out.row(i).array().exp().sum());
        out.row(i).array() -= lse;
    }
    return out;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.classes = classes;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= size()) {
            throw InvalidArgument("Dataset::subset: row index out of range");
        }
        out.features.row(static_cast<Eigen::Index>(i)) =
            features.row(static_cast<Eigen::Index>(rows[i]));
        out.labels.push_back(labels[rows[i]]);
    }
    return out;
}

Dataset Dataset::concat(std::span<const Dataset> parts) {
    Dataset out;
    if (parts.empty()) {
        return out;
    }
    Eigen::Index rows = 0;
    for (const auto& p : parts) {
        if (p.features.cols() != parts.front().features.cols() || p.classes != parts.front().classes) {
            throw DimensionMismatch("Dataset::concat: incompatible parts");
        }
        rows += p.features.rows();
    }
    out.classes = parts.front().classes;
    out.features.resize(rows, parts.front().features.cols());
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.features.middleRows(at, p.features.rows()) = p.features;
        at += p.features.rows();
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    }
    return out;
}

std::size_t ModelShape::parameter_count() const {
    const auto in = static_cast<std::size_t>(inputs);
    const auto h = static_cast<std::size_t>(hidden);
    const auto c = static_cast<std::size_t>(classes);
    if (hidden == 0) {
        return c * in + c;
    }
    return h * in + h + c * h + c;
}

void ModelShape::validate() const {
    if (inputs < 1 || classes < 2 || hidden < 0) {
        throw InvalidArgument("model: need inputs >= 1, classes >= 2, hidden >= 0");
    }
}

Params init_params(const ModelShape& shape, RngStream& rng) {
    shape.validate();
    Params p(shape.parameter_count(), 0.0);
    const auto l = split(shape, p.data());
    auto fill = [&](double* out, std::size_t count, int fan_in) {
        const double sd = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < count; ++i) {
            out[i] = rng.normal(0.0, sd);
        }
    };
    if (shape.hidden > 0) {
        fill(l.w1, static_cast<std::size_t>(shape.hidden) * shape.inputs, shape.inputs);
        fill(l.w2, static_cast<std::size_t>(shape.classes) * shape.hidden, shape.hidden);
    } else {
        fill(l.w2, static_cast<std::size_t>(shape.classes) * shape.inputs, shape.inputs);
    }
    return p;
}

Matrix logits(const ModelShape& shape, std::span<const double> params, const Matrix& features) {
    check(shape, params, features);
    const auto l = split(shape, params.data());
    if (shape.hidden == 0) {
        RowMap w(l.w2, shape.classes, shape.inputs);
        VecMap b(l.b2, shape.classes);
        Matrix z = features * w.transpose();
        z.rowwise() += b.transpose();
        return z;
    }
    RowMap w1(l.w1, shape.hidden, shape.inputs);
    VecMap b1(l.b1, shape.hidden);
    RowMap w2(l.w2, shape.classes, shape.hidden);
    VecMap b2(l.b2, shape.classes);
    Matrix a1 = features * w1.transpose();
    a1.rowwise() += b1.transpose();
    a1 = a1.array().tanh().matrix();
    Matrix z = a1 * w2.transpose();
    z.rowwise() += b2.transpose();
    return z;
}

LossGradient loss_and_gradient(const ModelShape& shape, std::span<const double> params,
                               const Dataset& batch) {
    if (batch.empty()) {
        throw InvalidArgument("loss_and_gradient: empty batch");
    }
    check(shape, params, batch.features);
    const auto l = split(shape, params.data());
    const auto n = static_cast<Eigen::Index>(batch.size());
    const Matrix& x = batch.features;

    Matrix a1;
    Matrix z;
    if (shape.hidden == 0) {
        RowMap w(l.w2, shape.classes, shape.inputs);
        z = x * w.transpose();
        z.rowwise() += VecMap(l.b2, shape.classes).transpose();
    } else {
        RowMap w1(l.w1, shape.hidden, shape.inputs);
        a1 = x * w1.transpose();
        a1.rowwise() += VecMap(l.b1, shape.hidden).transpose();
        a1 = a1.array().tanh().matrix();
        RowMap w2(l.w2, shape.classes, shape.hidden);
        z = a1 * w2.transpose();
        z.rowwise() += VecMap(l.b2, shape.classes).transpose();
    }
    if (!z.allFinite()) {
        throw NumericalOverflow("loss_and_gradient: non-finite activations");
    }

    const Matrix logp = log_softmax(z);
    LossGradient out;
    double loss = 0.0;
    Matrix dz = logp.array().exp().matrix();  // softmax probabilities
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = batch.labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= shape.classes) {
            throw InvalidArgument("loss_and_gradient: label out of range");
        }
        loss -= logp(i, y);
        dz(i, y) -= 1.0;
    }
    out.loss = loss / static_cast<double>(n);
    dz /= static_cast<double>(n);

    out.gradient.assign(shape.parameter_count(), 0.0);
    const auto g = split(shape, out.gradient.data());
    using OutMap = Eigen::Map<Matrix>;
    using OutVec = Eigen::Map<Eigen::VectorXd>;
    if (shape.hidden == 0) {
        OutMap(g.w2, shape.classes, shape.inputs) = dz.transpose() * x;
        OutVec(g.b2, shape.classes) = dz.colwise().sum().transpose();
    } else {
        RowMap w2(l.w2, shape.classes, shape.hidden);
        OutMap(g.w2, shape.classes, shape.hidden) = dz.transpose() * a1;
        OutVec(g.b2, shape.classes) = dz.colwise().sum().transpose();
        Matrix da = dz * w2;
        da.array() *= (1.0 - a1.array().square());
        OutMap(g.w1, shape.hidden, shape.inputs) = da.transpose() * x;
        OutVec(g.b1, shape.hidden) = da.colwise().sum().transpose();
    }
    if (!std::isfinite(out.loss)) {
        throw NumericalOverflow("loss_and_gradient: non-finite loss");
    }
    return out;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw InvalidArgument("train: learning rate must be > 0");
    }
    if (local_epochs < 1) {
        throw InvalidArgument("train: local_epochs must be >= 1");
    }
}

std::vector<double> local_update(const ModelShape& shape, std::span<const double> params,
                                 const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) {
        throw InvalidArgument("local_update: empty dataset");
    }
    const std::size_t batch = cfg.local_batch == 0 ? data.size() : std::min(cfg.local_batch, data.size());
    if (cfg.local_epochs == 1 && batch == data.size()) {
        return loss_and_gradient(shape, params, data).gradient;
    }

    std::vector<double> w(params.begin(), params.end());
    std::vector<std::size_t> rows;
    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        for (std::size_t start = 0; start < data.size(); start += batch) {
            const std::size_t end = std::min(start + batch, data.size());
            rows.resize(end - start);
            for (std::size_t i = start; i < end; ++i) {
                rows[i - start] = i;
            }
            const auto g = loss_and_gradient(shape, w, data.subset(rows)).gradient;
            for (std::size_t i = 0; i < w.size(); ++i) {
                w[i] -= cfg.learning_rate * g[i];
            }
        }
    }
    std::vector<double> effective(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        effective[i] = (params[i] - w[i]) / cfg.learning_rate;
    }
    return effective;
}

Evaluation evaluate(const ModelShape& shape, std::span<const double> params, const Dataset& data) {
    if (data.empty()) {
        throw InvalidArgument("evaluate: empty dataset");
    }
    const Matrix z = logits(shape, params, data.features);
    const Matrix logp = log_softmax(z);
    std::size_t correct = 0;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        Eigen::Index arg = 0;
        z.row(i).maxCoeff(&arg);
        const int y = data.labels[static_cast<std::size_t>(i)];
        if (arg == y) {
            ++correct;
        }
        loss -= logp(i, y);
    }
    const auto n = static_cast<double>(data.size());
    return {static_cast<double>(correct) / n, loss / n};
}

}  // namespace nomafl::fl
