#include "rmtgb/core.hpp"

#include <algorithm>
#include <cmath>

namespace rmtgb {

std::string to_string(LossKind loss) {
    return loss == LossKind::SquaredError ? "squared_error" : "cross_entropy";
}

LossKind loss_from_string(const std::string& name) {
    if (name == "squared_error") return LossKind::SquaredError;
    if (name == "cross_entropy") return LossKind::CrossEntropy;
    throw InvalidArgument("unknown loss: " + name);
}

void MultiTaskDataset::validate(LossKind loss) const {
    const std::size_t n = targets.size();
    if (n == 0) throw InvalidArgument("dataset is empty");
    if (features.rows() != n || task_of.size() != n) {
        throw InvalidArgument("dataset arrays have different lengths");
    }
    if (num_tasks < 1) throw InvalidArgument("dataset needs at least one task");
    if (loss == LossKind::CrossEntropy && num_classes < 2) {
        throw InvalidArgument("cross-entropy needs at least two classes");
    }
    if (loss == LossKind::SquaredError && num_classes != 1) {
        throw InvalidArgument("squared error needs a single output");
    }
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_tasks), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const int t = task_of[i];
        if (t < 0 || t >= num_tasks) {
            throw InvalidArgument("task id " + std::to_string(t) + " out of range");
        }
        ++counts[static_cast<std::size_t>(t)];
        if (loss == LossKind::CrossEntropy) {
            const double y = targets[i];
            if (y < 0 || y >= num_classes || y != std::floor(y)) {
                throw InvalidArgument("class label out of range at sample " + std::to_string(i));
            }
        }
    }
    for (std::size_t t = 0; t < counts.size(); ++t) {
        if (counts[t] == 0) throw InvalidArgument("task " + std::to_string(t) + " has no samples");
    }
    for (double v : features.data()) {
        if (!std::isfinite(v)) throw InvalidArgument("non-finite feature value");
    }
}

std::vector<std::vector<std::size_t>> MultiTaskDataset::task_indices() const {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(num_tasks));
    for (std::size_t i = 0; i < task_of.size(); ++i) {
        out[static_cast<std::size_t>(task_of[i])].push_back(i);
    }
    return out;
}

MultiTaskDataset MultiTaskDataset::subset(std::span<const std::size_t> idx) const {
    MultiTaskDataset out;
    out.features = features.select_rows(idx);
    out.targets.reserve(idx.size());
    out.task_of.reserve(idx.size());
    for (std::size_t i : idx) {
        out.targets.push_back(targets[i]);
        out.task_of.push_back(task_of[i]);
    }
    out.num_tasks = num_tasks;
    out.num_classes = num_classes;
    return out;
}

double sigmoid(double theta) noexcept {
    if (theta >= 0) return 1.0 / (1.0 + std::exp(-theta));
    const double e = std::exp(theta);
    return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> scores) {
    std::vector<double> p(scores.begin(), scores.end());
    if (p.empty()) return p;
    const double top = *std::max_element(p.begin(), p.end());
    double total = 0;
    for (double& v : p) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

namespace {

void check_shapes(LossKind loss, std::span<const double> targets, const ScoreMatrix& scores) {
    if (scores.rows() != targets.size()) {
        throw InvalidArgument("targets and scores have different lengths");
    }
    if (loss == LossKind::SquaredError && scores.cols() != 1) {
        throw InvalidArgument("squared error expects one score column");
    }
    if (loss == LossKind::CrossEntropy) {
        if (scores.cols() < 2) throw InvalidArgument("cross-entropy expects K >= 2 score columns");
        for (double y : targets) {
            if (y < 0 || y >= static_cast<double>(scores.cols())) {
                throw InvalidArgument("class label out of range");
            }
        }
    }
}

}  // namespace

double loss_value(LossKind loss, std::span<const double> targets, const ScoreMatrix& scores) {
    check_shapes(loss, targets, scores);
    if (targets.empty()) throw InvalidArgument("loss of empty sample");
    double total = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (loss == LossKind::SquaredError) {
            const double diff = targets[i] - scores(i, 0);
            total += 0.5 * diff * diff;
        } else {
            // -log softmax(s)_y = logsumexp(s) - s_y
            auto s = scores.row(i);
            const double top = *std::max_element(s.begin(), s.end());
            double acc = 0;
            for (double v : s) acc += std::exp(v - top);
            total += top + std::log(acc) - s[static_cast<std::size_t>(targets[i])];
        }
    }
    return total / static_cast<double>(targets.size());
}

void pseudo_residual_row(LossKind loss, double target, std::span<const double> scores,
                         std::span<double> out) {
    if (loss == LossKind::SquaredError) {
        out[0] = target - scores[0];
        return;
    }
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        out[k] = std::exp(scores[k] - top);
        total += out[k];
    }
    const auto label = static_cast<std::size_t>(target);
    for (std::size_t k = 0; k < scores.size(); ++k) {
        out[k] = (k == label ? 1.0 : 0.0) - out[k] / total;
    }
}

ScoreMatrix pseudo_residual(LossKind loss, std::span<const double> targets,
                            const ScoreMatrix& scores) {
    check_shapes(loss, targets, scores);
    ScoreMatrix r(scores.rows(), scores.cols());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        pseudo_residual_row(loss, targets[i], scores.row(i), r.row(i));
    }
    return r;
}

}  // namespace rmtgb
