#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmtgb/matrix.hpp"

namespace rmtgb {

// Error categories surfaced through the C API as distinct codes.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LossKind { SquaredError, CrossEntropy };

std::string to_string(LossKind loss);
LossKind loss_from_string(const std::string& name);

/// Raw ensemble outputs, one row per sample and one column per output (K).
using ScoreMatrix = Matrix;

/// Pooled storage of a multi-task problem. Per-task views are index lists
/// into the pooled arrays, so samples keep their input order.
struct MultiTaskDataset {
    Matrix features;              // N x d
    std::vector<double> targets;  // real value, or class index stored as double
    std::vector<int> task_of;     // task id per sample
    int num_tasks = 0;
    int num_classes = 1;  // K; 1 for regression

    std::size_t size() const noexcept { return targets.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
    std::size_t num_outputs() const noexcept { return static_cast<std::size_t>(num_classes); }

    /// Throws InvalidArgument if shapes, task ids or class labels are inconsistent.
    void validate(LossKind loss) const;

    /// Sample indices of every task, in pooled order.
    std::vector<std::vector<std::size_t>> task_indices() const;

    /// New dataset holding the given rows; keeps num_tasks and num_classes.
    MultiTaskDataset subset(std::span<const std::size_t> idx) const;
};

double sigmoid(double theta) noexcept;

std::vector<double> softmax(std::span<const double> scores);

/// Mean per-sample loss. Squared error is 0.5 * (y - F)^2.
double loss_value(LossKind loss, std::span<const double> targets, const ScoreMatrix& scores);

/// Negative gradient of the per-sample loss: y - F, or onehot(y) - softmax(F).
ScoreMatrix pseudo_residual(LossKind loss, std::span<const double> targets,
                            const ScoreMatrix& scores);

/// Single-row residual used by the trainers' inner loops.
void pseudo_residual_row(LossKind loss, double target, std::span<const double> scores,
                         std::span<double> out);

}  // namespace rmtgb
