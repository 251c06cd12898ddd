#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "rmtgb/core.hpp"

namespace rmtgb {

/// Random-Fourier-feature draw approximating a sample from a stationary GP:
///   f(x) = sum_i weight_i * sqrt(2 * amplitude / D) * cos(w_i . (x / (length_scale * d)) + phase_i)
struct RffFunction {
    Matrix frequencies;            // D x d
    std::vector<double> phases;    // D, in [0, 2 pi)
    std::vector<double> weights;   // D
    double amplitude = 1.0;
    double length_scale = 1.0;

    std::size_t num_features() const noexcept { return phases.size(); }
    std::size_t input_dim() const noexcept { return frequencies.cols(); }
    double operator()(std::span<const double> x) const;
};

RffFunction sample_rff(std::size_t dim, std::size_t num_features, double length_scale,
                       double amplitude, std::mt19937_64& rng);

double rff_eval(const RffFunction& f, std::span<const double> x);

enum class TaskKind { Regression, Classification };

struct SynthConfig {
    int num_tasks = 10;
    int num_outliers = 2;
    int dim = 5;
    int train_per_task = 300;
    int test_per_task = 1000;
    double mix_weight = 0.9;
    TaskKind kind = TaskKind::Regression;
    int rff_features = 100;
    double length_scale = 0.25;
    double amplitude = 1.0;
    double min_class_fraction = 0.1;
    int max_retries = 50;
    /// One replacement function for all outlier tasks; false draws one per outlier.
    bool shared_outlier_function = true;

    void validate() const;
    LossKind loss() const noexcept {
        return kind == TaskKind::Regression ? LossKind::SquaredError : LossKind::CrossEntropy;
    }

    /// Ten tasks, the last two outliers, five features, 300 / 1000 samples per task.
    static SynthConfig paper_preset(TaskKind kind);
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

/// Functions behind one task's targets. `common` is phi for inlier tasks and
/// the outlier replacement function otherwise.
struct TaskFunctions {
    RffFunction common;
    RffFunction specific;

    double value(std::span<const double> x, double mix_weight) const;
};

/// One function draw for every task: phi, then psi_t for each task, then one
/// replacement per outlier task (the last num_outliers ids).
std::vector<TaskFunctions> draw_task_functions(const SynthConfig& cfg, std::mt19937_64& rng);

struct SyntheticBatch {
    MultiTaskDataset train;
    MultiTaskDataset test;
    std::vector<int> outlier_task_ids;
    int attempts = 1;  // function draws needed to satisfy class balance
};

/// Inlier task t: w * phi(x) + (1 - w) * psi_t(x); each outlier task swaps phi
/// for its own independently drawn function. Classification labels are
/// sign(F) mapped to {0, 1}, with sign(0) -> 1.
SyntheticBatch gen_multitask(const SynthConfig& cfg, std::mt19937_64& rng);

}  // namespace rmtgb
