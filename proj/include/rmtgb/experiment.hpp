#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rmtgb/eval.hpp"
#include "rmtgb/models.hpp"
#include "rmtgb/synth.hpp"

namespace rmtgb {

/// Independent stream seed for (root, index, tag); stable as more batches are added.
std::uint64_t child_seed(std::uint64_t root, std::uint64_t index, std::uint64_t tag = 0);

struct ExperimentConfig {
    /// Synthetic source; used when csv_path is empty.
    SynthConfig synth = SynthConfig::paper_preset(TaskKind::Regression);
    std::string preset = "paper-synth-reg";
    /// CSV source, split 80:20 per task for every batch.
    std::string csv_path;
    bool csv_classification = false;

    std::vector<ModelFamily> models{ModelFamily::Rmtgb, ModelFamily::Mtgb, ModelFamily::SingleTask,
                                    ModelFamily::DataPooling, ModelFamily::TaskAsFeature};
    std::map<ModelFamily, GridSpec> grids;  // missing entries use default_grid
    int num_batches = 100;
    std::uint64_t root_seed = 0;
    int jobs = 1;
    int folds = 5;
    double train_ratio = 0.8;
    FitOptions fit;

    void validate() const;
    bool classification() const noexcept;
    const GridSpec& grid(ModelFamily family) const;
    nlohmann::json to_json() const;
};

/// Applies `--preset` names: paper-synth-reg, paper-synth-clf.
ExperimentConfig experiment_from_preset(const std::string& preset);

/// Keys: preset, synth (overrides), csv, classification, models, grids,
/// batches, seed, jobs, folds, train_ratio, shrinkage, theta_init_mean,
/// theta_init_std, theta_learning_rate. Unknown keys are rejected.
ExperimentConfig experiment_from_json(const nlohmann::json& j);

struct ModelBatchResult {
    ModelFamily family{};
    Hyperparams best;
    double cv_score = 0;
    std::map<MetricKind, std::vector<double>> test;   // per task
    std::map<MetricKind, std::vector<double>> train;  // per task
};

struct BatchResult {
    int batch = 0;
    std::uint64_t seed = 0;
    std::vector<int> outlier_task_ids;
    std::vector<ModelBatchResult> models;  // in config order
    std::vector<double> gates;             // sigmoid(theta) of the refit R-MTGB, if run
};

struct MetricSummary {
    double train_mean = 0;
    double train_std = 0;
    double test_mean = 0;
    double test_std = 0;
};

struct BenchmarkReport {
    ExperimentConfig config;
    std::vector<BatchResult> batches;
    std::vector<MetricKind> metrics;
    /// model -> metric -> moments over batches of the task-averaged batch score.
    std::map<ModelFamily, std::map<MetricKind, MetricSummary>> summary;
    std::vector<std::vector<double>> aligned_gates;  // one per batch, empty without R-MTGB
    RankSummary ranks;                              // batches as scenarios, primary metric
};

std::vector<MetricKind> metrics_for(bool classification);

/// Runs one batch of the protocol; exposed for tests.
BatchResult run_batch(const ExperimentConfig& cfg, int batch);

using ProgressFn = std::function<void(const std::string& line)>;

BenchmarkReport run_benchmark(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// metrics.csv, train_metrics.csv, summary.csv, rank.csv, theta.csv,
/// best_params.csv and manifest.json under `dir` (created if missing).
void write_report(const BenchmarkReport& report, const std::string& dir);

}  // namespace rmtgb
