#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rmtgb/core.hpp"

namespace rmtgb {

enum class MetricKind { Accuracy, MacroRecall, Rmse, Mae };

std::string to_string(MetricKind kind);
MetricKind metric_from_string(const std::string& name);
bool higher_is_better(MetricKind kind) noexcept;

/// Predictions are class indices for accuracy / macro recall and real
/// values for rmse / mae. Macro recall skips classes absent from targets.
double metric(MetricKind kind, std::span<const double> targets, std::span<const double> predictions);

/// Per-task random split; each task keeps at least one sample on each side.
std::pair<MultiTaskDataset, MultiTaskDataset> split_train_test(const MultiTaskDataset& data,
                                                               double ratio, std::mt19937_64& rng);

/// Fold id per sample. Samples are dealt round-robin within each task (and
/// within each class of a task for classification) after a seeded shuffle,
/// so every fold touches every task.
std::vector<int> stratified_folds(const MultiTaskDataset& data, int folds, std::uint64_t seed);

/// Scores one candidate trained on `train` and evaluated on `valid`; larger is better.
using CvScorer = std::function<double(std::size_t candidate, const MultiTaskDataset& train,
                                      const MultiTaskDataset& valid)>;

struct GridSearchResult {
    std::size_t best = 0;
    std::vector<double> mean_scores;  // per candidate
};

/// Exhaustive k-fold evaluation of `num_candidates` candidates. The best mean
/// score wins; ties keep the earliest candidate.
GridSearchResult grid_search_cv(std::size_t num_candidates, const MultiTaskDataset& train,
                                int folds, std::uint64_t seed, const CvScorer& scorer);

/// Scores all candidates on one fold at once; returns one score per candidate.
using FoldScorer = std::function<std::vector<double>(const MultiTaskDataset& train,
                                                     const MultiTaskDataset& valid)>;

GridSearchResult grid_search_cv_folds(std::size_t num_candidates, const MultiTaskDataset& train,
                                      int folds, std::uint64_t seed, const FoldScorer& scorer);

/// First vector is the reference; later vectors negatively correlated with it
/// are replaced by 1 - v. Zero-variance vectors are left alone.
std::vector<std::vector<double>> align_theta(const std::vector<std::vector<double>>& sigma_vectors);

double pearson(std::span<const double> a, std::span<const double> b);

/// Studentized-range based Nemenyi constant at alpha = 0.05, k in [2, 10].
double nemenyi_q05(int num_models);
double critical_distance(int num_models, int num_scenarios);

struct RankSummary {
    std::vector<double> avg_rank;  // per model, 1 = best
    double critical_distance = 0;
    int num_scenarios = 0;
    int num_models = 0;
};

/// Fractional ranks per scenario (row), averaged over rows.
RankSummary rank_models(const std::vector<std::vector<double>>& score_table, bool higher_better);

/// Fractional ranks of one row; ties share the average rank.
std::vector<double> fractional_ranks(std::span<const double> scores, bool higher_better);

}  // namespace rmtgb
