#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "rmtgb/boosting.hpp"
#include "rmtgb/rmtgb.hpp"

namespace rmtgb {

enum class ModelFamily { Rmtgb, Mtgb, SingleTask, DataPooling, TaskAsFeature };

std::string to_string(ModelFamily family);
ModelFamily family_from_string(const std::string& name);

/// Round counts per block. Families read only their own blocks:
/// rmtgb m1/m2/m3, mtgb m1/m3, st-gb m3, dp-gb and taf-gb m1.
struct Hyperparams {
    int m1 = 0;
    int m2 = 0;
    int m3 = 0;
    bool operator==(const Hyperparams&) const = default;
};

std::string describe(ModelFamily family, const Hyperparams& hp);

struct FitOptions {
    double shrinkage = 1.0;
    double theta_init_mean = 0.0;
    double theta_init_std = 1.0;
    std::optional<double> theta_learning_rate;
    std::uint64_t seed = 0;
};

using TrainedModel = std::variant<RmtgbModel, MtgbModel, BaselineModel>;

TrainedModel fit_model(ModelFamily family, const Hyperparams& hp, const MultiTaskDataset& train,
                       LossKind loss, const FitOptions& options, const RoundLogger& log = {});

/// Fits every candidate. Candidates whose round counts extend one another share
/// their common prefix of training; element c equals fit_model(family, grid[c], ...).
std::vector<TrainedModel> fit_grid(ModelFamily family, const std::vector<Hyperparams>& grid,
                                   const MultiTaskDataset& train, LossKind loss,
                                   const FitOptions& options);

LossKind model_loss(const TrainedModel& model);
std::size_t model_outputs(const TrainedModel& model);
ScoreMatrix predict_scores(const TrainedModel& model, const Matrix& features,
                           std::span<const int> task_of);

/// Regression: the score. Classification: argmax class index.
std::vector<double> predict_values(const TrainedModel& model, const Matrix& features,
                                   std::span<const int> task_of);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

/// Cartesian product of the per-block value lists.
struct GridSpec {
    std::vector<int> m1{0};
    std::vector<int> m2{0};
    std::vector<int> m3{0};

    std::vector<Hyperparams> expand() const;
};

/// Estimator-count grids of the reference experiments.
GridSpec default_grid(ModelFamily family);

/// Reads {"rmtgb": {"m1": [...], ...}, ...}; absent families keep the default grid.
std::map<ModelFamily, GridSpec> grids_from_json(const nlohmann::json& j);

}  // namespace rmtgb
