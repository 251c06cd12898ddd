#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "rmtgb/core.hpp"
#include "rmtgb/stump.hpp"

namespace rmtgb {

/// Called once per boosting round with the component name, the 1-based round
/// and the mean training loss of the full model after that round.
using RoundLogger = std::function<void(std::string_view component, int round, double loss)>;

/// base_score + shrinkage * sum of stump outputs.
struct ComponentEnsemble {
    std::vector<Stump> stumps;
    double shrinkage = 1.0;
    std::vector<double> base_score;

    ComponentEnsemble() = default;
    ComponentEnsemble(std::size_t num_outputs, double shrinkage);

    std::size_t num_outputs() const noexcept { return base_score.size(); }
    std::size_t size() const noexcept { return stumps.size(); }

    ScoreMatrix predict(const Matrix& features) const;
    /// out.row(i) += gate * prediction(x_i)
    void accumulate(const Matrix& features, double gate, ScoreMatrix& out) const;
    /// Same with a per-row gate.
    void accumulate(const Matrix& features, std::span<const double> row_gate,
                    ScoreMatrix& out) const;

    bool operator==(const ComponentEnsemble&) const = default;
};

void to_json(nlohmann::json& j, const ComponentEnsemble& e);
void from_json(const nlohmann::json& j, ComponentEnsemble& e);

/// Ensemble JSON with the loss tag at top level.
nlohmann::json ensemble_to_json(const ComponentEnsemble& e, LossKind loss);

enum class InitMode { Zero, Constant };

struct GbParams {
    int rounds = 100;
    double shrinkage = 1.0;
    InitMode init = InitMode::Zero;
};

/// Plain gradient boosting on one sample set. num_outputs is 1 for squared
/// error and K for cross-entropy. With `offset`, rounds start from
/// offset + base score; the offset itself is not stored in the ensemble.
ComponentEnsemble fit_gb(const Matrix& features, std::span<const double> targets, LossKind loss,
                         std::size_t num_outputs, const GbParams& params,
                         const ScoreMatrix* offset = nullptr, const RoundLogger& log = {},
                         std::string_view log_name = "gb");

ScoreMatrix predict_gb(const ComponentEnsemble& ensemble, const Matrix& features);

std::pair<Matrix, std::vector<double>> pool(const MultiTaskDataset& mt);

/// Original columns followed by num_tasks indicator columns.
std::pair<Matrix, std::vector<double>> augment_task_onehot(const MultiTaskDataset& mt);
Matrix augment_task_onehot(const Matrix& features, std::span<const int> task_of, int num_tasks);

enum class BaselineKind { SingleTask, DataPooling, TaskAsFeature };

std::string to_string(BaselineKind kind);

struct BaselineModel {
    BaselineKind kind = BaselineKind::SingleTask;
    LossKind loss = LossKind::SquaredError;
    int num_tasks = 0;
    std::vector<ComponentEnsemble> ensembles;  // T for SingleTask, else 1

    ScoreMatrix predict(const Matrix& features, std::span<const int> task_of) const;
};

BaselineModel fit_baseline(BaselineKind kind, const MultiTaskDataset& mt, LossKind loss,
                           int rounds, double shrinkage, const RoundLogger& log = {});

nlohmann::json baseline_to_json(const BaselineModel& model);
BaselineModel baseline_from_json(const nlohmann::json& j);

/// Two-block multi-task boosting: a shared ensemble on the pooled data, then
/// one ensemble per task continuing from the shared scores.
struct MtgbModel {
    LossKind loss = LossKind::SquaredError;
    ComponentEnsemble shared;
    std::vector<ComponentEnsemble> per_task;

    ScoreMatrix predict(const Matrix& features, int task) const;
};

MtgbModel fit_mtgb(const MultiTaskDataset& mt, LossKind loss, int shared_rounds, int task_rounds,
                   double shrinkage, const RoundLogger& log = {});

}  // namespace rmtgb
