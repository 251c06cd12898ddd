#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "rmtgb/boosting.hpp"
#include "rmtgb/core.hpp"

namespace rmtgb {

struct RmtgbConfig {
    int m1 = 20;  // shared rounds
    int m2 = 20;  // outlier / non-outlier rounds
    int m3 = 20;  // per-task rounds
    double shrinkage = 1.0;
    double theta_init_mean = 0.0;
    double theta_init_std = 1.0;
    /// Step size of the theta descent; the shrinkage is used when unset.
    std::optional<double> theta_learning_rate;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Four-component gated ensemble. For task t:
///   F_t(x) = shared(x) + (1 - s_t) * non_outlier(x) + s_t * outlier(x) + per_task[t](x)
/// with s_t = sigmoid(theta[t]).
struct RmtgbModel {
    LossKind loss = LossKind::SquaredError;
    std::array<int, 3> rounds{0, 0, 0};
    double shrinkage = 1.0;
    ComponentEnsemble shared;
    ComponentEnsemble outlier;
    ComponentEnsemble non_outlier;
    std::vector<ComponentEnsemble> per_task;
    std::vector<double> theta;

    int num_tasks() const noexcept { return static_cast<int>(per_task.size()); }
    std::vector<double> gates() const;  // sigmoid(theta)

    ScoreMatrix predict(const Matrix& features, int task) const;
    ScoreMatrix predict(const Matrix& features, std::span<const int> task_of) const;
};

ScoreMatrix predict_rmtgb(const RmtgbModel& model, const Matrix& features, int task);

/// Residual targets of the shared component: the plain pseudo-residual.
ScoreMatrix shared_residuals(LossKind loss, const MultiTaskDataset& mt, const ScoreMatrix& scores);

/// Pseudo-residual rows scaled by sigmoid(theta_t) of the row's task.
ScoreMatrix outlier_residuals(LossKind loss, const MultiTaskDataset& mt, const ScoreMatrix& scores,
                              std::span<const double> theta);

/// Pseudo-residual rows scaled by 1 - sigmoid(theta_t).
ScoreMatrix non_outlier_residuals(LossKind loss, const MultiTaskDataset& mt,
                                  const ScoreMatrix& scores, std::span<const double> theta);

/// Gradient of the summed training loss with respect to each theta_t:
///   sum_{i in t} sum_k -r_ik * s_t (1 - s_t) * (outlier_ik - non_outlier_ik)
/// where the component scores are the raw, ungated outputs.
std::vector<double> theta_gradient(LossKind loss, const MultiTaskDataset& mt,
                                   const ScoreMatrix& scores, const ScoreMatrix& outlier_scores,
                                   const ScoreMatrix& non_outlier_scores,
                                   std::span<const double> theta);

/// Residual targets of one task's fine-tuning component.
ScoreMatrix task_residuals(LossKind loss, std::span<const double> task_targets,
                           const ScoreMatrix& scores);

RmtgbModel fit_rmtgb(const MultiTaskDataset& mt, LossKind loss, const RmtgbConfig& config,
                     const RoundLogger& log = {});

/// Block-by-block training. fit_rmtgb is run_shared(m1), run_gated(m2),
/// finish(m3); fork() copies the state so several continuations can share
/// one prefix. The dataset must outlive the trainer.
class RmtgbTrainer {
public:
    RmtgbTrainer(const MultiTaskDataset& mt, LossKind loss, const RmtgbConfig& config,
                 const RoundLogger& log = {});

    void run_shared(int rounds);
    void run_gated(int rounds);
    /// Model after `rounds` task rounds on top of the current state.
    RmtgbModel finish(int rounds) const;
    RmtgbTrainer fork() const;
    const RmtgbModel& model() const noexcept;

private:
    struct State;
    std::shared_ptr<State> state_;
};

/// Keeps the first `rounds` stumps of every per-task ensemble.
RmtgbModel truncate_task_rounds(const RmtgbModel& model, int rounds);

nlohmann::json rmtgb_to_json(const RmtgbModel& model);
RmtgbModel rmtgb_from_json(const nlohmann::json& j);

}  // namespace rmtgb
