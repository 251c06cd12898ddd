#include "rmtgb/boosting.hpp"

#include <algorithm>
#include <cmath>

namespace rmtgb {

ComponentEnsemble::ComponentEnsemble(std::size_t num_outputs, double shrinkage)
    : shrinkage(shrinkage), base_score(num_outputs, 0.0) {}

void ComponentEnsemble::accumulate(const Matrix& features, double gate, ScoreMatrix& out) const {
    const ScoreMatrix pred = predict(features);
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += gate * pred.data()[i];
}

void ComponentEnsemble::accumulate(const Matrix& features, std::span<const double> row_gate,
                                   ScoreMatrix& out) const {
    if (row_gate.size() != features.rows()) throw InvalidArgument("gate length mismatch");
    const ScoreMatrix pred = predict(features);
    for (std::size_t i = 0; i < pred.rows(); ++i) {
        auto src = pred.row(i);
        auto dst = out.row(i);
        for (std::size_t k = 0; k < src.size(); ++k) dst[k] += row_gate[i] * src[k];
    }
}

ScoreMatrix ComponentEnsemble::predict(const Matrix& features) const {
    ScoreMatrix out(features.rows(), num_outputs());
    for (std::size_t i = 0; i < out.rows(); ++i) {
        std::copy(base_score.begin(), base_score.end(), out.row(i).begin());
    }
    for (const auto& stump : stumps) accumulate_stump(stump, features, shrinkage, out);
    return out;
}

void to_json(nlohmann::json& j, const ComponentEnsemble& e) {
    j = nlohmann::json{{"shrinkage", e.shrinkage}, {"base_score", e.base_score}, {"stumps", e.stumps}};
}

void from_json(const nlohmann::json& j, ComponentEnsemble& e) {
    e.shrinkage = j.at("shrinkage").get<double>();
    e.base_score = j.at("base_score").get<std::vector<double>>();
    e.stumps = j.at("stumps").get<std::vector<Stump>>();
    for (const auto& s : e.stumps) {
        if (s.left.size() != e.base_score.size()) {
            throw ParseError("stump output count differs from base_score");
        }
    }
}

nlohmann::json ensemble_to_json(const ComponentEnsemble& e, LossKind loss) {
    nlohmann::json j = e;
    j["loss"] = to_string(loss);
    return j;
}

namespace {

std::vector<double> initial_score(std::span<const double> targets, LossKind loss,
                                  std::size_t num_outputs, InitMode mode) {
    std::vector<double> base(num_outputs, 0.0);
    if (mode == InitMode::Zero) return base;
    if (loss == LossKind::SquaredError) {
        double total = 0;
        for (double y : targets) total += y;
        base[0] = total / static_cast<double>(targets.size());
        return base;
    }
    // log class prior; unseen classes get a large negative score
    std::vector<double> counts(num_outputs, 0.0);
    for (double y : targets) counts[static_cast<std::size_t>(y)] += 1;
    for (std::size_t k = 0; k < num_outputs; ++k) {
        const double p = counts[k] / static_cast<double>(targets.size());
        base[k] = std::log(std::max(p, 1e-12));
    }
    return base;
}

}  // namespace

ComponentEnsemble fit_gb(const Matrix& features, std::span<const double> targets, LossKind loss,
                         std::size_t num_outputs, const GbParams& params,
                         const ScoreMatrix* offset, const RoundLogger& log,
                         std::string_view log_name) {
    if (features.rows() == 0 || targets.empty()) throw InvalidArgument("fit_gb: empty data");
    if (features.rows() != targets.size()) throw InvalidArgument("fit_gb: shape mismatch");
    if (params.rounds < 0) throw InvalidArgument("fit_gb: negative round count");
    if (!(params.shrinkage > 0 && params.shrinkage <= 1)) {
        throw InvalidArgument("fit_gb: shrinkage must lie in (0, 1]");
    }
    if ((loss == LossKind::SquaredError) != (num_outputs == 1)) {
        throw InvalidArgument("fit_gb: output count does not match loss");
    }
    if (offset && (offset->rows() != features.rows() || offset->cols() != num_outputs)) {
        throw InvalidArgument("fit_gb: offset shape mismatch");
    }

    ComponentEnsemble ensemble(num_outputs, params.shrinkage);
    ensemble.base_score = initial_score(targets, loss, num_outputs, params.init);

    ScoreMatrix scores = offset ? *offset : ScoreMatrix(features.rows(), num_outputs);
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto row = scores.row(i);
        for (std::size_t k = 0; k < num_outputs; ++k) row[k] += ensemble.base_score[k];
    }

    const SortedFeatures sorted(features);
    for (int m = 0; m < params.rounds; ++m) {
        const ScoreMatrix residuals = pseudo_residual(loss, targets, scores);
        Stump stump = fit_stump(sorted, features, residuals);
        accumulate_stump(stump, features, params.shrinkage, scores);
        ensemble.stumps.push_back(std::move(stump));
        if (log) log(log_name, m + 1, loss_value(loss, targets, scores));
    }
    return ensemble;
}

ScoreMatrix predict_gb(const ComponentEnsemble& ensemble, const Matrix& features) {
    for (const auto& s : ensemble.stumps) {
        if (!s.degenerate() && s.feature >= features.cols()) {
            throw InvalidArgument("predict_gb: feature dimension mismatch");
        }
    }
    return ensemble.predict(features);
}

std::pair<Matrix, std::vector<double>> pool(const MultiTaskDataset& mt) {
    return {mt.features, mt.targets};
}

Matrix augment_task_onehot(const Matrix& features, std::span<const int> task_of, int num_tasks) {
    if (task_of.size() != features.rows()) throw InvalidArgument("task id length mismatch");
    const std::size_t d = features.cols();
    Matrix out(features.rows(), d + static_cast<std::size_t>(num_tasks));
    for (std::size_t i = 0; i < features.rows(); ++i) {
        auto src = features.row(i);
        auto dst = out.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
        if (task_of[i] < 0 || task_of[i] >= num_tasks) throw InvalidArgument("task id out of range");
        dst[d + static_cast<std::size_t>(task_of[i])] = 1.0;
    }
    return out;
}

std::pair<Matrix, std::vector<double>> augment_task_onehot(const MultiTaskDataset& mt) {
    return {augment_task_onehot(mt.features, mt.task_of, mt.num_tasks), mt.targets};
}

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::SingleTask: return "st-gb";
        case BaselineKind::DataPooling: return "dp-gb";
        case BaselineKind::TaskAsFeature: return "taf-gb";
    }
    return "unknown";
}

ScoreMatrix BaselineModel::predict(const Matrix& features, std::span<const int> task_of) const {
    if (task_of.size() != features.rows()) throw InvalidArgument("task id length mismatch");
    switch (kind) {
        case BaselineKind::DataPooling: return predict_gb(ensembles.at(0), features);
        case BaselineKind::TaskAsFeature:
            return predict_gb(ensembles.at(0), augment_task_onehot(features, task_of, num_tasks));
        case BaselineKind::SingleTask: break;
    }
    const std::size_t k_out = ensembles.at(0).num_outputs();
    ScoreMatrix out(features.rows(), k_out);
    std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(num_tasks));
    for (std::size_t i = 0; i < task_of.size(); ++i) {
        if (task_of[i] < 0 || task_of[i] >= num_tasks) throw InvalidArgument("unknown task id");
        rows[static_cast<std::size_t>(task_of[i])].push_back(i);
    }
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].empty()) continue;
        const ScoreMatrix part = predict_gb(ensembles[t], features.select_rows(rows[t]));
        for (std::size_t j = 0; j < rows[t].size(); ++j) {
            std::copy(part.row(j).begin(), part.row(j).end(), out.row(rows[t][j]).begin());
        }
    }
    return out;
}

BaselineModel fit_baseline(BaselineKind kind, const MultiTaskDataset& mt, LossKind loss,
                           int rounds, double shrinkage, const RoundLogger& log) {
    mt.validate(loss);
    BaselineModel model;
    model.kind = kind;
    model.loss = loss;
    model.num_tasks = mt.num_tasks;
    const GbParams params{rounds, shrinkage, InitMode::Zero};
    switch (kind) {
        case BaselineKind::SingleTask: {
            const auto slices = mt.task_indices();
            for (std::size_t t = 0; t < slices.size(); ++t) {
                if (slices[t].size() < 2) {
                    throw InvalidArgument("st-gb: task " + std::to_string(t) +
                                          " has fewer than 2 samples");
                }
                const MultiTaskDataset part = mt.subset(slices[t]);
                model.ensembles.push_back(fit_gb(part.features, part.targets, loss,
                                                 mt.num_outputs(), params, nullptr, log,
                                                 "task" + std::to_string(t)));
            }
            break;
        }
        case BaselineKind::DataPooling: {
            auto [x, y] = pool(mt);
            model.ensembles.push_back(
                fit_gb(x, y, loss, mt.num_outputs(), params, nullptr, log, "pooled"));
            break;
        }
        case BaselineKind::TaskAsFeature: {
            auto [x, y] = augment_task_onehot(mt);
            model.ensembles.push_back(
                fit_gb(x, y, loss, mt.num_outputs(), params, nullptr, log, "pooled"));
            break;
        }
    }
    return model;
}

nlohmann::json baseline_to_json(const BaselineModel& model) {
    return {{"model", to_string(model.kind)},
            {"loss", to_string(model.loss)},
            {"num_tasks", model.num_tasks},
            {"ensembles", model.ensembles}};
}

BaselineModel baseline_from_json(const nlohmann::json& j) {
    BaselineModel model;
    const auto name = j.at("model").get<std::string>();
    if (name == "st-gb") {
        model.kind = BaselineKind::SingleTask;
    } else if (name == "dp-gb") {
        model.kind = BaselineKind::DataPooling;
    } else if (name == "taf-gb") {
        model.kind = BaselineKind::TaskAsFeature;
    } else {
        throw ParseError("unknown baseline model: " + name);
    }
    model.loss = loss_from_string(j.at("loss").get<std::string>());
    model.num_tasks = j.at("num_tasks").get<int>();
    model.ensembles = j.at("ensembles").get<std::vector<ComponentEnsemble>>();
    const std::size_t expected =
        model.kind == BaselineKind::SingleTask ? static_cast<std::size_t>(model.num_tasks) : 1;
    if (model.ensembles.size() != expected) throw ParseError("wrong number of ensembles");
    return model;
}

ScoreMatrix MtgbModel::predict(const Matrix& features, int task) const {
    if (task < 0 || static_cast<std::size_t>(task) >= per_task.size()) {
        throw InvalidArgument("unknown task id");
    }
    ScoreMatrix out = shared.predict(features);
    per_task[static_cast<std::size_t>(task)].accumulate(features, 1.0, out);
    return out;
}

MtgbModel fit_mtgb(const MultiTaskDataset& mt, LossKind loss, int shared_rounds, int task_rounds,
                   double shrinkage, const RoundLogger& log) {
    mt.validate(loss);
    MtgbModel model;
    model.loss = loss;
    model.shared = fit_gb(mt.features, mt.targets, loss, mt.num_outputs(),
                          {shared_rounds, shrinkage, InitMode::Zero}, nullptr, log, "shared");
    const auto slices = mt.task_indices();
    for (std::size_t t = 0; t < slices.size(); ++t) {
        const MultiTaskDataset part = mt.subset(slices[t]);
        const ScoreMatrix start = model.shared.predict(part.features);
        model.per_task.push_back(fit_gb(part.features, part.targets, loss, mt.num_outputs(),
                                        {task_rounds, shrinkage, InitMode::Zero}, &start, log,
                                        "task" + std::to_string(t)));
    }
    return model;
}

}  // namespace rmtgb
