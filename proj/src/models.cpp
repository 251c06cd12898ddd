#include "rmtgb/models.hpp"

#include <algorithm>
#include <optional>

namespace rmtgb {

std::string to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::Rmtgb: return "rmtgb";
        case ModelFamily::Mtgb: return "mtgb";
        case ModelFamily::SingleTask: return "st-gb";
        case ModelFamily::DataPooling: return "dp-gb";
        case ModelFamily::TaskAsFeature: return "taf-gb";
    }
    return "unknown";
}

ModelFamily family_from_string(const std::string& name) {
    if (name == "rmtgb" || name == "r-mtgb") return ModelFamily::Rmtgb;
    if (name == "mtgb") return ModelFamily::Mtgb;
    if (name == "st-gb") return ModelFamily::SingleTask;
    if (name == "dp-gb") return ModelFamily::DataPooling;
    if (name == "taf-gb") return ModelFamily::TaskAsFeature;
    throw InvalidArgument("unknown model: " + name);
}

std::string describe(ModelFamily family, const Hyperparams& hp) {
    switch (family) {
        case ModelFamily::Rmtgb:
            return "m1=" + std::to_string(hp.m1) + " m2=" + std::to_string(hp.m2) +
                   " m3=" + std::to_string(hp.m3);
        case ModelFamily::Mtgb: return "m1=" + std::to_string(hp.m1) + " m3=" + std::to_string(hp.m3);
        case ModelFamily::SingleTask: return "m3=" + std::to_string(hp.m3);
        case ModelFamily::DataPooling:
        case ModelFamily::TaskAsFeature: return "m1=" + std::to_string(hp.m1);
    }
    return {};
}

namespace {

BaselineKind baseline_kind(ModelFamily family) {
    switch (family) {
        case ModelFamily::SingleTask: return BaselineKind::SingleTask;
        case ModelFamily::DataPooling: return BaselineKind::DataPooling;
        case ModelFamily::TaskAsFeature: return BaselineKind::TaskAsFeature;
        default: break;
    }
    throw InvalidArgument("not a baseline family");
}

}  // namespace

TrainedModel fit_model(ModelFamily family, const Hyperparams& hp, const MultiTaskDataset& train,
                       LossKind loss, const FitOptions& options, const RoundLogger& log) {
    switch (family) {
        case ModelFamily::Rmtgb: {
            RmtgbConfig cfg;
            cfg.m1 = hp.m1;
            cfg.m2 = hp.m2;
            cfg.m3 = hp.m3;
            cfg.shrinkage = options.shrinkage;
            cfg.theta_init_mean = options.theta_init_mean;
            cfg.theta_init_std = options.theta_init_std;
            cfg.theta_learning_rate = options.theta_learning_rate;
            cfg.seed = options.seed;
            return fit_rmtgb(train, loss, cfg, log);
        }
        case ModelFamily::Mtgb: return fit_mtgb(train, loss, hp.m1, hp.m3, options.shrinkage, log);
        case ModelFamily::SingleTask:
            return fit_baseline(BaselineKind::SingleTask, train, loss, hp.m3, options.shrinkage, log);
        case ModelFamily::DataPooling:
        case ModelFamily::TaskAsFeature:
            return fit_baseline(baseline_kind(family), train, loss, hp.m1, options.shrinkage, log);
    }
    throw InvalidArgument("unknown model family");
}

namespace {

ComponentEnsemble truncated(const ComponentEnsemble& e, int rounds) {
    ComponentEnsemble out = e;
    out.stumps.resize(static_cast<std::size_t>(rounds));
    return out;
}

int max_of(const std::vector<Hyperparams>& grid, int Hyperparams::*field) {
    int m = 0;
    for (const auto& hp : grid) m = std::max(m, hp.*field);
    return m;
}

}  // namespace

std::vector<TrainedModel> fit_grid(ModelFamily family, const std::vector<Hyperparams>& grid,
                                   const MultiTaskDataset& train, LossKind loss,
                                   const FitOptions& options) {
    for (const auto& hp : grid) {
        if (hp.m1 < 0 || hp.m2 < 0 || hp.m3 < 0) throw InvalidArgument("round counts must be nonnegative");
    }
    std::vector<std::optional<TrainedModel>> out(grid.size());
    switch (family) {
        case ModelFamily::Rmtgb: {
            RmtgbConfig cfg;
            cfg.shrinkage = options.shrinkage;
            cfg.theta_init_mean = options.theta_init_mean;
            cfg.theta_init_std = options.theta_init_std;
            cfg.theta_learning_rate = options.theta_learning_rate;
            cfg.seed = options.seed;
            std::map<int, std::map<int, std::vector<std::size_t>>> chains;
            for (std::size_t c = 0; c < grid.size(); ++c) chains[grid[c].m1][grid[c].m2].push_back(c);
            RmtgbTrainer shared(train, loss, cfg);
            int done_m1 = 0;
            for (const auto& [m1, by_m2] : chains) {
                shared.run_shared(m1 - done_m1);
                done_m1 = m1;
                RmtgbTrainer gated = shared.fork();
                int done_m2 = 0;
                for (const auto& [m2, members] : by_m2) {
                    gated.run_gated(m2 - done_m2);
                    done_m2 = m2;
                    int m3 = 0;
                    for (auto c : members) m3 = std::max(m3, grid[c].m3);
                    const RmtgbModel full = gated.finish(m3);
                    for (auto c : members) out[c] = truncate_task_rounds(full, grid[c].m3);
                }
            }
            break;
        }
        case ModelFamily::Mtgb: {
            std::map<int, std::vector<std::size_t>> chains;
            for (std::size_t c = 0; c < grid.size(); ++c) chains[grid[c].m1].push_back(c);
            for (const auto& [m1, members] : chains) {
                int m3 = 0;
                for (auto c : members) m3 = std::max(m3, grid[c].m3);
                const MtgbModel full = fit_mtgb(train, loss, m1, m3, options.shrinkage);
                for (auto c : members) {
                    MtgbModel m = full;
                    for (auto& e : m.per_task) e = truncated(e, grid[c].m3);
                    out[c] = std::move(m);
                }
            }
            break;
        }
        case ModelFamily::SingleTask:
        case ModelFamily::DataPooling:
        case ModelFamily::TaskAsFeature: {
            int Hyperparams::*field = family == ModelFamily::SingleTask ? &Hyperparams::m3 : &Hyperparams::m1;
            const BaselineModel full =
                fit_baseline(baseline_kind(family), train, loss, max_of(grid, field), options.shrinkage);
            for (std::size_t c = 0; c < grid.size(); ++c) {
                BaselineModel m = full;
                for (auto& e : m.ensembles) e = truncated(e, grid[c].*field);
                out[c] = std::move(m);
            }
            break;
        }
    }
    std::vector<TrainedModel> models;
    models.reserve(out.size());
    for (auto& m : out) models.push_back(std::move(*m));
    return models;
}

LossKind model_loss(const TrainedModel& model) {
    return std::visit([](const auto& m) { return m.loss; }, model);
}

std::size_t model_outputs(const TrainedModel& model) {
    if (const auto* m = std::get_if<RmtgbModel>(&model)) return m->shared.num_outputs();
    if (const auto* m = std::get_if<MtgbModel>(&model)) return m->shared.num_outputs();
    return std::get<BaselineModel>(model).ensembles.at(0).num_outputs();
}

ScoreMatrix predict_scores(const TrainedModel& model, const Matrix& features,
                           std::span<const int> task_of) {
    if (task_of.size() != features.rows()) throw InvalidArgument("task id length mismatch");
    if (const auto* m = std::get_if<MtgbModel>(&model)) {
        ScoreMatrix out(features.rows(), m->shared.num_outputs());
        std::vector<std::vector<std::size_t>> rows(m->per_task.size());
        for (std::size_t i = 0; i < task_of.size(); ++i) {
            if (task_of[i] < 0 || static_cast<std::size_t>(task_of[i]) >= rows.size()) {
                throw InvalidArgument("unknown task id");
            }
            rows[static_cast<std::size_t>(task_of[i])].push_back(i);
        }
        for (std::size_t t = 0; t < rows.size(); ++t) {
            if (rows[t].empty()) continue;
            const ScoreMatrix part = m->predict(features.select_rows(rows[t]), static_cast<int>(t));
            for (std::size_t j = 0; j < rows[t].size(); ++j) {
                std::copy(part.row(j).begin(), part.row(j).end(), out.row(rows[t][j]).begin());
            }
        }
        return out;
    }
    if (const auto* m = std::get_if<RmtgbModel>(&model)) return m->predict(features, task_of);
    return std::get<BaselineModel>(model).predict(features, task_of);
}

std::vector<double> predict_values(const TrainedModel& model, const Matrix& features,
                                   std::span<const int> task_of) {
    const ScoreMatrix scores = predict_scores(model, features, task_of);
    std::vector<double> out(scores.rows());
    const bool regression = model_loss(model) == LossKind::SquaredError;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto row = scores.row(i);
        out[i] = regression ? row[0]
                            : static_cast<double>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

nlohmann::json model_to_json(const TrainedModel& model) {
    if (const auto* m = std::get_if<RmtgbModel>(&model)) return rmtgb_to_json(*m);
    if (const auto* m = std::get_if<MtgbModel>(&model)) {
        return {{"model", "mtgb"},
                {"loss", to_string(m->loss)},
                {"shared", m->shared},
                {"per_task", m->per_task}};
    }
    return baseline_to_json(std::get<BaselineModel>(model));
}

TrainedModel model_from_json(const nlohmann::json& j) {
    try {
        const auto name = j.at("model").get<std::string>();
        if (name == "rmtgb") return rmtgb_from_json(j);
        if (name == "mtgb") {
            MtgbModel m;
            m.loss = loss_from_string(j.at("loss").get<std::string>());
            m.shared = j.at("shared").get<ComponentEnsemble>();
            m.per_task = j.at("per_task").get<std::vector<ComponentEnsemble>>();
            return m;
        }
        return baseline_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
}

std::vector<Hyperparams> GridSpec::expand() const {
    std::vector<Hyperparams> out;
    for (int a : m1) {
        for (int b : m2) {
            for (int c : m3) out.push_back({a, b, c});
        }
    }
    return out;
}

GridSpec default_grid(ModelFamily family) {
    switch (family) {
        case ModelFamily::Rmtgb: return {{0, 20, 30, 50}, {20, 30, 50}, {0, 20, 30, 50, 100}};
        case ModelFamily::Mtgb: return {{20, 30, 50}, {0}, {0, 20, 30, 50, 100}};
        case ModelFamily::SingleTask: return {{0}, {0}, {20, 30, 50, 100}};
        case ModelFamily::DataPooling:
        case ModelFamily::TaskAsFeature: return {{20, 30, 50, 100}, {0}, {0}};
    }
    return {};
}

std::map<ModelFamily, GridSpec> grids_from_json(const nlohmann::json& j) {
    std::map<ModelFamily, GridSpec> out;
    for (auto family : {ModelFamily::Rmtgb, ModelFamily::Mtgb, ModelFamily::SingleTask,
                        ModelFamily::DataPooling, ModelFamily::TaskAsFeature}) {
        out[family] = default_grid(family);
    }
    try {
        for (const auto& [name, spec] : j.items()) {
            GridSpec& g = out[family_from_string(name)];
            if (spec.contains("m1")) g.m1 = spec.at("m1").get<std::vector<int>>();
            if (spec.contains("m2")) g.m2 = spec.at("m2").get<std::vector<int>>();
            if (spec.contains("m3")) g.m3 = spec.at("m3").get<std::vector<int>>();
            if (g.m1.empty() || g.m2.empty() || g.m3.empty()) {
                throw InvalidArgument("grid for " + name + " has an empty block list");
            }
            for (const auto* v : {&g.m1, &g.m2, &g.m3}) {
                if (std::any_of(v->begin(), v->end(), [](int x) { return x < 0; })) {
                    throw InvalidArgument("grid for " + name + " has a negative round count");
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("grid file: ") + e.what());
    }
    return out;
}

}  // namespace rmtgb
