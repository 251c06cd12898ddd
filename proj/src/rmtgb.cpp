#include "rmtgb/rmtgb.hpp"

#include <cmath>
#include <memory>
#include <random>

namespace rmtgb {

void RmtgbConfig::validate() const {
    if (m1 < 0 || m2 < 0 || m3 < 0) throw InvalidArgument("round counts must be nonnegative");
    if (!(shrinkage > 0 && shrinkage <= 1)) throw InvalidArgument("shrinkage must lie in (0, 1]");
    if (!(theta_init_std >= 0)) throw InvalidArgument("theta_init_std must be nonnegative");
    if (theta_learning_rate && !(*theta_learning_rate >= 0)) {
        throw InvalidArgument("theta_learning_rate must be nonnegative");
    }
}

std::vector<double> RmtgbModel::gates() const {
    std::vector<double> out;
    out.reserve(theta.size());
    for (double t : theta) out.push_back(sigmoid(t));
    return out;
}

ScoreMatrix RmtgbModel::predict(const Matrix& features, int task) const {
    if (task < 0 || task >= num_tasks()) throw InvalidArgument("unknown task id");
    const double gate = sigmoid(theta[static_cast<std::size_t>(task)]);
    ScoreMatrix out = shared.predict(features);
    non_outlier.accumulate(features, 1.0 - gate, out);
    outlier.accumulate(features, gate, out);
    per_task[static_cast<std::size_t>(task)].accumulate(features, 1.0, out);
    return out;
}

ScoreMatrix RmtgbModel::predict(const Matrix& features, std::span<const int> task_of) const {
    if (task_of.size() != features.rows()) throw InvalidArgument("task id length mismatch");
    ScoreMatrix out(features.rows(), shared.num_outputs());
    std::vector<std::vector<std::size_t>> rows(per_task.size());
    for (std::size_t i = 0; i < task_of.size(); ++i) {
        if (task_of[i] < 0 || task_of[i] >= num_tasks()) throw InvalidArgument("unknown task id");
        rows[static_cast<std::size_t>(task_of[i])].push_back(i);
    }
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].empty()) continue;
        const ScoreMatrix part = predict(features.select_rows(rows[t]), static_cast<int>(t));
        for (std::size_t j = 0; j < rows[t].size(); ++j) {
            std::copy(part.row(j).begin(), part.row(j).end(), out.row(rows[t][j]).begin());
        }
    }
    return out;
}

ScoreMatrix predict_rmtgb(const RmtgbModel& model, const Matrix& features, int task) {
    return model.predict(features, task);
}

namespace {

void check_theta(const MultiTaskDataset& mt, std::span<const double> theta) {
    if (theta.size() != static_cast<std::size_t>(mt.num_tasks)) {
        throw InvalidArgument("theta length differs from the number of tasks");
    }
}

void check_scores(const MultiTaskDataset& mt, const ScoreMatrix& scores) {
    if (scores.rows() != mt.size() || scores.cols() != mt.num_outputs()) {
        throw InvalidArgument("score matrix shape mismatch");
    }
}

ScoreMatrix gated_residuals(LossKind loss, const MultiTaskDataset& mt, const ScoreMatrix& scores,
                            std::span<const double> theta, bool outlier_side) {
    check_theta(mt, theta);
    ScoreMatrix r = pseudo_residual(loss, mt.targets, scores);
    for (std::size_t i = 0; i < r.rows(); ++i) {
        const double s = sigmoid(theta[static_cast<std::size_t>(mt.task_of[i])]);
        const double gate = outlier_side ? s : 1.0 - s;
        for (double& v : r.row(i)) v *= gate;
    }
    return r;
}

// Writes shared + gated scores, without the per-task term, into `out`.
void gated_total(const ScoreMatrix& shared_scores, const ScoreMatrix& outlier_scores,
                 const ScoreMatrix& non_outlier_scores, std::span<const int> task_of,
                 std::span<const double> gate, ScoreMatrix& out) {
    out = shared_scores;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const double s = gate[static_cast<std::size_t>(task_of[i])];
        auto dst = out.row(i);
        auto non = non_outlier_scores.row(i);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += (1.0 - s) * non[k];
    }
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const double s = gate[static_cast<std::size_t>(task_of[i])];
        auto dst = out.row(i);
        auto outl = outlier_scores.row(i);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += s * outl[k];
    }
}

std::vector<double> sigmoid_all(std::span<const double> theta) {
    std::vector<double> out;
    out.reserve(theta.size());
    for (double t : theta) out.push_back(sigmoid(t));
    return out;
}

}  // namespace

ScoreMatrix shared_residuals(LossKind loss, const MultiTaskDataset& mt,
                             const ScoreMatrix& scores) {
    check_scores(mt, scores);
    return pseudo_residual(loss, mt.targets, scores);
}

ScoreMatrix outlier_residuals(LossKind loss, const MultiTaskDataset& mt, const ScoreMatrix& scores,
                              std::span<const double> theta) {
    check_scores(mt, scores);
    return gated_residuals(loss, mt, scores, theta, true);
}

ScoreMatrix non_outlier_residuals(LossKind loss, const MultiTaskDataset& mt,
                                  const ScoreMatrix& scores, std::span<const double> theta) {
    check_scores(mt, scores);
    return gated_residuals(loss, mt, scores, theta, false);
}

std::vector<double> theta_gradient(LossKind loss, const MultiTaskDataset& mt,
                                   const ScoreMatrix& scores, const ScoreMatrix& outlier_scores,
                                   const ScoreMatrix& non_outlier_scores,
                                   std::span<const double> theta) {
    check_theta(mt, theta);
    check_scores(mt, scores);
    check_scores(mt, outlier_scores);
    check_scores(mt, non_outlier_scores);
    const ScoreMatrix r = pseudo_residual(loss, mt.targets, scores);
    std::vector<double> grad(theta.size(), 0.0);
    for (std::size_t i = 0; i < r.rows(); ++i) {
        const auto t = static_cast<std::size_t>(mt.task_of[i]);
        auto ri = r.row(i);
        auto o = outlier_scores.row(i);
        auto n = non_outlier_scores.row(i);
        double acc = 0;
        for (std::size_t k = 0; k < ri.size(); ++k) acc += ri[k] * (o[k] - n[k]);
        grad[t] -= acc;
    }
    for (std::size_t t = 0; t < grad.size(); ++t) {
        const double s = sigmoid(theta[t]);
        grad[t] *= s * (1.0 - s);
    }
    return grad;
}

ScoreMatrix task_residuals(LossKind loss, std::span<const double> task_targets,
                           const ScoreMatrix& scores) {
    if (task_targets.empty()) throw InvalidArgument("task_residuals: empty task slice");
    return pseudo_residual(loss, task_targets, scores);
}

struct RmtgbTrainer::State {
    const MultiTaskDataset* mt = nullptr;
    LossKind loss = LossKind::SquaredError;
    RoundLogger log;
    std::shared_ptr<const SortedFeatures> sorted;
    std::vector<std::vector<std::size_t>> slices;
    double eta = 1.0;
    double theta_lr = 1.0;
    RmtgbModel model;
    ScoreMatrix shared_scores;
    ScoreMatrix outlier_scores;
    ScoreMatrix non_outlier_scores;
};

RmtgbTrainer::RmtgbTrainer(const MultiTaskDataset& mt, LossKind loss, const RmtgbConfig& config,
                           const RoundLogger& log)
    : state_(std::make_shared<State>()) {
    mt.validate(loss);
    config.validate();
    State& s = *state_;
    s.mt = &mt;
    s.loss = loss;
    s.log = log;
    s.slices = mt.task_indices();
    s.eta = config.shrinkage;
    s.theta_lr = config.theta_learning_rate.value_or(config.shrinkage);
    s.sorted = std::make_shared<const SortedFeatures>(mt.features);

    const std::size_t n = mt.size();
    const std::size_t k_out = mt.num_outputs();
    const auto num_tasks = static_cast<std::size_t>(mt.num_tasks);
    RmtgbModel& model = s.model;
    model.loss = loss;
    model.shrinkage = config.shrinkage;
    model.shared = ComponentEnsemble(k_out, config.shrinkage);
    model.outlier = ComponentEnsemble(k_out, config.shrinkage);
    model.non_outlier = ComponentEnsemble(k_out, config.shrinkage);
    model.per_task.assign(num_tasks, ComponentEnsemble(k_out, config.shrinkage));

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> theta_dist(0.0, 1.0);
    model.theta.resize(num_tasks);
    for (double& t : model.theta) t = config.theta_init_mean + config.theta_init_std * theta_dist(rng);

    s.shared_scores = ScoreMatrix(n, k_out);
    s.outlier_scores = ScoreMatrix(n, k_out);
    s.non_outlier_scores = ScoreMatrix(n, k_out);
}

RmtgbTrainer RmtgbTrainer::fork() const {
    RmtgbTrainer copy(*this);
    copy.state_ = std::make_shared<State>(*state_);
    return copy;
}

const RmtgbModel& RmtgbTrainer::model() const noexcept { return state_->model; }

void RmtgbTrainer::run_shared(int rounds) {
    State& s = *state_;
    if (s.model.rounds[1] > 0 || s.model.rounds[2] > 0) {
        throw InvalidArgument("shared rounds must precede the gated and task blocks");
    }
    const MultiTaskDataset& mt = *s.mt;
    for (int m = 0; m < rounds; ++m) {
        const ScoreMatrix r = shared_residuals(s.loss, mt, s.shared_scores);
        Stump h = fit_stump(*s.sorted, mt.features, r);
        accumulate_stump(h, mt.features, s.eta, s.shared_scores);
        s.model.shared.stumps.push_back(std::move(h));
        ++s.model.rounds[0];
        if (s.log) s.log("shared", s.model.rounds[0], loss_value(s.loss, mt.targets, s.shared_scores));
    }
}

void RmtgbTrainer::run_gated(int rounds) {
    State& s = *state_;
    if (s.model.rounds[2] > 0) throw InvalidArgument("gated rounds must precede the task block");
    const MultiTaskDataset& mt = *s.mt;
    RmtgbModel& model = s.model;
    ScoreMatrix total;
    for (int m = 0; m < rounds; ++m) {
        gated_total(s.shared_scores, s.outlier_scores, s.non_outlier_scores, mt.task_of,
                    sigmoid_all(model.theta), total);
        const ScoreMatrix r_out = outlier_residuals(s.loss, mt, total, model.theta);
        const ScoreMatrix r_non = non_outlier_residuals(s.loss, mt, total, model.theta);
        Stump h_out = fit_stump(*s.sorted, mt.features, r_out);
        Stump h_non = fit_stump(*s.sorted, mt.features, r_non);
        accumulate_stump(h_out, mt.features, s.eta, s.outlier_scores);
        accumulate_stump(h_non, mt.features, s.eta, s.non_outlier_scores);
        model.outlier.stumps.push_back(std::move(h_out));
        model.non_outlier.stumps.push_back(std::move(h_non));

        gated_total(s.shared_scores, s.outlier_scores, s.non_outlier_scores, mt.task_of,
                    sigmoid_all(model.theta), total);
        const auto grad =
            theta_gradient(s.loss, mt, total, s.outlier_scores, s.non_outlier_scores, model.theta);
        for (std::size_t t = 0; t < model.theta.size(); ++t) model.theta[t] -= s.theta_lr * grad[t];
        ++model.rounds[1];
        if (s.log) {
            gated_total(s.shared_scores, s.outlier_scores, s.non_outlier_scores, mt.task_of,
                        sigmoid_all(model.theta), total);
            s.log("gated", model.rounds[1], loss_value(s.loss, mt.targets, total));
        }
    }
}

RmtgbModel RmtgbTrainer::finish(int rounds) const {
    const State& s = *state_;
    const MultiTaskDataset& mt = *s.mt;
    if (rounds < 0) throw InvalidArgument("round counts must be nonnegative");
    const auto num_tasks = s.slices.size();
    if (rounds > 0) {
        for (std::size_t t = 0; t < num_tasks; ++t) {
            if (s.slices[t].size() < 2) {
                throw InvalidArgument("task " + std::to_string(t) + " has fewer than 2 samples");
            }
        }
    }
    RmtgbModel model = s.model;
    model.rounds[2] = rounds;
    if (rounds == 0) return model;

    ScoreMatrix total = s.shared_scores;
    if (model.rounds[1] > 0) {
        gated_total(s.shared_scores, s.outlier_scores, s.non_outlier_scores, mt.task_of,
                    sigmoid_all(model.theta), total);
    }
    std::vector<MultiTaskDataset> parts;
    std::vector<SortedFeatures> sorted;
    std::vector<ScoreMatrix> scores;
    parts.reserve(num_tasks);
    sorted.reserve(num_tasks);
    for (std::size_t t = 0; t < num_tasks; ++t) {
        parts.push_back(mt.subset(s.slices[t]));
        sorted.emplace_back(parts[t].features);
        scores.push_back(total.select_rows(s.slices[t]));
    }
    for (int m = 0; m < rounds; ++m) {
        for (std::size_t t = 0; t < num_tasks; ++t) {
            const ScoreMatrix r = task_residuals(s.loss, parts[t].targets, scores[t]);
            Stump h = fit_stump(sorted[t], parts[t].features, r);
            accumulate_stump(h, parts[t].features, s.eta, scores[t]);
            model.per_task[t].stumps.push_back(std::move(h));
        }
        if (s.log) {
            double sum = 0;
            for (std::size_t t = 0; t < num_tasks; ++t) {
                sum += loss_value(s.loss, parts[t].targets, scores[t]) *
                       static_cast<double>(parts[t].size());
            }
            s.log("task", m + 1, sum / static_cast<double>(mt.size()));
        }
    }
    return model;
}

RmtgbModel truncate_task_rounds(const RmtgbModel& model, int rounds) {
    if (rounds < 0 || rounds > model.rounds[2]) throw InvalidArgument("cannot truncate to more rounds");
    RmtgbModel out = model;
    out.rounds[2] = rounds;
    for (auto& e : out.per_task) e.stumps.resize(static_cast<std::size_t>(rounds));
    return out;
}

RmtgbModel fit_rmtgb(const MultiTaskDataset& mt, LossKind loss, const RmtgbConfig& config,
                     const RoundLogger& log) {
    config.validate();
    if (config.m3 > 0) {
        const auto slices = mt.task_indices();
        for (std::size_t t = 0; t < slices.size(); ++t) {
            if (slices[t].size() < 2) {
                throw InvalidArgument("task " + std::to_string(t) + " has fewer than 2 samples");
            }
        }
    }
    RmtgbTrainer trainer(mt, loss, config, log);
    trainer.run_shared(config.m1);
    trainer.run_gated(config.m2);
    return trainer.finish(config.m3);
}

nlohmann::json rmtgb_to_json(const RmtgbModel& model) {
    return {{"model", "rmtgb"},
            {"loss", to_string(model.loss)},
            {"rounds", model.rounds},
            {"shrinkage", model.shrinkage},
            {"theta", model.theta},
            {"shared", model.shared},
            {"outlier", model.outlier},
            {"non_outlier", model.non_outlier},
            {"per_task", model.per_task}};
}

RmtgbModel rmtgb_from_json(const nlohmann::json& j) {
    RmtgbModel model;
    model.loss = loss_from_string(j.at("loss").get<std::string>());
    model.rounds = j.at("rounds").get<std::array<int, 3>>();
    model.shrinkage = j.at("shrinkage").get<double>();
    model.theta = j.at("theta").get<std::vector<double>>();
    model.shared = j.at("shared").get<ComponentEnsemble>();
    model.outlier = j.at("outlier").get<ComponentEnsemble>();
    model.non_outlier = j.at("non_outlier").get<ComponentEnsemble>();
    model.per_task = j.at("per_task").get<std::vector<ComponentEnsemble>>();
    if (model.per_task.size() != model.theta.size()) {
        throw ParseError("per_task and theta lengths differ");
    }
    const std::size_t k_out = model.shared.num_outputs();
    auto same_k = [&](const ComponentEnsemble& e) { return e.num_outputs() == k_out; };
    if (!same_k(model.outlier) || !same_k(model.non_outlier)) {
        throw ParseError("components disagree on output count");
    }
    for (const auto& e : model.per_task) {
        if (!same_k(e)) throw ParseError("components disagree on output count");
    }
    return model;
}

}  // namespace rmtgb
