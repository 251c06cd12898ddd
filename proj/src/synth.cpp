#include "rmtgb/synth.hpp"

#include <cmath>
#include <numbers>

namespace rmtgb {

double RffFunction::operator()(std::span<const double> x) const {
    if (x.size() != input_dim()) throw InvalidArgument("rff_eval: input dimension mismatch");
    const double scale = length_scale * static_cast<double>(input_dim());
    const double coef = std::sqrt(2.0 * amplitude / static_cast<double>(num_features()));
    double total = 0;
    for (std::size_t i = 0; i < num_features(); ++i) {
        auto w = frequencies.row(i);
        double proj = 0;
        for (std::size_t j = 0; j < x.size(); ++j) proj += w[j] * (x[j] / scale);
        total += weights[i] * coef * std::cos(proj + phases[i]);
    }
    return total;
}

RffFunction sample_rff(std::size_t dim, std::size_t num_features, double length_scale,
                       double amplitude, std::mt19937_64& rng) {
    if (dim == 0 || num_features == 0) throw InvalidArgument("sample_rff: empty shape");
    if (!(length_scale > 0)) throw InvalidArgument("sample_rff: length_scale must be positive");
    if (!(amplitude >= 0)) throw InvalidArgument("sample_rff: amplitude must be nonnegative");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);

    RffFunction f;
    f.amplitude = amplitude;
    f.length_scale = length_scale;
    f.frequencies = Matrix(num_features, dim);
    for (double& v : f.frequencies.data()) v = normal(rng);
    f.phases.resize(num_features);
    for (double& v : f.phases) v = phase(rng);
    f.weights.resize(num_features);
    for (double& v : f.weights) v = normal(rng);
    return f;
}

double rff_eval(const RffFunction& f, std::span<const double> x) { return f(x); }

void SynthConfig::validate() const {
    if (num_tasks < 1) throw InvalidArgument("synth: num_tasks must be >= 1");
    if (num_outliers < 0 || num_outliers > num_tasks) {
        throw InvalidArgument("synth: num_outliers must lie in [0, num_tasks]");
    }
    if (dim < 1 || rff_features < 1) throw InvalidArgument("synth: dim and rff_features must be >= 1");
    if (train_per_task < 1 || test_per_task < 1) {
        throw InvalidArgument("synth: per-task sample counts must be >= 1");
    }
    if (!(mix_weight >= 0 && mix_weight <= 1)) throw InvalidArgument("synth: mix_weight outside [0, 1]");
    if (!(length_scale > 0)) throw InvalidArgument("synth: length_scale must be positive");
    if (!(min_class_fraction >= 0 && min_class_fraction <= 0.5)) {
        throw InvalidArgument("synth: min_class_fraction outside [0, 0.5]");
    }
    if (max_retries < 1) throw InvalidArgument("synth: max_retries must be >= 1");
}

SynthConfig SynthConfig::paper_preset(TaskKind kind) {
    SynthConfig c;
    c.kind = kind;
    return c;
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
    j = nlohmann::json{{"num_tasks", c.num_tasks},
                       {"num_outliers", c.num_outliers},
                       {"dim", c.dim},
                       {"train_per_task", c.train_per_task},
                       {"test_per_task", c.test_per_task},
                       {"mix_weight", c.mix_weight},
                       {"task_kind", c.kind == TaskKind::Regression ? "regression" : "classification"},
                       {"rff_features", c.rff_features},
                       {"length_scale", c.length_scale},
                       {"amplitude", c.amplitude},
                       {"min_class_fraction", c.min_class_fraction},
                       {"max_retries", c.max_retries},
                       {"shared_outlier_function", c.shared_outlier_function}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
    SynthConfig d;
    c.num_tasks = j.value("num_tasks", d.num_tasks);
    c.num_outliers = j.value("num_outliers", d.num_outliers);
    c.dim = j.value("dim", d.dim);
    c.train_per_task = j.value("train_per_task", d.train_per_task);
    c.test_per_task = j.value("test_per_task", d.test_per_task);
    c.mix_weight = j.value("mix_weight", d.mix_weight);
    const auto kind = j.value("task_kind", std::string("regression"));
    if (kind == "regression") {
        c.kind = TaskKind::Regression;
    } else if (kind == "classification") {
        c.kind = TaskKind::Classification;
    } else {
        throw ParseError("synth: unknown task_kind " + kind);
    }
    c.rff_features = j.value("rff_features", d.rff_features);
    c.length_scale = j.value("length_scale", d.length_scale);
    c.amplitude = j.value("amplitude", d.amplitude);
    c.min_class_fraction = j.value("min_class_fraction", d.min_class_fraction);
    c.max_retries = j.value("max_retries", d.max_retries);
    c.shared_outlier_function = j.value("shared_outlier_function", d.shared_outlier_function);
}

double TaskFunctions::value(std::span<const double> x, double mix_weight) const {
    return mix_weight * common(x) + (1.0 - mix_weight) * specific(x);
}

std::vector<TaskFunctions> draw_task_functions(const SynthConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    auto draw = [&] {
        return sample_rff(static_cast<std::size_t>(cfg.dim),
                          static_cast<std::size_t>(cfg.rff_features), cfg.length_scale,
                          cfg.amplitude, rng);
    };
    const RffFunction phi = draw();
    std::vector<TaskFunctions> out;
    out.reserve(static_cast<std::size_t>(cfg.num_tasks));
    for (int t = 0; t < cfg.num_tasks; ++t) out.push_back({phi, draw()});
    if (cfg.shared_outlier_function && cfg.num_outliers > 0) {
        const RffFunction phi_out = draw();
        for (int t = cfg.num_tasks - cfg.num_outliers; t < cfg.num_tasks; ++t) {
            out[static_cast<std::size_t>(t)].common = phi_out;
        }
    } else {
        for (int t = cfg.num_tasks - cfg.num_outliers; t < cfg.num_tasks; ++t) {
            out[static_cast<std::size_t>(t)].common = draw();
        }
    }
    return out;
}

namespace {

Matrix draw_inputs(std::size_t rows, std::size_t dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Matrix x(rows, dim);
    for (double& v : x.data()) v = unif(rng);
    return x;
}

bool balanced(std::span<const double> labels, std::size_t begin, std::size_t end, double min_frac) {
    std::size_t ones = 0;
    for (std::size_t i = begin; i < end; ++i) ones += labels[i] > 0.5 ? 1 : 0;
    const std::size_t n = end - begin;
    const std::size_t minority = std::min(ones, n - ones);
    return static_cast<double>(minority) >= min_frac * static_cast<double>(n);
}

void fill_targets(const SynthConfig& cfg, const std::vector<TaskFunctions>& fns,
                  MultiTaskDataset& data) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& f = fns[static_cast<std::size_t>(data.task_of[i])];
        const double value = f.value(data.features.row(i), cfg.mix_weight);
        data.targets[i] = cfg.kind == TaskKind::Regression ? value : (value >= 0 ? 1.0 : 0.0);
    }
}

MultiTaskDataset empty_split(const SynthConfig& cfg, int per_task, std::mt19937_64& rng) {
    MultiTaskDataset data;
    const auto n = static_cast<std::size_t>(cfg.num_tasks * per_task);
    data.features = draw_inputs(n, static_cast<std::size_t>(cfg.dim), rng);
    data.targets.assign(n, 0.0);
    data.task_of.resize(n);
    for (std::size_t i = 0; i < n; ++i) data.task_of[i] = static_cast<int>(i) / per_task;
    data.num_tasks = cfg.num_tasks;
    data.num_classes = cfg.kind == TaskKind::Regression ? 1 : 2;
    return data;
}

}  // namespace

SyntheticBatch gen_multitask(const SynthConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    SyntheticBatch batch;
    batch.train = empty_split(cfg, cfg.train_per_task, rng);
    batch.test = empty_split(cfg, cfg.test_per_task, rng);
    for (int t = cfg.num_tasks - cfg.num_outliers; t < cfg.num_tasks; ++t) {
        batch.outlier_task_ids.push_back(t);
    }

    for (int attempt = 1; attempt <= cfg.max_retries; ++attempt) {
        const auto fns = draw_task_functions(cfg, rng);
        fill_targets(cfg, fns, batch.train);
        fill_targets(cfg, fns, batch.test);
        batch.attempts = attempt;
        if (cfg.kind == TaskKind::Regression) return batch;

        bool ok = true;
        for (int t = 0; t < cfg.num_tasks && ok; ++t) {
            const auto tr = static_cast<std::size_t>(t * cfg.train_per_task);
            const auto te = static_cast<std::size_t>(t * cfg.test_per_task);
            ok = balanced(batch.train.targets, tr, tr + static_cast<std::size_t>(cfg.train_per_task),
                          cfg.min_class_fraction) &&
                 balanced(batch.test.targets, te, te + static_cast<std::size_t>(cfg.test_per_task),
                          cfg.min_class_fraction);
        }
        if (ok) return batch;
    }
    throw GenerationError("synth: no function draw met the " +
                          std::to_string(cfg.min_class_fraction) +
                          " minority-class fraction for every task after " +
                          std::to_string(cfg.max_retries) + " attempts");
}

}  // namespace rmtgb
