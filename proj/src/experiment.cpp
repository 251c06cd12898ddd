#include "rmtgb/experiment.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "rmtgb/io.hpp"

namespace rmtgb {

std::uint64_t child_seed(std::uint64_t root, std::uint64_t index, std::uint64_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(tag)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void ExperimentConfig::validate() const {
    if (num_batches < 1) throw InvalidArgument("num_batches must be >= 1");
    if (models.empty()) throw InvalidArgument("at least one model is required");
    if (jobs < 1) throw InvalidArgument("jobs must be >= 1");
    if (folds < 2) throw InvalidArgument("folds must be >= 2");
    if (!(train_ratio > 0 && train_ratio < 1)) throw InvalidArgument("train_ratio must lie in (0, 1)");
    if (csv_path.empty()) synth.validate();
    for (auto f : models) {
        if (grid(f).expand().empty()) throw InvalidArgument("empty grid for " + to_string(f));
    }
}

bool ExperimentConfig::classification() const noexcept {
    return csv_path.empty() ? synth.kind == TaskKind::Classification : csv_classification;
}

const GridSpec& ExperimentConfig::grid(ModelFamily family) const {
    static const std::map<ModelFamily, GridSpec> defaults = [] {
        std::map<ModelFamily, GridSpec> m;
        for (auto f : {ModelFamily::Rmtgb, ModelFamily::Mtgb, ModelFamily::SingleTask,
                       ModelFamily::DataPooling, ModelFamily::TaskAsFeature}) {
            m[f] = default_grid(f);
        }
        return m;
    }();
    const auto it = grids.find(family);
    return it != grids.end() ? it->second : defaults.at(family);
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    if (csv_path.empty()) {
        j["source"] = {{"preset", preset}, {"synth", synth}};
    } else {
        j["source"] = {{"csv", csv_path}, {"classification", csv_classification}};
        j["train_ratio"] = train_ratio;
    }
    nlohmann::json model_names = nlohmann::json::array();
    nlohmann::json grid_json = nlohmann::json::object();
    for (auto f : models) {
        model_names.push_back(to_string(f));
        const auto& g = grid(f);
        grid_json[to_string(f)] = {{"m1", g.m1}, {"m2", g.m2}, {"m3", g.m3}};
    }
    j["models"] = model_names;
    j["grids"] = grid_json;
    j["num_batches"] = num_batches;
    j["root_seed"] = root_seed;
    j["folds"] = folds;
    j["shrinkage"] = fit.shrinkage;
    j["theta_init_mean"] = fit.theta_init_mean;
    j["theta_init_std"] = fit.theta_init_std;
    j["theta_learning_rate"] = fit.theta_learning_rate.value_or(fit.shrinkage);
    return j;
}

ExperimentConfig experiment_from_preset(const std::string& preset) {
    ExperimentConfig cfg;
    if (preset == "paper-synth-reg") {
        cfg.synth = SynthConfig::paper_preset(TaskKind::Regression);
    } else if (preset == "paper-synth-clf") {
        cfg.synth = SynthConfig::paper_preset(TaskKind::Classification);
    } else {
        throw InvalidArgument("unknown preset: " + preset);
    }
    cfg.preset = preset;
    return cfg;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{
        "preset", "synth", "csv", "classification", "models", "grids", "batches", "seed", "jobs",
        "folds", "train_ratio", "shrinkage", "theta_init_mean", "theta_init_std",
        "theta_learning_rate"};
    if (!j.is_object()) throw ParseError("experiment config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ParseError("experiment config: unknown key '" + key + "'");
    }
    try {
        ExperimentConfig cfg = experiment_from_preset(j.value("preset", std::string("paper-synth-reg")));
        if (j.contains("synth")) {
            nlohmann::json merged = cfg.synth;
            merged.merge_patch(j.at("synth"));
            cfg.synth = merged.get<SynthConfig>();
        }
        cfg.csv_path = j.value("csv", std::string());
        cfg.csv_classification = j.value("classification", false);
        if (j.contains("models")) {
            cfg.models.clear();
            for (const auto& name : j.at("models")) {
                cfg.models.push_back(family_from_string(name.get<std::string>()));
            }
        }
        if (j.contains("grids")) cfg.grids = grids_from_json(j.at("grids"));
        cfg.num_batches = j.value("batches", cfg.num_batches);
        cfg.root_seed = j.value("seed", cfg.root_seed);
        cfg.jobs = j.value("jobs", cfg.jobs);
        cfg.folds = j.value("folds", cfg.folds);
        cfg.train_ratio = j.value("train_ratio", cfg.train_ratio);
        cfg.fit.shrinkage = j.value("shrinkage", cfg.fit.shrinkage);
        cfg.fit.theta_init_mean = j.value("theta_init_mean", cfg.fit.theta_init_mean);
        cfg.fit.theta_init_std = j.value("theta_init_std", cfg.fit.theta_init_std);
        if (j.contains("theta_learning_rate")) {
            cfg.fit.theta_learning_rate = j.at("theta_learning_rate").get<double>();
        }
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("experiment config: ") + e.what());
    }
}

std::vector<MetricKind> metrics_for(bool classification) {
    if (classification) return {MetricKind::Accuracy, MetricKind::MacroRecall};
    return {MetricKind::Rmse, MetricKind::Mae};
}

namespace {

std::map<MetricKind, std::vector<double>> per_task_metrics(const TrainedModel& model,
                                                           const MultiTaskDataset& data,
                                                           const std::vector<MetricKind>& kinds) {
    const auto pred = predict_values(model, data.features, data.task_of);
    std::map<MetricKind, std::vector<double>> out;
    for (const auto& slice : data.task_indices()) {
        std::vector<double> y;
        std::vector<double> p;
        for (std::size_t i : slice) {
            y.push_back(data.targets[i]);
            p.push_back(pred[i]);
        }
        for (auto kind : kinds) out[kind].push_back(metric(kind, y, p));
    }
    return out;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population standard deviation.
double stddev(const std::vector<double>& v) {
    const double m = mean(v);
    double acc = 0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

// Keeps the error category so callers can still tell bad input from bad data.
[[noreturn]] void rethrow_for_batch(const std::exception_ptr& error, std::size_t batch) {
    const std::string prefix = "batch " + std::to_string(batch) + " failed: ";
    try {
        std::rethrow_exception(error);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(prefix + e.what());
    } catch (const IoError& e) {
        throw IoError(prefix + e.what());
    } catch (const ParseError& e) {
        throw ParseError(prefix + e.what());
    } catch (const GenerationError& e) {
        throw GenerationError(prefix + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(prefix + e.what());
    }
}

}  // namespace

BatchResult run_batch(const ExperimentConfig& cfg, int batch) {
    BatchResult result;
    result.batch = batch;
    result.seed = child_seed(cfg.root_seed, static_cast<std::uint64_t>(batch));
    const bool clf = cfg.classification();
    const LossKind loss = clf ? LossKind::CrossEntropy : LossKind::SquaredError;

    MultiTaskDataset train;
    MultiTaskDataset test;
    std::mt19937_64 data_rng(child_seed(result.seed, 0));
    if (cfg.csv_path.empty()) {
        auto generated = gen_multitask(cfg.synth, data_rng);
        train = std::move(generated.train);
        test = std::move(generated.test);
        result.outlier_task_ids = generated.outlier_task_ids;
    } else {
        const auto full = read_dataset_csv(cfg.csv_path, cfg.csv_classification);
        std::tie(train, test) = split_train_test(full, cfg.train_ratio, data_rng);
    }

    FitOptions opts = cfg.fit;
    opts.seed = child_seed(result.seed, 2);
    const std::uint64_t fold_seed = child_seed(result.seed, 1);
    const auto kinds = metrics_for(clf);
    const MetricKind cv_metric = clf ? MetricKind::Accuracy : MetricKind::Rmse;

    for (auto family : cfg.models) {
        const auto candidates = cfg.grid(family).expand();
        const auto search = grid_search_cv_folds(
            candidates.size(), train, cfg.folds, fold_seed,
            [&](const MultiTaskDataset& fit_part, const MultiTaskDataset& val_part) {
                const auto models = fit_grid(family, candidates, fit_part, loss, opts);
                std::vector<double> scores;
                for (const auto& model : models) {
                    const auto pred = predict_values(model, val_part.features, val_part.task_of);
                    const double score = metric(cv_metric, val_part.targets, pred);
                    scores.push_back(higher_is_better(cv_metric) ? score : -score);
                }
                return scores;
            });
        ModelBatchResult mr;
        mr.family = family;
        mr.best = candidates[search.best];
        mr.cv_score = search.mean_scores[search.best];
        const auto model = fit_model(family, mr.best, train, loss, opts);
        mr.test = per_task_metrics(model, test, kinds);
        mr.train = per_task_metrics(model, train, kinds);
        if (const auto* r = std::get_if<RmtgbModel>(&model)) result.gates = r->gates();
        result.models.push_back(std::move(mr));
    }
    return result;
}

BenchmarkReport run_benchmark(const ExperimentConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    BenchmarkReport report;
    report.config = cfg;
    report.metrics = metrics_for(cfg.classification());
    report.batches.resize(static_cast<std::size_t>(cfg.num_batches));

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.num_batches));
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::mutex progress_mutex;
    auto worker = [&] {
        while (!failed) {
            const int b = next++;
            if (b >= cfg.num_batches) return;
            try {
                report.batches[static_cast<std::size_t>(b)] = run_batch(cfg, b);
                if (progress) {
                    std::lock_guard lock(progress_mutex);
                    progress("event=batch_done batch=" + std::to_string(b));
                }
            } catch (...) {
                errors[static_cast<std::size_t>(b)] = std::current_exception();
                failed = true;
            }
        }
    };
    const int workers = std::min(cfg.jobs, cfg.num_batches);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (std::size_t b = 0; b < errors.size(); ++b) {
        if (errors[b]) rethrow_for_batch(errors[b], b);
    }

    // Batch score = mean over tasks; summary = moments of batch scores.
    for (std::size_t m = 0; m < cfg.models.size(); ++m) {
        for (auto kind : report.metrics) {
            std::vector<double> train_scores;
            std::vector<double> test_scores;
            for (const auto& b : report.batches) {
                train_scores.push_back(mean(b.models[m].train.at(kind)));
                test_scores.push_back(mean(b.models[m].test.at(kind)));
            }
            report.summary[cfg.models[m]][kind] = {mean(train_scores), stddev(train_scores),
                                                   mean(test_scores), stddev(test_scores)};
        }
    }

    std::vector<std::vector<double>> gates;
    for (const auto& b : report.batches) {
        if (!b.gates.empty()) gates.push_back(b.gates);
    }
    if (!gates.empty()) report.aligned_gates = align_theta(gates);

    if (cfg.models.size() >= 2) {
        const MetricKind primary = report.metrics.front();
        std::vector<std::vector<double>> table;
        for (const auto& b : report.batches) {
            std::vector<double> row;
            for (const auto& mr : b.models) row.push_back(mean(mr.test.at(primary)));
            table.push_back(std::move(row));
        }
        report.ranks = rank_models(table, higher_is_better(primary));
    }
    return report;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void write_metric_rows(std::ostream& out, const BenchmarkReport& report, bool train_side) {
    out << "batch,model,task,metric,value\n";
    for (const auto& b : report.batches) {
        for (const auto& mr : b.models) {
            const auto& table = train_side ? mr.train : mr.test;
            for (auto kind : report.metrics) {
                const auto& per_task = table.at(kind);
                for (std::size_t t = 0; t < per_task.size(); ++t) {
                    out << b.batch << ',' << to_string(mr.family) << ',' << t << ','
                        << to_string(kind) << ',' << format_double(per_task[t]) << '\n';
                }
            }
        }
    }
}

}  // namespace

void write_report(const BenchmarkReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    const fs::path root(dir);
    const auto& cfg = report.config;

    {
        auto out = open_out(root / "metrics.csv");
        write_metric_rows(out, report, false);
    }
    {
        auto out = open_out(root / "train_metrics.csv");
        write_metric_rows(out, report, true);
    }
    {
        auto out = open_out(root / "summary.csv");
        out << "model,metric,train_mean,train_std,test_mean,test_std\n";
        for (auto f : cfg.models) {
            for (auto kind : report.metrics) {
                const auto& s = report.summary.at(f).at(kind);
                out << to_string(f) << ',' << to_string(kind) << ',' << format_double(s.train_mean)
                    << ',' << format_double(s.train_std) << ',' << format_double(s.test_mean) << ','
                    << format_double(s.test_std) << '\n';
            }
        }
    }
    {
        auto out = open_out(root / "rank.csv");
        out << "model,avg_rank,cd,num_scenarios\n";
        if (cfg.models.size() >= 2) {
            for (std::size_t m = 0; m < cfg.models.size(); ++m) {
                out << to_string(cfg.models[m]) << ',' << format_double(report.ranks.avg_rank[m])
                    << ',' << format_double(report.ranks.critical_distance) << ','
                    << report.ranks.num_scenarios << '\n';
            }
        }
    }
    {
        auto out = open_out(root / "theta.csv");
        out << "batch,task,sigma,sigma_aligned\n";
        std::size_t g = 0;
        for (const auto& b : report.batches) {
            if (b.gates.empty()) continue;
            const auto& aligned = report.aligned_gates[g++];
            for (std::size_t t = 0; t < b.gates.size(); ++t) {
                out << b.batch << ',' << t << ',' << format_double(b.gates[t]) << ','
                    << format_double(aligned[t]) << '\n';
            }
        }
    }
    {
        auto out = open_out(root / "best_params.csv");
        out << "batch,model,m1,m2,m3,cv_score\n";
        for (const auto& b : report.batches) {
            for (const auto& mr : b.models) {
                out << b.batch << ',' << to_string(mr.family) << ',' << mr.best.m1 << ','
                    << mr.best.m2 << ',' << mr.best.m3 << ',' << format_double(mr.cv_score) << '\n';
            }
        }
    }
    {
        nlohmann::json manifest = cfg.to_json();
        nlohmann::json batches = nlohmann::json::array();
        for (const auto& b : report.batches) {
            batches.push_back({{"batch", b.batch}, {"seed", b.seed}, {"outlier_task_ids", b.outlier_task_ids}});
        }
        manifest["batches"] = batches;
        auto out = open_out(root / "manifest.json");
        out << manifest.dump(2) << '\n';
    }
}

}  // namespace rmtgb
