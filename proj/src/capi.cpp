#include "rmtgb/rmtgb_c.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <set>
#include <string>

#include "rmtgb/eval.hpp"
#include "rmtgb/experiment.hpp"
#include "rmtgb/io.hpp"
#include "rmtgb/models.hpp"
#include "rmtgb/synth.hpp"

struct rmtgb_dataset {
    rmtgb::MultiTaskDataset data;
};

struct rmtgb_batch {
    rmtgb::SyntheticBatch batch;
    rmtgb::SynthConfig config;
    std::string preset;
    std::uint64_t seed = 0;
};

struct rmtgb_model {
    rmtgb::TrainedModel model;
    std::size_t input_dim = 0;  // 0 when loaded from JSON without the field
};

namespace {

thread_local std::string g_last_error;

template <class F>
rmtgb_status guard(F&& body) {
    try {
        body();
        g_last_error.clear();
        return RMTGB_OK;
    } catch (const rmtgb::ParseError& e) {
        g_last_error = e.what();
        return RMTGB_ERR_PARSE;
    } catch (const nlohmann::json::exception& e) {
        g_last_error = e.what();
        return RMTGB_ERR_PARSE;
    } catch (const rmtgb::IoError& e) {
        g_last_error = e.what();
        return RMTGB_ERR_IO;
    } catch (const rmtgb::GenerationError& e) {
        g_last_error = e.what();
        return RMTGB_ERR_GENERATION;
    } catch (const std::invalid_argument& e) {
        g_last_error = e.what();
        return RMTGB_ERR_INVALID_ARGUMENT;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return RMTGB_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RMTGB_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return RMTGB_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw rmtgb::InvalidArgument(what);
}

rmtgb::LossKind dataset_loss(const rmtgb::MultiTaskDataset& data) {
    return data.num_classes > 1 ? rmtgb::LossKind::CrossEntropy : rmtgb::LossKind::SquaredError;
}

nlohmann::json parse_json(const char* text, const char* what) {
    if (text == nullptr || *text == '\0') return nlohmann::json::object();
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw rmtgb::ParseError(std::string(what) + ": " + e.what());
    }
}

rmtgb::Matrix copy_features(const double* features, size_t n, size_t d) {
    require(features != nullptr || n * d == 0, "features pointer is null");
    return rmtgb::Matrix(n, d, std::vector<double>(features, features + n * d));
}

nlohmann::json handle_to_json(const rmtgb_model& handle) {
    auto j = rmtgb::model_to_json(handle.model);
    if (handle.input_dim > 0) j["input_dim"] = handle.input_dim;
    return j;
}

std::unique_ptr<rmtgb_model> handle_from_json(const nlohmann::json& j) {
    auto handle = std::make_unique<rmtgb_model>(rmtgb_model{rmtgb::model_from_json(j)});
    if (j.contains("input_dim")) {
        try {
            handle->input_dim = j.at("input_dim").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw rmtgb::ParseError(std::string("model file: ") + e.what());
        }
    }
    return handle;
}

void check_feature_dim(const rmtgb_model& handle, size_t d) {
    if (handle.input_dim > 0) {
        require(d == handle.input_dim, "feature dimension differs from the training data");
        return;
    }
    const auto& model = handle.model;
    // Stumps index into the raw features; any index beyond d is a mismatch.
    std::size_t needed = 0;
    auto scan = [&](const rmtgb::ComponentEnsemble& e) {
        for (const auto& s : e.stumps) {
            if (!s.degenerate()) needed = std::max(needed, s.feature + 1);
        }
    };
    if (const auto* m = std::get_if<rmtgb::RmtgbModel>(&model)) {
        scan(m->shared);
        scan(m->outlier);
        scan(m->non_outlier);
        for (const auto& e : m->per_task) scan(e);
    } else if (const auto* m = std::get_if<rmtgb::MtgbModel>(&model)) {
        scan(m->shared);
        for (const auto& e : m->per_task) scan(e);
    } else {
        const auto& b = std::get<rmtgb::BaselineModel>(model);
        if (b.kind == rmtgb::BaselineKind::TaskAsFeature) return;  // checked on the augmented matrix
        for (const auto& e : b.ensembles) scan(e);
    }
    require(needed <= d, "feature dimension is smaller than the model expects");
}

}  // namespace

extern "C" {

const char* rmtgb_version(void) { return "1.0.0"; }

const char* rmtgb_last_error(void) { return g_last_error.c_str(); }

void rmtgb_string_free(char* s) { delete[] s; }

rmtgb_status rmtgb_dataset_create(const double* features, const double* targets,
                                  const int* task_of, size_t n, size_t d, int num_tasks,
                                  int num_classes, rmtgb_dataset** out) {
    return guard([&] {
        require(out != nullptr, "out is null");
        require(targets != nullptr && task_of != nullptr, "null input array");
        auto handle = std::make_unique<rmtgb_dataset>();
        handle->data.features = copy_features(features, n, d);
        handle->data.targets.assign(targets, targets + n);
        handle->data.task_of.assign(task_of, task_of + n);
        handle->data.num_tasks = num_tasks;
        handle->data.num_classes = num_classes;
        handle->data.validate(dataset_loss(handle->data));
        *out = handle.release();
    });
}

rmtgb_status rmtgb_dataset_read_csv(const char* path, int classification, rmtgb_dataset** out) {
    return guard([&] {
        require(path != nullptr && out != nullptr, "null argument");
        auto handle = std::make_unique<rmtgb_dataset>();
        handle->data = rmtgb::read_dataset_csv(std::string(path), classification != 0);
        *out = handle.release();
    });
}

rmtgb_status rmtgb_dataset_write_csv(const rmtgb_dataset* data, const char* path) {
    return guard([&] {
        require(data != nullptr && path != nullptr, "null argument");
        rmtgb::write_dataset_csv(std::string(path), data->data);
    });
}

rmtgb_status rmtgb_dataset_shape(const rmtgb_dataset* data, size_t* n, size_t* d, int* num_tasks,
                                 int* num_classes) {
    return guard([&] {
        require(data != nullptr, "dataset is null");
        if (n) *n = data->data.size();
        if (d) *d = data->data.dim();
        if (num_tasks) *num_tasks = data->data.num_tasks;
        if (num_classes) *num_classes = data->data.num_classes;
    });
}

void rmtgb_dataset_free(rmtgb_dataset* data) { delete data; }

rmtgb_status rmtgb_synth_generate(const char* preset, const char* config_json, uint64_t seed,
                                  rmtgb_batch** out) {
    return guard([&] {
        require(out != nullptr, "out is null");
        const std::string name = preset ? preset : "paper-synth-reg";
        auto cfg = rmtgb::experiment_from_preset(name).synth;
        nlohmann::json merged = cfg;
        merged.merge_patch(parse_json(config_json, "synth config"));
        cfg = merged.get<rmtgb::SynthConfig>();
        std::mt19937_64 rng(seed);
        auto handle = std::make_unique<rmtgb_batch>();
        handle->batch = rmtgb::gen_multitask(cfg, rng);
        handle->config = cfg;
        handle->preset = name;
        handle->seed = seed;
        *out = handle.release();
    });
}

rmtgb_status rmtgb_batch_train(const rmtgb_batch* batch, rmtgb_dataset** out) {
    return guard([&] {
        require(batch != nullptr && out != nullptr, "null argument");
        *out = new rmtgb_dataset{batch->batch.train};
    });
}

rmtgb_status rmtgb_batch_test(const rmtgb_batch* batch, rmtgb_dataset** out) {
    return guard([&] {
        require(batch != nullptr && out != nullptr, "null argument");
        *out = new rmtgb_dataset{batch->batch.test};
    });
}

rmtgb_status rmtgb_batch_outliers(const rmtgb_batch* batch, int* ids, size_t capacity,
                                  size_t* count) {
    return guard([&] {
        require(batch != nullptr && count != nullptr, "null argument");
        const auto& o = batch->batch.outlier_task_ids;
        *count = o.size();
        require(ids != nullptr || capacity == 0, "ids is null");
        for (size_t i = 0; i < std::min(capacity, o.size()); ++i) ids[i] = o[i];
    });
}

rmtgb_status rmtgb_batch_write(const rmtgb_batch* batch, const char* dir) {
    return guard([&] {
        require(batch != nullptr && dir != nullptr, "null argument");
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw rmtgb::IoError(std::string("cannot create ") + dir + ": " + ec.message());
        const fs::path root(dir);
        rmtgb::write_dataset_csv((root / "train.csv").string(), batch->batch.train);
        rmtgb::write_dataset_csv((root / "test.csv").string(), batch->batch.test);
        const nlohmann::json manifest{{"preset", batch->preset},
                                      {"seed", batch->seed},
                                      {"config", batch->config},
                                      {"outlier_task_ids", batch->batch.outlier_task_ids},
                                      {"attempts", batch->batch.attempts},
                                      {"files", {"train.csv", "test.csv"}}};
        std::ofstream m(root / "manifest.json", std::ios::binary);
        if (!m) throw rmtgb::IoError("cannot write manifest.json in " + std::string(dir));
        m << manifest.dump(2) << '\n';
    });
}

void rmtgb_batch_free(rmtgb_batch* batch) { delete batch; }

rmtgb_status rmtgb_model_train(const char* family, const char* params_json,
                               const rmtgb_dataset* train, rmtgb_log_fn log, void* user,
                               rmtgb_model** out) {
    return guard([&] {
        require(family != nullptr && train != nullptr && out != nullptr, "null argument");
        static const std::set<std::string> known{"m1", "m2", "m3", "shrinkage", "seed",
                                                 "theta_init_mean", "theta_init_std",
                                                 "theta_learning_rate"};
        const auto params = parse_json(params_json, "model parameters");
        for (const auto& [key, value] : params.items()) {
            if (!known.contains(key)) throw rmtgb::InvalidArgument("unknown model parameter: " + key);
        }
        rmtgb::Hyperparams hp{params.value("m1", 0), params.value("m2", 0), params.value("m3", 0)};
        rmtgb::FitOptions opts;
        opts.shrinkage = params.value("shrinkage", 1.0);
        opts.seed = params.value("seed", std::uint64_t{0});
        opts.theta_init_mean = params.value("theta_init_mean", 0.0);
        opts.theta_init_std = params.value("theta_init_std", 1.0);
        if (params.contains("theta_learning_rate")) {
            opts.theta_learning_rate = params.at("theta_learning_rate").get<double>();
        }
        rmtgb::RoundLogger logger;
        if (log) {
            logger = [&](std::string_view component, int round, double loss) {
                const std::string line = "component=" + std::string(component) +
                                         " round=" + std::to_string(round) +
                                         " loss=" + rmtgb::format_double(loss);
                log(line.c_str(), user);
            };
        }
        auto handle = std::make_unique<rmtgb_model>(rmtgb_model{
            rmtgb::fit_model(rmtgb::family_from_string(family), hp, train->data,
                             dataset_loss(train->data), opts, logger),
            train->data.dim()});
        *out = handle.release();
    });
}

rmtgb_status rmtgb_model_num_outputs(const rmtgb_model* model, size_t* k) {
    return guard([&] {
        require(model != nullptr && k != nullptr, "null argument");
        *k = rmtgb::model_outputs(model->model);
    });
}

rmtgb_status rmtgb_model_predict_scores(const rmtgb_model* model, const double* features,
                                        const int* task_of, size_t n, size_t d,
                                        double* out_scores) {
    return guard([&] {
        require(model != nullptr && out_scores != nullptr, "null argument");
        require(task_of != nullptr || n == 0, "task_of is null");
        check_feature_dim(*model, d);
        const auto x = copy_features(features, n, d);
        const auto scores = rmtgb::predict_scores(model->model, x, std::span<const int>(task_of, n));
        std::copy(scores.data().begin(), scores.data().end(), out_scores);
    });
}

rmtgb_status rmtgb_model_predict(const rmtgb_model* model, const double* features,
                                 const int* task_of, size_t n, size_t d, double* out_values) {
    return guard([&] {
        require(model != nullptr && out_values != nullptr, "null argument");
        require(task_of != nullptr || n == 0, "task_of is null");
        check_feature_dim(*model, d);
        const auto x = copy_features(features, n, d);
        const auto values = rmtgb::predict_values(model->model, x, std::span<const int>(task_of, n));
        std::copy(values.begin(), values.end(), out_values);
    });
}

rmtgb_status rmtgb_model_predict_dataset(const rmtgb_model* model, const rmtgb_dataset* data,
                                         double* out_values) {
    return guard([&] {
        require(model != nullptr && data != nullptr && out_values != nullptr, "null argument");
        check_feature_dim(*model, data->data.dim());
        const auto values = rmtgb::predict_values(model->model, data->data.features, data->data.task_of);
        std::copy(values.begin(), values.end(), out_values);
    });
}

rmtgb_status rmtgb_model_evaluate(const rmtgb_model* model, const rmtgb_dataset* data,
                                  const char* metric, double* out) {
    return guard([&] {
        require(model != nullptr && data != nullptr && metric != nullptr && out != nullptr,
                "null argument");
        check_feature_dim(*model, data->data.dim());
        const auto values = rmtgb::predict_values(model->model, data->data.features, data->data.task_of);
        *out = rmtgb::metric(rmtgb::metric_from_string(metric), data->data.targets, values);
    });
}

rmtgb_status rmtgb_model_gates(const rmtgb_model* model, double* out, size_t capacity,
                               size_t* count) {
    return guard([&] {
        require(model != nullptr && count != nullptr, "null argument");
        std::vector<double> gates;
        if (const auto* m = std::get_if<rmtgb::RmtgbModel>(&model->model)) gates = m->gates();
        *count = gates.size();
        require(out != nullptr || capacity == 0, "out is null");
        for (size_t i = 0; i < std::min(capacity, gates.size()); ++i) out[i] = gates[i];
    });
}

rmtgb_status rmtgb_model_to_json(const rmtgb_model* model, char** out_json) {
    return guard([&] {
        require(model != nullptr && out_json != nullptr, "null argument");
        const std::string text = handle_to_json(*model).dump();
        auto* buf = new char[text.size() + 1];
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *out_json = buf;
    });
}

rmtgb_status rmtgb_model_from_json(const char* json, rmtgb_model** out) {
    return guard([&] {
        require(json != nullptr && out != nullptr, "null argument");
        auto handle = handle_from_json(parse_json(json, "model file"));
        *out = handle.release();
    });
}

rmtgb_status rmtgb_model_save(const rmtgb_model* model, const char* path) {
    return guard([&] {
        require(model != nullptr && path != nullptr, "null argument");
        std::ofstream f(path, std::ios::binary);
        if (!f) throw rmtgb::IoError(std::string("cannot write ") + path);
        f << handle_to_json(*model).dump() << '\n';
        if (!f) throw rmtgb::IoError(std::string("write failed for ") + path);
    });
}

rmtgb_status rmtgb_model_load(const char* path, rmtgb_model** out) {
    return guard([&] {
        require(path != nullptr && out != nullptr, "null argument");
        std::ifstream f(path, std::ios::binary);
        if (!f) throw rmtgb::IoError(std::string("cannot open ") + path);
        const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        auto handle = handle_from_json(parse_json(text.c_str(), path));
        *out = handle.release();
    });
}

void rmtgb_model_free(rmtgb_model* model) { delete model; }

rmtgb_status rmtgb_benchmark_run(const char* experiment_json, const char* out_dir,
                                 rmtgb_log_fn log, void* user) {
    return guard([&] {
        require(out_dir != nullptr, "out_dir is null");
        const auto cfg = rmtgb::experiment_from_json(parse_json(experiment_json, "experiment config"));
        rmtgb::ProgressFn progress;
        if (log) progress = [&](const std::string& line) { log(line.c_str(), user); };
        const auto report = rmtgb::run_benchmark(cfg, progress);
        rmtgb::write_report(report, out_dir);
        if (log) {
            for (auto f : cfg.models) {
                for (auto kind : report.metrics) {
                    const auto& s = report.summary.at(f).at(kind);
                    const std::string line = "event=summary model=" + rmtgb::to_string(f) +
                                             " metric=" + rmtgb::to_string(kind) +
                                             " test_mean=" + rmtgb::format_double(s.test_mean) +
                                             " test_std=" + rmtgb::format_double(s.test_std);
                    log(line.c_str(), user);
                }
            }
        }
    });
}

rmtgb_status rmtgb_critical_distance(int num_models, int num_scenarios, double* out) {
    return guard([&] {
        require(out != nullptr, "out is null");
        *out = rmtgb::critical_distance(num_models, num_scenarios);
    });
}

}  // extern "C"
