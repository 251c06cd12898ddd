// Command-line front end. Talks to the library only through rmtgb_c.h.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rmtgb/rmtgb_c.h"

namespace {

struct Failure {
    std::string message;
};

void check(rmtgb_status status, const std::string& context) {
    if (status != RMTGB_OK) throw Failure{context + ": " + rmtgb_last_error()};
}

struct DatasetDeleter {
    void operator()(rmtgb_dataset* d) const { rmtgb_dataset_free(d); }
};
struct ModelDeleter {
    void operator()(rmtgb_model* m) const { rmtgb_model_free(m); }
};
struct BatchDeleter {
    void operator()(rmtgb_batch* b) const { rmtgb_batch_free(b); }
};
using DatasetPtr = std::unique_ptr<rmtgb_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<rmtgb_model, ModelDeleter>;
using BatchPtr = std::unique_ptr<rmtgb_batch, BatchDeleter>;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{"cannot open " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json_file(const std::string& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Failure{path + ": " + e.what()};
    }
}

void print_line(const char* line, void* user) {
    auto* out = static_cast<std::ostream*>(user);
    *out << line << '\n';
}

DatasetPtr load_dataset(const std::string& path, bool classification) {
    rmtgb_dataset* raw = nullptr;
    check(rmtgb_dataset_read_csv(path.c_str(), classification ? 1 : 0, &raw), "reading " + path);
    return DatasetPtr(raw);
}

struct SynthArgs {
    std::string preset = "paper-synth-reg";
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
};

void run_synth(const SynthArgs& a) {
    const std::string overrides = a.config.empty() ? "{}" : read_json_file(a.config).dump();
    rmtgb_batch* raw = nullptr;
    check(rmtgb_synth_generate(a.preset.c_str(), overrides.c_str(), a.seed, &raw), "synth");
    BatchPtr batch(raw);
    check(rmtgb_batch_write(batch.get(), a.out.c_str()), "synth");
    std::vector<int> ids(64);
    std::size_t count = 0;
    check(rmtgb_batch_outliers(batch.get(), ids.data(), ids.size(), &count), "synth");
    std::cout << "event=synth_done out=" << a.out << " seed=" << a.seed << " outliers=";
    for (std::size_t i = 0; i < count; ++i) std::cout << (i ? ";" : "") << ids[i];
    std::cout << '\n';
}

struct TrainArgs {
    std::string model = "rmtgb";
    std::string data;
    bool classification = false;
    int m1 = 20;
    int m2 = 20;
    int m3 = 20;
    double shrinkage = 1.0;
    std::uint64_t seed = 0;
    double theta_mean = 0.0;
    double theta_std = 1.0;
    double theta_lr = -1;
    std::string out = "model.json";
    std::string log;
};

void run_train(const TrainArgs& a) {
    auto data = load_dataset(a.data, a.classification);
    nlohmann::json params{{"m1", a.m1},       {"m2", a.m2},
                          {"m3", a.m3},       {"shrinkage", a.shrinkage},
                          {"seed", a.seed},   {"theta_init_mean", a.theta_mean},
                          {"theta_init_std", a.theta_std}};
    if (a.theta_lr >= 0) params["theta_learning_rate"] = a.theta_lr;

    std::ofstream log_file;
    std::ostream* log_out = &std::cout;
    if (!a.log.empty()) {
        log_file.open(a.log, std::ios::binary);
        if (!log_file) throw Failure{"cannot write " + a.log};
        log_out = &log_file;
    }
    const std::string text = params.dump();
    rmtgb_model* raw = nullptr;
    check(rmtgb_model_train(a.model.c_str(), text.c_str(), data.get(), print_line, log_out, &raw),
          "train");
    ModelPtr model(raw);
    check(rmtgb_model_save(model.get(), a.out.c_str()), "train");

    const char* metric = a.classification ? "accuracy" : "rmse";
    double score = 0;
    check(rmtgb_model_evaluate(model.get(), data.get(), metric, &score), "train");
    std::cout << "event=train_done model=" << a.model << " out=" << a.out << " train_" << metric
              << '=' << score << '\n';
}

struct PredictArgs {
    std::string model_file;
    std::string data;
    bool classification = false;
    std::string out;
};

void run_predict(const PredictArgs& a) {
    rmtgb_model* raw = nullptr;
    check(rmtgb_model_load(a.model_file.c_str(), &raw), "loading " + a.model_file);
    ModelPtr model(raw);
    auto data = load_dataset(a.data, a.classification);
    std::size_t n = 0;
    check(rmtgb_dataset_shape(data.get(), &n, nullptr, nullptr, nullptr), "predict");
    std::vector<double> pred(n);
    check(rmtgb_model_predict_dataset(model.get(), data.get(), pred.data()), "predict");
    if (!a.out.empty()) {
        std::ofstream out(a.out, std::ios::binary);
        if (!out) throw Failure{"cannot write " + a.out};
        out << "prediction\n";
        out.precision(17);
        for (double v : pred) out << v << '\n';
    }
    const std::vector<const char*> metrics =
        a.classification ? std::vector<const char*>{"accuracy", "macro_recall"}
                         : std::vector<const char*>{"rmse", "mae"};
    std::cout << "event=predict_done rows=" << n;
    for (const char* m : metrics) {
        double v = 0;
        check(rmtgb_model_evaluate(model.get(), data.get(), m, &v), "predict");
        std::cout << ' ' << m << '=' << v;
    }
    std::cout << '\n';
}

struct BenchmarkArgs {
    std::string config;
    std::string preset;
    std::string data;
    bool classification = false;
    std::vector<std::string> models;
    int batches = -1;
    std::int64_t seed = -1;
    std::string grid;
    int jobs = -1;
    int folds = -1;
    std::string out = "report";
};

void run_benchmark(const BenchmarkArgs& a) {
    nlohmann::json exp = a.config.empty() ? nlohmann::json::object() : read_json_file(a.config);
    if (!a.preset.empty()) exp["preset"] = a.preset;
    if (!a.data.empty()) {
        exp["csv"] = a.data;
        exp["classification"] = a.classification;
    }
    if (!a.models.empty()) exp["models"] = a.models;
    if (a.batches >= 0) exp["batches"] = a.batches;
    if (a.seed >= 0) exp["seed"] = a.seed;
    if (!a.grid.empty()) exp["grids"] = read_json_file(a.grid);
    if (a.jobs >= 0) exp["jobs"] = a.jobs;
    if (a.folds >= 0) exp["folds"] = a.folds;
    const std::string text = exp.dump();
    check(rmtgb_benchmark_run(text.c_str(), a.out.c_str(), print_line, &std::cout), "benchmark");
    std::cout << "event=benchmark_done out=" << a.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust multi-task gradient boosting: data generation, training, benchmarking"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic multi-task batch");
    synth_cmd->add_option("--preset", synth.preset, "paper-synth-reg or paper-synth-clf")
        ->capture_default_str();
    synth_cmd->add_option("--config", synth.config, "JSON file overriding generator fields");
    synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Fit one model on a dataset CSV");
    train_cmd->add_option("--model", train.model, "rmtgb, mtgb, st-gb, dp-gb or taf-gb")
        ->capture_default_str();
    train_cmd->add_option("--data", train.data, "Dataset CSV (task,y,x0,...)")->required();
    train_cmd->add_flag("--classification", train.classification, "Treat y as class indices");
    train_cmd->add_option("--m1", train.m1, "Shared / pooled rounds")->capture_default_str();
    train_cmd->add_option("--m2", train.m2, "Outlier-gated rounds")->capture_default_str();
    train_cmd->add_option("--m3", train.m3, "Per-task rounds")->capture_default_str();
    train_cmd->add_option("--shrinkage", train.shrinkage, "Learning rate in (0, 1]")
        ->capture_default_str();
    train_cmd->add_option("--seed", train.seed, "Seed for theta initialisation")->capture_default_str();
    train_cmd->add_option("--theta-mean", train.theta_mean, "Theta init mean")->capture_default_str();
    train_cmd->add_option("--theta-std", train.theta_std, "Theta init std")->capture_default_str();
    train_cmd->add_option("--theta-lr", train.theta_lr, "Theta step size (default: shrinkage)");
    train_cmd->add_option("--out", train.out, "Model JSON path")->capture_default_str();
    train_cmd->add_option("--log", train.log, "Training log path (default: stdout)");

    PredictArgs predict;
    auto* predict_cmd = app.add_subcommand("predict", "Score a dataset CSV with a saved model");
    predict_cmd->add_option("--model-file", predict.model_file, "Model JSON")->required();
    predict_cmd->add_option("--data", predict.data, "Dataset CSV")->required();
    predict_cmd->add_flag("--classification", predict.classification, "Treat y as class indices");
    predict_cmd->add_option("--out", predict.out, "Write predictions CSV here");

    BenchmarkArgs bench;
    auto* bench_cmd = app.add_subcommand("benchmark", "Run the batch / grid-search protocol");
    bench_cmd->add_option("--config", bench.config, "Experiment JSON file");
    bench_cmd->add_option("--preset", bench.preset, "paper-synth-reg or paper-synth-clf");
    bench_cmd->add_option("--data", bench.data, "Dataset CSV instead of a synthetic preset");
    bench_cmd->add_flag("--classification", bench.classification, "CSV labels are class indices");
    bench_cmd->add_option("--models", bench.models, "Comma-separated model list")->delimiter(',');
    bench_cmd->add_option("--batches", bench.batches, "Number of batches (default 100)");
    bench_cmd->add_option("--seed", bench.seed, "Root seed (default 0)");
    bench_cmd->add_option("--grid", bench.grid, "Grid JSON file");
    bench_cmd->add_option("--jobs", bench.jobs, "Concurrent batches (default 1)");
    bench_cmd->add_option("--folds", bench.folds, "CV folds (default 5)");
    bench_cmd->add_option("--out", bench.out, "Report directory")->capture_default_str();

    int cd_models = 5;
    int cd_scenarios = 10;
    auto* cd_cmd = app.add_subcommand("cd", "Print the Nemenyi critical distance (alpha 0.05)");
    cd_cmd->add_option("--models", cd_models, "Number of compared models")->capture_default_str();
    cd_cmd->add_option("--scenarios", cd_scenarios, "Number of scenarios")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) run_synth(synth);
        if (train_cmd->parsed()) run_train(train);
        if (predict_cmd->parsed()) run_predict(predict);
        if (bench_cmd->parsed()) run_benchmark(bench);
        if (cd_cmd->parsed()) {
            double cd = 0;
            check(rmtgb_critical_distance(cd_models, cd_scenarios, &cd), "cd");
            std::cout << "models=" << cd_models << " scenarios=" << cd_scenarios << " cd=" << cd << '\n';
        }
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << '\n';
        return 1;
    }
    return 0;
}
