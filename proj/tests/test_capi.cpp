// Exercises the shared library through its C header only.
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rmtgb/rmtgb_c.h"

namespace {

void collect(const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

rmtgb_dataset* small_dataset(int num_classes) {
    const std::size_t n = 60;
    std::vector<double> x(n * 2);
    std::vector<double> y(n);
    std::vector<int> task(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[2 * i] = std::sin(static_cast<double>(i));
        x[2 * i + 1] = std::cos(3.0 * static_cast<double>(i));
        task[i] = static_cast<int>(i % 3);
        y[i] = num_classes == 1 ? x[2 * i] + 0.1 * task[i] : (x[2 * i] > 0 ? 1.0 : 0.0);
    }
    rmtgb_dataset* d = nullptr;
    REQUIRE(rmtgb_dataset_create(x.data(), y.data(), task.data(), n, 2, 3, num_classes, &d) == RMTGB_OK);
    return d;
}

}  // namespace

TEST_CASE("version string and null-argument errors") {
    CHECK(std::strlen(rmtgb_version()) > 0);
    CHECK(rmtgb_dataset_read_csv(nullptr, 0, nullptr) == RMTGB_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(rmtgb_last_error()) > 0);
    double cd = 0;
    CHECK(rmtgb_critical_distance(5, 10, &cd) == RMTGB_OK);
    CHECK(std::abs(cd - 1.929) < 0.001);
    CHECK(rmtgb_critical_distance(40, 10, &cd) == RMTGB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("dataset creation validates its inputs") {
    const double x[2] = {0, 1};
    const double y[2] = {0, 5};
    const int task[2] = {0, 1};
    rmtgb_dataset* d = nullptr;
    CHECK(rmtgb_dataset_create(x, y, task, 2, 1, 1, 2, &d) == RMTGB_ERR_INVALID_ARGUMENT);
    CHECK(d == nullptr);
    CHECK(rmtgb_dataset_create(x, y, task, 2, 1, 2, 1, &d) == RMTGB_OK);
    std::size_t n = 0, dim = 0;
    int t = 0, k = 0;
    CHECK(rmtgb_dataset_shape(d, &n, &dim, &t, &k) == RMTGB_OK);
    CHECK(n == 2);
    CHECK(dim == 1);
    CHECK(t == 2);
    CHECK(k == 1);
    rmtgb_dataset_free(d);
}

TEST_CASE("CSV errors map to distinct codes") {
    namespace fs = std::filesystem;
    rmtgb_dataset* d = nullptr;
    CHECK(rmtgb_dataset_read_csv("/nonexistent/x.csv", 0, &d) == RMTGB_ERR_IO);
    const auto path = fs::temp_directory_path() / "rmtgb_capi_bad.csv";
    {
        std::ofstream out(path);
        out << "task,y,x0\n0,1,2\n0,oops,3\n";
    }
    CHECK(rmtgb_dataset_read_csv(path.string().c_str(), 0, &d) == RMTGB_ERR_PARSE);
    CHECK(std::string(rmtgb_last_error()).find("line 3") != std::string::npos);
    fs::remove(path);
}

TEST_CASE("train, predict, evaluate and persist every model family") {
    namespace fs = std::filesystem;
    for (int classes : {1, 2}) {
        rmtgb_dataset* data = small_dataset(classes);
        for (const char* family : {"rmtgb", "mtgb", "st-gb", "dp-gb", "taf-gb"}) {
            std::vector<std::string> log;
            rmtgb_model* m = nullptr;
            REQUIRE(rmtgb_model_train(family, R"({"m1": 3, "m2": 2, "m3": 2, "seed": 4})", data, collect, &log,
                                      &m) == RMTGB_OK);
            CHECK_FALSE(log.empty());
            CHECK(log.front().rfind("component=", 0) == 0);

            std::size_t k = 0;
            CHECK(rmtgb_model_num_outputs(m, &k) == RMTGB_OK);
            CHECK(k == static_cast<std::size_t>(classes));

            std::vector<double> pred(60);
            CHECK(rmtgb_model_predict_dataset(m, data, pred.data()) == RMTGB_OK);
            double score = -1;
            CHECK(rmtgb_model_evaluate(m, data, classes == 1 ? "rmse" : "accuracy", &score) == RMTGB_OK);
            CHECK(score >= 0);
            CHECK(rmtgb_model_evaluate(m, data, "auc", &score) == RMTGB_ERR_INVALID_ARGUMENT);

            const auto path = fs::temp_directory_path() / "rmtgb_capi_model.json";
            CHECK(rmtgb_model_save(m, path.string().c_str()) == RMTGB_OK);
            rmtgb_model* loaded = nullptr;
            REQUIRE(rmtgb_model_load(path.string().c_str(), &loaded) == RMTGB_OK);
            std::vector<double> again(60);
            CHECK(rmtgb_model_predict_dataset(loaded, data, again.data()) == RMTGB_OK);
            CHECK(again == pred);

            double gates[8];
            std::size_t count = 0;
            CHECK(rmtgb_model_gates(m, gates, 8, &count) == RMTGB_OK);
            CHECK(count == (std::strcmp(family, "rmtgb") == 0 ? 3u : 0u));

            rmtgb_model_free(loaded);
            rmtgb_model_free(m);
            fs::remove(path);
        }
        rmtgb_dataset_free(data);
    }
}

TEST_CASE("model parameter and JSON errors") {
    rmtgb_dataset* data = small_dataset(1);
    rmtgb_model* m = nullptr;
    CHECK(rmtgb_model_train("xgb", "{}", data, nullptr, nullptr, &m) == RMTGB_ERR_INVALID_ARGUMENT);
    CHECK(rmtgb_model_train("rmtgb", R"({"depth": 3})", data, nullptr, nullptr, &m) == RMTGB_ERR_INVALID_ARGUMENT);
    CHECK(rmtgb_model_train("rmtgb", "{", data, nullptr, nullptr, &m) == RMTGB_ERR_PARSE);
    CHECK(rmtgb_model_from_json(R"({"model": "rmtgb"})", &m) == RMTGB_ERR_PARSE);
    CHECK(m == nullptr);

    REQUIRE(rmtgb_model_train("rmtgb", R"({"m1": 1, "m2": 1, "m3": 1})", data, nullptr, nullptr, &m) == RMTGB_OK);
    char* text = nullptr;
    REQUIRE(rmtgb_model_to_json(m, &text) == RMTGB_OK);
    rmtgb_model* back = nullptr;
    CHECK(rmtgb_model_from_json(text, &back) == RMTGB_OK);
    rmtgb_string_free(text);

    const double x[2] = {0.1, 0.2};
    const int bad_task[1] = {7};
    double out[1];
    CHECK(rmtgb_model_predict(back, x, bad_task, 1, 2, out) == RMTGB_ERR_INVALID_ARGUMENT);
    const int task[1] = {1};
    CHECK(rmtgb_model_predict(back, x, task, 1, 2, out) == RMTGB_OK);
    CHECK(rmtgb_model_predict(back, x, task, 1, 3, out) == RMTGB_ERR_INVALID_ARGUMENT);
    rmtgb_model_free(back);
    rmtgb_model_free(m);
    rmtgb_dataset_free(data);
}

TEST_CASE("synthetic batches through the C interface") {
    namespace fs = std::filesystem;
    rmtgb_batch* b = nullptr;
    CHECK(rmtgb_synth_generate("paper-synth-clf", R"({"train_per_task": 50, "test_per_task": 50})", 3, &b) == RMTGB_OK);
    int ids[4];
    std::size_t count = 0;
    CHECK(rmtgb_batch_outliers(b, ids, 4, &count) == RMTGB_OK);
    REQUIRE(count == 2);
    CHECK(ids[0] == 8);
    CHECK(ids[1] == 9);
    rmtgb_dataset* train = nullptr;
    REQUIRE(rmtgb_batch_train(b, &train) == RMTGB_OK);
    std::size_t n = 0;
    int k = 0;
    CHECK(rmtgb_dataset_shape(train, &n, nullptr, nullptr, &k) == RMTGB_OK);
    CHECK(n == 500);
    CHECK(k == 2);
    const auto dir = fs::temp_directory_path() / "rmtgb_capi_batch";
    fs::remove_all(dir);
    CHECK(rmtgb_batch_write(b, dir.string().c_str()) == RMTGB_OK);
    CHECK(fs::exists(dir / "train.csv"));
    CHECK(fs::exists(dir / "test.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
    rmtgb_dataset* reread = nullptr;
    CHECK(rmtgb_dataset_read_csv((dir / "train.csv").string().c_str(), 1, &reread) == RMTGB_OK);
    rmtgb_dataset_free(reread);
    fs::remove_all(dir);
    rmtgb_dataset_free(train);
    rmtgb_batch_free(b);

    CHECK(rmtgb_synth_generate("paper-synth-clf", R"({"min_class_fraction": 0.5, "max_retries": 2})", 1, &b) ==
          RMTGB_ERR_GENERATION);
    CHECK(rmtgb_synth_generate("bogus", nullptr, 1, &b) == RMTGB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("benchmark runs are byte-identical for one seed") {
    namespace fs = std::filesystem;
    const char* config = R"({"synth": {"num_tasks": 3, "num_outliers": 1, "train_per_task": 30, "test_per_task": 20},
        "grids": {"rmtgb": {"m1": [3], "m2": [3], "m3": [3]}, "mtgb": {"m1": [3], "m3": [3]},
                  "st-gb": {"m3": [3]}, "dp-gb": {"m1": [3]}, "taf-gb": {"m1": [3]}},
        "batches": 2, "seed": 5, "folds": 3})";
    const auto base = fs::temp_directory_path() / "rmtgb_capi_bench";
    fs::remove_all(base);
    std::vector<std::string> log;
    CHECK(rmtgb_benchmark_run(config, (base / "a").string().c_str(), collect, &log) == RMTGB_OK);
    CHECK(rmtgb_benchmark_run(config, (base / "b").string().c_str(), nullptr, nullptr) == RMTGB_OK);
    CHECK_FALSE(log.empty());
    for (const char* name : {"metrics.csv", "summary.csv", "rank.csv", "theta.csv", "manifest.json"}) {
        CHECK(slurp(base / "a" / name) == slurp(base / "b" / name));
    }
    fs::remove_all(base);
    CHECK(rmtgb_benchmark_run(R"({"batches": 0})", base.string().c_str(), nullptr, nullptr) ==
          RMTGB_ERR_INVALID_ARGUMENT);
    CHECK(rmtgb_benchmark_run(R"({"unknown": 1})", base.string().c_str(), nullptr, nullptr) == RMTGB_ERR_PARSE);
}
