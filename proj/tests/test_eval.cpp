#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "rmtgb/eval.hpp"
#include "rmtgb/models.hpp"

using namespace rmtgb;

TEST_CASE("metrics on hand examples") {
    const std::vector<double> y{0, 0, 0, 1};
    const std::vector<double> all_zero{0, 0, 0, 0};
    CHECK(metric(MetricKind::Accuracy, y, all_zero) == doctest::Approx(0.75));
    CHECK(metric(MetricKind::MacroRecall, y, all_zero) == doctest::Approx(0.5));

    const std::vector<double> t{1, 2, 3};
    const std::vector<double> p{1, 4, 0};
    CHECK(metric(MetricKind::Rmse, t, p) == doctest::Approx(std::sqrt(13.0 / 3)));
    CHECK(metric(MetricKind::Mae, t, p) == doctest::Approx(5.0 / 3));

    const std::vector<double> short_p{1};
    CHECK_THROWS_AS(metric(MetricKind::Rmse, t, short_p), InvalidArgument);
    CHECK(higher_is_better(MetricKind::Accuracy));
    CHECK_FALSE(higher_is_better(MetricKind::Mae));
}

TEST_CASE("macro recall ignores classes absent from the targets") {
    const std::vector<double> y{0, 0, 1, 1};
    const std::vector<double> p{2, 0, 1, 1};
    CHECK(metric(MetricKind::MacroRecall, y, p) == doctest::Approx(0.75));
}

TEST_CASE("train/test split is per task, disjoint and seeded") {
    std::mt19937_64 rng(1);
    const auto data = testing::random_dataset(3, 10, 2, 1, rng);
    std::mt19937_64 a(4), b(4);
    const auto [tr, te] = split_train_test(data, 0.8, a);
    const auto [tr2, te2] = split_train_test(data, 0.8, b);
    CHECK(tr.size() + te.size() == data.size());
    CHECK(tr.targets == tr2.targets);
    for (const auto& rows : tr.task_indices()) CHECK(rows.size() == 8);
    for (const auto& rows : te.task_indices()) CHECK(rows.size() == 2);
    std::multiset<double> seen(tr.targets.begin(), tr.targets.end());
    seen.insert(te.targets.begin(), te.targets.end());
    CHECK(seen == std::multiset<double>(data.targets.begin(), data.targets.end()));
}

TEST_CASE("folds cover every task and class evenly") {
    std::mt19937_64 rng(2);
    const auto data = testing::random_dataset(4, 50, 2, 3, rng);
    const auto folds = stratified_folds(data, 5, 9);
    CHECK(folds == stratified_folds(data, 5, 9));
    CHECK(folds != stratified_folds(data, 5, 10));
    for (int t = 0; t < 4; ++t) {
        for (int c = 0; c < 3; ++c) {
            std::vector<int> count(5);
            int total = 0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (data.task_of[i] == t && data.targets[i] == c) {
                    ++count[static_cast<std::size_t>(folds[i])];
                    ++total;
                }
            }
            for (int n : count) CHECK(std::abs(n - total / 5.0) <= 1.0);
        }
    }
    CHECK_THROWS_AS(stratified_folds(data, 1, 0), InvalidArgument);
}

TEST_CASE("grid search scores every candidate on every fold and keeps the first best") {
    std::mt19937_64 rng(3);
    const auto data = testing::random_dataset(2, 25, 2, 1, rng);
    const auto grid = default_grid(ModelFamily::Rmtgb).expand();
    CHECK(grid.size() == 60);
    std::vector<int> calls(grid.size());
    std::size_t validated = 0;
    const auto result = grid_search_cv(grid.size(), data, 5, 1,
                                       [&](std::size_t c, const MultiTaskDataset& fit, const MultiTaskDataset& val) {
                                           ++calls[c];
                                           if (c == 0) validated += val.size();
                                           CHECK(fit.size() + val.size() == data.size());
                                           return c == 7 || c == 9 ? 1.0 : 0.0;
                                       });
    for (int n : calls) CHECK(n == 5);
    CHECK(validated == data.size());
    CHECK(result.best == 7);
    CHECK(result.mean_scores[9] == 1.0);
}

TEST_CASE("default grids have the documented sizes") {
    CHECK(default_grid(ModelFamily::Mtgb).expand().size() == 15);
    CHECK(default_grid(ModelFamily::SingleTask).expand().size() == 4);
    CHECK(default_grid(ModelFamily::DataPooling).expand().size() == 4);
    CHECK(default_grid(ModelFamily::TaskAsFeature).expand().size() == 4);
}

TEST_CASE("theta alignment flips anti-correlated vectors only") {
    const std::vector<std::vector<double>> in{{0.9, 0.9, 0.1}, {0.1, 0.2, 0.95}, {0.8, 0.7, 0.2}, {0.5, 0.5, 0.5}};
    const auto out = align_theta(in);
    CHECK(out[0] == in[0]);
    CHECK(out[1][0] == doctest::Approx(0.9));
    CHECK(out[1][2] == doctest::Approx(0.05));
    CHECK(out[2] == in[2]);
    CHECK(out[3] == in[3]);
    CHECK_THROWS_AS(align_theta({}), InvalidArgument);
}

TEST_CASE("critical distances for the reported comparisons") {
    CHECK(critical_distance(5, 5) == doctest::Approx(2.728).epsilon(0.001));
    CHECK(critical_distance(5, 10) == doctest::Approx(1.929).epsilon(0.001));
    CHECK(std::abs(critical_distance(3, 96) - 0.338) < 0.001);
    CHECK(std::abs(critical_distance(3, 381) - 0.170) < 0.001);
    CHECK(std::abs(critical_distance(3, 477) - 0.152) < 0.001);
    CHECK_THROWS_AS(nemenyi_q05(11), InvalidArgument);
}

TEST_CASE("fractional ranks share ties and sum to k(k+1)/2") {
    const std::vector<double> s{0.3, 0.1, 0.3, 0.5};
    const auto lo = fractional_ranks(s, false);
    CHECK(lo == std::vector<double>{2.5, 1.0, 2.5, 4.0});
    const auto hi = fractional_ranks(s, true);
    CHECK(hi == std::vector<double>{2.5, 4.0, 2.5, 1.0});

    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> d(0, 3);
    std::vector<std::vector<double>> table;
    for (int r = 0; r < 30; ++r) {
        std::vector<double> row(5);
        for (auto& v : row) v = d(rng);
        const auto ranks = fractional_ranks(row, r % 2 == 0);
        double sum = 0;
        for (double v : ranks) sum += v;
        CHECK(sum == 15.0);
        table.push_back(row);
    }
    const auto summary = rank_models(table, true);
    CHECK(summary.num_scenarios == 30);
    double total = 0;
    for (double v : summary.avg_rank) total += v;
    CHECK(total == doctest::Approx(15.0));
}

TEST_CASE("shared-prefix grid fitting equals fitting each candidate alone") {
    std::mt19937_64 rng(6);
    for (int classes : {1, 2}) {
        const auto loss = classes == 1 ? LossKind::SquaredError : LossKind::CrossEntropy;
        const auto data = testing::random_dataset(3, 30, 3, classes, rng);
        FitOptions opts;
        opts.seed = 77;
        opts.shrinkage = 0.5;
        for (auto family : {ModelFamily::Rmtgb, ModelFamily::Mtgb, ModelFamily::SingleTask,
                            ModelFamily::DataPooling, ModelFamily::TaskAsFeature}) {
            GridSpec spec;
            spec.m1 = {4, 0, 2};
            spec.m2 = {3, 0, 5};
            spec.m3 = {6, 0, 1};
            const auto grid = spec.expand();
            const auto models = fit_grid(family, grid, data, loss, opts);
            REQUIRE(models.size() == grid.size());
            for (std::size_t c = 0; c < grid.size(); ++c) {
                const auto alone = fit_model(family, grid[c], data, loss, opts);
                CHECK(model_to_json(models[c]) == model_to_json(alone));
            }
        }
    }
}

TEST_CASE("fold-level grid search rejects a wrong score count") {
    std::mt19937_64 rng(7);
    const auto data = testing::random_dataset(2, 20, 2, 1, rng);
    CHECK_THROWS_AS(grid_search_cv_folds(3, data, 2, 0,
                                         [](const MultiTaskDataset&, const MultiTaskDataset&) {
                                             return std::vector<double>{1.0};
                                         }),
                    InvalidArgument);
}
