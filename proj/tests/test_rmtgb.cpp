#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "rmtgb/rmtgb.hpp"

using namespace rmtgb;

namespace {

// Summed training loss of shared + (1 - s) non + s out, written independently.
double gated_loss(LossKind loss, const MultiTaskDataset& mt, const ScoreMatrix& shared,
                  const ScoreMatrix& out, const ScoreMatrix& non, const std::vector<double>& theta) {
    double total = 0;
    for (std::size_t i = 0; i < mt.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-theta[static_cast<std::size_t>(mt.task_of[i])]));
        std::vector<double> f(shared.cols());
        for (std::size_t k = 0; k < f.size(); ++k) f[k] = shared(i, k) + (1 - s) * non(i, k) + s * out(i, k);
        if (loss == LossKind::SquaredError) {
            total += 0.5 * (mt.targets[i] - f[0]) * (mt.targets[i] - f[0]);
        } else {
            double mx = f[0];
            for (double v : f) mx = std::max(mx, v);
            double z = 0;
            for (double v : f) z += std::exp(v - mx);
            total -= f[static_cast<std::size_t>(mt.targets[i])] - mx - std::log(z);
        }
    }
    return total;
}

ScoreMatrix gated_scores(const MultiTaskDataset& mt, const ScoreMatrix& shared, const ScoreMatrix& out,
                         const ScoreMatrix& non, const std::vector<double>& theta) {
    ScoreMatrix f = shared;
    for (std::size_t i = 0; i < mt.size(); ++i) {
        const double s = sigmoid(theta[static_cast<std::size_t>(mt.task_of[i])]);
        for (std::size_t k = 0; k < f.cols(); ++k) f(i, k) += (1 - s) * non(i, k) + s * out(i, k);
    }
    return f;
}

}  // namespace

TEST_CASE("gated residuals split the plain residual exactly") {
    std::mt19937_64 rng(1);
    const auto mt = testing::random_dataset(4, 10, 2, 3, rng);
    const ScoreMatrix f = testing::random_matrix(mt.size(), 3, rng);
    const std::vector<double> theta{-2.0, 0.0, 0.7, 5.0};
    const auto plain = shared_residuals(LossKind::CrossEntropy, mt, f);
    const auto out = outlier_residuals(LossKind::CrossEntropy, mt, f, theta);
    const auto non = non_outlier_residuals(LossKind::CrossEntropy, mt, f, theta);
    for (std::size_t i = 0; i < mt.size(); ++i) {
        const double s = sigmoid(theta[static_cast<std::size_t>(mt.task_of[i])]);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(out(i, k) == plain(i, k) * s);
            CHECK(non(i, k) == plain(i, k) * (1.0 - s));
            CHECK(out(i, k) + non(i, k) == doctest::Approx(plain(i, k)).epsilon(1e-15));
        }
    }
}

TEST_CASE("a zero gate parameter halves the residual") {
    std::mt19937_64 rng(2);
    const auto mt = testing::random_dataset(2, 5, 2, 1, rng);
    const ScoreMatrix f(mt.size(), 1);
    const std::vector<double> theta{0.0, 0.0};
    const auto out = outlier_residuals(LossKind::SquaredError, mt, f, theta);
    for (std::size_t i = 0; i < mt.size(); ++i) CHECK(out(i, 0) == 0.5 * mt.targets[i]);
    const std::vector<double> wrong{0.0};
    CHECK_THROWS_AS(outlier_residuals(LossKind::SquaredError, mt, f, wrong), InvalidArgument);
}

TEST_CASE("theta gradient on a single hand example") {
    MultiTaskDataset mt;
    mt.features = Matrix(1, 1);
    mt.targets = {1.0};
    mt.task_of = {0};
    mt.num_tasks = 1;
    ScoreMatrix scores(1, 1);  // residual r = 1
    ScoreMatrix out(1, 1);
    out(0, 0) = 2.0;
    ScoreMatrix non(1, 1);
    const std::vector<double> theta{0.0};
    const auto g = theta_gradient(LossKind::SquaredError, mt, scores, out, non, theta);
    CHECK(g[0] == doctest::Approx(-0.5));
}

TEST_CASE("theta gradient vanishes when both components agree") {
    std::mt19937_64 rng(3);
    const auto mt = testing::random_dataset(3, 6, 2, 1, rng);
    const ScoreMatrix shared = testing::random_matrix(mt.size(), 1, rng);
    const ScoreMatrix comp = testing::random_matrix(mt.size(), 1, rng);
    const std::vector<double> theta{0.3, -1.0, 2.0};
    const auto g = theta_gradient(LossKind::SquaredError, mt, shared, comp, comp, theta);
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("theta gradient matches central differences of the summed loss") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 1.5);
    const double h = 1e-6;
    for (int rep = 0; rep < 20; ++rep) {
        const int classes = rep % 2 == 0 ? 1 : 3;
        const auto loss = classes == 1 ? LossKind::SquaredError : LossKind::CrossEntropy;
        const auto mt = testing::random_dataset(4, 8, 3, classes, rng);
        const auto k = static_cast<std::size_t>(classes);
        const ScoreMatrix shared = testing::random_matrix(mt.size(), k, rng);
        const ScoreMatrix out = testing::random_matrix(mt.size(), k, rng, -2, 2);
        const ScoreMatrix non = testing::random_matrix(mt.size(), k, rng, -2, 2);
        std::vector<double> theta(4);
        for (auto& t : theta) t = n(rng);
        const auto g = theta_gradient(loss, mt, gated_scores(mt, shared, out, non, theta), out, non, theta);
        for (std::size_t t = 0; t < 4; ++t) {
            auto up = theta;
            auto dn = theta;
            up[t] += h;
            dn[t] -= h;
            const double fd =
                (gated_loss(loss, mt, shared, out, non, up) - gated_loss(loss, mt, shared, out, non, dn)) / (2 * h);
            CHECK(std::abs(g[t] - fd) <= 1e-5 * std::max(std::abs(fd), 1e-3));
        }
    }
}

TEST_CASE("without gated rounds the model is two-block MTGB") {
    std::mt19937_64 rng(5);
    for (int classes : {1, 3}) {
        const auto loss = classes == 1 ? LossKind::SquaredError : LossKind::CrossEntropy;
        const auto mt = testing::random_dataset(3, 30, 3, classes, rng);
        RmtgbConfig cfg;
        cfg.m1 = 6;
        cfg.m2 = 0;
        cfg.m3 = 5;
        cfg.shrinkage = 0.5;
        cfg.seed = 17;
        const auto r = fit_rmtgb(mt, loss, cfg);
        const auto m = fit_mtgb(mt, loss, 6, 5, 0.5);
        for (int t = 0; t < 3; ++t) CHECK(r.predict(mt.features, t) == m.predict(mt.features, t));
    }
}

TEST_CASE("one task with only fine-tuning rounds is plain boosting") {
    std::mt19937_64 rng(6);
    const auto mt = testing::random_dataset(1, 50, 3, 1, rng);
    RmtgbConfig cfg;
    cfg.m1 = 0;
    cfg.m2 = 0;
    cfg.m3 = 12;
    cfg.seed = 3;
    const auto r = fit_rmtgb(mt, LossKind::SquaredError, cfg);
    const auto g = fit_gb(mt.features, mt.targets, LossKind::SquaredError, 1, {12, 1.0, InitMode::Zero});
    CHECK(r.predict(mt.features, 0) == g.predict(mt.features));
}

TEST_CASE("identical seeds give identical models, different seeds different theta") {
    std::mt19937_64 rng(7);
    const auto mt = testing::random_dataset(4, 20, 2, 1, rng);
    RmtgbConfig cfg;
    cfg.m1 = 3;
    cfg.m2 = 4;
    cfg.m3 = 2;
    cfg.seed = 11;
    const auto a = fit_rmtgb(mt, LossKind::SquaredError, cfg);
    const auto b = fit_rmtgb(mt, LossKind::SquaredError, cfg);
    CHECK(rmtgb_to_json(a) == rmtgb_to_json(b));
    cfg.seed = 12;
    const auto c = fit_rmtgb(mt, LossKind::SquaredError, cfg);
    CHECK(c.theta != a.theta);
}

TEST_CASE("empty model predicts zero and a zero gate averages the pair") {
    std::mt19937_64 rng(8);
    const auto mt = testing::random_dataset(2, 10, 2, 1, rng);
    RmtgbConfig cfg;
    cfg.m1 = cfg.m2 = cfg.m3 = 0;
    const auto empty = fit_rmtgb(mt, LossKind::SquaredError, cfg);
    const auto p = empty.predict(mt.features, 1);
    for (std::size_t i = 0; i < p.rows(); ++i) CHECK(p(i, 0) == 0.0);

    cfg.m1 = 2;
    cfg.m2 = 3;
    cfg.m3 = 1;
    auto m = fit_rmtgb(mt, LossKind::SquaredError, cfg);
    m.theta[0] = 0.0;
    const auto s = m.shared.predict(mt.features);
    const auto o = m.outlier.predict(mt.features);
    const auto n = m.non_outlier.predict(mt.features);
    const auto t = m.per_task[0].predict(mt.features);
    const auto f = m.predict(mt.features, 0);
    for (std::size_t i = 0; i < f.rows(); ++i) {
        CHECK(f(i, 0) == doctest::Approx(s(i, 0) + 0.5 * (o(i, 0) + n(i, 0)) + t(i, 0)));
    }
}

TEST_CASE("training logs one line per round and shared-block loss never increases") {
    std::mt19937_64 rng(9);
    const auto mt = testing::random_dataset(3, 25, 2, 1, rng);
    RmtgbConfig cfg;
    cfg.m1 = 8;
    cfg.m2 = 4;
    cfg.m3 = 3;
    std::vector<std::pair<std::string, double>> lines;
    fit_rmtgb(mt, LossKind::SquaredError, cfg,
              [&](std::string_view c, int, double l) { lines.emplace_back(std::string(c), l); });
    REQUIRE(lines.size() == 15);
    for (std::size_t i = 1; i < 8; ++i) CHECK(lines[i].second <= lines[i - 1].second + 1e-12);
    CHECK(lines[0].first == "shared");
    CHECK(lines[8].first == "gated");
    CHECK(lines[14].first == "task");
}

TEST_CASE("invalid configurations are rejected") {
    std::mt19937_64 rng(10);
    auto mt = testing::random_dataset(2, 4, 2, 1, rng);
    RmtgbConfig cfg;
    cfg.shrinkage = 0.0;
    CHECK_THROWS_AS(fit_rmtgb(mt, LossKind::SquaredError, cfg), InvalidArgument);
    cfg.shrinkage = 1.0;
    cfg.m1 = -1;
    CHECK_THROWS_AS(fit_rmtgb(mt, LossKind::SquaredError, cfg), InvalidArgument);
    cfg.m1 = 1;
    mt.task_of.assign(mt.size(), 0);
    mt.task_of.back() = 1;
    CHECK_THROWS_AS(fit_rmtgb(mt, LossKind::SquaredError, cfg), InvalidArgument);
}

TEST_CASE("JSON round trip preserves predictions") {
    std::mt19937_64 rng(11);
    const auto mt = testing::random_dataset(3, 20, 2, 3, rng);
    RmtgbConfig cfg;
    cfg.m1 = 2;
    cfg.m2 = 3;
    cfg.m3 = 2;
    const auto m = fit_rmtgb(mt, LossKind::CrossEntropy, cfg);
    const auto j = rmtgb_to_json(m);
    for (const char* key : {"loss", "rounds", "shrinkage", "theta", "shared", "outlier", "non_outlier", "per_task"}) {
        CHECK(j.contains(key));
    }
    const auto back = rmtgb_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.predict(mt.features, mt.task_of) == m.predict(mt.features, mt.task_of));
}

TEST_CASE("forked trainers continue independently of their parent") {
    std::mt19937_64 rng(12);
    const auto mt = testing::random_dataset(3, 20, 2, 1, rng);
    RmtgbConfig cfg;
    cfg.seed = 5;
    RmtgbTrainer base(mt, LossKind::SquaredError, cfg);
    base.run_shared(3);
    RmtgbTrainer branch = base.fork();
    branch.run_gated(2);
    CHECK(base.model().rounds[1] == 0);
    CHECK(base.model().outlier.stumps.empty());
    const auto model = branch.finish(4);
    cfg.m1 = 3;
    cfg.m2 = 2;
    cfg.m3 = 4;
    CHECK(rmtgb_to_json(model) == rmtgb_to_json(fit_rmtgb(mt, LossKind::SquaredError, cfg)));
    CHECK(rmtgb_to_json(truncate_task_rounds(model, 1)) ==
          rmtgb_to_json(truncate_task_rounds(fit_rmtgb(mt, LossKind::SquaredError, cfg), 1)));
    CHECK_THROWS_AS(truncate_task_rounds(model, 5), InvalidArgument);
    CHECK_THROWS_AS(branch.run_shared(1), InvalidArgument);
}
