#include "rmtgb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace rmtgb {

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::Accuracy: return "accuracy";
        case MetricKind::MacroRecall: return "macro_recall";
        case MetricKind::Rmse: return "rmse";
        case MetricKind::Mae: return "mae";
    }
    return "unknown";
}

MetricKind metric_from_string(const std::string& name) {
    if (name == "accuracy") return MetricKind::Accuracy;
    if (name == "macro_recall") return MetricKind::MacroRecall;
    if (name == "rmse") return MetricKind::Rmse;
    if (name == "mae") return MetricKind::Mae;
    throw InvalidArgument("unknown metric: " + name);
}

bool higher_is_better(MetricKind kind) noexcept {
    return kind == MetricKind::Accuracy || kind == MetricKind::MacroRecall;
}

double metric(MetricKind kind, std::span<const double> targets, std::span<const double> predictions) {
    if (targets.size() != predictions.size()) throw InvalidArgument("metric: length mismatch");
    if (targets.empty()) throw InvalidArgument("metric: empty input");
    const auto n = static_cast<double>(targets.size());
    switch (kind) {
        case MetricKind::Accuracy: {
            std::size_t hits = 0;
            for (std::size_t i = 0; i < targets.size(); ++i) hits += targets[i] == predictions[i];
            return static_cast<double>(hits) / n;
        }
        case MetricKind::MacroRecall: {
            std::map<double, std::pair<std::size_t, std::size_t>> per_class;  // hits, support
            for (std::size_t i = 0; i < targets.size(); ++i) {
                auto& [hits, support] = per_class[targets[i]];
                ++support;
                hits += targets[i] == predictions[i];
            }
            double total = 0;
            for (const auto& [cls, hs] : per_class) {
                total += static_cast<double>(hs.first) / static_cast<double>(hs.second);
            }
            return total / static_cast<double>(per_class.size());
        }
        case MetricKind::Rmse: {
            double acc = 0;
            for (std::size_t i = 0; i < targets.size(); ++i) {
                const double d = targets[i] - predictions[i];
                acc += d * d;
            }
            return std::sqrt(acc / n);
        }
        case MetricKind::Mae: {
            double acc = 0;
            for (std::size_t i = 0; i < targets.size(); ++i) acc += std::abs(targets[i] - predictions[i]);
            return acc / n;
        }
    }
    return 0;
}

std::pair<MultiTaskDataset, MultiTaskDataset> split_train_test(const MultiTaskDataset& data,
                                                               double ratio, std::mt19937_64& rng) {
    if (!(ratio > 0 && ratio < 1)) throw InvalidArgument("split ratio must lie in (0, 1)");
    std::vector<char> in_train(data.size(), 0);
    const auto slices = data.task_indices();
    for (std::size_t t = 0; t < slices.size(); ++t) {
        auto idx = slices[t];
        if (idx.size() < 2) {
            throw InvalidArgument("task " + std::to_string(t) + " has fewer than 2 samples to split");
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(idx.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        for (std::size_t j = 0; j < n_train; ++j) in_train[idx[j]] = 1;
    }
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < data.size(); ++i) (in_train[i] ? train_idx : test_idx).push_back(i);
    return {data.subset(train_idx), data.subset(test_idx)};
}

std::vector<int> stratified_folds(const MultiTaskDataset& data, int folds, std::uint64_t seed) {
    if (folds < 2) throw InvalidArgument("need at least 2 folds");
    const auto slices = data.task_indices();
    for (std::size_t t = 0; t < slices.size(); ++t) {
        if (slices[t].size() < static_cast<std::size_t>(folds)) {
            throw InvalidArgument("task " + std::to_string(t) + " has fewer samples than folds");
        }
    }
    std::mt19937_64 rng(seed);
    std::vector<int> fold_of(data.size(), 0);
    const bool by_class = data.num_classes > 1;
    std::size_t next = 0;
    for (const auto& slice : slices) {
        std::map<double, std::vector<std::size_t>> groups;
        for (std::size_t i : slice) groups[by_class ? data.targets[i] : 0.0].push_back(i);
        for (auto& [key, idx] : groups) {
            std::shuffle(idx.begin(), idx.end(), rng);
            for (std::size_t i : idx) fold_of[i] = static_cast<int>(next++ % static_cast<std::size_t>(folds));
        }
    }
    return fold_of;
}

GridSearchResult grid_search_cv_folds(std::size_t num_candidates, const MultiTaskDataset& train,
                                      int folds, std::uint64_t seed, const FoldScorer& scorer) {
    if (num_candidates == 0) throw InvalidArgument("grid_search_cv: empty grid");
    const auto fold_of = stratified_folds(train, folds, seed);
    GridSearchResult result;
    result.mean_scores.assign(num_candidates, 0.0);
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> fit_idx;
        std::vector<std::size_t> val_idx;
        for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? val_idx : fit_idx).push_back(i);
        const auto scores = scorer(train.subset(fit_idx), train.subset(val_idx));
        if (scores.size() != num_candidates) throw InvalidArgument("grid_search_cv: wrong score count");
        for (std::size_t c = 0; c < num_candidates; ++c) result.mean_scores[c] += scores[c];
    }
    for (double& s : result.mean_scores) s /= folds;
    for (std::size_t c = 1; c < num_candidates; ++c) {
        if (result.mean_scores[c] > result.mean_scores[result.best]) result.best = c;
    }
    return result;
}

GridSearchResult grid_search_cv(std::size_t num_candidates, const MultiTaskDataset& train,
                                int folds, std::uint64_t seed, const CvScorer& scorer) {
    return grid_search_cv_folds(
        num_candidates, train, folds, seed, [&](const MultiTaskDataset& fit, const MultiTaskDataset& val) {
            std::vector<double> scores(num_candidates);
            for (std::size_t c = 0; c < num_candidates; ++c) scores[c] = scorer(c, fit, val);
            return scores;
        });
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw InvalidArgument("pearson: length mismatch");
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0;
    double saa = 0;
    double sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0 || sbb == 0) return 0;
    return sab / std::sqrt(saa * sbb);
}

std::vector<std::vector<double>> align_theta(const std::vector<std::vector<double>>& sigma_vectors) {
    if (sigma_vectors.empty()) throw InvalidArgument("align_theta: no vectors");
    const auto& ref = sigma_vectors.front();
    std::vector<std::vector<double>> out;
    out.reserve(sigma_vectors.size());
    out.push_back(ref);
    for (std::size_t v = 1; v < sigma_vectors.size(); ++v) {
        const auto& cur = sigma_vectors[v];
        if (cur.size() != ref.size()) throw InvalidArgument("align_theta: length mismatch");
        auto aligned = cur;
        if (pearson(ref, cur) < 0) {
            for (double& s : aligned) s = 1.0 - s;
        }
        out.push_back(std::move(aligned));
    }
    return out;
}

double nemenyi_q05(int num_models) {
    // Two-tailed Nemenyi critical values (studentized range / sqrt 2), alpha = 0.05.
    static constexpr double kTable[] = {1.960, 2.343, 2.569, 2.728, 2.850,
                                        2.949, 3.031, 3.102, 3.164};
    if (num_models < 2 || num_models > 10) {
        throw InvalidArgument("nemenyi_q05: supported model counts are 2..10");
    }
    return kTable[num_models - 2];
}

double critical_distance(int num_models, int num_scenarios) {
    if (num_scenarios < 1) throw InvalidArgument("critical_distance: need at least one scenario");
    const double k = num_models;
    return nemenyi_q05(num_models) * std::sqrt(k * (k + 1) / (6.0 * num_scenarios));
}

std::vector<double> fractional_ranks(std::span<const double> scores, bool higher_better) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return higher_better ? scores[a] > scores[b] : scores[a] < scores[b];
    });
    std::vector<double> ranks(scores.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t p = i; p <= j; ++p) ranks[order[p]] = shared;
        i = j + 1;
    }
    return ranks;
}

RankSummary rank_models(const std::vector<std::vector<double>>& score_table, bool higher_better) {
    if (score_table.empty()) throw InvalidArgument("rank_models: empty table");
    const std::size_t k = score_table.front().size();
    if (k < 2) throw InvalidArgument("rank_models: need at least two models");
    RankSummary summary;
    summary.num_models = static_cast<int>(k);
    summary.num_scenarios = static_cast<int>(score_table.size());
    summary.avg_rank.assign(k, 0.0);
    for (const auto& row : score_table) {
        if (row.size() != k) throw InvalidArgument("rank_models: ragged table");
        const auto ranks = fractional_ranks(row, higher_better);
        for (std::size_t m = 0; m < k; ++m) summary.avg_rank[m] += ranks[m];
    }
    for (double& r : summary.avg_rank) r /= static_cast<double>(score_table.size());
    summary.critical_distance = critical_distance(summary.num_models, summary.num_scenarios);
    return summary;
}

}  // namespace rmtgb
