#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "rmtgb/core.hpp"

namespace testing {

inline rmtgb::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                   double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    rmtgb::Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = u(rng);
    }
    return m;
}

/// Random multi-task problem with `per_task` samples in each task, tasks interleaved.
inline rmtgb::MultiTaskDataset random_dataset(int tasks, std::size_t per_task, std::size_t dim,
                                              int classes, std::mt19937_64& rng) {
    rmtgb::MultiTaskDataset mt;
    const std::size_t n = per_task * static_cast<std::size_t>(tasks);
    mt.features = random_matrix(n, dim, rng);
    mt.num_tasks = tasks;
    mt.num_classes = classes;
    std::normal_distribution<double> noise(0.0, 0.3);
    for (std::size_t i = 0; i < n; ++i) {
        const int t = static_cast<int>(i % static_cast<std::size_t>(tasks));
        mt.task_of.push_back(t);
        const double signal = std::sin(3.0 * mt.features(i, 0)) + (t + 1) * 0.3 * mt.features(i, 1 % dim);
        if (classes == 1) {
            mt.targets.push_back(signal + noise(rng));
        } else {
            const double z = signal + noise(rng);
            int label = z < -0.4 ? 0 : (z < 0.4 ? 1 : 2);
            mt.targets.push_back(static_cast<double>(label % classes));
        }
    }
    return mt;
}

/// SSE of the two-leaf partition at (feature, threshold), accumulated in
/// quad precision so that tied partitions compare equal after rounding.
inline double partition_sse(const rmtgb::Matrix& x, const rmtgb::Matrix& r, std::size_t feature,
                            double threshold) {
    using quad = __float128;
    const std::size_t k = r.cols();
    std::vector<quad> sl(k), sr(k);
    quad nl = 0, nr = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const bool left = x(i, feature) <= threshold;
        for (std::size_t j = 0; j < k; ++j) (left ? sl : sr)[j] += r(i, j);
        (left ? nl : nr) += 1;
    }
    quad sse = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const bool left = x(i, feature) <= threshold;
        for (std::size_t j = 0; j < k; ++j) {
            const quad d = quad(r(i, j)) - (left ? sl[j] / nl : sr[j] / nr);
            sse += d * d;
        }
    }
    return static_cast<double>(sse);
}

/// Minimum partition SSE over every midpoint between consecutive distinct values.
inline double brute_force_min_sse(const rmtgb::Matrix& x, const rmtgb::Matrix& r) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < x.cols(); ++f) {
        std::vector<double> v(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) v[i] = x(i, f);
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            best = std::min(best, partition_sse(x, r, f, 0.5 * (v[i] + v[i + 1])));
        }
    }
    return best;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace testing
