#include "rmtgb/stump.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rmtgb/core.hpp"

namespace rmtgb {

bool Stump::degenerate() const noexcept { return std::isinf(threshold); }

SortedFeatures::SortedFeatures(const Matrix& features) : rows_(features.rows()) {
    order_.resize(features.cols());
    for (std::size_t f = 0; f < features.cols(); ++f) {
        auto& ord = order_[f];
        ord.resize(rows_);
        std::iota(ord.begin(), ord.end(), std::size_t{0});
        std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
            return features(a, f) < features(b, f);
        });
    }
}

namespace {

double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2;
    // Adjacent doubles: keep lo on the left side.
    return mid < hi ? mid : lo;
}

void fill_leaves(Stump& stump, const Matrix& features, const Matrix& residuals) {
    const std::size_t k_out = residuals.cols();
    stump.left.assign(k_out, 0.0);
    stump.right.assign(k_out, 0.0);
    std::size_t n_left = 0;
    std::size_t n_right = 0;
    for (std::size_t i = 0; i < residuals.rows(); ++i) {
        const bool go_left = stump.degenerate() || features(i, stump.feature) <= stump.threshold;
        auto& leaf = go_left ? stump.left : stump.right;
        (go_left ? n_left : n_right) += 1;
        auto r = residuals.row(i);
        for (std::size_t k = 0; k < k_out; ++k) leaf[k] += r[k];
    }
    for (std::size_t k = 0; k < k_out; ++k) {
        if (n_left > 0) stump.left[k] /= static_cast<double>(n_left);
        if (n_right > 0) stump.right[k] /= static_cast<double>(n_right);
    }
    if (n_right == 0) stump.right = stump.left;
}

}  // namespace

Stump fit_stump(const Matrix& features, const Matrix& residuals) {
    if (features.rows() == 0) throw InvalidArgument("fit_stump: no samples");
    return fit_stump(SortedFeatures(features), features, residuals);
}

Stump fit_stump(const SortedFeatures& sorted, const Matrix& features, const Matrix& residuals) {
    const std::size_t n = features.rows();
    const std::size_t k_out = residuals.cols();
    if (n == 0) throw InvalidArgument("fit_stump: no samples");
    if (residuals.rows() != n || sorted.rows() != n || sorted.dim() != features.cols()) {
        throw InvalidArgument("fit_stump: shape mismatch");
    }
    if (k_out == 0) throw InvalidArgument("fit_stump: residuals have no outputs");

    std::vector<double> total(k_out, 0.0);
    double total_sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = residuals.row(i);
        for (std::size_t k = 0; k < k_out; ++k) {
            total[k] += r[k];
            total_sq += r[k] * r[k];
        }
    }
    // Gains within this band of the incumbent count as ties, so the earlier
    // candidate survives regardless of summation-order noise.
    const double tie_band = 1e-12 * (total_sq + std::numeric_limits<double>::min());

    Stump best;
    best.threshold = std::numeric_limits<double>::infinity();
    double best_gain = -std::numeric_limits<double>::infinity();
    std::vector<double> left_sum(k_out);

    for (std::size_t f = 0; f < features.cols(); ++f) {
        const auto& ord = sorted.order(f);
        std::fill(left_sum.begin(), left_sum.end(), 0.0);
        for (std::size_t j = 0; j + 1 < n; ++j) {
            auto r = residuals.row(ord[j]);
            for (std::size_t k = 0; k < k_out; ++k) left_sum[k] += r[k];
            const double lo = features(ord[j], f);
            const double hi = features(ord[j + 1], f);
            if (!(lo < hi)) continue;
            const auto n_left = static_cast<double>(j + 1);
            const auto n_right = static_cast<double>(n - j - 1);
            // SSE = total_sq - gain, so maximizing gain minimizes SSE.
            double gain = 0;
            for (std::size_t k = 0; k < k_out; ++k) {
                const double right = total[k] - left_sum[k];
                gain += left_sum[k] * left_sum[k] / n_left + right * right / n_right;
            }
            if (gain > best_gain + tie_band) {
                best_gain = gain;
                best.feature = f;
                best.threshold = midpoint(lo, hi);
            }
        }
    }
    if (best.degenerate()) best.feature = 0;
    fill_leaves(best, features, residuals);
    return best;
}

void accumulate_stump(const Stump& stump, const Matrix& features, double scale, Matrix& out) {
    if (!stump.degenerate() && stump.feature >= features.cols()) {
        throw InvalidArgument("stump feature index out of range");
    }
    if (out.rows() != features.rows() || out.cols() != stump.left.size()) {
        throw InvalidArgument("accumulate_stump: output shape mismatch");
    }
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const bool go_left = stump.degenerate() || features(i, stump.feature) <= stump.threshold;
        const auto& leaf = go_left ? stump.left : stump.right;
        auto row = out.row(i);
        for (std::size_t k = 0; k < leaf.size(); ++k) row[k] += scale * leaf[k];
    }
}

Matrix predict_stump(const Stump& stump, const Matrix& features) {
    Matrix out(features.rows(), stump.left.size());
    accumulate_stump(stump, features, 1.0, out);
    return out;
}

void to_json(nlohmann::json& j, const Stump& stump) {
    j = nlohmann::json{{"feature", stump.feature},
                       {"left", stump.left},
                       {"right", stump.right}};
    // JSON has no infinity; the degenerate sentinel is written as a string.
    if (stump.degenerate()) {
        j["threshold"] = "inf";
    } else {
        j["threshold"] = stump.threshold;
    }
}

void from_json(const nlohmann::json& j, Stump& stump) {
    stump.feature = j.at("feature").get<std::size_t>();
    const auto& thr = j.at("threshold");
    stump.threshold = thr.is_string() ? std::numeric_limits<double>::infinity() : thr.get<double>();
    stump.left = j.at("left").get<std::vector<double>>();
    stump.right = j.at("right").get<std::vector<double>>();
    if (stump.left.size() != stump.right.size() || stump.left.empty()) {
        throw ParseError("stump leaves must be non-empty and of equal length");
    }
}

}  // namespace rmtgb
