#pragma once

#include <cstddef>
#include <vector>

#include "json.hpp"

#include "rmtgb/matrix.hpp"

namespace rmtgb {

/// Depth-1 regression tree with one value vector per leaf.
/// A sample goes left when x[feature] <= threshold.
struct Stump {
    std::size_t feature = 0;
    double threshold = 0;
    std::vector<double> left;
    std::vector<double> right;

    bool degenerate() const noexcept;
    bool operator==(const Stump&) const = default;
};

/// Per-feature sample orderings, built once and reused across boosting rounds
/// because only the residuals change between rounds.
class SortedFeatures {
public:
    explicit SortedFeatures(const Matrix& features);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return order_.size(); }
    const std::vector<std::size_t>& order(std::size_t feature) const { return order_[feature]; }

private:
    std::size_t rows_;
    std::vector<std::vector<std::size_t>> order_;
};

/// Exhaustive search over every (feature, midpoint) split minimizing the
/// summed squared error across all outputs. Ties go to the lowest feature,
/// then the lowest threshold.
Stump fit_stump(const Matrix& features, const Matrix& residuals);
Stump fit_stump(const SortedFeatures& sorted, const Matrix& features, const Matrix& residuals);

Matrix predict_stump(const Stump& stump, const Matrix& features);

/// Adds scale * stump(x_i) to out.row(i) for each row.
void accumulate_stump(const Stump& stump, const Matrix& features, double scale, Matrix& out);

void to_json(nlohmann::json& j, const Stump& stump);
void from_json(const nlohmann::json& j, Stump& stump);

}  // namespace rmtgb
