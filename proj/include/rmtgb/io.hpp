#pragma once

#include <iosfwd>
#include <string>

#include "rmtgb/core.hpp"

namespace rmtgb {

/// Dataset CSV: header `task,y,x0,...,x{d-1}`, one sample per line.
/// Classification labels are class indices; K is the largest label + 1 (at least 2).
MultiTaskDataset read_dataset_csv(std::istream& in, bool classification);
MultiTaskDataset read_dataset_csv(const std::string& path, bool classification);

void write_dataset_csv(std::ostream& out, const MultiTaskDataset& data);
void write_dataset_csv(const std::string& path, const MultiTaskDataset& data);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace rmtgb
