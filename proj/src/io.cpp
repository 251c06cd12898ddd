#include "rmtgb/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace rmtgb {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view field, std::size_t line_no) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse number '" +
                         std::string(field) + "'");
    }
    return v;
}

}  // namespace

MultiTaskDataset read_dataset_csv(std::istream& in, bool classification) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("line 1: missing header");
    ++line_no;
    const auto header = split_commas(line);
    if (header.size() < 3 || trim(header[0]) != "task" || trim(header[1]) != "y") {
        throw ParseError("line 1: header must start with task,y followed by feature columns");
    }
    const std::size_t dim = header.size() - 2;

    MultiTaskDataset data;
    std::vector<double> feats;
    int max_task = -1;
    int max_class = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        const double task = parse_number(fields[0], line_no);
        if (task < 0 || task != std::floor(task)) {
            throw ParseError("line " + std::to_string(line_no) + ": task id must be a nonnegative integer");
        }
        const double y = parse_number(fields[1], line_no);
        if (classification && (y < 0 || y != std::floor(y))) {
            throw ParseError("line " + std::to_string(line_no) + ": class label must be a nonnegative integer");
        }
        data.task_of.push_back(static_cast<int>(task));
        data.targets.push_back(y);
        max_task = std::max(max_task, static_cast<int>(task));
        if (classification) max_class = std::max(max_class, static_cast<int>(y));
        for (std::size_t j = 0; j < dim; ++j) feats.push_back(parse_number(fields[j + 2], line_no));
    }
    if (data.targets.empty()) throw ParseError("dataset has no rows");
    data.features = Matrix(data.targets.size(), dim, std::move(feats));
    data.num_tasks = max_task + 1;
    data.num_classes = classification ? std::max(2, max_class + 1) : 1;
    try {
        data.validate(classification ? LossKind::CrossEntropy : LossKind::SquaredError);
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
    return data;
}

MultiTaskDataset read_dataset_csv(const std::string& path, bool classification) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return read_dataset_csv(in, classification);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_dataset_csv(std::ostream& out, const MultiTaskDataset& data) {
    out << "task,y";
    for (std::size_t j = 0; j < data.dim(); ++j) out << ",x" << j;
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data.task_of[i] << ',' << format_double(data.targets[i]);
        for (double v : data.features.row(i)) out << ',' << format_double(v);
        out << '\n';
    }
}

void write_dataset_csv(const std::string& path, const MultiTaskDataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_dataset_csv(out, data);
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace rmtgb
