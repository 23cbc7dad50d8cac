#include "ddcrnn/trace_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <unordered_map>

namespace ddcrnn {

TrafficPanel TrafficPanel::slice_rows(int first, int count) const {
    if (first < 0 || count < 0 || first + count > num_steps()) {
        throw ValidationError("slice_rows: rows [" + std::to_string(first) + ", " +
                              std::to_string(first + count) + ") out of range for T=" +
                              std::to_string(num_steps()));
    }
    TrafficPanel out;
    out.start_time = time_at(first);
    out.step = step;
    out.node_ids = node_ids;
    out.values = Matrix(count, num_nodes());
    out.mask.resize(static_cast<size_t>(count) * num_nodes());
    for (int r = 0; r < count; ++r) {
        for (int c = 0; c < num_nodes(); ++c) {
            out.values(r, c) = values(first + r, c);
            out.set_mask(r, c, mask_at(first + r, c));
        }
    }
    return out;
}

void SplitSpec::validate() const {
    if (train_fraction <= 0.0 || val_fraction <= 0.0 || test_fraction <= 0.0) {
        throw ValidationError("split fractions must be positive");
    }
    const double sum = train_fraction + val_fraction + test_fraction;
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw ValidationError("split fractions must sum to 1, got " + std::to_string(sum));
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

int64_t parse_timestamp(const std::string& field, int line_no) {
    const std::string s = trim(field);
    if (s.empty()) throw ParseError(line_no, "empty timestamp");
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) {
        throw ParseError(line_no, "bad timestamp '" + s + "'");
    }
    if (v < 0) throw ParseError(line_no, "negative timestamp " + s);
    return v;
}

double parse_volume(const std::string& field, int line_no) {
    const std::string s = trim(field);
    if (s.empty()) throw ParseError(line_no, "empty volume");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ParseError(line_no, "bad volume '" + s + "'");
    }
    if (v < 0.0) throw ValidationError("line " + std::to_string(line_no) + ": negative volume " + s);
    return v;
}

}  // namespace

std::vector<TraceRecord> parse_traces(std::istream& in) {
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) return {};  // empty input
    ++line_no;

    const auto header = split_csv(line);
    if (header.empty() || trim(header[0]) != "timestamp") {
        throw ParseError(line_no, "header must start with 'timestamp'");
    }

    const bool long_format = header.size() == 3 && trim(header[1]) == "node" &&
                             trim(header[2]) == "volume_bytes";
    std::vector<std::string> wide_nodes;
    if (!long_format) {
        if (header.size() < 2) throw ParseError(line_no, "wide header needs at least one node column");
        for (size_t i = 1; i < header.size(); ++i) {
            const std::string id = trim(header[i]);
            if (id.empty()) throw ParseError(line_no, "empty node name in header");
            wide_nodes.push_back(id);
        }
    }

    std::vector<TraceRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (long_format) {
            if (fields.size() != 3) {
                throw ParseError(line_no, "expected 3 fields, got " + std::to_string(fields.size()));
            }
            TraceRecord rec;
            rec.timestamp = parse_timestamp(fields[0], line_no);
            rec.node_id = trim(fields[1]);
            if (rec.node_id.empty()) throw ParseError(line_no, "empty node id");
            rec.volume = parse_volume(fields[2], line_no);
            records.push_back(std::move(rec));
        } else {
            if (fields.size() != wide_nodes.size() + 1) {
                throw ParseError(line_no, "expected " + std::to_string(wide_nodes.size() + 1) +
                                              " fields, got " + std::to_string(fields.size()));
            }
            const int64_t ts = parse_timestamp(fields[0], line_no);
            for (size_t i = 0; i < wide_nodes.size(); ++i) {
                if (trim(fields[i + 1]).empty()) continue;  // absent cell
                records.push_back({ts, wide_nodes[i], parse_volume(fields[i + 1], line_no)});
            }
        }
    }
    return records;
}

TrafficPanel aggregate_hourly(const std::vector<TraceRecord>& records) {
    if (records.empty()) throw ValidationError("aggregate_hourly: no records");
    constexpr int64_t kStep = 3600;

    int64_t min_bin = std::numeric_limits<int64_t>::max();
    int64_t max_bin = std::numeric_limits<int64_t>::min();
    std::vector<std::string> node_ids;
    std::unordered_map<std::string, int> node_index;
    for (const auto& rec : records) {
        const int64_t bin = rec.timestamp / kStep;
        min_bin = std::min(min_bin, bin);
        max_bin = std::max(max_bin, bin);
        if (!node_index.count(rec.node_id)) {
            node_index.emplace(rec.node_id, static_cast<int>(node_ids.size()));
            node_ids.push_back(rec.node_id);
        }
    }

    const int num_steps = static_cast<int>(max_bin - min_bin + 1);
    const int num_nodes = static_cast<int>(node_ids.size());

    TrafficPanel panel;
    panel.start_time = min_bin * kStep;
    panel.step = kStep;
    panel.node_ids = std::move(node_ids);
    panel.values = Matrix(num_steps, num_nodes);
    panel.mask.assign(static_cast<size_t>(num_steps) * num_nodes, 1);

    Matrix sums(num_steps, num_nodes);
    for (const auto& rec : records) {
        const int row = static_cast<int>(rec.timestamp / kStep - min_bin);
        const int col = node_index.at(rec.node_id);
        sums(row, col) += rec.volume;
        panel.set_mask(row, col, 0);  // observed
    }
    for (int r = 0; r < num_steps; ++r) {
        for (int c = 0; c < num_nodes; ++c) {
            panel.values(r, c) = panel.mask_at(r, c)
                                     ? std::numeric_limits<double>::quiet_NaN()
                                     : sums(r, c) / 3600.0 / 1e9;  // bytes -> GB/s
        }
    }
    return panel;
}

TrafficPanel fill_gaps(const TrafficPanel& panel) {
    TrafficPanel out = panel;
    const int steps = out.num_steps();
    for (int c = 0; c < out.num_nodes(); ++c) {
        std::vector<int> observed;
        for (int r = 0; r < steps; ++r)
            if (std::isfinite(out.values(r, c))) observed.push_back(r);
        if (observed.empty()) {
            throw ValidationError("fill_gaps: node '" + out.node_ids[c] + "' has no observed values");
        }
        size_t next = 0;  // first observed index >= current row
        for (int r = 0; r < steps; ++r) {
            if (std::isfinite(out.values(r, c))) {
                while (next < observed.size() && observed[next] <= r) ++next;
                continue;
            }
            const int after = next < observed.size() ? observed[next] : -1;
            const int before = next > 0 ? observed[next - 1] : -1;
            double v;
            if (before >= 0 && after >= 0) {
                v = 0.5 * (out.values(before, c) + out.values(after, c));
            } else if (before >= 0) {
                v = out.values(before, c);
            } else {
                v = out.values(after, c);
            }
            out.values(r, c) = v;
            out.set_mask(r, c, 1);
        }
    }
    return out;
}

PanelSplit chronological_split(const TrafficPanel& panel, const SplitSpec& spec,
                               int min_segment) {
    spec.validate();
    const int total = panel.num_steps();
    const int n_train = static_cast<int>(std::llround(total * spec.train_fraction));
    const int n_val = static_cast<int>(std::llround(total * spec.val_fraction));
    const int n_test = total - n_train - n_val;
    const int need = std::max(min_segment, 1);
    if (n_train < need || n_val < need || n_test < need) {
        // Smallest T where every segment reaches the minimum.
        int t_min = total;
        for (;; ++t_min) {
            const int a = static_cast<int>(std::llround(t_min * spec.train_fraction));
            const int b = static_cast<int>(std::llround(t_min * spec.val_fraction));
            if (a >= need && b >= need && t_min - a - b >= need) break;
        }
        throw ValidationError("chronological_split: T=" + std::to_string(total) +
                              " gives segments " + std::to_string(n_train) + "/" +
                              std::to_string(n_val) + "/" + std::to_string(n_test) +
                              ", each needs >= " + std::to_string(need) +
                              " steps (minimum T is " + std::to_string(t_min) + ")");
    }
    PanelSplit out;
    out.train = panel.slice_rows(0, n_train);
    out.val = panel.slice_rows(n_train, n_val);
    out.test = panel.slice_rows(n_train + n_val, n_test);
    return out;
}

ScalerParams fit_scaler(const TrafficPanel& train, bool per_node, const std::string& fitted_on) {
    if (train.num_steps() == 0 || train.num_nodes() == 0) {
        throw ValidationError("fit_scaler: empty panel");
    }
    if (!all_finite(train.values)) {
        throw ValidationError("fit_scaler: panel has non-finite values; run fill_gaps first");
    }
    ScalerParams params;
    params.node_ids = train.node_ids;
    params.fitted_on = fitted_on;
    params.min.assign(train.num_nodes(), std::numeric_limits<double>::infinity());
    params.max.assign(train.num_nodes(), -std::numeric_limits<double>::infinity());
    for (int r = 0; r < train.num_steps(); ++r) {
        for (int c = 0; c < train.num_nodes(); ++c) {
            params.min[c] = std::min(params.min[c], train.values(r, c));
            params.max[c] = std::max(params.max[c], train.values(r, c));
        }
    }
    if (!per_node) {
        const double lo = *std::min_element(params.min.begin(), params.min.end());
        const double hi = *std::max_element(params.max.begin(), params.max.end());
        std::fill(params.min.begin(), params.min.end(), lo);
        std::fill(params.max.begin(), params.max.end(), hi);
    }
    return params;
}

namespace {

void check_scaler_nodes(const TrafficPanel& panel, const ScalerParams& params, const char* op) {
    if (panel.node_ids != params.node_ids) {
        throw ValidationError(std::string(op) + ": panel node ids do not match scaler node ids");
    }
}

}  // namespace

TrafficPanel apply_scaler(const TrafficPanel& panel, const ScalerParams& params) {
    check_scaler_nodes(panel, params, "apply_scaler");
    TrafficPanel out = panel;
    for (int c = 0; c < out.num_nodes(); ++c) {
        const double lo = params.min[c];
        const double range = params.max[c] - lo;
        for (int r = 0; r < out.num_steps(); ++r) {
            out.values(r, c) = range == 0.0 ? 0.0 : (out.values(r, c) - lo) / range;
        }
    }
    return out;
}

TrafficPanel invert_scaler(const TrafficPanel& panel, const ScalerParams& params) {
    check_scaler_nodes(panel, params, "invert_scaler");
    TrafficPanel out = panel;
    for (int c = 0; c < out.num_nodes(); ++c) {
        const double lo = params.min[c];
        const double range = params.max[c] - lo;
        for (int r = 0; r < out.num_steps(); ++r) {
            out.values(r, c) = range == 0.0 ? lo : out.values(r, c) * range + lo;
        }
    }
    return out;
}

}  // namespace ddcrnn
