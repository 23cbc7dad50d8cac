#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddcrnn/panel.hpp"

namespace ddcrnn {

struct TraceRecord {
    int64_t timestamp = 0;  // epoch seconds
    std::string node_id;
    double volume = 0.0;  // bytes moved in the source interval
};

// CSV with a header row. Long format `timestamp,node,volume_bytes` or wide
// format `timestamp,<node1>,<node2>,...` (auto-detected). Wide cells may be
// empty (no record). Throws ParseError with the offending line number.
std::vector<TraceRecord> parse_traces(std::istream& in);

// Sums raw byte volumes into hourly bins on a shared time axis and converts
// to GB/s (sum / 3600 / 1e9). Bins with no contributing records are NaN with
// mask = 1, to be resolved by fill_gaps.
TrafficPanel aggregate_hourly(const std::vector<TraceRecord>& records);

// Replaces each missing bin with the mean of the nearest preceding and
// following observations of that node; leading/trailing gaps copy the single
// nearest observation. A node with no observations at all is an error.
TrafficPanel fill_gaps(const TrafficPanel& panel);

struct PanelSplit {
    TrafficPanel train, val, test;
};

// Contiguous chronological segments; each must hold at least min_segment
// rows. Counts are round(T * fraction), remainder to test.
PanelSplit chronological_split(const TrafficPanel& panel, const SplitSpec& spec,
                               int min_segment = 1);

// Per-node min/max over the given (training) panel. per_node=false fits one
// global min/max shared by all nodes.
ScalerParams fit_scaler(const TrafficPanel& train, bool per_node = true,
                        const std::string& fitted_on = "train");

// (x - min) / (max - min) per node; degenerate nodes (max == min) map to 0.
// Out-of-range results are passed through unclamped.
TrafficPanel apply_scaler(const TrafficPanel& panel, const ScalerParams& params);
// Exact inverse; degenerate nodes map back to min.
TrafficPanel invert_scaler(const TrafficPanel& panel, const ScalerParams& params);

}  // namespace ddcrnn
