#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddcrnn/matrix.hpp"

namespace ddcrnn {

// Time-aligned traffic matrix: T rows of hourly bins, one column per node,
// values in GB/s. mask marks cells that were not directly observed (missing
// before fill_gaps, filled after).
struct TrafficPanel {
    int64_t start_time = 0;  // epoch seconds of row 0
    int64_t step = 3600;     // seconds per bin
    std::vector<std::string> node_ids;
    Matrix values;               // T x N
    std::vector<uint8_t> mask;   // T x N row-major, 1 = gap-filled / missing

    int num_steps() const { return values.rows(); }
    int num_nodes() const { return values.cols(); }
    int64_t time_at(int row) const { return start_time + step * row; }
    uint8_t mask_at(int r, int c) const { return mask[static_cast<size_t>(r) * num_nodes() + c]; }
    void set_mask(int r, int c, uint8_t v) { mask[static_cast<size_t>(r) * num_nodes() + c] = v; }

    // Rows [first, first+count) as a standalone panel.
    TrafficPanel slice_rows(int first, int count) const;
};

struct ScalerParams {
    std::vector<std::string> node_ids;
    std::vector<double> min;  // per node
    std::vector<double> max;  // per node
    std::string fitted_on;    // split identifier
};

struct SplitSpec {
    double train_fraction = 0.7;
    double val_fraction = 0.1;
    double test_fraction = 0.2;

    void validate() const;
};

}  // namespace ddcrnn
