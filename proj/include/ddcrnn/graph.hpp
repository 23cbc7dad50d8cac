#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddcrnn/matrix.hpp"

namespace ddcrnn {

// Directed site graph. Node order fixes the row/column order of every
// adjacency and panel downstream.
struct Topology {
    std::vector<std::string> node_ids;
    std::vector<std::pair<int, int>> edges;  // (src, dst) indices into node_ids

    int num_nodes() const { return static_cast<int>(node_ids.size()); }
    int index_of(const std::string& id) const;  // -1 when absent
    bool connected_either_way(int i, int j) const;
};

// Edge-list text: one "src dst" pair per line, '#' comments. Node order is
// first-appearance unless an explicit order is given.
Topology load_topology(std::istream& in,
                       const std::vector<std::string>* node_order = nullptr);
Topology load_topology_file(const std::string& path,
                            const std::string& node_order_path = "");

struct AdjacencyMatrix {
    enum class Kind { dynamic_correlation, static_hop };
    Matrix weights;  // NxN
    Kind kind = Kind::dynamic_correlation;
};

// Per-window Pearson correlation matrix: unit diagonal, symmetric, entries
// in [-1, 1]; zero-variance series correlate 0 off-diagonal. When
// mask_to_topology is set, pairs without a topology edge (either direction)
// are zeroed.
AdjacencyMatrix pearson_adjacency(const Matrix& window, const Topology& topology,
                                  bool mask_to_topology);

// Gaussian kernel on shortest-path hop count over directed edges:
// exp(-hops^2/sigma^2) for hops <= threshold, else 0. Unreachable pairs get 0.
AdjacencyMatrix static_adjacency(const Topology& topology, double sigma, double threshold);

struct TransitionPair {
    Matrix forward;  // row-normalized effective weights
    Matrix reverse;  // row-normalized transpose
};

// Effective weights are |adj| unless signed_weights is set (then rows are
// normalized by the sum of absolute values, so magnitudes stay bounded but
// rows are no longer stochastic). Zero-degree rows become identity rows.
TransitionPair transition_pair(const AdjacencyMatrix& adj, bool signed_weights = false);

// [fwd^0 .. fwd^{K-1}, rev^0 .. rev^{K-1}]; power 0 is the identity.
std::vector<Matrix> diffusion_powers(const TransitionPair& pair, int max_diffusion_steps);

// Hop distances from every source via BFS on directed edges; -1 = unreachable.
std::vector<std::vector<int>> hop_distances(const Topology& topology);

}  // namespace ddcrnn
