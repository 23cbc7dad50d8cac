#include "ddcrnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ddcrnn {

int Topology::index_of(const std::string& id) const {
    for (size_t i = 0; i < node_ids.size(); ++i)
        if (node_ids[i] == id) return static_cast<int>(i);
    return -1;
}

bool Topology::connected_either_way(int i, int j) const {
    for (const auto& [s, d] : edges)
        if ((s == i && d == j) || (s == j && d == i)) return true;
    return false;
}

Topology load_topology(std::istream& in, const std::vector<std::string>* node_order) {
    Topology topo;
    std::unordered_map<std::string, int> index;
    auto intern = [&](const std::string& id, int line) -> int {
        auto it = index.find(id);
        if (it != index.end()) return it->second;
        if (node_order) throw ParseError(line, "node '" + id + "' not in node order file");
        const int idx = topo.num_nodes();
        index.emplace(id, idx);
        topo.node_ids.push_back(id);
        return idx;
    };
    if (node_order) {
        for (const auto& id : *node_order) {
            if (index.count(id)) throw ValidationError("duplicate node id '" + id + "' in node order");
            index.emplace(id, topo.num_nodes());
            topo.node_ids.push_back(id);
        }
    }

    std::set<std::pair<int, int>> seen;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::string src, dst, extra;
        if (!(ls >> src)) continue;  // blank line
        if (!(ls >> dst) || (ls >> extra)) {
            throw ParseError(line_no, "expected 'src dst', got '" + raw + "'");
        }
        const int s = intern(src, line_no);
        const int d = intern(dst, line_no);
        if (s == d) throw ParseError(line_no, "self-loop edge on '" + src + "'");
        if (seen.insert({s, d}).second) topo.edges.emplace_back(s, d);
    }
    return topo;
}

Topology load_topology_file(const std::string& path, const std::string& node_order_path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open topology file: " + path);
    if (node_order_path.empty()) return load_topology(in);
    std::ifstream order_in(node_order_path);
    if (!order_in) throw ValidationError("cannot open node order file: " + node_order_path);
    std::vector<std::string> order;
    std::string id;
    while (order_in >> id) order.push_back(id);
    return load_topology(in, &order);
}

namespace {

// A series counts as constant when its variance is negligible relative to
// its mean square; correlation is undefined there and reported as 0.
constexpr double kVarianceFloorRel = 1e-24;

}  // namespace

AdjacencyMatrix pearson_adjacency(const Matrix& window, const Topology& topology,
                                  bool mask_to_topology) {
    const int steps = window.rows();
    const int n = window.cols();
    if (steps < 2) {
        throw ValidationError("pearson_adjacency: window needs at least 2 time steps, got " +
                              std::to_string(steps));
    }
    if (n != topology.num_nodes()) {
        throw ValidationError("pearson_adjacency: window has " + std::to_string(n) +
                              " nodes, topology has " + std::to_string(topology.num_nodes()));
    }

    std::vector<double> mean(n, 0.0), var(n, 0.0), mean_sq(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0, acc_sq = 0.0;
        for (int t = 0; t < steps; ++t) {
            const double x = window(t, j);
            acc += x;
            acc_sq += x * x;
        }
        mean[j] = acc / steps;
        mean_sq[j] = acc_sq / steps;
    }
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int t = 0; t < steps; ++t) {
            const double d = window(t, j) - mean[j];
            acc += d * d;
        }
        var[j] = acc / steps;
    }
    std::vector<bool> degenerate(n);
    std::vector<double> sd(n, 0.0);
    for (int j = 0; j < n; ++j) {
        degenerate[j] = var[j] <= kVarianceFloorRel * std::max(1e-300, mean_sq[j]);
        sd[j] = std::sqrt(var[j]);
    }

    // Upper triangle mirrored for exact symmetry.
    AdjacencyMatrix adj;
    adj.kind = AdjacencyMatrix::Kind::dynamic_correlation;
    adj.weights = Matrix(n, n);
    for (int i = 0; i < n; ++i) {
        adj.weights(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            double r = 0.0;
            if (!degenerate[i] && !degenerate[j]) {
                double cov = 0.0;
                for (int t = 0; t < steps; ++t)
                    cov += (window(t, i) - mean[i]) * (window(t, j) - mean[j]);
                cov /= steps;
                r = cov / (sd[i] * sd[j]);
                r = std::clamp(r, -1.0, 1.0);
            }
            if (mask_to_topology && !topology.connected_either_way(i, j)) r = 0.0;
            adj.weights(i, j) = r;
            adj.weights(j, i) = r;
        }
    }
    return adj;
}

std::vector<std::vector<int>> hop_distances(const Topology& topology) {
    const int n = topology.num_nodes();
    std::vector<std::vector<int>> out_edges(n);
    for (const auto& [s, d] : topology.edges) out_edges[s].push_back(d);

    std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
    for (int src = 0; src < n; ++src) {
        auto& d = dist[src];
        d[src] = 0;
        std::deque<int> queue{src};
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int v : out_edges[u]) {
                if (d[v] < 0) {
                    d[v] = d[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    return dist;
}

AdjacencyMatrix static_adjacency(const Topology& topology, double sigma, double threshold) {
    if (sigma <= 0.0) throw ValidationError("static_adjacency: sigma must be positive");
    const int n = topology.num_nodes();
    const auto dist = hop_distances(topology);

    AdjacencyMatrix adj;
    adj.kind = AdjacencyMatrix::Kind::static_hop;
    adj.weights = Matrix(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int h = dist[i][j];
            if (h < 0 || h > threshold) continue;  // unreachable or beyond threshold
            adj.weights(i, j) = std::exp(-(static_cast<double>(h) * h) / (sigma * sigma));
        }
    }
    return adj;
}

TransitionPair transition_pair(const AdjacencyMatrix& adj, bool signed_weights) {
    const Matrix& w = adj.weights;
    if (w.rows() != w.cols()) {
        throw ValidationError("transition_pair: adjacency must be square, got " + w.shape_str());
    }
    const int n = w.rows();

    auto normalize_rows = [n](const Matrix& m) {
        Matrix out(n, n);
        for (int i = 0; i < n; ++i) {
            double degree = 0.0;
            for (int j = 0; j < n; ++j) degree += std::fabs(m(i, j));
            if (degree == 0.0) {
                out(i, i) = 1.0;  // keep the node's own state alive
            } else {
                for (int j = 0; j < n; ++j) out(i, j) = m(i, j) / degree;
            }
        }
        return out;
    };

    Matrix effective = w;
    if (!signed_weights) {
        for (size_t i = 0; i < effective.size(); ++i)
            effective.data()[i] = std::fabs(effective.data()[i]);
    }

    TransitionPair pair;
    pair.forward = normalize_rows(effective);
    pair.reverse = normalize_rows(transpose(effective));
    return pair;
}

std::vector<Matrix> diffusion_powers(const TransitionPair& pair, int max_diffusion_steps) {
    if (max_diffusion_steps < 1) {
        throw ValidationError("diffusion_powers: K must be >= 1, got " +
                              std::to_string(max_diffusion_steps));
    }
    const int n = pair.forward.rows();
    std::vector<Matrix> powers;
    powers.reserve(2 * static_cast<size_t>(max_diffusion_steps));
    powers.push_back(Matrix::identity(n));
    for (int d = 1; d < max_diffusion_steps; ++d)
        powers.push_back(matmul(powers.back(), pair.forward));
    powers.push_back(Matrix::identity(n));
    for (int d = 1; d < max_diffusion_steps; ++d)
        powers.push_back(matmul(powers.back(), pair.reverse));
    return powers;
}

}  // namespace ddcrnn
