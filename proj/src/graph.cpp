#include "teggcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace teggcn {

namespace {

void check_masks_disjoint(const SplitMasks& m, int n) {
    auto size_ok = [n](const std::vector<uint8_t>& v) {
        return v.empty() || static_cast<int>(v.size()) == n;
    };
    if (!size_ok(m.train) || !size_ok(m.val) || !size_ok(m.test))
        throw std::invalid_argument("mask length does not match num_nodes");
    for (int i = 0; i < n; ++i) {
        int cnt = 0;
        if (!m.train.empty() && m.train[i]) ++cnt;
        if (!m.val.empty() && m.val[i]) ++cnt;
        if (!m.test.empty() && m.test[i]) ++cnt;
        if (cnt > 1)
            throw std::invalid_argument("split masks overlap at node " + std::to_string(i));
    }
}

}  // namespace

Graph build_graph(const std::vector<std::pair<int, int>>& edge_list, int num_nodes,
                  std::vector<double> features, int feature_dim,
                  std::vector<int> labels, SplitMasks masks) {
    if (num_nodes < 0) throw std::invalid_argument("negative num_nodes");
    Graph g;
    g.num_nodes = num_nodes;
    g.feature_dim = feature_dim;

    if (feature_dim < 0 || features.size() != static_cast<size_t>(num_nodes) * feature_dim)
        throw std::invalid_argument("feature matrix size does not match num_nodes x feature_dim");
    if (!labels.empty() && labels.size() != static_cast<size_t>(num_nodes))
        throw std::invalid_argument("label vector size does not match num_nodes");

    std::vector<std::pair<int, int>> dir;
    dir.reserve(edge_list.size() * 2);
    for (const auto& [u, v] : edge_list) {
        if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
            throw std::invalid_argument("edge endpoint out of range: (" + std::to_string(u) +
                                        "," + std::to_string(v) + ")");
        if (u == v)
            throw std::invalid_argument("self-loop in edge list at node " + std::to_string(u));
        dir.emplace_back(u, v);
        dir.emplace_back(v, u);
    }
    std::sort(dir.begin(), dir.end());
    dir.erase(std::unique(dir.begin(), dir.end()), dir.end());
    g.edges = std::move(dir);

    g.neighbor_offsets.assign(num_nodes + 1, 0);
    for (const auto& [u, v] : g.edges) g.neighbor_offsets[u + 1]++;
    for (int i = 0; i < num_nodes; ++i) g.neighbor_offsets[i + 1] += g.neighbor_offsets[i];
    g.neighbor_index.reserve(g.edges.size());
    for (const auto& [u, v] : g.edges) g.neighbor_index.push_back(v);

    g.degrees.resize(num_nodes);
    for (int i = 0; i < num_nodes; ++i)
        g.degrees[i] = g.neighbor_offsets[i + 1] - g.neighbor_offsets[i];

    g.features = std::move(features);
    if (labels.empty()) labels.assign(num_nodes, -1);
    int max_label = -1;
    for (int l : labels) {
        if (l < -1) throw std::invalid_argument("label below -1");
        max_label = std::max(max_label, l);
    }
    g.num_classes = max_label + 1;
    g.labels = std::move(labels);

    check_masks_disjoint(masks, num_nodes);
    auto fill = [num_nodes](std::vector<uint8_t>& v) {
        if (v.empty()) v.assign(num_nodes, 0);
    };
    fill(masks.train);
    fill(masks.val);
    fill(masks.test);
    g.train_mask = std::move(masks.train);
    g.val_mask = std::move(masks.val);
    g.test_mask = std::move(masks.test);
    return g;
}

Graph with_masks(Graph g, SplitMasks masks) {
    check_masks_disjoint(masks, g.num_nodes);
    g.train_mask = std::move(masks.train);
    g.val_mask = std::move(masks.val);
    g.test_mask = std::move(masks.test);
    return g;
}

double NormalizedAdjacency::at(int i, int j) const {
    for (int k = offsets[i]; k < offsets[i + 1]; ++k)
        if (cols[k] == j) return values[k];
    return 0.0;
}

NormalizedAdjacency normalize_adjacency(const Graph& g, AdjacencyVariant variant) {
    NormalizedAdjacency a;
    a.num_nodes = g.num_nodes;
    a.variant = variant;
    a.offsets.assign(g.num_nodes + 1, 0);
    const bool diag = variant == AdjacencyVariant::with_self_loops;
    a.cols.reserve(g.edges.size() + (diag ? g.num_nodes : 0));
    a.values.reserve(a.cols.capacity());
    for (int i = 0; i < g.num_nodes; ++i) {
        const double di = g.degrees[i] + 1.0;
        bool diag_written = false;
        for (int j : g.neighbors(i)) {
            if (diag && !diag_written && j > i) {
                a.cols.push_back(i);
                a.values.push_back(1.0 / di);
                diag_written = true;
            }
            a.cols.push_back(j);
            a.values.push_back(1.0 / std::sqrt(di * (g.degrees[j] + 1.0)));
        }
        if (diag && !diag_written) {
            a.cols.push_back(i);
            a.values.push_back(1.0 / di);
        }
        a.offsets[i + 1] = static_cast<int>(a.cols.size());
    }
    return a;
}

RelativeDegrees relative_degrees(const Graph& g) {
    RelativeDegrees r;
    r.values.resize(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) {
        if (g.degrees[i] == 0) {
            r.values[i] = 1.0;
            continue;
        }
        const double di = g.degrees[i] + 1.0;
        double sum = 0.0;
        for (int j : g.neighbors(i)) sum += std::sqrt(di / (g.degrees[j] + 1.0));
        r.values[i] = sum / g.degrees[i];
    }
    return r;
}

HeterophilyStats node_heterophily(const Graph& g, std::span<const int> labels_view,
                                  LabelSource source) {
    if (labels_view.size() != static_cast<size_t>(g.num_nodes))
        throw std::invalid_argument("labels_view size does not match num_nodes");
    HeterophilyStats s;
    s.label_source = source;
    s.per_node.assign(g.num_nodes, 0.0);
    double sum = 0.0;
    int non_isolated = 0;
    for (int v = 0; v < g.num_nodes; ++v) {
        auto nb = g.neighbors(v);
        if (nb.empty()) continue;  // H_v = 0 by convention
        if (labels_view[v] < 0)
            throw std::invalid_argument("missing label for node " + std::to_string(v));
        int diff = 0;
        for (int u : nb) {
            if (labels_view[u] < 0)
                throw std::invalid_argument("missing label for neighbor " + std::to_string(u));
            if (labels_view[u] != labels_view[v]) ++diff;
        }
        s.per_node[v] = static_cast<double>(diff) / nb.size();
        sum += s.per_node[v];
        ++non_isolated;
    }
    s.homophily_level = non_isolated > 0 ? 1.0 - sum / non_isolated : 1.0;
    return s;
}

}  // namespace teggcn
