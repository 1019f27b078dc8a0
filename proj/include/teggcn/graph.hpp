#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace teggcn {

struct SplitMasks {
    std::vector<uint8_t> train;
    std::vector<uint8_t> val;
    std::vector<uint8_t> test;
};

// Immutable undirected graph with node features, labels and split masks.
// Edges are stored symmetrized (both directions), deduplicated and sorted by
// (node, neighbor). Self-loops are rejected at construction; they only appear
// later, inside adjacency normalization.
struct Graph {
    int num_nodes = 0;
    int feature_dim = 0;
    int num_classes = 0;

    // Directed edge list (u,v) sorted lexicographically; (v,u) always present.
    std::vector<std::pair<int, int>> edges;
    // CSR view of the same edges: neighbors of v are
    // neighbor_index[neighbor_offsets[v] .. neighbor_offsets[v+1]), ascending.
    std::vector<int> neighbor_offsets;
    std::vector<int> neighbor_index;

    std::vector<double> features;  // row-major num_nodes x feature_dim
    std::vector<int> labels;       // class index per node, -1 = unlabeled
    std::vector<uint8_t> train_mask, val_mask, test_mask;
    std::vector<int> degrees;      // distinct neighbors, self-loops excluded

    int degree(int v) const { return degrees[v]; }
    std::span<const int> neighbors(int v) const {
        return {neighbor_index.data() + neighbor_offsets[v],
                neighbor_index.data() + neighbor_offsets[v + 1]};
    }
    std::span<const double> feature_row(int v) const {
        return {features.data() + static_cast<size_t>(v) * feature_dim,
                static_cast<size_t>(feature_dim)};
    }
    size_t num_undirected_edges() const { return edges.size() / 2; }
};

// Builds a Graph from an arbitrary-order edge list. Edges are symmetrized and
// deduplicated, so the result does not depend on input ordering. Throws
// std::invalid_argument on out-of-range endpoints, self-loops, or
// inconsistent feature/label/mask sizes (masks must be pairwise disjoint).
Graph build_graph(const std::vector<std::pair<int, int>>& edge_list, int num_nodes,
                  std::vector<double> features, int feature_dim,
                  std::vector<int> labels, SplitMasks masks = {});

// Copy of g with the given split masks attached.
Graph with_masks(Graph g, SplitMasks masks);

enum class AdjacencyVariant { with_self_loops, plain };

// Symmetrically normalized adjacency, CSR layout. For with_self_loops the
// entry for edge (i,j) is 1/sqrt((d_i+1)(d_j+1)) and the diagonal entry is
// 1/(d_i+1); the plain variant keeps the same off-diagonal values and drops
// the diagonal.
struct NormalizedAdjacency {
    int num_nodes = 0;
    AdjacencyVariant variant = AdjacencyVariant::with_self_loops;
    std::vector<int> offsets;
    std::vector<int> cols;
    std::vector<double> values;

    double at(int i, int j) const;  // 0 for non-entries; linear scan of row i
};

NormalizedAdjacency normalize_adjacency(
    const Graph& g, AdjacencyVariant variant = AdjacencyVariant::with_self_loops);

// Mean over neighbors of sqrt((d_i+1)/(d_j+1)); 1 for isolated nodes.
struct RelativeDegrees {
    std::vector<double> values;
};

RelativeDegrees relative_degrees(const Graph& g);

enum class LabelSource { full_labels, train_plus_predictions };

// Per-node heterophily: fraction of neighbors whose label differs. Isolated
// nodes carry 0 by convention. homophily_level is 1 minus the mean over
// non-isolated nodes.
struct HeterophilyStats {
    std::vector<double> per_node;
    double homophily_level = 0.0;
    LabelSource label_source = LabelSource::full_labels;
};

// labels_view must provide a class for every node that appears as a neighbor
// of a scored node; -1 entries raise an error.
HeterophilyStats node_heterophily(const Graph& g, std::span<const int> labels_view,
                                  LabelSource source);

}  // namespace teggcn
