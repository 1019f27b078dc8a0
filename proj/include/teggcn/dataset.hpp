#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "teggcn/graph.hpp"

namespace teggcn {

// The nine benchmark datasets, keyed by canonical lowercase name. cora,
// citeseer and pubmed use the content/cites text format; the rest use the
// tab-separated node/edge file pair.
struct DatasetSpec {
    std::string name;
    std::string root_dir;
    int split_index = 0;
};

bool is_known_dataset(const std::string& name);
bool uses_content_cites(const std::string& name);

struct LoadStats {
    int dropped_unknown_edges = 0;  // cites lines referencing unseen node ids
    int dropped_self_loops = 0;
    size_t content_lines = 0;
    size_t edge_lines = 0;
};

struct LoadedGraph {
    Graph graph;
    LoadStats stats;
};

// `<name>.content` / `<name>.cites` whitespace-separated plain text. Node and
// class indices follow first appearance order in the content file; edges with
// unknown endpoints are dropped and counted. Files are looked up first as
// <root>/<name>/<name>.content, then <root>/<name>.content.
LoadedGraph load_content_cites(const std::string& root_dir, const std::string& name);

// Tab-separated node file (id TAB features TAB label) and edge file
// (src TAB dst), each with one header line. Features are comma-separated
// values, except for actor/film where they are comma-separated indices into
// a binary vector whose width is the largest index + 1 seen in the file.
// Files are looked up as <root>/<name>/out1_node_feature_label.txt and
// out1_graph_edges.txt, then <root>/<name>.nodes and <root>/<name>.edges.
LoadedGraph load_geom_text(const std::string& root_dir, const std::string& name);

// Dispatches to the right loader for a known dataset name; unknown names try
// the content/cites format first, then the node/edge format.
LoadedGraph load_dataset(const std::string& root_dir, const std::string& name);

// Split file: three lines (train/val/test), each a whitespace-separated list
// of node indices. Looked up as <root>/<name>/<name>_split_<i>.txt, then
// <root>/<name>_split_<i>.txt. Throws on missing file or overlapping masks.
SplitMasks load_splits(const std::string& root_dir, const std::string& name, int split_index,
                       int num_nodes);

// Per-class stratified random assignment; train and val sizes round half away
// from zero, the remainder goes to test. Classes with fewer nodes than
// partitions put everything into train (with a warning line when warn is
// given). Deterministic for a fixed seed.
SplitMasks generate_splits(const Graph& g, std::array<double, 3> proportions, uint64_t seed,
                           std::ostream* warn = nullptr);

// Synthetic block-model graph with controllable homophily, used as a test
// fixture. Features are class_signal * class_mean + unit Gaussian noise.
struct SynthSpec {
    int num_nodes = 0;
    int num_classes = 2;
    double mean_degree = 4.0;
    double target_homophily = 0.5;
    int feature_dim = 8;
    double class_signal = 1.0;
    uint64_t seed = 0;
};

Graph generate_synthetic(const SynthSpec& spec);

// Writers for the two text formats (used by fixtures and the synth
// subcommand). actor_style writes features as nonzero index lists.
void write_content_cites(const Graph& g, const std::string& root_dir, const std::string& name);
void write_geom_text(const Graph& g, const std::string& root_dir, const std::string& name,
                     bool actor_style = false);
void write_split_file(const std::string& path, const SplitMasks& masks);

}  // namespace teggcn
