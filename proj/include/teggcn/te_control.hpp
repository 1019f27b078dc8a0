#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "teggcn/graph.hpp"
#include "teggcn/tensor.hpp"
#include "teggcn/transfer_entropy.hpp"

namespace teggcn {

struct TEControlConfig {
    double het_fraction = 0.05;     // stage 1: top heterophily share of all nodes
    double degree_fraction = 0.10;  // stage 2: top degree share of stage 1
    int period_epochs = 10;
    int lag = 1;
    bool enabled = true;
    LabelSource label_source = LabelSource::train_plus_predictions;
    int max_neighbors = 256;  // per-node cap on evaluated neighbor pairs
    int k_neighbors = 3;      // KSG neighbor count
    LogBase log_base = LogBase::natural;
};

struct SelectionResult {
    std::vector<int> selected;  // sorted by (degree desc, index asc)
    HeterophilyStats heterophily_used;
    int epoch = 0;
};

struct TECorrection {
    std::map<int, double> per_node_te;  // node -> max TE against its neighbors
    int computed_at_epoch = -1;
};

// True on epochs where the control step recomputes selection and TE values;
// corrections stay in force until the next scheduled epoch.
bool should_run(int epoch, const TEControlConfig& cfg);

// Labels fed into the heterophily ranking: true labels everywhere for
// full_labels; train labels plus model predictions elsewhere for
// train_plus_predictions (test labels are never read on that path).
std::vector<int> control_labels_view(const Graph& g, LabelSource source,
                                     std::span<const int> predictions);

// Two-stage ranking: ceil(het_fraction * N) nodes of highest heterophily
// (ties: higher degree, then lower index), then the ceil(degree_fraction *
// that) of highest degree (ties: lower index). Never selects fewer than one
// node.
SelectionResult select_nodes(const HeterophilyStats& het, std::span<const int> degrees,
                             const TEControlConfig& cfg, int epoch = 0);

// Memoized per-pair TE values. Input features never change within a run, so a
// pair's estimate is computed once and reused across scheduled epochs.
class TePairCache {
public:
    bool lookup(int i, int j, double& out) const;
    void store(int i, int j, double value);
    size_t size() const { return values_.size(); }

private:
    std::map<std::pair<int, int>, double> values_;
};

// Max transfer entropy from any neighbor's input-feature series into node i's
// series (lag cfg.lag, KSG estimator). Pairs with a constant series on either
// side, or too few samples for the estimator, contribute 0. For nodes of
// degree above max_neighbors only the highest-degree neighbors are evaluated.
// Isolated nodes yield 0. pairs_requested, when given, is incremented by
// min(degree, max_neighbors) whether or not values come from the cache.
double node_te(const Graph& g, int node, const TEControlConfig& cfg, uint64_t run_seed,
               TePairCache* cache = nullptr, long* pairs_requested = nullptr);

// TE corrections for every selected node; pair estimates run in parallel
// across threads (deterministic: each pair's jitter seed derives from the run
// seed and the pair alone).
TECorrection compute_corrections(const Graph& g, const SelectionResult& sel,
                                 const TEControlConfig& cfg, uint64_t run_seed,
                                 TePairCache& cache, int num_threads, long& pairs_requested);

// Adds each selected node's scalar TE to every component of its row of the
// final convolution output. The added values are constants: no gradient flows
// into the estimator. An empty correction map is the identity.
template <typename T>
Tensor<T> apply_correction(Tape<T>& tape, const Tensor<T>& h, const TECorrection& corr) {
    if (corr.per_node_te.empty()) return h;
    auto addend = make_tensor<T>(h->rows, 1, false);
    for (const auto& [node, te] : corr.per_node_te) {
        if (node < 0 || node >= h->rows)
            throw std::invalid_argument("correction for node " + std::to_string(node) +
                                        " is out of range");
        addend->value[node] = static_cast<T>(te);
    }
    return tape.add_rowscalar(h, addend);
}

}  // namespace teggcn
