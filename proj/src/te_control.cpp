#include "teggcn/te_control.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace teggcn {

namespace {

int ceil_fraction(double frac, int n) {
    // guard against float noise pushing exact integers up a step
    const int v = static_cast<int>(std::ceil(frac * n - 1e-9));
    return std::max(v, 1);
}

uint64_t pair_seed(uint64_t run_seed, int i, int j) {
    uint64_t h = run_seed ^ 0x9e3779b97f4a7c15ull;
    for (uint64_t x : {static_cast<uint64_t>(i), static_cast<uint64_t>(j)}) {
        h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h *= 0xff51afd7ed558ccdull;
        h ^= h >> 33;
    }
    return h;
}

bool constant_row(std::span<const double> row) {
    for (double v : row)
        if (v != row.front()) return false;
    return true;
}

// Neighbors evaluated for a node: all of them, or the max_neighbors of
// highest degree (ties: lower index) when the node exceeds the cap.
std::vector<int> evaluated_neighbors(const Graph& g, int node, int max_neighbors) {
    auto nb = g.neighbors(node);
    std::vector<int> out(nb.begin(), nb.end());
    if (static_cast<int>(out.size()) > max_neighbors) {
        std::sort(out.begin(), out.end(), [&](int a, int b) {
            if (g.degrees[a] != g.degrees[b]) return g.degrees[a] > g.degrees[b];
            return a < b;
        });
        out.resize(max_neighbors);
    }
    return out;
}

double pair_te(const Graph& g, int node, int neighbor, const TEControlConfig& cfg,
               uint64_t run_seed) {
    auto x = g.feature_row(node);
    auto y = g.feature_row(neighbor);
    if (constant_row(x) || constant_row(y)) return 0.0;
    TEConfig est;
    est.k_lag = cfg.lag;
    est.l_lag = cfg.lag;
    est.k_neighbors = cfg.k_neighbors;
    est.log_base = cfg.log_base;
    est.tie_noise_seed = pair_seed(run_seed, node, neighbor);
    const int samples = g.feature_dim - cfg.lag;
    if (samples < est.k_neighbors + 2) return 0.0;  // too short to estimate
    SeriesPair pair;
    pair.x.assign(x.begin(), x.end());
    pair.y.assign(y.begin(), y.end());
    return te_ksg(pair, est);
}

}  // namespace

bool should_run(int epoch, const TEControlConfig& cfg) {
    if (!cfg.enabled) return false;
    if (cfg.period_epochs < 1) throw std::invalid_argument("period_epochs must be >= 1");
    return epoch % cfg.period_epochs == 0;
}

std::vector<int> control_labels_view(const Graph& g, LabelSource source,
                                     std::span<const int> predictions) {
    if (source == LabelSource::full_labels) return g.labels;
    if (predictions.size() != static_cast<size_t>(g.num_nodes))
        throw std::invalid_argument("predictions must cover every node");
    std::vector<int> view(g.num_nodes);
    for (int v = 0; v < g.num_nodes; ++v)
        view[v] = g.train_mask[v] ? g.labels[v] : predictions[v];
    return view;
}

SelectionResult select_nodes(const HeterophilyStats& het, std::span<const int> degrees,
                             const TEControlConfig& cfg, int epoch) {
    const int n = static_cast<int>(het.per_node.size());
    if (n < 1) throw std::invalid_argument("empty heterophily vector");
    if (degrees.size() != static_cast<size_t>(n))
        throw std::invalid_argument("degree vector size mismatch");
    if (cfg.het_fraction <= 0.0 || cfg.het_fraction > 1.0 || cfg.degree_fraction <= 0.0 ||
        cfg.degree_fraction > 1.0)
        throw std::invalid_argument("selection fractions must lie in (0, 1]");

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    const int stage1 = std::min(ceil_fraction(cfg.het_fraction, n), n);
    std::partial_sort(order.begin(), order.begin() + stage1, order.end(), [&](int a, int b) {
        if (het.per_node[a] != het.per_node[b]) return het.per_node[a] > het.per_node[b];
        if (degrees[a] != degrees[b]) return degrees[a] > degrees[b];
        return a < b;
    });
    order.resize(stage1);

    const int stage2 = std::min(ceil_fraction(cfg.degree_fraction, stage1), stage1);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (degrees[a] != degrees[b]) return degrees[a] > degrees[b];
        return a < b;
    });
    order.resize(stage2);

    SelectionResult result;
    result.selected = std::move(order);
    result.heterophily_used = het;
    result.epoch = epoch;
    return result;
}

bool TePairCache::lookup(int i, int j, double& out) const {
    auto it = values_.find({i, j});
    if (it == values_.end()) return false;
    out = it->second;
    return true;
}

void TePairCache::store(int i, int j, double value) { values_[{i, j}] = value; }

double node_te(const Graph& g, int node, const TEControlConfig& cfg, uint64_t run_seed,
               TePairCache* cache, long* pairs_requested) {
    if (node < 0 || node >= g.num_nodes) throw std::invalid_argument("node index out of range");
    if (g.feature_dim < 4)
        throw std::invalid_argument("node_te needs at least 4 feature components");
    auto neighbors = evaluated_neighbors(g, node, cfg.max_neighbors);
    if (pairs_requested) *pairs_requested += static_cast<long>(neighbors.size());
    double best = 0.0;
    bool first = true;
    for (int j : neighbors) {
        double te;
        if (!cache || !cache->lookup(node, j, te)) {
            te = pair_te(g, node, j, cfg, run_seed);
            if (cache) cache->store(node, j, te);
        }
        if (first || te > best) {
            best = te;
            first = false;
        }
    }
    return best;
}

TECorrection compute_corrections(const Graph& g, const SelectionResult& sel,
                                 const TEControlConfig& cfg, uint64_t run_seed,
                                 TePairCache& cache, int num_threads, long& pairs_requested) {
    // Gather the uncached pairs first so they can be estimated in parallel;
    // per-pair seeds keep the result independent of scheduling.
    std::vector<std::pair<int, int>> todo;
    for (int node : sel.selected) {
        for (int j : evaluated_neighbors(g, node, cfg.max_neighbors)) {
            double ignored;
            if (!cache.lookup(node, j, ignored)) todo.emplace_back(node, j);
        }
    }
    std::vector<double> computed(todo.size());
    const int threads = std::max(1, std::min<int>(num_threads, static_cast<int>(todo.size())));
    if (threads <= 1) {
        for (size_t t = 0; t < todo.size(); ++t)
            computed[t] = pair_te(g, todo[t].first, todo[t].second, cfg, run_seed);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                size_t t;
                while ((t = next.fetch_add(1)) < todo.size())
                    computed[t] = pair_te(g, todo[t].first, todo[t].second, cfg, run_seed);
            });
        for (auto& th : pool) th.join();
    }
    for (size_t t = 0; t < todo.size(); ++t)
        cache.store(todo[t].first, todo[t].second, computed[t]);

    TECorrection corr;
    corr.computed_at_epoch = sel.epoch;
    for (int node : sel.selected)
        corr.per_node_te[node] = node_te(g, node, cfg, run_seed, &cache, &pairs_requested);
    return corr;
}

}  // namespace teggcn
