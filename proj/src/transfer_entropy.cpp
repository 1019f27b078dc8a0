#include "teggcn/transfer_entropy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "teggcn/kdtree.hpp"

namespace teggcn {

namespace {

bool is_constant(const std::vector<double>& v) {
    for (double x : v)
        if (x != v.front()) return false;
    return true;
}

double log_scale(LogBase base) { return base == LogBase::base2 ? 1.0 / std::log(2.0) : 1.0; }

struct VecHash {
    size_t operator()(const std::vector<int>& v) const {
        size_t h = 1469598103934665603ull;
        for (int x : v) {
            h ^= static_cast<size_t>(x) + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        return h;
    }
};

using CountMap = std::unordered_map<std::vector<int>, int, VecHash>;

}  // namespace

EmbeddedSeries embed(const SeriesPair& pair, const TEConfig& cfg) {
    const int k = cfg.k_lag, l = cfg.l_lag;
    if (k < 1 || l < 1) throw std::invalid_argument("history lengths must be >= 1");
    if (pair.x.size() != pair.y.size())
        throw std::invalid_argument("series lengths differ");
    const int n = static_cast<int>(pair.x.size());
    const int lag = std::max(k, l);
    if (n < lag + 2)
        throw std::invalid_argument("series too short for embedding: need at least " +
                                    std::to_string(lag + 2) + " samples");
    EmbeddedSeries e;
    e.k_lag = k;
    e.l_lag = l;
    e.count = n - lag;
    e.x_next.resize(e.count);
    e.x_hist.resize(static_cast<size_t>(e.count) * k);
    e.y_hist.resize(static_cast<size_t>(e.count) * l);
    for (int s = 0; s < e.count; ++s) {
        const int t = s + lag - 1;  // most recent history index
        e.x_next[s] = pair.x[t + 1];
        for (int j = 0; j < k; ++j) e.x_hist[static_cast<size_t>(s) * k + j] = pair.x[t - j];
        for (int j = 0; j < l; ++j) e.y_hist[static_cast<size_t>(s) * l + j] = pair.y[t - j];
    }
    return e;
}

double te_plugin(const SeriesPair& pair, const TEConfig& cfg, int num_bins) {
    if (num_bins < 1) throw std::invalid_argument("num_bins must be >= 1");
    EmbeddedSeries e = embed(pair, cfg);
    if (e.count < 8) throw std::invalid_argument("too few samples after embedding");

    // Per-coordinate equal-width binning over the observed range.
    auto bin_column = [&](const std::vector<double>& col, int stride, int offset) {
        std::vector<int> out(e.count);
        double lo = col[offset], hi = col[offset];
        for (int s = 0; s < e.count; ++s) {
            double v = col[static_cast<size_t>(s) * stride + offset];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double range = hi - lo;
        for (int s = 0; s < e.count; ++s) {
            if (range <= 0.0) {
                out[s] = 0;
                continue;
            }
            double v = col[static_cast<size_t>(s) * stride + offset];
            int b = static_cast<int>((v - lo) / range * num_bins);
            out[s] = std::clamp(b, 0, num_bins - 1);
        }
        return out;
    };

    const int k = e.k_lag, l = e.l_lag;
    std::vector<std::vector<int>> cols;  // x_next, x_hist..., y_hist...
    cols.push_back(bin_column(e.x_next, 1, 0));
    for (int j = 0; j < k; ++j) cols.push_back(bin_column(e.x_hist, k, j));
    for (int j = 0; j < l; ++j) cols.push_back(bin_column(e.y_hist, l, j));

    CountMap full, xh, xnxh, xhyh;
    std::vector<int> key;
    for (int s = 0; s < e.count; ++s) {
        key.clear();
        for (auto& c : cols) key.push_back(c[s]);
        full[key]++;                                                  // (xn, xh, yh)
        xnxh[{key.begin(), key.begin() + 1 + k}]++;                   // (xn, xh)
        xh[{key.begin() + 1, key.begin() + 1 + k}]++;                 // (xh)
        xhyh[{key.begin() + 1, key.end()}]++;                         // (xh, yh)
    }

    const double n = e.count;
    double te = 0.0;
    for (const auto& [state, c_full] : full) {
        std::vector<int> s_xnxh(state.begin(), state.begin() + 1 + k);
        std::vector<int> s_xh(state.begin() + 1, state.begin() + 1 + k);
        std::vector<int> s_xhyh(state.begin() + 1, state.end());
        const double p = c_full / n;
        // p(xn|xh,yh) / p(xn|xh) = p(xn,xh,yh) p(xh) / (p(xh,yh) p(xn,xh))
        te += p * std::log(static_cast<double>(c_full) * xh[s_xh] /
                           (static_cast<double>(xhyh[s_xhyh]) * xnxh[s_xnxh]));
    }
    return te * log_scale(cfg.log_base);
}

double te_ksg(const SeriesPair& pair, const TEConfig& cfg) {
    if (is_constant(pair.x) || is_constant(pair.y))
        throw std::invalid_argument("constant series: KSG estimate undefined");
    EmbeddedSeries e = embed(pair, cfg);
    const int k = e.k_lag, l = e.l_lag;
    const int n = e.count;
    const int kn = cfg.k_neighbors;
    if (kn < 1) throw std::invalid_argument("k_neighbors must be >= 1");
    if (n < kn + 2) throw std::invalid_argument("too few samples for KSG estimate");

    // Deterministic tie-breaking jitter against duplicate coordinates.
    std::mt19937_64 rng(cfg.tie_noise_seed);
    std::uniform_real_distribution<double> jitter(-1e-10, 1e-10);
    auto jittered = [&](std::vector<double> v) {
        for (double& x : v) x += jitter(rng);
        return v;
    };
    std::vector<double> xn = jittered(e.x_next);
    std::vector<double> xh = jittered(e.x_hist);
    std::vector<double> yh = jittered(e.y_hist);

    const int dim_joint = 1 + k + l;
    std::vector<double> joint(static_cast<size_t>(n) * dim_joint);
    std::vector<double> m_xnxh(static_cast<size_t>(n) * (1 + k));
    std::vector<double> m_xhyh(static_cast<size_t>(n) * (k + l));
    for (int s = 0; s < n; ++s) {
        double* j = joint.data() + static_cast<size_t>(s) * dim_joint;
        double* a = m_xnxh.data() + static_cast<size_t>(s) * (1 + k);
        double* b = m_xhyh.data() + static_cast<size_t>(s) * (k + l);
        j[0] = a[0] = xn[s];
        for (int t = 0; t < k; ++t) {
            double v = xh[static_cast<size_t>(s) * k + t];
            j[1 + t] = a[1 + t] = b[t] = v;
        }
        for (int t = 0; t < l; ++t) {
            double v = yh[static_cast<size_t>(s) * l + t];
            j[1 + k + t] = b[k + t] = v;
        }
    }

    KdTree tree_joint(std::move(joint), dim_joint);
    KdTree tree_xh(xh, k);
    KdTree tree_xnxh(std::move(m_xnxh), 1 + k);
    KdTree tree_xhyh(std::move(m_xhyh), k + l);

    double acc = 0.0;
    for (int s = 0; s < n; ++s) {
        const double eps = tree_joint.kth_distance(s, kn);
        std::span<const double> q_xh{xh.data() + static_cast<size_t>(s) * k,
                                     static_cast<size_t>(k)};
        const int n_xh = tree_xh.count_within(q_xh, eps, s);
        const int n_xnxh = tree_xnxh.count_within(tree_xnxh.point(s), eps, s);
        const int n_xhyh = tree_xhyh.count_within(tree_xhyh.point(s), eps, s);
        acc += digamma(n_xh + 1.0) - digamma(n_xnxh + 1.0) - digamma(n_xhyh + 1.0);
    }
    const double te = digamma(kn) + acc / n;
    return te * log_scale(cfg.log_base);
}

double digamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("digamma defined for positive arguments only");
    double result = 0.0;
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    // Asymptotic expansion.
    const double inv = 1.0 / x, inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 -
                      inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0))));
    return result;
}

}  // namespace teggcn
