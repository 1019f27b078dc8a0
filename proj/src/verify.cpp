#include "teggcn/verify.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "teggcn/finite_diff.hpp"
#include "teggcn/ggcn.hpp"
#include "teggcn/graph.hpp"
#include "teggcn/kdtree.hpp"
#include "teggcn/te_control.hpp"
#include "teggcn/transfer_entropy.hpp"

namespace teggcn {

namespace {

bool report(std::ostream& out, const char* name, bool ok, double value, const char* detail) {
    out << (ok ? "[ok]   " : "[FAIL] ") << name << ": " << std::setprecision(6) << value << " ("
        << detail << ")\n";
    return ok;
}

Graph gradient_fixture(std::mt19937_64& rng) {
    std::vector<std::pair<int, int>> edges;
    const int n = 14;
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (u(rng) < 0.3) edges.emplace_back(i, j);
    std::normal_distribution<double> gauss(0, 1);
    std::vector<double> feats(n * 5);
    for (auto& f : feats) f = gauss(rng);
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng() % 3);
    return build_graph(edges, n, std::move(feats), 5, std::move(labels));
}

double model_gradient_error(uint64_t seed) {
    std::mt19937_64 rng(seed);
    Graph g = gradient_fixture(rng);
    ModelConfig cfg;
    cfg.num_layers = 2;
    cfg.hidden_dim = 6;
    cfg.classes = 3;
    cfg.dropout_rate = 0.25;
    GgcnModel<double> model(cfg, 5, rng);
    auto ctx = make_graph_context<double>(g);

    std::vector<uint8_t> mask(g.num_nodes, 0);
    for (int i = 0; i < g.num_nodes; i += 2) mask[i] = 1;
    TECorrection corr;
    corr.per_node_te[1] = 0.4;
    corr.per_node_te[3] = 0.15;

    auto loss_fn = [&](Tape<double>& tape) {
        std::mt19937_64 fwd(seed + 17);
        auto logits = model.forward(tape, ctx, true, fwd);
        auto corrected = apply_correction(tape, logits, corr);
        return tape.cross_entropy_masked(corrected, g.labels, mask);
    };
    auto params = model.parameters();
    {
        Tape<double> tape;
        auto loss = loss_fn(tape);
        for (auto& p : params) p->zero_grad();
        tape.backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    for (auto& p : params) analytic.push_back(p->grad);
    auto eval = [&]() {
        Tape<double> tape(false);
        return loss_fn(tape)->value[0];
    };
    return finite_diff_check(eval, params, analytic);
}

}  // namespace

bool run_verification(std::ostream& out) {
    bool ok = true;

    {
        double worst = 0;
        for (uint64_t seed = 0; seed < 5; ++seed)
            worst = std::max(worst, model_gradient_error(1000 + seed));
        ok &= report(out, "model gradient vs central differences", worst < 1e-4, worst,
                     "max relative error, threshold 1e-4");
    }

    {
        std::mt19937_64 rng(42);
        const int n = 10000;
        SeriesPair p;
        p.x.resize(n);
        p.y.resize(n);
        p.x[0] = static_cast<double>(rng() & 1);
        for (int t = 0; t < n; ++t) {
            p.y[t] = static_cast<double>(rng() & 1);
            if (t + 1 < n) p.x[t + 1] = p.y[t];
        }
        const double plugin = te_plugin(p, TEConfig{}, 2);
        ok &= report(out, "plug-in TE on the coupled binary chain",
                     std::abs(plugin - std::log(2.0)) < 0.02, plugin, "expected ln 2 +- 0.02");
        const double ksg = te_ksg(p, TEConfig{});
        ok &= report(out, "KSG vs plug-in on the coupled chain", std::abs(ksg - plugin) < 0.1,
                     ksg, "agreement threshold 0.1 nats");
    }

    {
        double sum = 0;
        for (uint64_t seed = 0; seed < 10; ++seed) {
            std::mt19937_64 rng(100 + seed);
            std::normal_distribution<double> gauss(0, 1);
            SeriesPair p;
            p.x.resize(2000);
            p.y.resize(2000);
            for (int t = 0; t < 2000; ++t) {
                p.x[t] = gauss(rng);
                p.y[t] = gauss(rng);
            }
            TEConfig cfg;
            cfg.tie_noise_seed = seed;
            sum += te_ksg(p, cfg);
        }
        const double mean = sum / 10.0;
        ok &= report(out, "KSG on independent Gaussian series", std::abs(mean) < 0.05, mean,
                     "10-seed mean, threshold 0.05 nats");
    }

    {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-1, 1);
        int tested = 0, matched = 0;
        for (int dim = 1; dim <= 4; ++dim) {
            for (int rep = 0; rep < 25; ++rep) {
                const int n = 10 + static_cast<int>(rng() % 60);
                std::vector<double> pts(static_cast<size_t>(n) * dim);
                for (auto& v : pts) v = u(rng);
                KdTree tree(pts, dim);
                for (int q = 0; q < 10; ++q) {
                    std::vector<double> c(dim);
                    for (auto& v : c) v = u(rng);
                    const double r = std::abs(u(rng));
                    int brute = 0;
                    for (int i = 0; i < n; ++i) {
                        double d = 0;
                        for (int k = 0; k < dim; ++k)
                            d = std::max(d, std::abs(pts[static_cast<size_t>(i) * dim + k] - c[k]));
                        if (d < r) ++brute;
                    }
                    ++tested;
                    if (kdtree_range_count(tree, c, r) == brute) ++matched;
                }
            }
        }
        ok &= report(out, "k-d tree range counts vs brute force", matched == tested,
                     static_cast<double>(matched), "all of 1000 queries must match");
    }

    out << (ok ? "verification passed\n" : "verification FAILED\n");
    return ok;
}

}  // namespace teggcn
