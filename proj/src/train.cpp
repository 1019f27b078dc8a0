#include "teggcn/train.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "teggcn/adam.hpp"

namespace teggcn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int count_mask(const std::vector<uint8_t>& m) {
    int c = 0;
    for (uint8_t b : m) c += b;
    return c;
}

template <typename T>
std::string param_norm_diagnostics(const GgcnModel<T>& model) {
    std::ostringstream out;
    for (const auto& t : model.parameters()) {
        double norm = 0;
        for (T v : t->value) norm += static_cast<double>(v) * v;
        out << ' ' << t->name << "=" << std::sqrt(norm);
    }
    return out.str();
}

template <typename T>
RunResult train_impl(const Graph& g, const TrainConfig& cfg, TrainTrace* trace) {
    if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (cfg.patience < 0 || cfg.patience > cfg.epochs)
        throw std::invalid_argument("patience must lie in [0, epochs]");
    if (count_mask(g.train_mask) == 0) throw std::invalid_argument("empty train mask");
    if (count_mask(g.val_mask) == 0) throw std::invalid_argument("empty validation mask");
    if (count_mask(g.test_mask) == 0) throw std::invalid_argument("empty test mask");

    const auto t_start = Clock::now();
    std::mt19937_64 rng(cfg.seed);

    ModelConfig mc = cfg.model;
    mc.classes = g.num_classes;
    GgcnModel<T> model(mc, g.feature_dim, rng);
    auto ctx = make_graph_context<T>(g);

    AdamConfig acfg;
    acfg.learning_rate = cfg.learning_rate;
    acfg.weight_decay = cfg.weight_decay;
    Adam<T> opt(model.param_refs(), acfg);

    const int te_threads =
        cfg.te_threads > 0 ? cfg.te_threads
                           : std::max(1u, std::thread::hardware_concurrency());
    std::ofstream te_log;
    if (!cfg.te_log_path.empty()) {
        te_log.open(cfg.te_log_path);
        if (!te_log)
            throw std::runtime_error("cannot open TE log '" + cfg.te_log_path + "'");
    }

    RunResult result;
    result.te_enabled = cfg.te.enabled;
    result.seed = cfg.seed;
    result.config_fingerprint = config_fingerprint(cfg);

    TePairCache te_cache;
    TECorrection correction;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<T>> best_params = model.snapshot();
    int since_best = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Tape<T> tape;
        auto logits = model.forward(tape, ctx, /*training=*/true, rng);

        if (should_run(epoch, cfg.te)) {
            const auto te_t0 = Clock::now();
            std::vector<double> vals(logits->value.begin(), logits->value.end());
            const auto preds = argmax_rows(vals, logits->cols);
            const auto labels_view = control_labels_view(g, cfg.te.label_source, preds);
            const auto het = node_heterophily(g, labels_view, cfg.te.label_source);
            const auto sel = select_nodes(het, g.degrees, cfg.te, epoch);
            correction = compute_corrections(g, sel, cfg.te, cfg.seed, te_cache, te_threads,
                                             result.te_invocation_count);
            const double wall = seconds_since(te_t0);
            result.te_wall_seconds += wall;
            if (te_log.is_open()) {
                nlohmann::json rec;
                rec["epoch"] = epoch;
                rec["selected"] = sel.selected;
                nlohmann::json te_values = nlohmann::json::object();
                for (const auto& [node, te] : correction.per_node_te)
                    te_values[std::to_string(node)] = te;
                rec["te"] = te_values;
                rec["wall_s"] = wall;
                te_log << rec.dump() << '\n';
            }
        }

        auto corrected = apply_correction(tape, logits, correction);
        auto loss = tape.cross_entropy_masked(corrected, g.labels, g.train_mask);
        const double train_loss = static_cast<double>(loss->value[0]);
        if (!std::isfinite(train_loss))
            throw std::runtime_error("non-finite training loss at epoch " +
                                     std::to_string(epoch) + "; parameter norms:" +
                                     param_norm_diagnostics(model));
        opt.zero_grad();
        tape.backward(loss);
        opt.step();

        // Evaluation pass: no dropout, no recording, same cached correction.
        Tape<T> eval_tape(false);
        auto eval_logits = model.forward(eval_tape, ctx, /*training=*/false, rng);
        auto eval_corrected = apply_correction(eval_tape, eval_logits, correction);
        auto val_loss_t = eval_tape.cross_entropy_masked(eval_corrected, g.labels, g.val_mask);
        const double val_loss = static_cast<double>(val_loss_t->value[0]);

        if (trace) {
            trace->train_losses.push_back(train_loss);
            trace->val_losses.push_back(val_loss);
        }
        ++result.epochs_run;

        if (val_loss < best_val) {
            best_val = val_loss;
            best_params = model.snapshot();
            result.best_val_epoch = epoch;
            result.test_accuracy = evaluate(eval_corrected, g.labels, g.test_mask);
            since_best = 0;
        } else {
            ++since_best;
        }
        if (trace) trace->best_val_losses.push_back(best_val);
        if (since_best > cfg.patience) break;
    }

    model.restore(best_params);
    if (!cfg.checkpoint_path.empty()) model.save_checkpoint(cfg.checkpoint_path);
    if (trace) {
        uint64_t h = 1469598103934665603ull;
        for (const auto& t : model.parameters())
            h = fnv1a64(t->value.data(), t->value.size() * sizeof(T), h);
        trace->param_hash = h;
    }
    result.total_wall_seconds = seconds_since(t_start);
    return result;
}

}  // namespace

uint64_t fnv1a64(const void* data, size_t bytes, uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

RunResult train(const Graph& g, const TrainConfig& cfg, TrainTrace* trace) {
    return cfg.precision == Precision::f64 ? train_impl<double>(g, cfg, trace)
                                           : train_impl<float>(g, cfg, trace);
}

std::vector<int> argmax_rows(std::span<const double> values, int cols) {
    if (cols < 1) throw std::invalid_argument("argmax_rows needs at least one column");
    const size_t rows = values.size() / cols;
    std::vector<int> out(rows);
    for (size_t r = 0; r < rows; ++r) {
        int best = 0;
        for (int c = 1; c < cols; ++c)
            if (values[r * cols + c] > values[r * cols + best]) best = c;
        out[r] = best;
    }
    return out;
}

double evaluate(std::span<const double> logits, int num_classes, std::span<const int> labels,
                std::span<const uint8_t> mask) {
    if (num_classes < 1) throw std::invalid_argument("evaluate needs at least one class");
    const size_t n = logits.size() / num_classes;
    if (labels.size() != n || mask.size() != n)
        throw std::invalid_argument("evaluate: labels/mask size mismatch");
    const auto preds = argmax_rows(logits, num_classes);
    long correct = 0, total = 0;
    for (size_t r = 0; r < n; ++r) {
        if (!mask[r]) continue;
        ++total;
        if (preds[r] == labels[r]) ++correct;
    }
    if (total == 0) throw std::invalid_argument("evaluate: empty mask");
    return static_cast<double>(correct) / total;
}

BenchmarkOutput benchmark(const std::vector<std::string>& datasets, const std::string& data_dir,
                          const TrainConfig& cfg, int runs, std::ostream* progress) {
    if (runs < 1) throw std::invalid_argument("runs must be >= 1");
    BenchmarkOutput out;
    for (const auto& name : datasets) {
        Graph base;
        try {
            base = load_dataset(data_dir, name).graph;
        } catch (const std::exception& e) {
            out.skipped.emplace_back(name, e.what());
            if (progress) *progress << "skipping " << name << ": " << e.what() << '\n';
            continue;
        }
        for (int run = 0; run < runs; ++run) {
            SplitMasks masks;
            std::string source = "file";
            try {
                masks = load_splits(data_dir, name, run, base.num_nodes);
            } catch (const std::exception&) {
                masks = generate_splits(base, cfg.split_proportions, cfg.seed + run);
                source = "generated";
            }
            Graph g = with_masks(base, masks);
            for (bool te_on : {false, true}) {
                TrainConfig run_cfg = cfg;
                run_cfg.seed = cfg.seed + run;
                run_cfg.te.enabled = te_on;
                if (progress)
                    *progress << name << " split " << run << (te_on ? " [te]" : " [base]")
                              << "..." << std::flush;
                RunResult r = train(g, run_cfg);
                r.dataset = name;
                r.split_index = run;
                r.split_source = source;
                if (progress)
                    *progress << " acc=" << r.test_accuracy << " wall=" << r.total_wall_seconds
                              << "s\n";
                out.rows.push_back(std::move(r));
            }
        }
    }
    return out;
}

void write_results_csv(std::ostream& out, const std::vector<RunResult>& rows) {
    out << "dataset,split,te_enabled,test_acc,best_val_epoch,te_wall_s,total_wall_s,te_calls,"
           "seed,config_hash\n";
    for (const auto& r : rows) {
        out << r.dataset << ',' << r.split_index << ',' << (r.te_enabled ? 1 : 0) << ','
            << std::setprecision(10) << r.test_accuracy << ',' << r.best_val_epoch << ','
            << std::setprecision(6) << r.te_wall_seconds << ',' << r.total_wall_seconds << ','
            << r.te_invocation_count << ',' << r.seed << ',' << r.config_fingerprint << '\n';
    }
}

namespace {

struct Aggregate {
    std::vector<double> accs;
    double wall = 0;
    double mean() const {
        double s = 0;
        for (double a : accs) s += a;
        return accs.empty() ? 0.0 : s / accs.size();
    }
    double stdev() const {
        if (accs.size() < 2) return 0.0;
        const double m = mean();
        double s = 0;
        for (double a : accs) s += (a - m) * (a - m);
        return std::sqrt(s / (accs.size() - 1));  // sample standard deviation
    }
};

}  // namespace

std::string results_markdown(const std::vector<RunResult>& rows) {
    std::map<std::string, std::array<Aggregate, 2>> by_dataset;
    for (const auto& r : rows) {
        auto& agg = by_dataset[r.dataset][r.te_enabled ? 1 : 0];
        agg.accs.push_back(r.test_accuracy);
        agg.wall += r.total_wall_seconds;
    }
    std::ostringstream out;
    out << "| dataset | runs | baseline acc | te acc | overhead |\n";
    out << "|---|---|---|---|---|\n";
    out << std::fixed << std::setprecision(2);
    for (const auto& [name, aggs] : by_dataset) {
        const auto& base = aggs[0];
        const auto& te = aggs[1];
        out << "| " << name << " | " << base.accs.size() << " | ";
        out << 100.0 * base.mean() << " ± " << 100.0 * base.stdev() << " | ";
        if (te.accs.empty())
            out << "- | - |\n";
        else {
            out << 100.0 * te.mean() << " ± " << 100.0 * te.stdev() << " | ";
            if (base.wall > 0)
                out << te.wall / base.wall << "x |\n";
            else
                out << "- |\n";
        }
    }
    return out.str();
}

std::string canonical_config(const TrainConfig& cfg) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "epochs=" << cfg.epochs << '\n';
    out << "learning_rate=" << cfg.learning_rate << '\n';
    out << "weight_decay=" << cfg.weight_decay << '\n';
    out << "patience=" << cfg.patience << '\n';
    out << "precision=" << (cfg.precision == Precision::f64 ? "f64" : "f32") << '\n';
    out << "model.num_layers=" << cfg.model.num_layers << '\n';
    out << "model.hidden_dim=" << cfg.model.hidden_dim << '\n';
    out << "model.dropout_rate=" << cfg.model.dropout_rate << '\n';
    out << "model.use_degree_scaling=" << cfg.model.use_degree_scaling << '\n';
    out << "te.enabled=" << cfg.te.enabled << '\n';
    out << "te.het_fraction=" << cfg.te.het_fraction << '\n';
    out << "te.degree_fraction=" << cfg.te.degree_fraction << '\n';
    out << "te.period_epochs=" << cfg.te.period_epochs << '\n';
    out << "te.lag=" << cfg.te.lag << '\n';
    out << "te.label_source="
        << (cfg.te.label_source == LabelSource::full_labels ? "full_labels"
                                                            : "train_plus_predictions")
        << '\n';
    out << "te.max_neighbors=" << cfg.te.max_neighbors << '\n';
    out << "te.k_neighbors=" << cfg.te.k_neighbors << '\n';
    out << "te.log_base=" << (cfg.te.log_base == LogBase::base2 ? "base2" : "natural") << '\n';
    out << "split_proportions=" << cfg.split_proportions[0] << ',' << cfg.split_proportions[1]
        << ',' << cfg.split_proportions[2] << '\n';
    return out.str();
}

std::string config_fingerprint(const TrainConfig& cfg) {
    const std::string canon = canonical_config(cfg);
    const uint64_t h = fnv1a64(canon.data(), canon.size());
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

}  // namespace teggcn
