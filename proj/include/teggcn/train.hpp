#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "teggcn/dataset.hpp"
#include "teggcn/ggcn.hpp"
#include "teggcn/graph.hpp"
#include "teggcn/te_control.hpp"

namespace teggcn {

enum class Precision { f32, f64 };

struct TrainConfig {
    int epochs = 500;
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    int patience = 100;  // epochs without validation-loss improvement before stopping
    uint64_t seed = 0;
    Precision precision = Precision::f32;
    ModelConfig model;
    TEControlConfig te;
    std::array<double, 3> split_proportions{0.48, 0.32, 0.20};
    int te_threads = 0;           // 0 = hardware concurrency
    std::string te_log_path;      // JSONL diagnostic records, one per scheduled TE phase
    std::string checkpoint_path;  // best-validation parameters, written at the end
};

struct RunResult {
    std::string dataset;
    int split_index = -1;
    bool te_enabled = false;
    double test_accuracy = 0.0;  // at the best-validation-loss checkpoint
    int best_val_epoch = -1;
    double te_wall_seconds = 0.0;
    double total_wall_seconds = 0.0;
    long te_invocation_count = 0;
    uint64_t seed = 0;
    std::string config_fingerprint;
    std::string split_source;  // "file" or "generated"
    int epochs_run = 0;
};

// Per-epoch record of the run, for determinism and early-stopping tests.
struct TrainTrace {
    std::vector<double> train_losses;
    std::vector<double> val_losses;
    std::vector<double> best_val_losses;  // running best after each epoch
    uint64_t param_hash = 0;              // FNV over the final (restored) parameter bytes
};

// Full training run on a graph with masks attached: forward, scheduled TE
// control, correction, masked cross-entropy, Adam; tracks the best validation
// loss and reports test accuracy at that checkpoint. Throws on a non-finite
// training loss, naming the epoch.
RunResult train(const Graph& g, const TrainConfig& cfg, TrainTrace* trace = nullptr);

// Fraction of masked rows whose argmax logit (ties: lowest class index)
// equals the label.
double evaluate(std::span<const double> logits, int num_classes, std::span<const int> labels,
                std::span<const uint8_t> mask);
template <typename T>
double evaluate(const Tensor<T>& logits, std::span<const int> labels,
                std::span<const uint8_t> mask) {
    std::vector<double> vals(logits->value.begin(), logits->value.end());
    return evaluate(std::span<const double>(vals), logits->cols, labels, mask);
}

std::vector<int> argmax_rows(std::span<const double> values, int cols);

struct BenchmarkOutput {
    std::vector<RunResult> rows;
    std::vector<std::pair<std::string, std::string>> skipped;  // dataset, reason
};

// Table-style protocol: per dataset, `runs` splits (files when present,
// generated otherwise), each trained with the TE control off and on under the
// same seed.
BenchmarkOutput benchmark(const std::vector<std::string>& datasets, const std::string& data_dir,
                          const TrainConfig& cfg, int runs, std::ostream* progress = nullptr);

void write_results_csv(std::ostream& out, const std::vector<RunResult>& rows);
std::string results_markdown(const std::vector<RunResult>& rows);

// Canonical flat key=value dump of every configuration field except the seed
// (the seed has its own results column), and its FNV-1a fingerprint.
std::string canonical_config(const TrainConfig& cfg);
std::string config_fingerprint(const TrainConfig& cfg);

uint64_t fnv1a64(const void* data, size_t bytes, uint64_t seed = 1469598103934665603ull);

}  // namespace teggcn
