#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "teggcn/dataset.hpp"
#include "teggcn/train.hpp"
#include "teggcn/verify.hpp"

using namespace teggcn;
namespace fs = std::filesystem;

namespace {

struct TrainFlags {
    std::string dataset;
    std::string data_dir = "data";
    int split = 0;
    std::string out;
    std::string save_params;
    std::string markdown;
    std::vector<std::string> datasets;
    int runs = 10;
    bool no_te = false;
    bool no_degree_scaling = false;
    std::string precision = "f32";
    std::string label_source = "train_plus_predictions";
    std::string config_path;  // handled by a pre-parse scan, see apply_config_file
    TrainConfig cfg;
};

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::runtime_error("bad boolean value '" + v + "'");
}

// Flat key=value file mirroring the command-line flags. Applied before CLI11
// parses argv, so explicit command-line values override the file.
void apply_config_file(const std::string& path, TrainFlags& f) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::string line;
    size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "data-dir") f.data_dir = value;
            else if (key == "dataset") f.dataset = value;
            else if (key == "split") f.split = std::stoi(value);
            else if (key == "out") f.out = value;
            else if (key == "save-params") f.save_params = value;
            else if (key == "markdown") f.markdown = value;
            else if (key == "runs") f.runs = std::stoi(value);
            else if (key == "datasets") {
                f.datasets.clear();
                std::istringstream ss(value);
                std::string tok;
                while (std::getline(ss, tok, ',')) f.datasets.push_back(trim(tok));
            } else if (key == "seed") f.cfg.seed = std::stoull(value);
            else if (key == "epochs") f.cfg.epochs = std::stoi(value);
            else if (key == "lr") f.cfg.learning_rate = std::stod(value);
            else if (key == "weight-decay") f.cfg.weight_decay = std::stod(value);
            else if (key == "patience") f.cfg.patience = std::stoi(value);
            else if (key == "hidden") f.cfg.model.hidden_dim = std::stoi(value);
            else if (key == "layers") f.cfg.model.num_layers = std::stoi(value);
            else if (key == "dropout") f.cfg.model.dropout_rate = std::stod(value);
            else if (key == "no-degree-scaling") f.no_degree_scaling = parse_bool(value);
            else if (key == "precision") f.precision = value;
            else if (key == "no-te") f.no_te = parse_bool(value);
            else if (key == "te-period") f.cfg.te.period_epochs = std::stoi(value);
            else if (key == "te-het-frac") f.cfg.te.het_fraction = std::stod(value);
            else if (key == "te-deg-frac") f.cfg.te.degree_fraction = std::stod(value);
            else if (key == "te-max-neighbors") f.cfg.te.max_neighbors = std::stoi(value);
            else if (key == "te-k-neighbors") f.cfg.te.k_neighbors = std::stoi(value);
            else if (key == "te-label-source") f.label_source = value;
            else if (key == "te-log") f.cfg.te_log_path = value;
            else if (key == "te-threads") f.cfg.te_threads = std::stoi(value);
            else
                throw std::runtime_error("unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad value '" +
                                     value + "' for key '" + key + "'");
        } catch (const std::out_of_range&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": value '" + value +
                                     "' out of range for key '" + key + "'");
        }
    }
}

void add_common_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--data-dir", f.data_dir, "dataset root directory")
        ->envname("TEGGCN_DATA_DIR");
    cmd->add_option("--seed", f.cfg.seed, "run seed");
    cmd->add_option("--epochs", f.cfg.epochs, "training epochs");
    cmd->add_option("--lr", f.cfg.learning_rate, "learning rate");
    cmd->add_option("--weight-decay", f.cfg.weight_decay, "decoupled weight decay");
    cmd->add_option("--patience", f.cfg.patience, "early-stopping patience (epochs)");
    cmd->add_option("--hidden", f.cfg.model.hidden_dim, "hidden width");
    cmd->add_option("--layers", f.cfg.model.num_layers, "convolution layers");
    cmd->add_option("--dropout", f.cfg.model.dropout_rate, "dropout rate");
    cmd->add_flag("--no-degree-scaling", f.no_degree_scaling,
                  "disable learned degree scaling (alpha = 1)");
    cmd->add_option("--precision", f.precision, "f32 or f64")
        ->check(CLI::IsMember({"f32", "f64"}));
    cmd->add_flag("--no-te", f.no_te, "disable the transfer-entropy control");
    cmd->add_option("--te-period", f.cfg.te.period_epochs, "epochs between TE recomputations");
    cmd->add_option("--te-het-frac", f.cfg.te.het_fraction, "stage-1 heterophily fraction");
    cmd->add_option("--te-deg-frac", f.cfg.te.degree_fraction, "stage-2 degree fraction");
    cmd->add_option("--te-max-neighbors", f.cfg.te.max_neighbors,
                    "cap on evaluated neighbors per selected node");
    cmd->add_option("--te-k-neighbors", f.cfg.te.k_neighbors, "KSG neighbor count");
    cmd->add_option("--te-label-source", f.label_source,
                    "labels for the heterophily ranking")
        ->check(CLI::IsMember({"train_plus_predictions", "full_labels"}));
    cmd->add_option("--te-log", f.cfg.te_log_path, "JSONL diagnostic log for TE phases");
    cmd->add_option("--te-threads", f.cfg.te_threads, "threads for TE estimation (0 = auto)");
    cmd->add_option("--config", f.config_path,
                    "flat key=value config file; command line overrides it");
}

void finalize_flags(TrainFlags& f) {
    f.cfg.te.enabled = !f.no_te;
    f.cfg.model.use_degree_scaling = !f.no_degree_scaling;
    f.cfg.precision = f.precision == "f64" ? Precision::f64 : Precision::f32;
    f.cfg.te.label_source = f.label_source == "full_labels"
                                ? LabelSource::full_labels
                                : LabelSource::train_plus_predictions;
    f.cfg.patience = std::min(f.cfg.patience, f.cfg.epochs);
}

int cmd_train(TrainFlags& f) {
    finalize_flags(f);
    if (f.dataset.empty() || f.out.empty()) {
        std::cerr << "train needs --dataset and --out (flags or config file)\n";
        return 1;
    }
    auto loaded = load_dataset(f.data_dir, f.dataset);
    Graph& base = loaded.graph;
    std::cerr << f.dataset << ": " << base.num_nodes << " nodes, "
              << base.num_undirected_edges() << " undirected edges, " << base.num_classes
              << " classes, " << base.feature_dim << " features";
    if (loaded.stats.dropped_unknown_edges || loaded.stats.dropped_self_loops)
        std::cerr << " (dropped " << loaded.stats.dropped_unknown_edges << " unknown-id and "
                  << loaded.stats.dropped_self_loops << " self-loop edges)";
    std::cerr << '\n';

    SplitMasks masks;
    std::string source = "file";
    try {
        masks = load_splits(f.data_dir, f.dataset, f.split, base.num_nodes);
    } catch (const std::exception&) {
        masks = generate_splits(base, f.cfg.split_proportions, f.cfg.seed + f.split, &std::cerr);
        source = "generated";
        std::cerr << "split file not found; generated split " << f.split << " from seed "
                  << f.cfg.seed + f.split << '\n';
    }
    Graph g = with_masks(std::move(base), std::move(masks));

    f.cfg.checkpoint_path = f.save_params;
    RunResult r = train(g, f.cfg);
    r.dataset = f.dataset;
    r.split_index = f.split;
    r.split_source = source;

    std::cerr << "test accuracy " << r.test_accuracy << " at epoch " << r.best_val_epoch
              << " (" << r.epochs_run << " epochs, " << r.total_wall_seconds << "s, TE "
              << r.te_wall_seconds << "s over " << r.te_invocation_count << " pair requests)\n";

    std::ofstream out(f.out);
    if (!out) {
        std::cerr << "cannot open output file '" << f.out << "'\n";
        return 1;
    }
    write_results_csv(out, {r});
    return 0;
}

int cmd_benchmark(TrainFlags& f) {
    finalize_flags(f);
    if (f.datasets.empty() || f.out.empty()) {
        std::cerr << "benchmark needs --datasets and --out (flags or config file)\n";
        return 1;
    }
    auto result = benchmark(f.datasets, f.data_dir, f.cfg, f.runs, &std::cerr);
    std::ofstream out(f.out);
    if (!out) {
        std::cerr << "cannot open output file '" << f.out << "'\n";
        return 1;
    }
    write_results_csv(out, result.rows);
    const std::string md = results_markdown(result.rows);
    if (!f.markdown.empty()) {
        std::ofstream mdout(f.markdown);
        mdout << md;
    }
    std::cout << md;
    for (const auto& [name, reason] : result.skipped)
        std::cout << "skipped " << name << ": " << reason << '\n';
    return result.rows.empty() ? 1 : 0;
}

int cmd_synth(int nodes, int classes, double mean_degree, double homophily, int features,
              double signal, uint64_t seed, const std::string& name, const std::string& out_dir,
              const std::string& format, int splits) {
    SynthSpec spec;
    spec.num_nodes = nodes;
    spec.num_classes = classes;
    spec.mean_degree = mean_degree;
    spec.target_homophily = homophily;
    spec.feature_dim = features;
    spec.class_signal = signal;
    spec.seed = seed;
    Graph g = generate_synthetic(spec);
    if (format == "geom")
        write_geom_text(g, out_dir, name);
    else
        write_content_cites(g, out_dir, name);
    for (int s = 0; s < splits; ++s) {
        auto masks = generate_splits(g, {0.48, 0.32, 0.20}, seed + 1000 + s);
        write_split_file((fs::path(out_dir) / (name + "_split_" + std::to_string(s) + ".txt"))
                             .string(),
                         masks);
    }
    auto h = node_heterophily(g, g.labels, LabelSource::full_labels);
    std::cerr << "wrote " << name << " to " << out_dir << ": " << g.num_nodes << " nodes, "
              << g.num_undirected_edges() << " edges, homophily level " << h.homophily_level
              << ", " << splits << " split files\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph classifier with transfer-entropy feature correction"};
    app.require_subcommand(1);

    TrainFlags tf;
    auto* train_cmd = app.add_subcommand("train", "train one run on one dataset split");
    train_cmd->add_option("--dataset", tf.dataset, "dataset name");
    train_cmd->add_option("--split", tf.split, "split index");
    train_cmd->add_option("--out", tf.out, "results CSV path");
    train_cmd->add_option("--save-params", tf.save_params, "write best parameters here");
    add_common_flags(train_cmd, tf);

    TrainFlags bf;
    auto* bench_cmd =
        app.add_subcommand("benchmark", "baseline vs TE-enabled sweep over datasets");
    bench_cmd->add_option("--datasets", bf.datasets, "comma-separated dataset names")
        ->delimiter(',');
    bench_cmd->add_option("--runs", bf.runs, "splits (or seeds) per dataset");
    bench_cmd->add_option("--out", bf.out, "results CSV path");
    bench_cmd->add_option("--markdown", bf.markdown, "also write the aggregate table here");
    add_common_flags(bench_cmd, bf);

    auto* verify_cmd =
        app.add_subcommand("verify", "gradient and estimator oracle checks; nonzero on failure");

    int s_nodes = 1000, s_classes = 4, s_features = 32, s_splits = 10;
    double s_mean_degree = 6.0, s_homophily = 0.5, s_signal = 1.0;
    uint64_t s_seed = 0;
    std::string s_name = "synth", s_out_dir = "data", s_format = "content";
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset on disk");
    synth_cmd->add_option("--nodes", s_nodes, "node count");
    synth_cmd->add_option("--classes", s_classes, "class count");
    synth_cmd->add_option("--mean-degree", s_mean_degree, "average degree");
    synth_cmd->add_option("--homophily", s_homophily, "target homophily in [0,1]");
    synth_cmd->add_option("--features", s_features, "feature dimension");
    synth_cmd->add_option("--signal", s_signal, "class mean offset scale");
    synth_cmd->add_option("--seed", s_seed, "generator seed");
    synth_cmd->add_option("--name", s_name, "dataset name to write");
    synth_cmd->add_option("--out-dir", s_out_dir, "output directory");
    synth_cmd->add_option("--format", s_format, "content or geom")
        ->check(CLI::IsMember({"content", "geom"}));
    synth_cmd->add_option("--splits", s_splits, "number of split files");

    // Config files apply before argv so that command-line values win.
    try {
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            std::string path;
            if (arg == "--config" && i + 1 < argc)
                path = argv[i + 1];
            else if (arg.rfind("--config=", 0) == 0)
                path = arg.substr(9);
            if (!path.empty()) {
                apply_config_file(path, tf);
                apply_config_file(path, bf);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(tf);
        if (bench_cmd->parsed()) return cmd_benchmark(bf);
        if (verify_cmd->parsed()) return run_verification(std::cout) ? 0 : 1;
        if (synth_cmd->parsed())
            return cmd_synth(s_nodes, s_classes, s_mean_degree, s_homophily, s_features,
                             s_signal, s_seed, s_name, s_out_dir, s_format, s_splits);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
