#include "teggcn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace fs = std::filesystem;

namespace teggcn {

namespace {

const std::unordered_map<std::string, bool>& dataset_families() {
    // true = content/cites family
    static const std::unordered_map<std::string, bool> families{
        {"cora", true},     {"citeseer", true},  {"pubmed", true},
        {"texas", false},   {"wisconsin", false}, {"actor", false},
        {"squirrel", false}, {"chameleon", false}, {"cornell", false},
    };
    return families;
}

std::string find_file(const std::string& root, std::initializer_list<std::string> candidates) {
    for (const auto& c : candidates) {
        fs::path p = fs::path(root) / c;
        if (fs::exists(p)) return p.string();
    }
    std::string tried;
    for (const auto& c : candidates) tried += (tried.empty() ? "" : ", ") + c;
    throw std::runtime_error("no such file under '" + root + "' (tried: " + tried + ")");
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(std::move(tok));
    return out;
}

std::vector<std::string> split_char(const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

bool parse_int(const std::string& s, long& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

[[noreturn]] void parse_fail(const std::string& file, size_t line, const std::string& what) {
    throw std::runtime_error(file + ":" + std::to_string(line) + ": " + what);
}

std::string rstrip(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.pop_back();
    return s;
}

}  // namespace

bool is_known_dataset(const std::string& name) { return dataset_families().count(name) > 0; }

bool uses_content_cites(const std::string& name) {
    auto it = dataset_families().find(name);
    if (it == dataset_families().end())
        throw std::invalid_argument("unknown dataset '" + name + "'");
    return it->second;
}

LoadedGraph load_content_cites(const std::string& root_dir, const std::string& name) {
    const std::string content_path =
        find_file(root_dir, {name + "/" + name + ".content", name + ".content"});
    const std::string cites_path =
        find_file(root_dir, {name + "/" + name + ".cites", name + ".cites"});

    std::ifstream content(content_path);
    std::unordered_map<std::string, int> node_ids;
    std::unordered_map<std::string, int> class_ids;
    std::vector<double> features;
    std::vector<int> labels;
    int feature_dim = -1;
    LoadStats stats;

    std::string line;
    size_t lineno = 0;
    while (std::getline(content, line)) {
        ++lineno;
        line = rstrip(line);
        if (line.empty()) continue;
        auto toks = split_ws(line);
        if (toks.size() < 3)
            parse_fail(content_path, lineno, "expected node-id, features and label");
        const int f = static_cast<int>(toks.size()) - 2;
        if (feature_dim < 0) feature_dim = f;
        if (f != feature_dim)
            parse_fail(content_path, lineno,
                       "feature count " + std::to_string(f) + " does not match first line's " +
                           std::to_string(feature_dim));
        if (!node_ids.emplace(toks.front(), static_cast<int>(node_ids.size())).second)
            parse_fail(content_path, lineno, "duplicate node id '" + toks.front() + "'");
        for (int i = 0; i < feature_dim; ++i) {
            try {
                features.push_back(std::stod(toks[1 + i]));
            } catch (const std::exception&) {
                parse_fail(content_path, lineno, "bad feature value '" + toks[1 + i] + "'");
            }
        }
        auto [it, inserted] =
            class_ids.emplace(toks.back(), static_cast<int>(class_ids.size()));
        labels.push_back(it->second);
        ++stats.content_lines;
    }
    if (node_ids.empty()) throw std::runtime_error(content_path + ": empty content file");

    std::ifstream cites(cites_path);
    std::vector<std::pair<int, int>> edges;
    lineno = 0;
    while (std::getline(cites, line)) {
        ++lineno;
        line = rstrip(line);
        if (line.empty()) continue;
        auto toks = split_ws(line);
        if (toks.size() != 2) parse_fail(cites_path, lineno, "expected two node ids");
        auto a = node_ids.find(toks[0]);
        auto b = node_ids.find(toks[1]);
        ++stats.edge_lines;
        if (a == node_ids.end() || b == node_ids.end()) {
            ++stats.dropped_unknown_edges;
            continue;
        }
        if (a->second == b->second) {
            ++stats.dropped_self_loops;
            continue;
        }
        edges.emplace_back(a->second, b->second);
    }

    LoadedGraph out;
    out.stats = stats;
    out.graph = build_graph(edges, static_cast<int>(node_ids.size()), std::move(features),
                            feature_dim, std::move(labels));
    return out;
}

LoadedGraph load_geom_text(const std::string& root_dir, const std::string& name) {
    const std::string node_path = find_file(
        root_dir, {name + "/out1_node_feature_label.txt", name + ".nodes"});
    const std::string edge_path =
        find_file(root_dir, {name + "/out1_graph_edges.txt", name + ".edges"});
    const bool index_features = name == "actor" || name == "film";

    std::ifstream nodes(node_path);
    std::string line;
    size_t lineno = 0;
    if (!std::getline(nodes, line)) throw std::runtime_error(node_path + ": empty node file");
    ++lineno;
    {
        auto head = split_char(rstrip(line), '\t');
        long dummy;
        if (head.size() >= 3 && parse_int(head.front(), dummy) && parse_int(head.back(), dummy))
            parse_fail(node_path, lineno, "header line missing (first line looks like data)");
    }

    struct Record {
        long id;
        std::vector<std::string> feature_toks;
        long label;
    };
    std::vector<Record> records;
    LoadStats stats;
    while (std::getline(nodes, line)) {
        ++lineno;
        line = rstrip(line);
        if (line.empty()) continue;
        auto fields = split_char(line, '\t');
        if (fields.size() != 3)
            parse_fail(node_path, lineno, "expected id TAB features TAB label");
        Record r;
        if (!parse_int(fields[0], r.id)) parse_fail(node_path, lineno, "non-integer node id");
        if (!parse_int(fields[2], r.label))
            parse_fail(node_path, lineno, "non-integer label '" + fields[2] + "'");
        r.feature_toks = split_char(fields[1], ',');
        records.push_back(std::move(r));
        ++stats.content_lines;
    }
    if (records.empty()) throw std::runtime_error(node_path + ": no data lines");

    std::unordered_map<long, int> node_ids;
    for (const auto& r : records)
        if (!node_ids.emplace(r.id, static_cast<int>(node_ids.size())).second)
            throw std::runtime_error(node_path + ": duplicate node id " + std::to_string(r.id));

    const int n = static_cast<int>(records.size());
    int feature_dim = 0;
    std::vector<double> features;
    if (index_features) {
        long max_index = -1;
        for (const auto& r : records)
            for (const auto& tok : r.feature_toks) {
                long v;
                if (!parse_int(tok, v) || v < 0)
                    throw std::runtime_error(node_path + ": bad feature index '" + tok + "'");
                max_index = std::max(max_index, v);
            }
        feature_dim = static_cast<int>(max_index + 1);
        features.assign(static_cast<size_t>(n) * feature_dim, 0.0);
        for (int i = 0; i < n; ++i)
            for (const auto& tok : records[i].feature_toks) {
                long v;
                parse_int(tok, v);
                features[static_cast<size_t>(i) * feature_dim + v] = 1.0;
            }
    } else {
        feature_dim = static_cast<int>(records.front().feature_toks.size());
        features.reserve(static_cast<size_t>(n) * feature_dim);
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(records[i].feature_toks.size()) != feature_dim)
                throw std::runtime_error(node_path + ": inconsistent feature count at node " +
                                         std::to_string(records[i].id));
            for (const auto& tok : records[i].feature_toks) {
                try {
                    features.push_back(std::stod(tok));
                } catch (const std::exception&) {
                    throw std::runtime_error(node_path + ": bad feature value '" + tok + "'");
                }
            }
        }
    }
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(records[i].label);

    std::ifstream edges_in(edge_path);
    lineno = 0;
    if (!std::getline(edges_in, line)) throw std::runtime_error(edge_path + ": empty edge file");
    ++lineno;
    {
        auto head = split_ws(rstrip(line));
        long dummy;
        if (head.size() == 2 && parse_int(head[0], dummy) && parse_int(head[1], dummy))
            parse_fail(edge_path, lineno, "header line missing (first line looks like data)");
    }
    std::vector<std::pair<int, int>> edges;
    while (std::getline(edges_in, line)) {
        ++lineno;
        line = rstrip(line);
        if (line.empty()) continue;
        auto toks = split_ws(line);
        if (toks.size() != 2) parse_fail(edge_path, lineno, "expected src and dst");
        long a, b;
        if (!parse_int(toks[0], a) || !parse_int(toks[1], b))
            parse_fail(edge_path, lineno, "non-integer endpoint");
        auto ia = node_ids.find(a);
        auto ib = node_ids.find(b);
        ++stats.edge_lines;
        if (ia == node_ids.end() || ib == node_ids.end()) {
            ++stats.dropped_unknown_edges;
            continue;
        }
        if (ia->second == ib->second) {
            ++stats.dropped_self_loops;
            continue;
        }
        edges.emplace_back(ia->second, ib->second);
    }

    LoadedGraph out;
    out.stats = stats;
    out.graph = build_graph(edges, n, std::move(features), feature_dim, std::move(labels));
    return out;
}

LoadedGraph load_dataset(const std::string& root_dir, const std::string& name) {
    if (is_known_dataset(name))
        return uses_content_cites(name) ? load_content_cites(root_dir, name)
                                        : load_geom_text(root_dir, name);
    // unknown names (synthetic fixtures): whichever format is present
    try {
        return load_content_cites(root_dir, name);
    } catch (const std::runtime_error&) {
        return load_geom_text(root_dir, name);
    }
}

SplitMasks load_splits(const std::string& root_dir, const std::string& name, int split_index,
                       int num_nodes) {
    const std::string suffix = name + "_split_" + std::to_string(split_index) + ".txt";
    const std::string path = find_file(root_dir, {name + "/" + suffix, suffix});
    std::ifstream in(path);
    SplitMasks m;
    std::vector<std::vector<uint8_t>*> parts{&m.train, &m.val, &m.test};
    std::vector<uint8_t> seen(num_nodes, 0);
    std::string line;
    for (size_t p = 0; p < parts.size(); ++p) {
        if (!std::getline(in, line))
            throw std::runtime_error(path + ": expected three partition lines");
        parts[p]->assign(num_nodes, 0);
        for (const auto& tok : split_ws(rstrip(line))) {
            long v;
            if (!parse_int(tok, v) || v < 0 || v >= num_nodes)
                throw std::runtime_error(path + ": bad node index '" + tok + "'");
            if (seen[v])
                throw std::runtime_error(path + ": node " + std::to_string(v) +
                                         " appears in more than one partition");
            seen[v] = 1;
            (*parts[p])[v] = 1;
        }
    }
    return m;
}

SplitMasks generate_splits(const Graph& g, std::array<double, 3> proportions, uint64_t seed,
                           std::ostream* warn) {
    double total = proportions[0] + proportions[1] + proportions[2];
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("split proportions must sum to 1");
    SplitMasks m;
    m.train.assign(g.num_nodes, 0);
    m.val.assign(g.num_nodes, 0);
    m.test.assign(g.num_nodes, 0);

    std::vector<std::vector<int>> by_class(std::max(g.num_classes, 1));
    for (int v = 0; v < g.num_nodes; ++v) {
        if (g.labels[v] < 0) throw std::invalid_argument("unlabeled node in generate_splits");
        by_class[g.labels[v]].push_back(v);
    }
    std::mt19937_64 rng(seed);
    for (int c = 0; c < static_cast<int>(by_class.size()); ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        const int mc = static_cast<int>(members.size());
        if (mc < 3) {
            if (warn)
                *warn << "class " << c << " has only " << mc
                      << " nodes; assigning all of them to train\n";
            for (int v : members) m.train[v] = 1;
            continue;
        }
        std::shuffle(members.begin(), members.end(), rng);
        int n_train = static_cast<int>(std::lround(proportions[0] * mc));
        int n_val = static_cast<int>(std::lround(proportions[1] * mc));
        n_train = std::min(n_train, mc);
        n_val = std::min(n_val, mc - n_train);
        for (int i = 0; i < mc; ++i) {
            if (i < n_train)
                m.train[members[i]] = 1;
            else if (i < n_train + n_val)
                m.val[members[i]] = 1;
            else
                m.test[members[i]] = 1;
        }
    }
    return m;
}

Graph generate_synthetic(const SynthSpec& spec) {
    const int n = spec.num_nodes, c = spec.num_classes, f = spec.feature_dim;
    if (n < 2 || c < 1 || f < 1) throw std::invalid_argument("degenerate synthetic spec");
    if (spec.mean_degree > n - 1)
        throw std::invalid_argument("mean_degree exceeds the maximum possible degree");
    if (spec.target_homophily < 0.0 || spec.target_homophily > 1.0)
        throw std::invalid_argument("target_homophily must lie in [0, 1]");
    if (spec.target_homophily < 1.0 && c < 2)
        throw std::invalid_argument("inter-class edges need at least two classes");

    std::vector<int> labels(n);
    for (int v = 0; v < n; ++v) labels[v] = v % c;
    std::vector<std::vector<int>> by_class(c);
    for (int v = 0; v < n; ++v) by_class[labels[v]].push_back(v);
    if (spec.target_homophily > 0.0)
        for (const auto& members : by_class)
            if (members.size() < 2)
                throw std::invalid_argument("intra-class edges need classes of size >= 2");

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const long target_edges = std::lround(spec.mean_degree * n / 2.0);
    std::unordered_set<long> present;
    std::vector<std::pair<int, int>> edges;
    long attempts = 0;
    const long max_attempts = 200 * std::max(target_edges, 1L) + 1000;
    while (static_cast<long>(edges.size()) < target_edges) {
        if (++attempts > max_attempts)
            throw std::runtime_error("could not place requested edge count; graph too dense");
        const int u = static_cast<int>(rng() % n);
        int v;
        if (unif(rng) < spec.target_homophily) {
            const auto& members = by_class[labels[u]];
            v = members[rng() % members.size()];
        } else {
            do {
                v = static_cast<int>(rng() % n);
            } while (labels[v] == labels[u]);
        }
        if (u == v) continue;
        const long key = static_cast<long>(std::min(u, v)) * n + std::max(u, v);
        if (!present.insert(key).second) continue;
        edges.emplace_back(u, v);
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> class_means(static_cast<size_t>(c) * f);
    for (auto& m : class_means) m = gauss(rng);
    std::vector<double> features(static_cast<size_t>(n) * f);
    for (int v = 0; v < n; ++v)
        for (int j = 0; j < f; ++j)
            features[static_cast<size_t>(v) * f + j] =
                spec.class_signal * class_means[static_cast<size_t>(labels[v]) * f + j] +
                gauss(rng);

    return build_graph(edges, n, std::move(features), f, std::move(labels));
}

void write_content_cites(const Graph& g, const std::string& root_dir, const std::string& name) {
    fs::create_directories(root_dir);
    std::ofstream content(fs::path(root_dir) / (name + ".content"));
    content.precision(17);
    for (int v = 0; v < g.num_nodes; ++v) {
        content << "n" << v;
        for (double x : g.feature_row(v)) content << ' ' << x;
        content << " c" << g.labels[v] << '\n';
    }
    std::ofstream cites(fs::path(root_dir) / (name + ".cites"));
    for (const auto& [u, v] : g.edges)
        if (u < v) cites << 'n' << u << ' ' << 'n' << v << '\n';
}

void write_geom_text(const Graph& g, const std::string& root_dir, const std::string& name,
                     bool actor_style) {
    fs::create_directories(root_dir);
    std::ofstream nodes(fs::path(root_dir) / (name + ".nodes"));
    nodes.precision(17);
    nodes << "node_id\tfeature\tlabel\n";
    for (int v = 0; v < g.num_nodes; ++v) {
        nodes << v << '\t';
        auto row = g.feature_row(v);
        if (actor_style) {
            bool first = true;
            for (int j = 0; j < g.feature_dim; ++j) {
                if (row[j] == 0.0) continue;
                if (!first) nodes << ',';
                nodes << j;
                first = false;
            }
            if (first) nodes << 0;  // the format has no empty-feature syntax
        } else {
            for (int j = 0; j < g.feature_dim; ++j) {
                if (j) nodes << ',';
                nodes << row[j];
            }
        }
        nodes << '\t' << g.labels[v] << '\n';
    }
    std::ofstream edges(fs::path(root_dir) / (name + ".edges"));
    edges << "src\tdst\n";
    for (const auto& [u, v] : g.edges)
        if (u < v) edges << u << '\t' << v << '\n';
}

void write_split_file(const std::string& path, const SplitMasks& masks) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(path);
    for (const auto* mask : {&masks.train, &masks.val, &masks.test}) {
        bool first = true;
        for (size_t v = 0; v < mask->size(); ++v) {
            if (!(*mask)[v]) continue;
            if (!first) out << ' ';
            out << v;
            first = false;
        }
        out << '\n';
    }
}

}  // namespace teggcn
