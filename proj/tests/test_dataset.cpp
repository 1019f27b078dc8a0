#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "teggcn/dataset.hpp"
#include "teggcn/graph.hpp"

using namespace teggcn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("teggcn_test_" + std::to_string(std::rand()) + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("content/cites toy fixture loads one undirected edge") {
    TempDir dir;
    write_file(dir.path / "toy.content",
               "paper_a 1 0 1 physics\n"
               "paper_b 0 1 0 biology\n");
    write_file(dir.path / "toy.cites", "paper_a paper_b\n");
    auto loaded = load_content_cites(dir.str(), "toy");
    const Graph& g = loaded.graph;
    CHECK(g.num_nodes == 2);
    CHECK(g.feature_dim == 3);
    CHECK(g.num_classes == 2);
    CHECK(g.num_undirected_edges() == 1);
    CHECK(g.labels == std::vector<int>{0, 1});  // first-appearance order
    CHECK(loaded.stats.dropped_unknown_edges == 0);
}

TEST_CASE("cites lines with unknown ids are dropped and counted") {
    TempDir dir;
    write_file(dir.path / "toy.content", "a 1 x\nb 0 y\n");
    write_file(dir.path / "toy.cites", "a b\na ghost\n");
    auto loaded = load_content_cites(dir.str(), "toy");
    CHECK(loaded.graph.num_undirected_edges() == 1);
    CHECK(loaded.stats.dropped_unknown_edges == 1);
}

TEST_CASE("content parse errors carry the line number") {
    TempDir dir;
    write_file(dir.path / "toy.content", "a 1 0 x\nb 0 y\n");  // feature count mismatch on line 2
    write_file(dir.path / "toy.cites", "");
    try {
        load_content_cites(dir.str(), "toy");
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("duplicate node ids are rejected by both loaders") {
    TempDir dir;
    write_file(dir.path / "dup.content", "a 1 x\na 0 y\n");
    write_file(dir.path / "dup.cites", "");
    CHECK_THROWS_AS(load_content_cites(dir.str(), "dup"), std::runtime_error);

    write_file(dir.path / "dupg.nodes", "node_id\tfeature\tlabel\n0\t1\t0\n0\t1\t1\n");
    write_file(dir.path / "dupg.edges", "src\tdst\n");
    CHECK_THROWS_AS(load_geom_text(dir.str(), "dupg"), std::runtime_error);
}

TEST_CASE("geom toy fixture loads exactly") {
    TempDir dir;
    write_file(dir.path / "toy.nodes",
               "node_id\tfeature\tlabel\n"
               "0\t1,0\t0\n"
               "1\t0,1\t1\n"
               "2\t1,1\t0\n");
    write_file(dir.path / "toy.edges",
               "src\tdst\n"
               "0\t1\n"
               "1\t2\n");
    auto loaded = load_geom_text(dir.str(), "toy");
    const Graph& g = loaded.graph;
    CHECK(g.num_nodes == 3);
    CHECK(g.feature_dim == 2);
    CHECK(g.num_undirected_edges() == 2);
    CHECK(g.feature_row(2)[0] == 1.0);
    CHECK(g.labels == std::vector<int>{0, 1, 0});
}

TEST_CASE("geom loader rejects a missing header") {
    TempDir dir;
    write_file(dir.path / "toy.nodes", "0\t1,0\t0\n1\t0,1\t1\n");
    write_file(dir.path / "toy.edges", "src\tdst\n0\t1\n");
    CHECK_THROWS_AS(load_geom_text(dir.str(), "toy"), std::runtime_error);
}

TEST_CASE("geom loader rejects a non-integer label") {
    TempDir dir;
    write_file(dir.path / "toy.nodes", "node_id\tfeature\tlabel\n0\t1,0\tzebra\n");
    write_file(dir.path / "toy.edges", "src\tdst\n");
    CHECK_THROWS_AS(load_geom_text(dir.str(), "toy"), std::runtime_error);
}

TEST_CASE("actor-style index features expand to a binary vector") {
    TempDir dir;
    write_file(dir.path / "actor.nodes",
               "node_id\tfeature\tlabel\n"
               "0\t0,3\t1\n"
               "1\t2\t0\n");
    write_file(dir.path / "actor.edges", "src\tdst\n0\t1\n");
    auto loaded = load_geom_text(dir.str(), "actor");
    const Graph& g = loaded.graph;
    CHECK(g.feature_dim == 4);  // max index 3 + 1
    CHECK(g.feature_row(0)[0] == 1.0);
    CHECK(g.feature_row(0)[3] == 1.0);
    CHECK(g.feature_row(0)[1] == 0.0);
    CHECK(g.feature_row(1)[2] == 1.0);
}

TEST_CASE("loaders are deterministic") {
    TempDir dir;
    SynthSpec spec;
    spec.num_nodes = 60;
    spec.num_classes = 3;
    spec.mean_degree = 4;
    spec.target_homophily = 0.6;
    spec.feature_dim = 5;
    spec.seed = 9;
    Graph g = generate_synthetic(spec);
    write_content_cites(g, dir.str(), "synth");
    auto a = load_content_cites(dir.str(), "synth");
    auto b = load_content_cites(dir.str(), "synth");
    CHECK(a.graph.edges == b.graph.edges);
    CHECK(a.graph.features == b.graph.features);
    CHECK(a.graph.labels == b.graph.labels);
}

TEST_CASE("content and geom writers round-trip a synthetic graph") {
    TempDir dir;
    SynthSpec spec;
    spec.num_nodes = 40;
    spec.num_classes = 4;
    spec.mean_degree = 3;
    spec.target_homophily = 0.5;
    spec.feature_dim = 6;
    spec.seed = 4;
    Graph g = generate_synthetic(spec);

    write_content_cites(g, dir.str(), "rt");
    auto c = load_content_cites(dir.str(), "rt");
    CHECK(c.graph.edges == g.edges);
    CHECK(c.graph.features == g.features);
    CHECK(c.graph.labels == g.labels);

    write_geom_text(g, dir.str(), "rtg");
    auto m = load_geom_text(dir.str(), "rtg");
    CHECK(m.graph.edges == g.edges);
    CHECK(m.graph.features == g.features);
    CHECK(m.graph.labels == g.labels);
}

TEST_CASE("split files load, are stable, and reject overlaps") {
    TempDir dir;
    write_file(dir.path / "toy_split_0.txt", "0 1 2 3 4\n5 6 7\n8 9\n");
    auto m = load_splits(dir.str(), "toy", 0, 10);
    auto count = [](const std::vector<uint8_t>& v) {
        int c = 0;
        for (auto b : v) c += b;
        return c;
    };
    CHECK(count(m.train) == 5);
    CHECK(count(m.val) == 3);
    CHECK(count(m.test) == 2);

    auto again = load_splits(dir.str(), "toy", 0, 10);
    CHECK(m.train == again.train);
    CHECK(m.val == again.val);
    CHECK(m.test == again.test);

    write_file(dir.path / "bad_split_0.txt", "0 1\n1 2\n3\n");
    CHECK_THROWS_AS(load_splits(dir.str(), "bad", 0, 10), std::runtime_error);
    CHECK_THROWS_AS(load_splits(dir.str(), "missing", 0, 10), std::runtime_error);
}

TEST_CASE("generate_splits matches the 48/32/20 sizing contract") {
    SynthSpec spec;
    spec.num_nodes = 10;
    spec.num_classes = 1;
    spec.mean_degree = 2;
    spec.target_homophily = 1.0;
    spec.feature_dim = 2;
    Graph g = generate_synthetic(spec);
    auto m = generate_splits(g, {0.48, 0.32, 0.20}, 3);
    auto count = [](const std::vector<uint8_t>& v) {
        int c = 0;
        for (auto b : v) c += b;
        return c;
    };
    CHECK(count(m.train) == 5);
    CHECK(count(m.val) == 3);
    CHECK(count(m.test) == 2);
}

TEST_CASE("generate_splits is deterministic and covers every node once") {
    SynthSpec spec;
    spec.num_nodes = 97;
    spec.num_classes = 3;
    spec.mean_degree = 4;
    spec.target_homophily = 0.4;
    spec.feature_dim = 3;
    spec.seed = 12;
    Graph g = generate_synthetic(spec);
    auto a = generate_splits(g, {0.48, 0.32, 0.20}, 5);
    auto b = generate_splits(g, {0.48, 0.32, 0.20}, 5);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    for (int v = 0; v < g.num_nodes; ++v)
        CHECK(a.train[v] + a.val[v] + a.test[v] == 1);

    auto all_train = generate_splits(g, {1.0, 0.0, 0.0}, 5);
    for (int v = 0; v < g.num_nodes; ++v) CHECK(all_train.train[v] == 1);
}

TEST_CASE("generate_splits is class-balanced within one node") {
    SynthSpec spec;
    spec.num_nodes = 100;
    spec.num_classes = 2;
    spec.mean_degree = 4;
    spec.target_homophily = 0.5;
    spec.feature_dim = 3;
    spec.seed = 2;
    Graph g = generate_synthetic(spec);
    auto m = generate_splits(g, {0.48, 0.32, 0.20}, 8);
    for (const auto* mask : {&m.train, &m.val, &m.test}) {
        int per_class[2] = {0, 0};
        for (int v = 0; v < g.num_nodes; ++v)
            if ((*mask)[v]) per_class[g.labels[v]]++;
        CHECK(std::abs(per_class[0] - per_class[1]) <= 1);
    }
}

TEST_CASE("generate_splits sends tiny classes to train with a warning") {
    // 2 nodes in class 1 out of 5 total
    std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}};
    std::vector<double> feats(5, 0.0);
    Graph g = build_graph(edges, 5, feats, 1, {0, 0, 0, 1, 1});
    std::ostringstream warn;
    auto m = generate_splits(g, {0.48, 0.32, 0.20}, 1, &warn);
    CHECK(m.train[3] == 1);
    CHECK(m.train[4] == 1);
    CHECK(warn.str().find("class 1") != std::string::npos);
}

TEST_CASE("generate_synthetic hits homophily targets") {
    auto measured_h = [](const Graph& g) {
        auto h = node_heterophily(g, g.labels, LabelSource::full_labels);
        return h.homophily_level;
    };
    SynthSpec spec;
    spec.num_nodes = 1000;
    spec.num_classes = 4;
    spec.mean_degree = 6;
    spec.feature_dim = 4;
    spec.seed = 77;

    spec.target_homophily = 1.0;
    CHECK(measured_h(generate_synthetic(spec)) == doctest::Approx(1.0));

    spec.target_homophily = 0.0;
    spec.num_classes = 2;
    CHECK(measured_h(generate_synthetic(spec)) == doctest::Approx(0.0));

    spec.target_homophily = 0.3;
    spec.num_classes = 4;
    const double h = measured_h(generate_synthetic(spec));
    CHECK(h > 0.25);
    CHECK(h < 0.35);
}

TEST_CASE("generate_synthetic is reproducible and validates the spec") {
    SynthSpec spec;
    spec.num_nodes = 50;
    spec.num_classes = 3;
    spec.mean_degree = 5;
    spec.target_homophily = 0.5;
    spec.feature_dim = 4;
    spec.seed = 31;
    Graph a = generate_synthetic(spec);
    Graph b = generate_synthetic(spec);
    CHECK(a.edges == b.edges);
    CHECK(a.features == b.features);

    spec.mean_degree = 60;  // > n-1
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
}

}  // TEST_SUITE
