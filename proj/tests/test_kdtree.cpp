#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "teggcn/kdtree.hpp"

using namespace teggcn;

namespace {

double cheb(std::span<const double> a, std::span<const double> b) {
    double d = 0;
    for (size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

// Brute-force mirror of the range-count contract: strict radius, one
// bit-identical stored point excluded.
int brute_range_count(const std::vector<double>& pts, int dim, std::span<const double> c,
                      double r) {
    const int n = static_cast<int>(pts.size()) / dim;
    int count = 0;
    bool excluded = false;
    for (int i = 0; i < n; ++i) {
        std::span<const double> p{pts.data() + static_cast<size_t>(i) * dim,
                                  static_cast<size_t>(dim)};
        double d = cheb(p, c);
        if (!excluded && d == 0.0) {
            excluded = true;
            continue;
        }
        if (d < r) ++count;
    }
    return count;
}

}  // namespace

TEST_SUITE("kdtree") {

TEST_CASE("radius zero counts nothing") {
    KdTree t({0.0, 1.0, 2.0}, 1);
    double q = 1.0;
    CHECK(kdtree_range_count(t, {&q, 1}, 0.0) == 0);
}

TEST_CASE("infinite radius counts all others") {
    std::vector<double> pts{0.0, 1.0, 2.0, 5.0, -3.0};
    KdTree t(pts, 1);
    double q = 2.0;  // stored point
    CHECK(kdtree_range_count(t, {&q, 1}, std::numeric_limits<double>::infinity()) == 4);
    double q2 = 2.5;  // not stored
    CHECK(kdtree_range_count(t, {&q2, 1}, std::numeric_limits<double>::infinity()) == 5);
}

TEST_CASE("duplicate points: only one instance of the query is excluded") {
    std::vector<double> pts{1.0, 1.0, 3.0};
    KdTree t(pts, 1);
    double q = 1.0;
    // the other duplicate at distance 0 counts as a neighbor
    CHECK(kdtree_range_count(t, {&q, 1}, 0.5) == 1);
}

TEST_CASE("random instances match brute force in dimensions 1-4") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int dim = 1; dim <= 4; ++dim) {
        for (int rep = 0; rep < 25; ++rep) {
            const int n = 5 + static_cast<int>(rng() % 96);
            std::vector<double> pts(static_cast<size_t>(n) * dim);
            for (auto& v : pts) v = u(rng);
            KdTree t(pts, dim);
            for (int q = 0; q < 20; ++q) {
                std::vector<double> c(dim);
                if (q % 3 == 0) {  // query at a stored point
                    int idx = static_cast<int>(rng() % n);
                    for (int k = 0; k < dim; ++k) c[k] = pts[static_cast<size_t>(idx) * dim + k];
                } else {
                    for (auto& v : c) v = u(rng);
                }
                const double r = std::abs(u(rng)) * 1.2;
                CHECK(kdtree_range_count(t, c, r) == brute_range_count(pts, dim, c, r));
            }
        }
    }
}

TEST_CASE("count_within excludes by index") {
    std::vector<double> pts{0.0, 0.0, 0.0, 0.5};  // 2-d: (0,0), (0,0.5)
    KdTree t(pts, 2);
    std::vector<double> c{0.0, 0.0};
    CHECK(t.count_within(c, 1.0) == 2);
    CHECK(t.count_within(c, 1.0, 0) == 1);
}

TEST_CASE("kth_distance matches brute force") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const int dim = 1 + static_cast<int>(rng() % 3);
        const int n = 10 + static_cast<int>(rng() % 60);
        std::vector<double> pts(static_cast<size_t>(n) * dim);
        for (auto& v : pts) v = u(rng);
        KdTree t(pts, dim);
        for (int i = 0; i < n; i += 7) {
            std::vector<double> dists;
            std::span<const double> pi{pts.data() + static_cast<size_t>(i) * dim,
                                       static_cast<size_t>(dim)};
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                std::span<const double> pj{pts.data() + static_cast<size_t>(j) * dim,
                                           static_cast<size_t>(dim)};
                dists.push_back(cheb(pi, pj));
            }
            std::sort(dists.begin(), dists.end());
            for (int k : {1, 3, 5}) {
                if (k > n - 1) continue;
                CHECK(t.kth_distance(i, k) == doctest::Approx(dists[k - 1]).epsilon(1e-12));
            }
        }
    }
}

}  // TEST_SUITE
