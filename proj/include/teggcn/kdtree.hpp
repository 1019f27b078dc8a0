#pragma once

#include <span>
#include <vector>

namespace teggcn {

// Static k-d tree over fixed-dimension points under the Chebyshev (max-norm)
// metric. Built once, queried for strict range counts and k-th neighbor
// distances; both are exact, not approximate.
class KdTree {
public:
    // points: row-major n x dim.
    KdTree(std::vector<double> points, int dim);

    int size() const { return n_; }
    int dim() const { return dim_; }
    // Coordinates of the point inserted at position `original_index`.
    std::span<const double> point(int original_index) const {
        return {pts_.data() + static_cast<size_t>(position_[original_index]) * dim_,
                static_cast<size_t>(dim_)};
    }

    // Number of stored points with Chebyshev distance strictly less than
    // radius from center. exclude_index, when >= 0, names a stored point (by
    // original insertion index) that is never counted.
    int count_within(std::span<const double> center, double radius,
                     int exclude_index = -1) const;

    // Chebyshev distance from stored point `index` to its k-th nearest other
    // stored point (k >= 1, k <= size()-1).
    double kth_distance(int index, int k) const;

    // Original index of a stored point bit-identical to center, or -1.
    int find_exact(std::span<const double> center) const;

private:
    struct Node {
        int left = -1, right = -1;  // children, -1 = leaf
        int begin = 0, end = 0;     // range into index_ (leaves)
        int axis = 0;
        double split = 0.0;
        std::vector<double> lo, hi;  // bounding box
    };

    int build(int begin, int end);
    void count_rec(int node, std::span<const double> center, double radius,
                   int exclude_original, int& acc) const;

    int n_ = 0;
    int dim_ = 0;
    std::vector<double> pts_;    // reordered, row-major
    std::vector<int> index_;     // position -> original index
    std::vector<int> position_;  // original index -> position
    std::vector<Node> nodes_;
    int root_ = -1;
};

// Spec contract used by the estimator oracles: strict count around an
// arbitrary center, excluding the query point itself when a stored point is
// bit-identical to it (one instance).
int kdtree_range_count(const KdTree& tree, std::span<const double> center, double radius);

}  // namespace teggcn
