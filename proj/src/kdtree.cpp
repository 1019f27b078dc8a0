#include "teggcn/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace teggcn {

namespace {
constexpr int kLeafSize = 16;

double chebyshev(std::span<const double> a, const double* b, int dim) {
    double d = 0.0;
    for (int k = 0; k < dim; ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}
}  // namespace

KdTree::KdTree(std::vector<double> points, int dim) : dim_(dim), pts_(std::move(points)) {
    if (dim <= 0) throw std::invalid_argument("kdtree dimension must be positive");
    if (pts_.size() % dim != 0)
        throw std::invalid_argument("point buffer size is not a multiple of dim");
    n_ = static_cast<int>(pts_.size()) / dim;
    index_.resize(n_);
    for (int i = 0; i < n_; ++i) index_[i] = i;
    if (n_ > 0) root_ = build(0, n_);
    position_.resize(n_);
    for (int pos = 0; pos < n_; ++pos) position_[index_[pos]] = pos;
    // Reorder point storage to match index_ so leaves scan contiguously.
    std::vector<double> reordered(pts_.size());
    for (int pos = 0; pos < n_; ++pos)
        std::copy_n(pts_.data() + static_cast<size_t>(index_[pos]) * dim_, dim_,
                    reordered.data() + static_cast<size_t>(pos) * dim_);
    pts_ = std::move(reordered);
}

int KdTree::build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo.assign(dim_, std::numeric_limits<double>::infinity());
    node.hi.assign(dim_, -std::numeric_limits<double>::infinity());
    for (int i = begin; i < end; ++i) {
        const double* p = pts_.data() + static_cast<size_t>(index_[i]) * dim_;
        for (int k = 0; k < dim_; ++k) {
            node.lo[k] = std::min(node.lo[k], p[k]);
            node.hi[k] = std::max(node.hi[k], p[k]);
        }
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    int axis = 0;
    double spread = -1.0;
    for (int k = 0; k < dim_; ++k) {
        double s = node.hi[k] - node.lo[k];
        if (s > spread) {
            spread = s;
            axis = k;
        }
    }
    if (spread <= 0.0) return id;  // all points identical

    const int mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](int a, int b) {
                         return pts_[static_cast<size_t>(a) * dim_ + axis] <
                                pts_[static_cast<size_t>(b) * dim_ + axis];
                     });
    nodes_[id].axis = axis;
    nodes_[id].split = pts_[static_cast<size_t>(index_[mid]) * dim_ + axis];
    int left = build(begin, mid);
    int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::count_rec(int node_id, std::span<const double> center, double radius,
                       int exclude_original, int& acc) const {
    const Node& node = nodes_[node_id];
    // Minimum Chebyshev distance from center to the node's box.
    double min_dist = 0.0, max_dist = 0.0;
    for (int k = 0; k < dim_; ++k) {
        double below = node.lo[k] - center[k];
        double above = center[k] - node.hi[k];
        min_dist = std::max(min_dist, std::max(below, above));
        max_dist = std::max(max_dist, std::max(std::abs(below), std::abs(above)));
    }
    if (min_dist >= radius) return;
    if (max_dist < radius) {
        acc += node.end - node.begin;
        if (exclude_original >= 0) {
            int pos = position_[exclude_original];
            if (pos >= node.begin && pos < node.end) --acc;
        }
        return;
    }
    if (node.left < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            if (index_[i] == exclude_original) continue;
            if (chebyshev(center, pts_.data() + static_cast<size_t>(i) * dim_, dim_) < radius)
                ++acc;
        }
        return;
    }
    count_rec(node.left, center, radius, exclude_original, acc);
    count_rec(node.right, center, radius, exclude_original, acc);
}

int KdTree::count_within(std::span<const double> center, double radius,
                         int exclude_index) const {
    if (static_cast<int>(center.size()) != dim_)
        throw std::invalid_argument("query dimension does not match tree");
    if (n_ == 0 || !(radius > 0.0)) return 0;
    int acc = 0;
    count_rec(root_, center, radius, exclude_index, acc);
    return acc;
}

int KdTree::find_exact(std::span<const double> center) const {
    if (static_cast<int>(center.size()) != dim_)
        throw std::invalid_argument("query dimension does not match tree");
    if (n_ == 0) return -1;
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        bool inside = true;
        for (int k = 0; k < dim_ && inside; ++k)
            inside = center[k] >= node.lo[k] && center[k] <= node.hi[k];
        if (!inside) continue;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                if (chebyshev(center, pts_.data() + static_cast<size_t>(i) * dim_, dim_) == 0.0)
                    return index_[i];
            }
            continue;
        }
        stack.push_back(node.left);
        stack.push_back(node.right);
    }
    return -1;
}

double KdTree::kth_distance(int index, int k) const {
    if (index < 0 || index >= n_) throw std::invalid_argument("point index out of range");
    if (k < 1 || k > n_ - 1) throw std::invalid_argument("k out of range for kth_distance");
    std::span<const double> center{pts_.data() + static_cast<size_t>(position_[index]) * dim_,
                                   static_cast<size_t>(dim_)};
    std::priority_queue<double> heap;  // max-heap of current best k distances

    // Depth-first traversal, nearer child first.
    struct Frame {
        int node;
        double min_dist;
    };
    std::vector<Frame> stack;
    stack.push_back({root_, 0.0});
    while (!stack.empty()) {
        auto [node_id, min_dist] = stack.back();
        stack.pop_back();
        if (static_cast<int>(heap.size()) == k && min_dist >= heap.top()) continue;
        const Node& node = nodes_[node_id];
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                if (index_[i] == index) continue;
                double d =
                    chebyshev(center, pts_.data() + static_cast<size_t>(i) * dim_, dim_);
                if (static_cast<int>(heap.size()) < k) {
                    heap.push(d);
                } else if (d < heap.top()) {
                    heap.pop();
                    heap.push(d);
                }
            }
            continue;
        }
        auto box_dist = [&](int child) {
            const Node& c = nodes_[child];
            double m = 0.0;
            for (int kk = 0; kk < dim_; ++kk) {
                m = std::max(m, std::max(c.lo[kk] - center[kk], center[kk] - c.hi[kk]));
            }
            return std::max(m, 0.0);
        };
        double dl = box_dist(node.left), dr = box_dist(node.right);
        // Push farther child first so the nearer one is processed next.
        if (dl <= dr) {
            stack.push_back({node.right, dr});
            stack.push_back({node.left, dl});
        } else {
            stack.push_back({node.left, dl});
            stack.push_back({node.right, dr});
        }
    }
    return heap.top();
}

int kdtree_range_count(const KdTree& tree, std::span<const double> center, double radius) {
    if (tree.size() == 0 || !(radius > 0.0)) return 0;
    // Exclude the query point itself when it is stored: an exact coordinate
    // match sits at distance 0, inside any positive radius.
    return tree.count_within(center, radius, tree.find_exact(center));
}

}  // namespace teggcn
