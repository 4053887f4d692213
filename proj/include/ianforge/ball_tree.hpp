#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ianforge {

// The target feature set: M vectors of dimension dim, each tagged with the
// index of the dataset item it came from.
struct FeatureSet {
    int dim = 0;
    std::vector<std::vector<double>> points;
    std::vector<int> source_ids;

    FeatureSet() = default;

    FeatureSet(int d, std::vector<std::vector<double>> pts) : dim(d), points(std::move(pts)) {
        source_ids.resize(points.size());
        std::iota(source_ids.begin(), source_ids.end(), 0);
        check();
    }

    std::size_t size() const { return points.size(); }

    std::vector<double> mean() const {
        std::vector<double> m(static_cast<std::size_t>(dim), 0.0);
        for (const auto& p : points)
            for (int j = 0; j < dim; ++j) m[static_cast<std::size_t>(j)] += p[static_cast<std::size_t>(j)];
        for (auto& v : m) v /= static_cast<double>(points.size());
        return m;
    }

    void check() const {
        if (points.empty()) throw std::invalid_argument("feature set: needs at least one point");
        if (dim <= 0) throw std::invalid_argument("feature set: dimension must be positive");
        for (const auto& p : points)
            if (static_cast<int>(p.size()) != dim)
                throw std::invalid_argument("feature set: inconsistent vector length");
        if (source_ids.size() != points.size())
            throw std::invalid_argument("feature set: source_ids length mismatch");
    }
};

struct Neighbor {
    int index;
    double distance;
};

inline double squared_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// Exhaustive k-NN scan; the oracle the tree is tested against.
// Ordering: ascending distance, ties broken by lower point index.
inline std::vector<Neighbor> brute_force_knn(const FeatureSet& fs, const std::vector<double>& q, int k) {
    if (static_cast<int>(q.size()) != fs.dim)
        throw std::invalid_argument("knn: query dimension " + std::to_string(q.size()) + " != " +
                                    std::to_string(fs.dim));
    if (k < 1 || k > static_cast<int>(fs.size()))
        throw std::invalid_argument("knn: k must be in [1, M], got " + std::to_string(k));
    std::vector<Neighbor> all(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i)
        all[i] = {static_cast<int>(i), std::sqrt(squared_dist(fs.points[i], q))};
    auto less = [](const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
    };
    std::partial_sort(all.begin(), all.begin() + k, all.end(), less);
    all.resize(static_cast<std::size_t>(k));
    return all;
}

// Exact nearest-neighbor index. Split rule: widest-spread dimension, median
// split, so the structure is deterministic in the input order. Owns a copy
// of the feature set; immutable after build, safe for concurrent queries.
class BallTree {
public:
    struct NodeInfo {
        std::vector<double> centroid;
        double radius;
        bool is_leaf;
        std::vector<int> leaf_points;  // empty for internal nodes
    };

    struct QueryStats {
        std::int64_t point_distance_evals = 0;
        std::int64_t nodes_visited = 0;
    };

    BallTree(FeatureSet fs, int leaf_size) : fs_(std::move(fs)), leaf_size_(leaf_size) {
        fs_.check();
        if (leaf_size < 1) throw std::invalid_argument("ball tree: leaf_size must be >= 1");
        std::vector<int> idx(fs_.size());
        std::iota(idx.begin(), idx.end(), 0);
        root_ = build(idx);
    }

    const FeatureSet& features() const { return fs_; }

    std::vector<Neighbor> query(const std::vector<double>& q, int k, QueryStats* stats = nullptr) const {
        if (static_cast<int>(q.size()) != fs_.dim)
            throw std::invalid_argument("knn: query dimension " + std::to_string(q.size()) + " != " +
                                        std::to_string(fs_.dim));
        if (k < 1 || k > static_cast<int>(fs_.size()))
            throw std::invalid_argument("knn: k must be in [1, M], got " + std::to_string(k));
        // Max-heap of the current k best, worst on top.
        std::vector<Neighbor> heap;
        heap.reserve(static_cast<std::size_t>(k));
        search(root_, q, k, heap, stats);
        std::sort(heap.begin(), heap.end(), [](const Neighbor& a, const Neighbor& b) {
            return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
        });
        return heap;
    }

    // Node audit hook: exposes (centroid, radius, members) per node.
    std::vector<NodeInfo> audit_nodes() const {
        std::vector<NodeInfo> out;
        for (const auto& n : nodes_) {
            NodeInfo info{n.centroid, n.radius, n.left < 0, {}};
            if (n.left < 0) info.leaf_points.assign(order_.begin() + n.begin, order_.begin() + n.end);
            out.push_back(std::move(info));
        }
        return out;
    }

private:
    struct TreeNode {
        std::vector<double> centroid;
        double radius = 0.0;
        int left = -1, right = -1;  // children; -1 -> leaf
        int begin = 0, end = 0;     // span in order_ (leaves only use it for members)
    };

    int build(std::vector<int>& idx) {
        const int begin = static_cast<int>(order_.size());
        // Reserve a slot first so parents precede children in nodes_.
        const int me = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        std::vector<double> centroid(static_cast<std::size_t>(fs_.dim), 0.0);
        for (int i : idx)
            for (int j = 0; j < fs_.dim; ++j)
                centroid[static_cast<std::size_t>(j)] += fs_.points[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        for (auto& v : centroid) v /= static_cast<double>(idx.size());
        double r2 = 0.0;
        for (int i : idx) r2 = std::max(r2, squared_dist(fs_.points[static_cast<std::size_t>(i)], centroid));

        if (static_cast<int>(idx.size()) <= leaf_size_) {
            order_.insert(order_.end(), idx.begin(), idx.end());
            TreeNode& n = nodes_[static_cast<std::size_t>(me)];
            n.centroid = std::move(centroid);
            n.radius = std::sqrt(r2);
            n.begin = begin;
            n.end = static_cast<int>(order_.size());
            return me;
        }

        // Widest-spread dimension, then median split on (coordinate, index).
        int dim = 0;
        double best_spread = -1.0;
        for (int j = 0; j < fs_.dim; ++j) {
            double lo = fs_.points[static_cast<std::size_t>(idx[0])][static_cast<std::size_t>(j)];
            double hi = lo;
            for (int i : idx) {
                const double v = fs_.points[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                dim = j;
            }
        }
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            const double va = fs_.points[static_cast<std::size_t>(a)][static_cast<std::size_t>(dim)];
            const double vb = fs_.points[static_cast<std::size_t>(b)][static_cast<std::size_t>(dim)];
            return va < vb || (va == vb && a < b);
        });
        const std::size_t mid = idx.size() / 2;
        std::vector<int> left_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(mid));
        std::vector<int> right_idx(idx.begin() + static_cast<std::ptrdiff_t>(mid), idx.end());

        const int left = build(left_idx);
        const int right = build(right_idx);
        TreeNode& n = nodes_[static_cast<std::size_t>(me)];
        n.centroid = std::move(centroid);
        n.radius = std::sqrt(r2);
        n.left = left;
        n.right = right;
        n.begin = begin;
        n.end = static_cast<int>(order_.size());
        return me;
    }

    static bool heap_less(const Neighbor& a, const Neighbor& b) {
        // Max-heap: the "largest" (worst) neighbor on top; a tie on distance
        // keeps the higher index on top so lower indices win.
        return a.distance < b.distance || (a.distance == b.distance && a.index > b.index);
    }

    void consider(const Neighbor& cand, int k, std::vector<Neighbor>& heap) const {
        if (static_cast<int>(heap.size()) < k) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end(), heap_less);
        } else if (heap_less(cand, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), heap_less);
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end(), heap_less);
        }
    }

    void search(int node, const std::vector<double>& q, int k, std::vector<Neighbor>& heap,
                QueryStats* stats) const {
        const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
        if (stats) stats->nodes_visited++;
        const double dc = std::sqrt(squared_dist(n.centroid, q));
        if (static_cast<int>(heap.size()) == k && dc - n.radius > heap.front().distance) return;
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                const int p = order_[static_cast<std::size_t>(i)];
                if (stats) stats->point_distance_evals++;
                consider({p, std::sqrt(squared_dist(fs_.points[static_cast<std::size_t>(p)], q))}, k, heap);
            }
            return;
        }
        // Nearer child first for tighter pruning.
        const double dl = std::sqrt(squared_dist(nodes_[static_cast<std::size_t>(n.left)].centroid, q));
        const double dr = std::sqrt(squared_dist(nodes_[static_cast<std::size_t>(n.right)].centroid, q));
        if (dl <= dr) {
            search(n.left, q, k, heap, stats);
            search(n.right, q, k, heap, stats);
        } else {
            search(n.right, q, k, heap, stats);
            search(n.left, q, k, heap, stats);
        }
    }

    FeatureSet fs_;
    int leaf_size_;
    std::vector<TreeNode> nodes_;
    std::vector<int> order_;  // point indices grouped by leaf
    int root_ = -1;
};

inline BallTree build_balltree(FeatureSet fs, int leaf_size = 16) { return BallTree(std::move(fs), leaf_size); }

inline std::vector<Neighbor> knn_query(const BallTree& tree, const std::vector<double>& q, int k) {
    return tree.query(q, k);
}

// Records which target features were ever selected during a training run
// (the set chi); utilization is card(chi)/M.
class UtilizationTracker {
public:
    explicit UtilizationTracker(int total) : touched_(static_cast<std::size_t>(total), 0) {
        if (total < 1) throw std::invalid_argument("utilization tracker: M must be >= 1");
    }

    void record(int index) {
        auto& flag = touched_.at(static_cast<std::size_t>(index));
        if (!flag) {
            flag = 1;
            ++count_;
        }
    }

    int touched() const { return count_; }
    int total() const { return static_cast<int>(touched_.size()); }

private:
    std::vector<std::uint8_t> touched_;
    int count_ = 0;
};

inline double utilization(const UtilizationTracker& t) {
    return static_cast<double>(t.touched()) / static_cast<double>(t.total());
}

// Mean of the k nearest stored features; the selected indices are recorded
// into the tracker.
inline std::vector<double> knn_mean_target(const BallTree& tree, const std::vector<double>& q, int k,
                                           UtilizationTracker& tracker) {
    const auto nbrs = tree.query(q, k);
    std::vector<double> mean(static_cast<std::size_t>(tree.features().dim), 0.0);
    for (const auto& nb : nbrs) {
        tracker.record(nb.index);
        const auto& p = tree.features().points[static_cast<std::size_t>(nb.index)];
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += p[j];
    }
    for (auto& v : mean) v /= static_cast<double>(k);
    return mean;
}

}  // namespace ianforge
