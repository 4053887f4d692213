#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ianforge/tensor.hpp"

namespace ianforge {

// Raised when a graph evaluation produces NaN/Inf. Training loops catch this
// to abort with a diagnostic instead of propagating garbage.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class OpKind {
    Leaf,      // bound at eval time (inputs and parameters)
    Constant,  // value baked into the graph
    MatMul,
    Add,       // same shape, or [m,n] + [n] row broadcast
    Tanh,
    Sigmoid,
    LeakyRelu,  // attr = negative slope
    MeanAll,    // mean over all elements -> scalar
    Bce,        // mean binary cross-entropy of (p, label) -> scalar
    SqL2,       // sum of squared differences -> scalar
    L1,         // sum of absolute differences -> scalar
    Scale,      // attr * x
};

struct Node {
    OpKind op = OpKind::Leaf;
    int a = -1;
    int b = -1;
    double attr = 0.0;
    Shape shape;
    std::string name;  // non-empty for fetchable nodes
    bool wants_grad = false;
    Tensor value;  // Constant only
};

// A static, topologically ordered computation recipe. Immutable once built;
// forward_eval/backward never mutate it, so graphs are safe to share.
class Graph {
public:
    int input(const std::string& name, Shape shape) { return leaf(name, std::move(shape), false); }

    int param(const std::string& name, Shape shape) { return leaf(name, std::move(shape), true); }

    int constant(Tensor t, const std::string& name = "") {
        t.check();
        Node n;
        n.op = OpKind::Constant;
        n.shape = t.shape;
        n.value = std::move(t);
        return push(std::move(n), name);
    }

    int matmul(int a, int b) {
        const Shape& sa = at(a).shape;
        const Shape& sb = at(b).shape;
        if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
            fail("matmul", a, b, "needs [m,k] x [k,n], got " + shape_str(sa) + " x " + shape_str(sb));
        Node n;
        n.op = OpKind::MatMul;
        n.a = a;
        n.b = b;
        n.shape = {sa[0], sb[1]};
        return push(std::move(n));
    }

    int add(int a, int b) {
        const Shape& sa = at(a).shape;
        const Shape& sb = at(b).shape;
        const bool bias = sa.size() == 2 && sb.size() == 1 && sa[1] == sb[0];
        if (!same_shape(sa, sb) && !bias)
            fail("add", a, b, "incompatible shapes " + shape_str(sa) + " + " + shape_str(sb));
        Node n;
        n.op = OpKind::Add;
        n.a = a;
        n.b = b;
        n.shape = sa;
        return push(std::move(n));
    }

    int tanh(int a) { return unary(OpKind::Tanh, a); }
    int sigmoid(int a) { return unary(OpKind::Sigmoid, a); }

    int leaky_relu(int a, double slope) {
        int id = unary(OpKind::LeakyRelu, a);
        nodes_[id].attr = slope;
        return id;
    }

    int mean_all(int a) {
        Node n;
        n.op = OpKind::MeanAll;
        n.a = a;
        n.shape = {};
        return push(std::move(n));
    }

    int bce(int p, int label) { return scalar_pair(OpKind::Bce, p, label, "bce"); }
    int sq_l2(int a, int b) { return scalar_pair(OpKind::SqL2, a, b, "sq_l2"); }
    int l1(int a, int b) { return scalar_pair(OpKind::L1, a, b, "l1"); }

    int scale(int a, double factor) {
        Node n;
        n.op = OpKind::Scale;
        n.a = a;
        n.attr = factor;
        n.shape = at(a).shape;
        return push(std::move(n));
    }

    // Tag an existing node so forward_eval exposes it by name.
    int mark(const std::string& name, int node) {
        at(node);
        register_name(name, node);
        if (nodes_[node].name.empty()) nodes_[node].name = name;
        return node;
    }

    void set_root(int node) {
        if (numel(at(node).shape) != 1)
            throw std::invalid_argument("graph root must be scalar, node " + label(node) + " has shape " +
                                        shape_str(at(node).shape));
        root_ = node;
    }

    int root() const { return root_; }
    std::size_t node_count() const { return nodes_.size(); }
    const Node& at(int id) const {
        if (id < 0 || id >= static_cast<int>(nodes_.size()))
            throw std::invalid_argument("graph: node id out of range");
        return nodes_[id];
    }
    const std::unordered_map<std::string, int>& names() const { return by_name_; }

    std::string label(int id) const {
        const Node& n = nodes_[id];
        return n.name.empty() ? "#" + std::to_string(id) : n.name;
    }

private:
    // Re-requesting a leaf under the same name returns the existing node, so
    // one network applied to several inputs shares its parameters.
    int leaf(const std::string& name, Shape shape, bool wants_grad) {
        if (name.empty()) throw std::invalid_argument("graph leaf needs a name");
        auto it = by_name_.find(name);
        if (it != by_name_.end()) {
            const Node& prev = nodes_[static_cast<std::size_t>(it->second)];
            if (prev.op != OpKind::Leaf || !same_shape(prev.shape, shape) || prev.wants_grad != wants_grad)
                throw std::invalid_argument("graph: conflicting redefinition of leaf '" + name + "'");
            return it->second;
        }
        Node n;
        n.op = OpKind::Leaf;
        n.shape = std::move(shape);
        n.wants_grad = wants_grad;
        return push(std::move(n), name);
    }

    int unary(OpKind op, int a) {
        Node n;
        n.op = op;
        n.a = a;
        n.shape = at(a).shape;
        return push(std::move(n));
    }

    int scalar_pair(OpKind op, int a, int b, const char* what) {
        if (!same_shape(at(a).shape, at(b).shape))
            fail(what, a, b, "shapes differ: " + shape_str(at(a).shape) + " vs " + shape_str(at(b).shape));
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.shape = {};
        return push(std::move(n));
    }

    int push(Node n, const std::string& name = "") {
        nodes_.push_back(std::move(n));
        int id = static_cast<int>(nodes_.size()) - 1;
        if (!name.empty()) {
            register_name(name, id);
            nodes_[id].name = name;
        }
        return id;
    }

    void register_name(const std::string& name, int id) {
        auto [it, fresh] = by_name_.emplace(name, id);
        (void)it;
        if (!fresh) throw std::invalid_argument("graph: duplicate node name '" + name + "'");
    }

    [[noreturn]] void fail(const char* what, int a, int b, const std::string& why) const {
        throw std::invalid_argument(std::string(what) + "(" + label(a) + ", " + label(b) + "): " + why);
    }

    std::vector<Node> nodes_;
    std::unordered_map<std::string, int> by_name_;
    int root_ = -1;
};

using Bindings = std::unordered_map<std::string, Tensor>;

// Per-node values of one evaluation. Gradient accumulation happens in these
// per-call buffers, never in shared state.
struct Forward {
    const Graph* graph = nullptr;
    std::vector<Tensor> values;

    const Tensor& of(int id) const { return values[static_cast<std::size_t>(id)]; }

    std::map<std::string, Tensor> named() const {
        std::map<std::string, Tensor> out;
        for (const auto& [name, id] : graph->names()) out.emplace(name, values[static_cast<std::size_t>(id)]);
        return out;
    }
};

namespace detail {

constexpr double kBceClamp = 1e-12;

inline void matmul_into(const Tensor& a, const Tensor& b, Tensor& c) {
    const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
    for (int i = 0; i < m; ++i) {
        double* crow = &c.data[static_cast<std::size_t>(i) * n];
        for (int kk = 0; kk < k; ++kk) {
            const double aik = a.data[static_cast<std::size_t>(i) * k + kk];
            const double* brow = &b.data[static_cast<std::size_t>(kk) * n];
            for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

// c = a * b^T, a:[m,n] b:[k,n] -> c:[m,k]
inline void matmul_bt_into(const Tensor& a, const Tensor& b, Tensor& c) {
    const int m = a.shape[0], n = a.shape[1], k = b.shape[0];
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < k; ++j) {
            const double* arow = &a.data[static_cast<std::size_t>(i) * n];
            const double* brow = &b.data[static_cast<std::size_t>(j) * n];
            double acc = 0.0;
            for (int t = 0; t < n; ++t) acc += arow[t] * brow[t];
            c.data[static_cast<std::size_t>(i) * k + j] += acc;
        }
    }
}

// c = a^T * b, a:[m,k] b:[m,n] -> c:[k,n]
inline void matmul_at_into(const Tensor& a, const Tensor& b, Tensor& c) {
    const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
    for (int i = 0; i < m; ++i) {
        const double* arow = &a.data[static_cast<std::size_t>(i) * k];
        const double* brow = &b.data[static_cast<std::size_t>(i) * n];
        for (int t = 0; t < k; ++t) {
            double* crow = &c.data[static_cast<std::size_t>(t) * n];
            const double at = arow[t];
            for (int j = 0; j < n; ++j) crow[j] += at * brow[j];
        }
    }
}

}  // namespace detail

inline Forward forward_eval(const Graph& g, const Bindings& inputs) {
    Forward f;
    f.graph = &g;
    f.values.resize(g.node_count());
    for (std::size_t id = 0; id < g.node_count(); ++id) {
        const Node& n = g.at(static_cast<int>(id));
        Tensor& out = f.values[id];
        switch (n.op) {
            case OpKind::Leaf: {
                auto it = inputs.find(n.name);
                if (it == inputs.end()) throw std::invalid_argument("forward_eval: leaf '" + n.name + "' not bound");
                if (!same_shape(it->second.shape, n.shape))
                    throw std::invalid_argument("forward_eval: leaf '" + n.name + "' expects " + shape_str(n.shape) +
                                                ", got " + shape_str(it->second.shape));
                out = it->second;
                break;
            }
            case OpKind::Constant:
                out = n.value;
                break;
            case OpKind::MatMul: {
                const Tensor& a = f.values[static_cast<std::size_t>(n.a)];
                const Tensor& b = f.values[static_cast<std::size_t>(n.b)];
                out = Tensor::zeros(n.shape);
                detail::matmul_into(a, b, out);
                break;
            }
            case OpKind::Add: {
                const Tensor& a = f.values[static_cast<std::size_t>(n.a)];
                const Tensor& b = f.values[static_cast<std::size_t>(n.b)];
                out = a;
                if (same_shape(a.shape, b.shape)) {
                    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
                } else {  // row broadcast
                    const int cols = a.shape[1];
                    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i % cols];
                }
                break;
            }
            case OpKind::Tanh: {
                out = f.values[static_cast<std::size_t>(n.a)];
                for (auto& v : out.data) v = std::tanh(v);
                break;
            }
            case OpKind::Sigmoid: {
                out = f.values[static_cast<std::size_t>(n.a)];
                for (auto& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
                break;
            }
            case OpKind::LeakyRelu: {
                out = f.values[static_cast<std::size_t>(n.a)];
                for (auto& v : out.data) v = v > 0.0 ? v : n.attr * v;
                break;
            }
            case OpKind::MeanAll: {
                const Tensor& a = f.values[static_cast<std::size_t>(n.a)];
                double acc = 0.0;
                for (double v : a.data) acc += v;
                out = Tensor::scalar(acc / static_cast<double>(a.data.size()));
                break;
            }
            case OpKind::Bce: {
                const Tensor& p = f.values[static_cast<std::size_t>(n.a)];
                const Tensor& y = f.values[static_cast<std::size_t>(n.b)];
                double acc = 0.0;
                for (std::size_t i = 0; i < p.data.size(); ++i) {
                    const double pc =
                        std::min(std::max(p.data[i], detail::kBceClamp), 1.0 - detail::kBceClamp);
                    acc += -(y.data[i] * std::log(pc) + (1.0 - y.data[i]) * std::log(1.0 - pc));
                }
                out = Tensor::scalar(acc / static_cast<double>(p.data.size()));
                break;
            }
            case OpKind::SqL2: {
                const Tensor& a = f.values[static_cast<std::size_t>(n.a)];
                const Tensor& b = f.values[static_cast<std::size_t>(n.b)];
                double acc = 0.0;
                for (std::size_t i = 0; i < a.data.size(); ++i) {
                    const double d = a.data[i] - b.data[i];
                    acc += d * d;
                }
                out = Tensor::scalar(acc);
                break;
            }
            case OpKind::L1: {
                const Tensor& a = f.values[static_cast<std::size_t>(n.a)];
                const Tensor& b = f.values[static_cast<std::size_t>(n.b)];
                double acc = 0.0;
                for (std::size_t i = 0; i < a.data.size(); ++i) acc += std::abs(a.data[i] - b.data[i]);
                out = Tensor::scalar(acc);
                break;
            }
            case OpKind::Scale: {
                out = f.values[static_cast<std::size_t>(n.a)];
                for (auto& v : out.data) v *= n.attr;
                break;
            }
        }
        for (double v : out.data) {
            if (!std::isfinite(v))
                throw NumericError("forward_eval: non-finite value at node " + g.label(static_cast<int>(id)));
        }
    }
    return f;
}

// Convenience form matching the map-in/map-out contract.
inline std::map<std::string, Tensor> forward_named(const Graph& g, const Bindings& inputs) {
    return forward_eval(g, inputs).named();
}

using GradMap = std::map<std::string, Tensor>;

// Reverse-mode sweep from the designated scalar root. Returns gradients for
// every param leaf; deterministic given the forward values.
inline GradMap backward(const Graph& g, const Forward& f) {
    if (g.root() < 0) throw std::invalid_argument("backward: graph has no root");
    if (f.graph != &g || f.values.size() != g.node_count())
        throw std::invalid_argument("backward: forward values do not belong to this graph");
    if (numel(g.at(g.root()).shape) != 1) throw std::invalid_argument("backward: root is not scalar");

    std::vector<std::vector<double>> adj(g.node_count());
    auto touch = [&](int id) -> std::vector<double>& {
        auto& a = adj[static_cast<std::size_t>(id)];
        if (a.empty()) a.assign(f.values[static_cast<std::size_t>(id)].data.size(), 0.0);
        return a;
    };
    touch(g.root())[0] = 1.0;

    for (int id = static_cast<int>(g.node_count()) - 1; id >= 0; --id) {
        const Node& n = g.at(id);
        const auto& a = adj[static_cast<std::size_t>(id)];
        if (a.empty()) continue;  // node does not influence the root
        switch (n.op) {
            case OpKind::Leaf:
            case OpKind::Constant:
                break;
            case OpKind::MatMul: {
                const Tensor& av = f.of(n.a);
                const Tensor& bv = f.of(n.b);
                Tensor up(n.shape, a);
                Tensor da(av.shape, touch(n.a));
                detail::matmul_bt_into(up, bv, da);
                adj[static_cast<std::size_t>(n.a)] = std::move(da.data);
                Tensor db(bv.shape, touch(n.b));
                detail::matmul_at_into(av, up, db);
                adj[static_cast<std::size_t>(n.b)] = std::move(db.data);
                break;
            }
            case OpKind::Add: {
                auto& da = touch(n.a);
                for (std::size_t i = 0; i < a.size(); ++i) da[i] += a[i];
                auto& db = touch(n.b);
                if (db.size() == a.size()) {
                    for (std::size_t i = 0; i < a.size(); ++i) db[i] += a[i];
                } else {  // bias broadcast: column sums
                    const std::size_t cols = db.size();
                    for (std::size_t i = 0; i < a.size(); ++i) db[i % cols] += a[i];
                }
                break;
            }
            case OpKind::Tanh: {
                auto& da = touch(n.a);
                const Tensor& y = f.of(id);
                for (std::size_t i = 0; i < a.size(); ++i) da[i] += a[i] * (1.0 - y.data[i] * y.data[i]);
                break;
            }
            case OpKind::Sigmoid: {
                auto& da = touch(n.a);
                const Tensor& y = f.of(id);
                for (std::size_t i = 0; i < a.size(); ++i) da[i] += a[i] * y.data[i] * (1.0 - y.data[i]);
                break;
            }
            case OpKind::LeakyRelu: {
                auto& da = touch(n.a);
                const Tensor& x = f.of(n.a);
                for (std::size_t i = 0; i < a.size(); ++i) da[i] += a[i] * (x.data[i] > 0.0 ? 1.0 : n.attr);
                break;
            }
            case OpKind::MeanAll: {
                auto& da = touch(n.a);
                const double w = a[0] / static_cast<double>(da.size());
                for (auto& v : da) v += w;
                break;
            }
            case OpKind::Bce: {
                auto& dp = touch(n.a);
                auto& dy = touch(n.b);
                const Tensor& p = f.of(n.a);
                const Tensor& y = f.of(n.b);
                const double w = a[0] / static_cast<double>(p.data.size());
                for (std::size_t i = 0; i < p.data.size(); ++i) {
                    const double pv = p.data[i];
                    if (pv > detail::kBceClamp && pv < 1.0 - detail::kBceClamp)
                        dp[i] += w * (-y.data[i] / pv + (1.0 - y.data[i]) / (1.0 - pv));
                    const double pc =
                        std::min(std::max(pv, detail::kBceClamp), 1.0 - detail::kBceClamp);
                    dy[i] += w * (std::log(1.0 - pc) - std::log(pc));
                }
                break;
            }
            case OpKind::SqL2: {
                auto& da = touch(n.a);
                auto& db = touch(n.b);
                const Tensor& av = f.of(n.a);
                const Tensor& bv = f.of(n.b);
                for (std::size_t i = 0; i < av.data.size(); ++i) {
                    const double d = 2.0 * a[0] * (av.data[i] - bv.data[i]);
                    da[i] += d;
                    db[i] -= d;
                }
                break;
            }
            case OpKind::L1: {
                auto& da = touch(n.a);
                auto& db = touch(n.b);
                const Tensor& av = f.of(n.a);
                const Tensor& bv = f.of(n.b);
                for (std::size_t i = 0; i < av.data.size(); ++i) {
                    const double diff = av.data[i] - bv.data[i];
                    const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                    da[i] += a[0] * s;
                    db[i] -= a[0] * s;
                }
                break;
            }
            case OpKind::Scale: {
                auto& da = touch(n.a);
                for (std::size_t i = 0; i < a.size(); ++i) da[i] += n.attr * a[i];
                break;
            }
        }
    }

    GradMap grads;
    for (const auto& [name, id] : g.names()) {
        const Node& n = g.at(id);
        if (n.op != OpKind::Leaf || !n.wants_grad) continue;
        auto& a = adj[static_cast<std::size_t>(id)];
        if (a.empty()) a.assign(f.values[static_cast<std::size_t>(id)].data.size(), 0.0);
        grads.emplace(name, Tensor(n.shape, a));
    }
    return grads;
}

}  // namespace ianforge
