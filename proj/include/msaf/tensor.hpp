#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "msaf/common.hpp"
#include "msaf/rng.hpp"

namespace msaf {

template <typename T>
struct GradNode;

namespace detail {

template <typename T>
struct TensorData {
    Shape shape;
    std::vector<T> v;
    std::vector<T> g;  // allocated on first backward reaching this leaf
    bool requires_grad = false;
    std::shared_ptr<GradNode<T>> node;  // producer; null for leaves
    bool backward_done = false;         // set on a tensor backward() ran from
};

} // namespace detail

// One recorded op. `fn` receives the output adjoint and one buffer per input
// (null when that input needs no gradient) and must accumulate (+=) into the
// buffers, never overwrite: a tensor consumed twice gets both contributions.
template <typename T>
struct GradNode {
    const char* op;
    std::vector<std::shared_ptr<detail::TensorData<T>>> in;
    detail::TensorData<T>* out = nullptr;
    std::function<void(const std::vector<T>& gout, const std::vector<std::vector<T>*>& gin)> fn;
};

// Gradient recording is on by default; NoGradGuard switches it off for pure
// inference so intermediates are freed as soon as they go out of scope.
inline bool& grad_mode() {
    thread_local bool enabled = true;
    return enabled;
}

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
    ~NoGradGuard() { grad_mode() = prev; }
};

template <typename T>
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(const Shape& s, bool requires_grad = false) {
        Tensor t;
        t.d_ = std::make_shared<detail::TensorData<T>>();
        t.d_->shape = s;
        t.d_->v.assign((size_t)numel_of(s), (T)0);
        t.d_->requires_grad = requires_grad;
        return t;
    }

    static Tensor full(const Shape& s, T value, bool requires_grad = false) {
        Tensor t = zeros(s, requires_grad);
        for (auto& x : t.d_->v) x = value;
        return t;
    }

    static Tensor from(const Shape& s, std::vector<T> values, bool requires_grad = false) {
        check((int64_t)values.size() == numel_of(s),
              "tensor: value count " + std::to_string(values.size()) +
                  " does not match shape " + shape_str(s));
        Tensor t;
        t.d_ = std::make_shared<detail::TensorData<T>>();
        t.d_->shape = s;
        t.d_->v = std::move(values);
        t.d_->requires_grad = requires_grad;
        return t;
    }

    static Tensor randu(const Shape& s, Rng& rng, T lo = (T)-1, T hi = (T)1,
                        bool requires_grad = false) {
        Tensor t = zeros(s, requires_grad);
        for (auto& x : t.d_->v) x = (T)rng.uniform((double)lo, (double)hi);
        return t;
    }

    bool defined() const { return (bool)d_; }
    const Shape& shape() const { return d_->shape; }
    int rank() const { return (int)d_->shape.size(); }
    int64_t dim(int i) const { return d_->shape[(size_t)i]; }
    int64_t numel() const { return (int64_t)d_->v.size(); }

    T* data() { return d_->v.data(); }
    const T* data() const { return d_->v.data(); }
    std::vector<T>& values() { return d_->v; }
    const std::vector<T>& values() const { return d_->v; }

    bool requires_grad() const { return d_->requires_grad; }
    void set_requires_grad(bool b) {
        check(!d_->node, "set_requires_grad: only valid on leaf tensors");
        d_->requires_grad = b;
    }

    bool has_grad() const { return !d_->g.empty(); }
    std::vector<T>& grad() {
        check(!d_->g.empty(), "grad: no gradient has been populated for this tensor");
        return d_->g;
    }
    const std::vector<T>& grad() const {
        check(!d_->g.empty(), "grad: no gradient has been populated for this tensor");
        return d_->g;
    }
    void zero_grad() { d_->g.assign(d_->v.size(), (T)0); }

    T item() const {
        check(numel() == 1, "item: tensor " + shape_str(d_->shape) + " is not a scalar");
        return d_->v[0];
    }

    bool is_leaf() const { return !d_->node; }

    std::shared_ptr<detail::TensorData<T>> impl() const { return d_; }

    // Copy of the values with no graph edge and no grad requirement.
    Tensor detach() const {
        Tensor t;
        t.d_ = std::make_shared<detail::TensorData<T>>();
        t.d_->shape = d_->shape;
        t.d_->v = d_->v;
        return t;
    }

  private:
    std::shared_ptr<detail::TensorData<T>> d_;
};

// Ordered record of executed ops reachable from one root, in topological
// order (inputs before consumers). backward() traverses it once in reverse.
template <typename T>
struct ComputeGraph {
    std::vector<GradNode<T>*> order;

    static ComputeGraph build(GradNode<T>* root) {
        ComputeGraph g;
        if (!root) return g;
        std::unordered_set<GradNode<T>*> seen;
        // iterative post-order DFS
        std::vector<std::pair<GradNode<T>*, size_t>> stack;
        stack.push_back({root, 0});
        seen.insert(root);
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            bool descended = false;
            while (next < node->in.size()) {
                GradNode<T>* child = node->in[next].get() ? node->in[next]->node.get() : nullptr;
                ++next;
                if (child && !seen.count(child)) {
                    seen.insert(child);
                    stack.push_back({child, 0});
                    descended = true;
                    break;
                }
            }
            if (!descended && (stack.back().second >= stack.back().first->in.size())) {
                g.order.push_back(stack.back().first);
                stack.pop_back();
            }
        }
        return g;
    }
};

template <typename T>
void backward(const Tensor<T>& loss) {
    auto root = loss.impl();
    check(loss.numel() == 1,
          "backward: root must be a scalar, got " + shape_str(root->shape));
    check(root->requires_grad || root->node,
          "backward: root does not require grad and has no recorded ops");
    check(!root->backward_done, "backward: already ran for this graph; rebuild it first");
    root->backward_done = true;

    ComputeGraph<T> graph = ComputeGraph<T>::build(root->node.get());

    std::unordered_map<detail::TensorData<T>*, std::vector<T>> adjoint;
    adjoint[root.get()] = {(T)1};

    for (auto it = graph.order.rbegin(); it != graph.order.rend(); ++it) {
        GradNode<T>* node = *it;
        auto found = adjoint.find(node->out);
        if (found == adjoint.end()) continue;  // output never contributed to the root
        // element reference: stable across the rehashes the inserts below may cause
        const std::vector<T>& gout = found->second;
        std::vector<std::vector<T>*> gin(node->in.size(), nullptr);
        for (size_t i = 0; i < node->in.size(); ++i) {
            auto& inp = node->in[i];
            if (!inp || (!inp->requires_grad && !inp->node)) continue;
            auto& buf = adjoint[inp.get()];
            if (buf.empty()) buf.assign(inp->v.size(), (T)0);
            gin[i] = &buf;
        }
        node->fn(gout, gin);
    }

    // deposit leaf gradients (accumulating across repeated graphs)
    for (auto& [data, adj] : adjoint) {
        if (data->node || !data->requires_grad) continue;
        if (data->g.empty()) data->g.assign(data->v.size(), (T)0);
        for (size_t i = 0; i < adj.size(); ++i) data->g[i] += adj[i];
    }
}

namespace detail {

template <typename T>
bool any_needs_grad(const std::vector<Tensor<T>>& inputs) {
    if (!grad_mode()) return false;
    for (auto& t : inputs)
        if (t.defined() && (t.requires_grad() || !t.is_leaf())) return true;
    return false;
}

// Record the op that produced `out`. Called after the forward values are
// computed so the closure may capture out.impl().get() (raw; the graph keeps
// it alive for the duration of backward).
template <typename T>
void attach(const char* op, Tensor<T>& out, const std::vector<Tensor<T>>& inputs,
            std::function<void(const std::vector<T>&, const std::vector<std::vector<T>*>&)> fn) {
    if (!any_needs_grad(inputs)) return;
    auto node = std::make_shared<GradNode<T>>();
    node->op = op;
    for (auto& t : inputs) node->in.push_back(t.defined() ? t.impl() : nullptr);
    node->out = out.impl().get();
    node->fn = std::move(fn);
    out.impl()->node = node;
    out.impl()->requires_grad = true;
}

} // namespace detail

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

} // namespace msaf
