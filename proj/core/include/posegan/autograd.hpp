#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "posegan/tensor.hpp"

namespace posegan::nn {

// Define-by-run reverse-mode autodiff. A forward pass builds a DAG of Nodes;
// backward() runs the recorded closures in reverse topological order and
// accumulates gradients into every node that requires them. Graphs are
// throwaway per step; parameter nodes are long-lived leaves.
struct Node {
    Tensor value;
    Tensor grad; // allocated on first use, same shape as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void()> backprop;

    void ensure_grad() {
        if (grad.empty()) grad = Tensor(value.shape());
    }
};

using NodePtr = std::shared_ptr<Node>;

NodePtr leaf(Tensor value, bool requires_grad);
inline NodePtr constant(Tensor value) { return leaf(std::move(value), false); }
inline NodePtr parameter(Tensor value) { return leaf(std::move(value), true); }

// Copies the value into a fresh gradient-free leaf (blocks backprop).
NodePtr detach(const NodePtr& x);

// Backpropagates from a scalar root (numel == 1). Gradients accumulate, so
// callers zero parameter grads between steps.
void backward(const NodePtr& root);

// ---- elementwise, same shape ----
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr div(NodePtr a, NodePtr b);

// ---- elementwise unary ----
NodePtr add_scalar(NodePtr a, double s);
NodePtr mul_scalar(NodePtr a, double s);
NodePtr relu(NodePtr a);
NodePtr leaky_relu(NodePtr a, double negative_slope);
NodePtr sigmoid(NodePtr a);
NodePtr tanh_act(NodePtr a);
NodePtr square(NodePtr a);
NodePtr sqrt_elem(NodePtr a);
NodePtr log_elem(NodePtr a);
NodePtr abs_elem(NodePtr a);
NodePtr clamp(NodePtr a, double lo, double hi);
// max(x, m) with subgradient 0 on the flat side (x <= m).
NodePtr max_scalar(NodePtr a, double m);

// ---- structure ----
NodePtr concat_channels(NodePtr a, NodePtr b); // [N,Ca,H,W] + [N,Cb,H,W]
NodePtr concat_batch(NodePtr a, NodePtr b);    // along dim 0, rest equal
NodePtr slice_batch(NodePtr x, int start, int count);

// ---- reductions and broadcasts ----
// Broadcast helpers accept [N,C,H,W] or [N,C] (treated as H=W=1).
NodePtr sum_all(NodePtr x);      // -> [1]
NodePtr mean_all(NodePtr x);     // -> [1]
NodePtr sum_rows(NodePtr x);     // [N,D] -> [N]
NodePtr spatial_mean(NodePtr x); // [N,C,H,W] -> [N,C]
NodePtr channel_mean(NodePtr x); // -> [C], mean over N,H,W
NodePtr bcast_c_mul(NodePtr x, NodePtr s);  // s: [C]
NodePtr bcast_c_add(NodePtr x, NodePtr s);  // s: [C]
NodePtr bcast_nc_mul(NodePtr x, NodePtr s); // s: [N,C]
NodePtr bcast_nc_add(NodePtr x, NodePtr s); // s: [N,C]
inline NodePtr global_avg_pool(NodePtr x) { return spatial_mean(std::move(x)); }

// ---- layers ----
// x [N,Ci,H,W], w [Co,Ci,kh,kw], b [Co]
NodePtr conv2d(NodePtr x, NodePtr w, NodePtr b, int stride, int pad);
// x [N,Ci,H,W], w [Ci,Co,kh,kw], b [Co]; Ho = (H-1)*stride - 2*pad + kh
NodePtr conv2d_transpose(NodePtr x, NodePtr w, NodePtr b, int stride, int pad);
// x [N,Din], w [Dout,Din], b [Dout]
NodePtr linear(NodePtr x, NodePtr w, NodePtr b);
// Inverted dropout with a caller-supplied 0/1 keep mask (deterministic replay).
NodePtr dropout(NodePtr x, Tensor keep_mask, double keep_prob);
// Mean cross-entropy over the batch; logits [N,K].
NodePtr softmax_cross_entropy(NodePtr logits, std::vector<int> labels);

} // namespace posegan::nn
