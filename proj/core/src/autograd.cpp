#include "posegan/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace posegan::nn {

namespace {

int div_floor(int a, int b) {
    int q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
int div_ceil(int a, int b) { return -div_floor(-a, b); }

NodePtr make_node(Tensor value, std::vector<NodePtr> inputs) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    for (const auto& in : n->inputs) {
        if (in->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    return n;
}

struct Dims4 {
    int n, c, h, w;
    long plane() const { return static_cast<long>(h) * w; }
};

// Interprets [N,C,H,W] or [N,C] uniformly.
Dims4 as4d(const Tensor& t, const char* what) {
    if (t.ndim() == 4) return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
    if (t.ndim() == 2) return {t.dim(0), t.dim(1), 1, 1};
    throw ShapeError(std::string(what) + ": expected 4-D or 2-D tensor, got " + shape_str(t.shape()));
}

} // namespace

NodePtr leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

NodePtr detach(const NodePtr& x) { return leaf(x->value, false); }

void backward(const NodePtr& root) {
    if (root->value.numel() != 1) throw ParamError("backward: root must be a scalar");
    if (!root->requires_grad) return;

    // Iterative post-order DFS.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->inputs.size()) {
            Node* next = node->inputs[idx++].get();
            if (next->requires_grad && visited.insert(next).second) stack.emplace_back(next, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop();
    }
}

// ---- elementwise binary ----

namespace {
template <typename FwdFn, typename BwdFn>
NodePtr binary_elem(NodePtr a, NodePtr b, const char* what, FwdFn fwd, BwdFn bwd) {
    require_same_shape(a->value, b->value, what);
    Tensor out(a->value.shape());
    const long n = out.numel();
    for (long i = 0; i < n; ++i) out[i] = fwd(a->value[i], b->value[i]);
    auto node = make_node(std::move(out), {a, b});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* pa = a.get();
        Node* pb = b.get();
        node->backprop = [o, pa, pb, bwd]() {
            const long m = o->value.numel();
            if (pa->requires_grad) pa->ensure_grad();
            if (pb->requires_grad) pb->ensure_grad();
            for (long i = 0; i < m; ++i) {
                const double g = o->grad[i];
                double da, db;
                bwd(pa->value[i], pb->value[i], o->value[i], g, da, db);
                if (pa->requires_grad) pa->grad[i] += da;
                if (pb->requires_grad) pb->grad[i] += db;
            }
        };
    }
    return node;
}
} // namespace

NodePtr add(NodePtr a, NodePtr b) {
    return binary_elem(
        std::move(a), std::move(b), "add", [](double x, double y) { return x + y; },
        [](double, double, double, double g, double& da, double& db) {
            da = g;
            db = g;
        });
}

NodePtr sub(NodePtr a, NodePtr b) {
    return binary_elem(
        std::move(a), std::move(b), "sub", [](double x, double y) { return x - y; },
        [](double, double, double, double g, double& da, double& db) {
            da = g;
            db = -g;
        });
}

NodePtr mul(NodePtr a, NodePtr b) {
    return binary_elem(
        std::move(a), std::move(b), "mul", [](double x, double y) { return x * y; },
        [](double x, double y, double, double g, double& da, double& db) {
            da = g * y;
            db = g * x;
        });
}

NodePtr div(NodePtr a, NodePtr b) {
    return binary_elem(
        std::move(a), std::move(b), "div", [](double x, double y) { return x / y; },
        [](double, double y, double out, double g, double& da, double& db) {
            da = g / y;
            db = -g * out / y;
        });
}

// ---- elementwise unary ----

namespace {
template <typename FwdFn, typename BwdFn>
NodePtr unary_elem(NodePtr a, FwdFn fwd, BwdFn bwd) {
    Tensor out(a->value.shape());
    const long n = out.numel();
    for (long i = 0; i < n; ++i) out[i] = fwd(a->value[i]);
    auto node = make_node(std::move(out), {a});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* pa = node->inputs[0].get();
        node->backprop = [o, pa, bwd]() {
            pa->ensure_grad();
            const long m = o->value.numel();
            for (long i = 0; i < m; ++i) pa->grad[i] += o->grad[i] * bwd(pa->value[i], o->value[i]);
        };
    }
    return node;
}
} // namespace

NodePtr add_scalar(NodePtr a, double s) {
    return unary_elem(
        std::move(a), [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

NodePtr mul_scalar(NodePtr a, double s) {
    return unary_elem(
        std::move(a), [s](double x) { return x * s; }, [s](double, double) { return s; });
}

NodePtr relu(NodePtr a) {
    return unary_elem(
        std::move(a), [](double x) { return x > 0 ? x : 0.0; },
        [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

NodePtr leaky_relu(NodePtr a, double negative_slope) {
    return unary_elem(
        std::move(a), [negative_slope](double x) { return x > 0 ? x : negative_slope * x; },
        [negative_slope](double x, double) { return x > 0 ? 1.0 : negative_slope; });
}

NodePtr sigmoid(NodePtr a) {
    return unary_elem(
        std::move(a),
        [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
        [](double, double y) { return y * (1.0 - y); });
}

NodePtr tanh_act(NodePtr a) {
    return unary_elem(
        std::move(a), [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

NodePtr square(NodePtr a) {
    return unary_elem(
        std::move(a), [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

NodePtr sqrt_elem(NodePtr a) {
    return unary_elem(
        std::move(a), [](double x) { return std::sqrt(x); },
        [](double, double y) { return 0.5 / y; });
}

NodePtr log_elem(NodePtr a) {
    return unary_elem(
        std::move(a), [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

NodePtr abs_elem(NodePtr a) {
    return unary_elem(
        std::move(a), [](double x) { return std::fabs(x); },
        [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

NodePtr clamp(NodePtr a, double lo, double hi) {
    return unary_elem(
        std::move(a), [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

NodePtr max_scalar(NodePtr a, double m) {
    return unary_elem(
        std::move(a), [m](double x) { return std::max(x, m); },
        [m](double x, double) { return x > m ? 1.0 : 0.0; });
}

// ---- structure ----

NodePtr concat_channels(NodePtr a, NodePtr b) {
    const auto da = as4d(a->value, "concat_channels");
    const auto db = as4d(b->value, "concat_channels");
    if (a->value.ndim() != 4 || b->value.ndim() != 4)
        throw ShapeError("concat_channels: expected 4-D tensors");
    if (da.n != db.n || da.h != db.h || da.w != db.w)
        throw ShapeError("concat_channels: incompatible shapes " + shape_str(a->value.shape()) + " vs " +
                         shape_str(b->value.shape()));
    Tensor out({da.n, da.c + db.c, da.h, da.w});
    const long plane = da.plane();
    for (int n = 0; n < da.n; ++n) {
        double* dst = out.data() + static_cast<long>(n) * (da.c + db.c) * plane;
        const double* sa = a->value.data() + static_cast<long>(n) * da.c * plane;
        const double* sb = b->value.data() + static_cast<long>(n) * db.c * plane;
        std::copy(sa, sa + da.c * plane, dst);
        std::copy(sb, sb + db.c * plane, dst + da.c * plane);
    }
    auto node = make_node(std::move(out), {a, b});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* pa = node->inputs[0].get();
        Node* pb = node->inputs[1].get();
        node->backprop = [o, pa, pb, da, db, plane]() {
            for (int n = 0; n < da.n; ++n) {
                const double* g = o->grad.data() + static_cast<long>(n) * (da.c + db.c) * plane;
                if (pa->requires_grad) {
                    pa->ensure_grad();
                    double* ga = pa->grad.data() + static_cast<long>(n) * da.c * plane;
                    for (long i = 0; i < da.c * plane; ++i) ga[i] += g[i];
                }
                if (pb->requires_grad) {
                    pb->ensure_grad();
                    double* gb = pb->grad.data() + static_cast<long>(n) * db.c * plane;
                    for (long i = 0; i < db.c * plane; ++i) gb[i] += g[da.c * plane + i];
                }
            }
        };
    }
    return node;
}

NodePtr concat_batch(NodePtr a, NodePtr b) {
    if (a->value.ndim() != b->value.ndim())
        throw ShapeError("concat_batch: rank mismatch");
    auto shape = a->value.shape();
    for (int i = 1; i < a->value.ndim(); ++i) {
        if (a->value.dim(i) != b->value.dim(i))
            throw ShapeError("concat_batch: trailing dims differ: " + shape_str(a->value.shape()) + " vs " +
                             shape_str(b->value.shape()));
    }
    shape[0] += b->value.dim(0);
    Tensor out(shape);
    std::copy(a->value.data(), a->value.data() + a->value.numel(), out.data());
    std::copy(b->value.data(), b->value.data() + b->value.numel(), out.data() + a->value.numel());
    auto node = make_node(std::move(out), {a, b});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* pa = node->inputs[0].get();
        Node* pb = node->inputs[1].get();
        node->backprop = [o, pa, pb]() {
            const long na = pa->value.numel();
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (long i = 0; i < na; ++i) pa->grad[i] += o->grad[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                const long nb = pb->value.numel();
                for (long i = 0; i < nb; ++i) pb->grad[i] += o->grad[na + i];
            }
        };
    }
    return node;
}

NodePtr slice_batch(NodePtr x, int start, int count) {
    const int n = x->value.dim(0);
    if (start < 0 || count <= 0 || start + count > n)
        throw ShapeError("slice_batch: range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of batch size " + std::to_string(n));
    auto shape = x->value.shape();
    shape[0] = count;
    const long row = x->value.numel() / n;
    Tensor out(shape);
    std::copy(x->value.data() + start * row, x->value.data() + (start + count) * row, out.data());
    auto node = make_node(std::move(out), {x});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* px = node->inputs[0].get();
        node->backprop = [o, px, start, row]() {
            px->ensure_grad();
            const long m = o->value.numel();
            double* g = px->grad.data() + start * row;
            for (long i = 0; i < m; ++i) g[i] += o->grad[i];
        };
    }
    return node;
}

// ---- reductions and broadcasts ----

NodePtr sum_all(NodePtr x) {
    double s = 0;
    const long n = x->value.numel();
    for (long i = 0; i < n; ++i) s += x->value[i];
    auto node = make_node(Tensor::scalar(s), {x});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* px = node->inputs[0].get();
        node->backprop = [o, px]() {
            px->ensure_grad();
            const double g = o->grad[0];
            const long m = px->value.numel();
            for (long i = 0; i < m; ++i) px->grad[i] += g;
        };
    }
    return node;
}

NodePtr mean_all(NodePtr x) {
    const double inv = 1.0 / static_cast<double>(x->value.numel());
    return mul_scalar(sum_all(std::move(x)), inv);
}

NodePtr sum_rows(NodePtr x) {
    if (x->value.ndim() != 2) throw ShapeError("sum_rows: expected [N,D]");
    const int n = x->value.dim(0), d = x->value.dim(1);
    Tensor out({n});
    for (int i = 0; i < n; ++i) {
        double s = 0;
        const double* row = x->value.data() + static_cast<long>(i) * d;
        for (int j = 0; j < d; ++j) s += row[j];
        out[i] = s;
    }
    auto node = make_node(std::move(out), {x});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* px = node->inputs[0].get();
        node->backprop = [o, px, n, d]() {
            px->ensure_grad();
            for (int i = 0; i < n; ++i) {
                const double g = o->grad[i];
                double* row = px->grad.data() + static_cast<long>(i) * d;
                for (int j = 0; j < d; ++j) row[j] += g;
            }
        };
    }
    return node;
}

NodePtr spatial_mean(NodePtr x) {
    const auto dims = as4d(x->value, "spatial_mean");
    const long plane = dims.plane();
    const double inv = 1.0 / static_cast<double>(plane);
    Tensor out({dims.n, dims.c});
    for (int n = 0; n < dims.n; ++n)
        for (int c = 0; c < dims.c; ++c) {
            const double* p = x->value.data() + (static_cast<long>(n) * dims.c + c) * plane;
            double s = 0;
            for (long i = 0; i < plane; ++i) s += p[i];
            out.at(n, c) = s * inv;
        }
    auto node = make_node(std::move(out), {x});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* px = node->inputs[0].get();
        node->backprop = [o, px, dims, plane, inv]() {
            px->ensure_grad();
            for (int n = 0; n < dims.n; ++n)
                for (int c = 0; c < dims.c; ++c) {
                    const double g = o->grad.at(n, c) * inv;
                    double* p = px->grad.data() + (static_cast<long>(n) * dims.c + c) * plane;
                    for (long i = 0; i < plane; ++i) p[i] += g;
                }
        };
    }
    return node;
}

NodePtr channel_mean(NodePtr x) {
    const auto dims = as4d(x->value, "channel_mean");
    const long plane = dims.plane();
    const double inv = 1.0 / (static_cast<double>(dims.n) * plane);
    Tensor out({dims.c});
    for (int n = 0; n < dims.n; ++n)
        for (int c = 0; c < dims.c; ++c) {
            const double* p = x->value.data() + (static_cast<long>(n) * dims.c + c) * plane;
            double s = 0;
            for (long i = 0; i < plane; ++i) s += p[i];
            out[c] += s * inv;
        }
    auto node = make_node(std::move(out), {x});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* px = node->inputs[0].get();
        node->backprop = [o, px, dims, plane, inv]() {
            px->ensure_grad();
            for (int n = 0; n < dims.n; ++n)
                for (int c = 0; c < dims.c; ++c) {
                    const double g = o->grad[c] * inv;
                    double* p = px->grad.data() + (static_cast<long>(n) * dims.c + c) * plane;
                    for (long i = 0; i < plane; ++i) p[i] += g;
                }
        };
    }
    return node;
}

namespace {
enum class BcastKind { PerChannel, PerSampleChannel };
enum class BcastOp { Mul, Add };

NodePtr bcast_impl(NodePtr x, NodePtr s, BcastKind kind, BcastOp op) {
    const auto dims = as4d(x->value, "broadcast");
    if (kind == BcastKind::PerChannel) {
        if (s->value.ndim() != 1 || s->value.dim(0) != dims.c)
            throw ShapeError("broadcast: coefficient must be [C]=" + std::to_string(dims.c) + ", got " +
                             shape_str(s->value.shape()));
    } else {
        if (s->value.ndim() != 2 || s->value.dim(0) != dims.n || s->value.dim(1) != dims.c)
            throw ShapeError("broadcast: coefficient must be [N,C], got " + shape_str(s->value.shape()));
    }
    const long plane = dims.plane();
    Tensor out(x->value.shape());
    for (int n = 0; n < dims.n; ++n)
        for (int c = 0; c < dims.c; ++c) {
            const double coef = kind == BcastKind::PerChannel ? s->value[c] : s->value.at(n, c);
            const double* px = x->value.data() + (static_cast<long>(n) * dims.c + c) * plane;
            double* po = out.data() + (static_cast<long>(n) * dims.c + c) * plane;
            if (op == BcastOp::Mul)
                for (long i = 0; i < plane; ++i) po[i] = px[i] * coef;
            else
                for (long i = 0; i < plane; ++i) po[i] = px[i] + coef;
        }
    auto node = make_node(std::move(out), {x, s});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* pxn = node->inputs[0].get();
        Node* psn = node->inputs[1].get();
        node->backprop = [o, pxn, psn, dims, plane, kind, op]() {
            if (pxn->requires_grad) pxn->ensure_grad();
            if (psn->requires_grad) psn->ensure_grad();
            for (int n = 0; n < dims.n; ++n)
                for (int c = 0; c < dims.c; ++c) {
                    const long off = (static_cast<long>(n) * dims.c + c) * plane;
                    const double* g = o->grad.data() + off;
                    const double coef =
                        kind == BcastKind::PerChannel ? psn->value[c] : psn->value.at(n, c);
                    if (pxn->requires_grad) {
                        double* gx = pxn->grad.data() + off;
                        if (op == BcastOp::Mul)
                            for (long i = 0; i < plane; ++i) gx[i] += g[i] * coef;
                        else
                            for (long i = 0; i < plane; ++i) gx[i] += g[i];
                    }
                    if (psn->requires_grad) {
                        double acc = 0;
                        if (op == BcastOp::Mul) {
                            const double* vx = pxn->value.data() + off;
                            for (long i = 0; i < plane; ++i) acc += g[i] * vx[i];
                        } else {
                            for (long i = 0; i < plane; ++i) acc += g[i];
                        }
                        if (kind == BcastKind::PerChannel)
                            psn->grad[c] += acc;
                        else
                            psn->grad.at(n, c) += acc;
                    }
                }
        };
    }
    return node;
}
} // namespace

NodePtr bcast_c_mul(NodePtr x, NodePtr s) {
    return bcast_impl(std::move(x), std::move(s), BcastKind::PerChannel, BcastOp::Mul);
}
NodePtr bcast_c_add(NodePtr x, NodePtr s) {
    return bcast_impl(std::move(x), std::move(s), BcastKind::PerChannel, BcastOp::Add);
}
NodePtr bcast_nc_mul(NodePtr x, NodePtr s) {
    return bcast_impl(std::move(x), std::move(s), BcastKind::PerSampleChannel, BcastOp::Mul);
}
NodePtr bcast_nc_add(NodePtr x, NodePtr s) {
    return bcast_impl(std::move(x), std::move(s), BcastKind::PerSampleChannel, BcastOp::Add);
}

// ---- convolution kernels ----
//
// All six passes (conv/deconv forward, backward-data, backward-filter) are
// expressed through an im2col patch matrix "col" of shape [K, M] with
// K = channels * kh * kw and M = output pixels, and three small GEMM loops
// whose inner dimension runs over contiguous memory. A transposed convolution
// is the data-backward of the convolution that maps its output to its input,
// so the same buffers serve both layer types.

namespace {

struct ConvGeom {
    int c;            // patch channels
    int h, w;         // image the patches are gathered from
    int kh, kw;
    int stride, pad;
    int ho, wo;       // pixel grid the patches are centered on
    long k() const { return static_cast<long>(c) * kh * kw; }
    long m() const { return static_cast<long>(ho) * wo; }
};

// col[k][m] = x[ci][oy*stride - pad + ky][ox*stride - pad + kx] (0 outside).
void im2col(const double* __restrict__ x, const ConvGeom& g, double* __restrict__ col) {
    for (int ci = 0; ci < g.c; ++ci) {
        const double* __restrict__ xp = x + static_cast<long>(ci) * g.h * g.w;
        for (int ky = 0; ky < g.kh; ++ky) {
            for (int kx = 0; kx < g.kw; ++kx) {
                double* __restrict__ crow = col + ((static_cast<long>(ci) * g.kh + ky) * g.kw + kx) * g.m();
                for (int oy = 0; oy < g.ho; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    double* __restrict__ dst = crow + static_cast<long>(oy) * g.wo;
                    if (iy < 0 || iy >= g.h) {
                        std::fill(dst, dst + g.wo, 0.0);
                        continue;
                    }
                    const double* __restrict__ xrow = xp + static_cast<long>(iy) * g.w;
                    for (int ox = 0; ox < g.wo; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        dst[ox] = (ix >= 0 && ix < g.w) ? xrow[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// Scatter-add of a col matrix back onto the image plane stack.
void col2im_add(const double* __restrict__ col, const ConvGeom& g, double* __restrict__ x) {
    for (int ci = 0; ci < g.c; ++ci) {
        double* __restrict__ xp = x + static_cast<long>(ci) * g.h * g.w;
        for (int ky = 0; ky < g.kh; ++ky) {
            for (int kx = 0; kx < g.kw; ++kx) {
                const double* __restrict__ crow = col + ((static_cast<long>(ci) * g.kh + ky) * g.kw + kx) * g.m();
                for (int oy = 0; oy < g.ho; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    if (iy < 0 || iy >= g.h) continue;
                    double* __restrict__ xrow = xp + static_cast<long>(iy) * g.w;
                    const double* __restrict__ src = crow + static_cast<long>(oy) * g.wo;
                    for (int ox = 0; ox < g.wo; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        if (ix >= 0 && ix < g.w) xrow[ix] += src[ox];
                    }
                }
            }
        }
    }
}

// C[i][j] += sum_k A[i][k] * B[k][j]
void gemm_acc(const double* __restrict__ a, const double* __restrict__ b, double* __restrict__ c, long ni,
              long nk, long nj) {
    for (long i = 0; i < ni; ++i) {
        double* __restrict__ crow = c + i * nj;
        const double* __restrict__ arow = a + i * nk;
        for (long k = 0; k < nk; ++k) {
            const double av = arow[k];
            const double* __restrict__ brow = b + k * nj;
            for (long j = 0; j < nj; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[k][j] += sum_i A[i][k] * B[i][j]
void gemm_at_b(const double* __restrict__ a, const double* __restrict__ b, double* __restrict__ c, long ni,
               long nk, long nj) {
    for (long i = 0; i < ni; ++i) {
        const double* __restrict__ arow = a + i * nk;
        const double* __restrict__ brow = b + i * nj;
        for (long k = 0; k < nk; ++k) {
            const double av = arow[k];
            double* __restrict__ crow = c + k * nj;
            for (long j = 0; j < nj; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[i][k] += sum_j A[i][j] * B[k][j]
void gemm_a_bt(const double* __restrict__ a, const double* __restrict__ b, double* __restrict__ c, long ni,
               long nk, long nj) {
    for (long i = 0; i < ni; ++i) {
        const double* __restrict__ arow = a + i * nj;
        double* __restrict__ crow = c + i * nk;
        for (long k = 0; k < nk; ++k) {
            const double* __restrict__ brow = b + k * nj;
            double acc = 0;
            for (long j = 0; j < nj; ++j) acc += arow[j] * brow[j];
            crow[k] += acc;
        }
    }
}

struct ConvDims {
    int n, ci, h, w;
    int co, kh, kw;
    int ho, wo;
    int stride, pad;

    ConvGeom geom() const { return {ci, h, w, kh, kw, stride, pad, ho, wo}; }
    bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    if (x.ndim() != 4) throw ShapeError("conv2d: input must be [N,C,H,W], got " + shape_str(x.shape()));
    if (w.ndim() != 4) throw ShapeError("conv2d: weight must be [Co,Ci,kh,kw]");
    if (x.dim(1) != w.dim(1))
        throw ShapeError("conv2d: input channels " + std::to_string(x.dim(1)) + " != weight channels " +
                         std::to_string(w.dim(1)));
    if (b.ndim() != 1 || b.dim(0) != w.dim(0)) throw ShapeError("conv2d: bias must be [Co]");
    ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), w.dim(3), 0, 0, stride, pad};
    d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
    d.wo = (d.w + 2 * pad - d.kw) / stride + 1;
    if (d.ho <= 0 || d.wo <= 0) throw ShapeError("conv2d: output would be empty for input " + shape_str(x.shape()));
    return d;
}

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const ConvDims& d, Tensor& out) {
    const ConvGeom g = d.geom();
    const long iplane = static_cast<long>(d.h) * d.w;
    const long m = g.m();
    std::vector<double> col;
    if (!d.pointwise()) col.resize(static_cast<std::size_t>(g.k() * m));
    for (int n = 0; n < d.n; ++n) {
        const double* xn = x.data() + static_cast<long>(n) * d.ci * iplane;
        const double* patches = xn;
        if (!d.pointwise()) {
            im2col(xn, g, col.data());
            patches = col.data();
        }
        double* on = out.data() + static_cast<long>(n) * d.co * m;
        for (int co = 0; co < d.co; ++co) std::fill(on + co * m, on + (co + 1) * m, b[co]);
        gemm_acc(w.data(), patches, on, d.co, g.k(), m);
    }
}

void conv2d_backward_data(const Tensor& w, const Tensor& grad_out, const ConvDims& d, Tensor& dx) {
    const ConvGeom g = d.geom();
    const long iplane = static_cast<long>(d.h) * d.w;
    const long m = g.m();
    std::vector<double> dcol(static_cast<std::size_t>(g.k() * m));
    for (int n = 0; n < d.n; ++n) {
        const double* gn = grad_out.data() + static_cast<long>(n) * d.co * m;
        double* dxn = dx.data() + static_cast<long>(n) * d.ci * iplane;
        if (d.pointwise()) {
            gemm_at_b(w.data(), gn, dxn, d.co, g.k(), m);
        } else {
            std::fill(dcol.begin(), dcol.end(), 0.0);
            gemm_at_b(w.data(), gn, dcol.data(), d.co, g.k(), m);
            col2im_add(dcol.data(), g, dxn);
        }
    }
}

void conv2d_backward_filter(const Tensor& x, const Tensor& grad_out, const ConvDims& d, Tensor& dw, Tensor& db) {
    const ConvGeom g = d.geom();
    const long iplane = static_cast<long>(d.h) * d.w;
    const long m = g.m();
    std::vector<double> col;
    if (!d.pointwise()) col.resize(static_cast<std::size_t>(g.k() * m));
    for (int n = 0; n < d.n; ++n) {
        const double* xn = x.data() + static_cast<long>(n) * d.ci * iplane;
        const double* patches = xn;
        if (!d.pointwise()) {
            im2col(xn, g, col.data());
            patches = col.data();
        }
        const double* gn = grad_out.data() + static_cast<long>(n) * d.co * m;
        gemm_a_bt(gn, patches, dw.data(), d.co, g.k(), m);
        for (int co = 0; co < d.co; ++co) {
            const double* grow = gn + static_cast<long>(co) * m;
            double acc = 0;
            for (long i = 0; i < m; ++i) acc += grow[i];
            db[co] += acc;
        }
    }
}

struct DeconvDims {
    int n, ci, h, w;
    int co, kh, kw;
    int ho, wo;
    int stride, pad;

    // Geometry of the convolution that maps the deconv OUTPUT back to its
    // input: patches over the output canvas, centered on input pixels.
    ConvGeom virtual_geom() const { return {co, ho, wo, kh, kw, stride, pad, h, w}; }
};

DeconvDims deconv_dims(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    if (x.ndim() != 4) throw ShapeError("conv2d_transpose: input must be [N,C,H,W]");
    if (w.ndim() != 4) throw ShapeError("conv2d_transpose: weight must be [Ci,Co,kh,kw]");
    if (x.dim(1) != w.dim(0))
        throw ShapeError("conv2d_transpose: input channels " + std::to_string(x.dim(1)) +
                         " != weight in-channels " + std::to_string(w.dim(0)));
    if (b.ndim() != 1 || b.dim(0) != w.dim(1)) throw ShapeError("conv2d_transpose: bias must be [Co]");
    DeconvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(1), w.dim(2), w.dim(3), 0, 0, stride, pad};
    d.ho = (d.h - 1) * stride - 2 * pad + d.kh;
    d.wo = (d.w - 1) * stride - 2 * pad + d.kw;
    if (d.ho <= 0 || d.wo <= 0) throw ShapeError("conv2d_transpose: output would be empty");
    return d;
}

void deconv_forward(const Tensor& x, const Tensor& w, const Tensor& b, const DeconvDims& d, Tensor& out) {
    const ConvGeom g = d.virtual_geom();
    const long m = static_cast<long>(d.h) * d.w; // input pixels = virtual output pixels
    const long oplane = static_cast<long>(d.ho) * d.wo;
    std::vector<double> dcol(static_cast<std::size_t>(g.k() * m));
    for (int n = 0; n < d.n; ++n) {
        const double* xn = x.data() + static_cast<long>(n) * d.ci * m;
        double* on = out.data() + static_cast<long>(n) * d.co * oplane;
        for (int co = 0; co < d.co; ++co) std::fill(on + co * oplane, on + (co + 1) * oplane, b[co]);
        std::fill(dcol.begin(), dcol.end(), 0.0);
        gemm_at_b(w.data(), xn, dcol.data(), d.ci, g.k(), m);
        col2im_add(dcol.data(), g, on);
    }
}

void deconv_backward_data(const Tensor& w, const Tensor& grad_out, const DeconvDims& d, Tensor& dx) {
    const ConvGeom g = d.virtual_geom();
    const long m = static_cast<long>(d.h) * d.w;
    const long oplane = static_cast<long>(d.ho) * d.wo;
    std::vector<double> col(static_cast<std::size_t>(g.k() * m));
    for (int n = 0; n < d.n; ++n) {
        const double* gn = grad_out.data() + static_cast<long>(n) * d.co * oplane;
        im2col(gn, g, col.data());
        double* dxn = dx.data() + static_cast<long>(n) * d.ci * m;
        gemm_acc(w.data(), col.data(), dxn, d.ci, g.k(), m);
    }
}

void deconv_backward_filter(const Tensor& x, const Tensor& grad_out, const DeconvDims& d, Tensor& dw,
                            Tensor& db) {
    const ConvGeom g = d.virtual_geom();
    const long m = static_cast<long>(d.h) * d.w;
    const long oplane = static_cast<long>(d.ho) * d.wo;
    std::vector<double> col(static_cast<std::size_t>(g.k() * m));
    for (int n = 0; n < d.n; ++n) {
        const double* gn = grad_out.data() + static_cast<long>(n) * d.co * oplane;
        im2col(gn, g, col.data());
        const double* xn = x.data() + static_cast<long>(n) * d.ci * m;
        gemm_a_bt(xn, col.data(), dw.data(), d.ci, g.k(), m);
        for (int co = 0; co < d.co; ++co) {
            const double* grow = gn + static_cast<long>(co) * oplane;
            double acc = 0;
            for (long i = 0; i < oplane; ++i) acc += grow[i];
            db[co] += acc;
        }
    }
}

} // namespace


NodePtr conv2d(NodePtr x, NodePtr w, NodePtr b, int stride, int pad) {
    if (stride < 1 || pad < 0) throw ParamError("conv2d: stride must be >= 1 and pad >= 0");
    const ConvDims d = conv_dims(x->value, w->value, b->value, stride, pad);
    Tensor out({d.n, d.co, d.ho, d.wo});
    conv2d_forward(x->value, w->value, b->value, d, out);
    auto node = make_node(std::move(out), {x, w, b});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* px = node->inputs[0].get();
        Node* pw = node->inputs[1].get();
        Node* pb = node->inputs[2].get();
        node->backprop = [o, px, pw, pb, d]() {
            if (px->requires_grad) {
                px->ensure_grad();
                conv2d_backward_data(pw->value, o->grad, d, px->grad);
            }
            if (pw->requires_grad || pb->requires_grad) {
                pw->ensure_grad();
                pb->ensure_grad();
                conv2d_backward_filter(px->value, o->grad, d, pw->grad, pb->grad);
            }
        };
    }
    return node;
}

NodePtr conv2d_transpose(NodePtr x, NodePtr w, NodePtr b, int stride, int pad) {
    if (stride < 1 || pad < 0) throw ParamError("conv2d_transpose: stride must be >= 1 and pad >= 0");
    const DeconvDims d = deconv_dims(x->value, w->value, b->value, stride, pad);
    Tensor out({d.n, d.co, d.ho, d.wo});
    deconv_forward(x->value, w->value, b->value, d, out);
    auto node = make_node(std::move(out), {x, w, b});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* px = node->inputs[0].get();
        Node* pw = node->inputs[1].get();
        Node* pb = node->inputs[2].get();
        node->backprop = [o, px, pw, pb, d]() {
            if (px->requires_grad) {
                px->ensure_grad();
                deconv_backward_data(pw->value, o->grad, d, px->grad);
            }
            if (pw->requires_grad || pb->requires_grad) {
                pw->ensure_grad();
                pb->ensure_grad();
                deconv_backward_filter(px->value, o->grad, d, pw->grad, pb->grad);
            }
        };
    }
    return node;
}

NodePtr linear(NodePtr x, NodePtr w, NodePtr b) {
    if (x->value.ndim() != 2) throw ShapeError("linear: input must be [N,Din], got " + shape_str(x->value.shape()));
    if (w->value.ndim() != 2 || w->value.dim(1) != x->value.dim(1))
        throw ShapeError("linear: weight must be [Dout," + std::to_string(x->value.dim(1)) + "], got " +
                         shape_str(w->value.shape()));
    const int n = x->value.dim(0), din = x->value.dim(1), dout = w->value.dim(0);
    if (b->value.ndim() != 1 || b->value.dim(0) != dout) throw ShapeError("linear: bias must be [Dout]");
    Tensor out({n, dout});
    for (int i = 0; i < n; ++i) {
        const double* xr = x->value.data() + static_cast<long>(i) * din;
        double* __restrict__ orow = out.data() + static_cast<long>(i) * dout;
        for (int o_ = 0; o_ < dout; ++o_) {
            const double* wr = w->value.data() + static_cast<long>(o_) * din;
            double s = b->value[o_];
            for (int j = 0; j < din; ++j) s += wr[j] * xr[j];
            orow[o_] = s;
        }
    }
    auto node = make_node(std::move(out), {x, w, b});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* px = node->inputs[0].get();
        Node* pw = node->inputs[1].get();
        Node* pb = node->inputs[2].get();
        node->backprop = [o, px, pw, pb, n, din, dout]() {
            for (int i = 0; i < n; ++i) {
                const double* g = o->grad.data() + static_cast<long>(i) * dout;
                if (px->requires_grad) {
                    px->ensure_grad();
                    double* gx = px->grad.data() + static_cast<long>(i) * din;
                    for (int o_ = 0; o_ < dout; ++o_) {
                        const double* wr = pw->value.data() + static_cast<long>(o_) * din;
                        const double gv = g[o_];
                        for (int j = 0; j < din; ++j) gx[j] += gv * wr[j];
                    }
                }
                if (pw->requires_grad) {
                    pw->ensure_grad();
                    const double* xr = px->value.data() + static_cast<long>(i) * din;
                    for (int o_ = 0; o_ < dout; ++o_) {
                        double* gw = pw->grad.data() + static_cast<long>(o_) * din;
                        const double gv = g[o_];
                        for (int j = 0; j < din; ++j) gw[j] += gv * xr[j];
                    }
                }
                if (pb->requires_grad) {
                    pb->ensure_grad();
                    for (int o_ = 0; o_ < dout; ++o_) pb->grad[o_] += g[o_];
                }
            }
        };
    }
    return node;
}

NodePtr dropout(NodePtr x, Tensor keep_mask, double keep_prob) {
    require_same_shape(x->value, keep_mask, "dropout");
    if (keep_prob <= 0 || keep_prob > 1) throw ParamError("dropout: keep probability must be in (0,1]");
    const double scale = 1.0 / keep_prob;
    Tensor out(x->value.shape());
    const long n = out.numel();
    for (long i = 0; i < n; ++i) out[i] = x->value[i] * keep_mask[i] * scale;
    auto node = make_node(std::move(out), {x});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* px = node->inputs[0].get();
        auto mask = std::make_shared<Tensor>(std::move(keep_mask));
        node->backprop = [o, px, mask, scale]() {
            px->ensure_grad();
            const long m = o->value.numel();
            for (long i = 0; i < m; ++i) px->grad[i] += o->grad[i] * (*mask)[i] * scale;
        };
    }
    return node;
}

NodePtr softmax_cross_entropy(NodePtr logits, std::vector<int> labels) {
    if (logits->value.ndim() != 2) throw ShapeError("softmax_cross_entropy: logits must be [N,K]");
    const int n = logits->value.dim(0), k = logits->value.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw ShapeError("softmax_cross_entropy: expected " + std::to_string(n) + " labels");
    for (int lbl : labels)
        if (lbl < 0 || lbl >= k)
            throw IndexError("softmax_cross_entropy: label " + std::to_string(lbl) + " out of range [0, " +
                             std::to_string(k) + ")");
    // Stores softmax probabilities for the backward pass.
    auto probs = std::make_shared<Tensor>(std::vector<int>{n, k});
    double loss = 0;
    for (int i = 0; i < n; ++i) {
        const double* row = logits->value.data() + static_cast<long>(i) * k;
        double mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double sum = 0;
        for (int j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
        const double lse = mx + std::log(sum);
        loss += lse - row[labels[static_cast<std::size_t>(i)]];
        double* prow = probs->data() + static_cast<long>(i) * k;
        for (int j = 0; j < k; ++j) prow[j] = std::exp(row[j] - lse);
    }
    loss /= n;
    auto node = make_node(Tensor::scalar(loss), {logits});
    if (node->requires_grad) {
        Node* o = node.get();
        Node* pl = node->inputs[0].get();
        node->backprop = [o, pl, probs, labels = std::move(labels), n, k]() {
            pl->ensure_grad();
            const double g = o->grad[0] / n;
            for (int i = 0; i < n; ++i) {
                const double* prow = probs->data() + static_cast<long>(i) * k;
                double* __restrict__ grow = pl->grad.data() + static_cast<long>(i) * k;
                const int lbl = labels[static_cast<std::size_t>(i)];
                for (int j = 0; j < k; ++j) grow[j] += g * (prow[j] - (j == lbl ? 1.0 : 0.0));
            }
        };
    }
    return node;
}

} // namespace posegan::nn
