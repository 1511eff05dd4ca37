#pragma once

#include <string>
#include <vector>

#include "posegan/autograd.hpp"
#include "posegan/rng.hpp"

namespace posegan::nn {

// Registry of long-lived parameter nodes plus non-optimized buffers (batch
// norm running statistics). Networks register into one of these so the
// optimizer and the checkpoint writer can enumerate state by name.
class ParamSet {
public:
    NodePtr add(const std::string& name, Tensor init);
    Tensor* add_buffer(const std::string& name, Tensor init);

    const std::vector<std::pair<std::string, NodePtr>>& params() const { return params_; }
    const std::vector<std::pair<std::string, std::shared_ptr<Tensor>>>& buffers() const { return buffers_; }

    std::vector<NodePtr> param_nodes() const;
    void zero_grad();
    long param_count() const;

private:
    std::vector<std::pair<std::string, NodePtr>> params_;
    std::vector<std::pair<std::string, std::shared_ptr<Tensor>>> buffers_;
};

// Convolution weights are drawn from N(0, 0.02); norm scales start at 1 and
// shifts at 0.
Tensor gaussian_init(std::vector<int> shape, Rng& rng, double stddev = 0.02);

struct Conv2d {
    NodePtr w, b;
    int stride = 1, pad = 1;

    static Conv2d make(ParamSet& ps, const std::string& name, int cin, int cout, int k, int stride, int pad,
                       Rng& rng);
    NodePtr operator()(NodePtr x) const { return conv2d(std::move(x), w, b, stride, pad); }
};

struct Deconv2d {
    NodePtr w, b;
    int stride = 1, pad = 1;

    static Deconv2d make(ParamSet& ps, const std::string& name, int cin, int cout, int k, int stride, int pad,
                         Rng& rng);
    NodePtr operator()(NodePtr x) const { return conv2d_transpose(std::move(x), w, b, stride, pad); }
};

struct LinearLayer {
    NodePtr w, b;

    static LinearLayer make(ParamSet& ps, const std::string& name, int din, int dout, Rng& rng);
    NodePtr operator()(NodePtr x) const { return linear(std::move(x), w, b); }
};

// Batch normalization over (N, H, W) per channel; also accepts [N,C] inputs.
// Training mode normalizes with batch statistics and updates the running
// estimates; evaluation mode uses the running estimates only.
struct BatchNorm {
    NodePtr gamma, beta;
    Tensor* running_mean = nullptr;
    Tensor* running_var = nullptr;
    double momentum = 0.1;
    double eps = 1e-5;

    static BatchNorm make(ParamSet& ps, const std::string& name, int channels);
    NodePtr operator()(NodePtr x, bool training) const;
};

struct Adam {
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit Adam(std::vector<NodePtr> params);
    // Applies one update from the accumulated gradients, then clears them.
    void step(double lr);
    void zero_grad();

    const std::vector<NodePtr>& params() const { return params_; }
    std::vector<Tensor>& m_state() { return m_; }
    std::vector<Tensor>& v_state() { return v_; }
    long& t_state() { return t_; }

private:
    std::vector<NodePtr> params_;
    std::vector<Tensor> m_, v_;
    long t_ = 0;
};

} // namespace posegan::nn
