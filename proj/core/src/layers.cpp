#include "posegan/layers.hpp"

#include <cmath>

namespace posegan::nn {

NodePtr ParamSet::add(const std::string& name, Tensor init) {
    for (const auto& [n, _] : params_)
        if (n == name) throw ParamError("duplicate parameter name: " + name);
    auto node = parameter(std::move(init));
    params_.emplace_back(name, node);
    return node;
}

Tensor* ParamSet::add_buffer(const std::string& name, Tensor init) {
    for (const auto& [n, _] : buffers_)
        if (n == name) throw ParamError("duplicate buffer name: " + name);
    auto t = std::make_shared<Tensor>(std::move(init));
    buffers_.emplace_back(name, t);
    return t.get();
}

std::vector<NodePtr> ParamSet::param_nodes() const {
    std::vector<NodePtr> out;
    out.reserve(params_.size());
    for (const auto& [_, p] : params_) out.push_back(p);
    return out;
}

void ParamSet::zero_grad() {
    for (auto& [_, p] : params_)
        if (!p->grad.empty()) p->grad.fill(0.0);
}

long ParamSet::param_count() const {
    long n = 0;
    for (const auto& [_, p] : params_) n += p->value.numel();
    return n;
}

Tensor gaussian_init(std::vector<int> shape, Rng& rng, double stddev) {
    Tensor t(std::move(shape));
    const long n = t.numel();
    for (long i = 0; i < n; ++i) t[i] = rng.normal(0.0, stddev);
    return t;
}

Conv2d Conv2d::make(ParamSet& ps, const std::string& name, int cin, int cout, int k, int stride, int pad,
                    Rng& rng) {
    Conv2d c;
    c.w = ps.add(name + ".w", gaussian_init({cout, cin, k, k}, rng));
    c.b = ps.add(name + ".b", Tensor({cout}));
    c.stride = stride;
    c.pad = pad;
    return c;
}

Deconv2d Deconv2d::make(ParamSet& ps, const std::string& name, int cin, int cout, int k, int stride, int pad,
                        Rng& rng) {
    Deconv2d c;
    c.w = ps.add(name + ".w", gaussian_init({cin, cout, k, k}, rng));
    c.b = ps.add(name + ".b", Tensor({cout}));
    c.stride = stride;
    c.pad = pad;
    return c;
}

LinearLayer LinearLayer::make(ParamSet& ps, const std::string& name, int din, int dout, Rng& rng) {
    LinearLayer l;
    l.w = ps.add(name + ".w", gaussian_init({dout, din}, rng));
    l.b = ps.add(name + ".b", Tensor({dout}));
    return l;
}

BatchNorm BatchNorm::make(ParamSet& ps, const std::string& name, int channels) {
    BatchNorm bn;
    bn.gamma = ps.add(name + ".gamma", Tensor({channels}, 1.0));
    bn.beta = ps.add(name + ".beta", Tensor({channels}));
    bn.running_mean = ps.add_buffer(name + ".running_mean", Tensor({channels}));
    bn.running_var = ps.add_buffer(name + ".running_var", Tensor({channels}, 1.0));
    return bn;
}

NodePtr BatchNorm::operator()(NodePtr x, bool training) const {
    const int c = gamma->value.dim(0);
    if (x->value.dim(1) != c)
        throw ShapeError("batch_norm: expected " + std::to_string(c) + " channels, got " +
                         std::to_string(x->value.dim(1)));
    if (training) {
        auto mu = channel_mean(x);
        auto centered = bcast_c_add(x, mul_scalar(mu, -1.0));
        auto var = channel_mean(square(centered));
        // Population statistics feed both the graph and the running buffers.
        for (int i = 0; i < c; ++i) {
            (*running_mean)[i] = (1.0 - momentum) * (*running_mean)[i] + momentum * mu->value[i];
            (*running_var)[i] = (1.0 - momentum) * (*running_var)[i] + momentum * var->value[i];
        }
        auto inv_std = div(constant(Tensor({c}, 1.0)), sqrt_elem(add_scalar(var, eps)));
        return bcast_c_add(bcast_c_mul(centered, mul(gamma, inv_std)), beta);
    }
    Tensor scale_t({c}), shift_t({c});
    for (int i = 0; i < c; ++i) scale_t[i] = 1.0 / std::sqrt((*running_var)[i] + eps);
    auto scale = mul(gamma, constant(scale_t));
    auto shift = sub(beta, mul(constant(*running_mean), scale));
    return bcast_c_add(bcast_c_mul(std::move(x), scale), shift);
}

Adam::Adam(std::vector<NodePtr> params) : params_(std::move(params)) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void Adam::step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i];
        if (p->grad.empty()) continue;
        const long n = p->value.numel();
        for (long j = 0; j < n; ++j) {
            const double g = p->grad[j];
            m_[i][j] = beta1 * m_[i][j] + (1.0 - beta1) * g;
            v_[i][j] = beta2 * v_[i][j] + (1.0 - beta2) * g * g;
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            p->value[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
    zero_grad();
}

void Adam::zero_grad() {
    for (auto& p : params_)
        if (!p->grad.empty()) p->grad.fill(0.0);
}

} // namespace posegan::nn
