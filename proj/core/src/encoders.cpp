#include "posegan/encoders.hpp"

namespace posegan {

using namespace nn;

Encoder::Encoder(ParamSet& ps, const std::string& prefix, int in_channels, int width, Rng& rng)
    : c1_(Conv2d::make(ps, prefix + ".conv1", in_channels, width, 3, 2, 1, rng)),
      c2_(Conv2d::make(ps, prefix + ".conv2", width, width, 3, 2, 1, rng)),
      n1_(BatchNorm::make(ps, prefix + ".norm1", width)),
      n2_(BatchNorm::make(ps, prefix + ".norm2", width)),
      in_channels_(in_channels),
      width_(width) {}

NodePtr Encoder::forward(const NodePtr& x, bool training) const {
    if (x->value.ndim() != 4 || x->value.dim(1) != in_channels_)
        throw ShapeError("encoder expects [N," + std::to_string(in_channels_) + ",H,W], got " +
                         shape_str(x->value.shape()));
    auto h = relu(n1_(c1_(x), training));
    return relu(n2_(c2_(h), training));
}

SemanticEncoder::SemanticEncoder(ParamSet& ps, const std::string& prefix, int base_width, Rng& rng)
    : base_(base_width) {
    int cin = 3;
    for (int i = 0; i < 4; ++i) {
        const int cout = base_ << i;
        convs_.push_back(Conv2d::make(ps, prefix + ".conv" + std::to_string(i + 1), cin, cout, 3, 2, 1, rng));
        norms_.push_back(BatchNorm::make(ps, prefix + ".norm" + std::to_string(i + 1), cout));
        cin = cout;
    }
}

NodePtr SemanticEncoder::forward(const NodePtr& img, bool training) const {
    if (img->value.ndim() != 4 || img->value.dim(1) != 3)
        throw ShapeError("semantic encoder expects [N,3,H,W], got " + shape_str(img->value.shape()));
    NodePtr h = img;
    for (std::size_t i = 0; i < convs_.size(); ++i) h = relu(norms_[i](convs_[i](h), training));
    return global_avg_pool(h);
}

} // namespace posegan
