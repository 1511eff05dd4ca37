#include "posegan/pagn.hpp"

namespace posegan {

using namespace nn;

NodePtr adain(const NodePtr& style, const NodePtr& content, double eps) {
    if (eps <= 0) throw ParamError("adain: eps must be > 0");
    if (style->value.ndim() != 4 || content->value.ndim() != 4)
        throw ShapeError("adain: expected [N,C,h,w] inputs");
    if (style->value.dim(0) != content->value.dim(0) || style->value.dim(1) != content->value.dim(1))
        throw ShapeError("adain: channel mismatch " + shape_str(style->value.shape()) + " vs " +
                         shape_str(content->value.shape()));

    auto mu_c = spatial_mean(content);
    auto centered = bcast_nc_add(content, mul_scalar(mu_c, -1.0));
    auto var_c = spatial_mean(square(centered));
    auto std_c = sqrt_elem(add_scalar(var_c, eps));

    auto mu_s = spatial_mean(style);
    auto s_centered = bcast_nc_add(style, mul_scalar(mu_s, -1.0));
    auto var_s = spatial_mean(square(s_centered));
    // 1e-12 keeps the gradient finite for constant style channels without
    // disturbing the matched moments.
    auto std_s = sqrt_elem(add_scalar(var_s, 1e-12));

    return bcast_nc_add(bcast_nc_mul(centered, div(std_s, std_c)), mu_s);
}

PagnBlock::PagnBlock(ParamSet& ps, const std::string& prefix, int channels, int image_channels, Rng& rng)
    : style_deconv_(Deconv2d::make(ps, prefix + ".style_deconv", 2 * channels, channels, 3, 1, 1, rng)),
      content_1x1_(Conv2d::make(ps, prefix + ".content_1x1", channels, channels, 1, 1, 0, rng)),
      mask_conv_(Conv2d::make(ps, prefix + ".mask_conv", channels, channels, 3, 1, 1, rng)),
      mask_norm_(BatchNorm::make(ps, prefix + ".mask_norm", channels)),
      image_deconv_(
          Deconv2d::make(ps, prefix + ".image_deconv", image_channels + channels, image_channels, 3, 1, 1, rng)) {}

PagnBlock::Out PagnBlock::forward(const NodePtr& f_g, const NodePtr& i_g, const NodePtr& pose_feat,
                                  const NodePtr& f_app, bool training) const {
    if (f_g->value.dim(2) != pose_feat->value.dim(2) || f_g->value.dim(3) != pose_feat->value.dim(3))
        throw ShapeError("pagn_block: stream/pose resolution mismatch");

    auto style = style_deconv_(concat_channels(f_g, pose_feat)); // a
    auto content = content_1x1_(f_app);                          // b
    auto x = adain(style, content, adain_eps);
    auto f_g_next = add(x, style);
    auto mask = sigmoid(relu(mask_norm_(mask_conv_(x), training)));
    auto i_g_next = image_deconv_(concat_channels(i_g, mul(mask, x)));
    return {f_g_next, i_g_next, mask};
}

Pagn::Pagn(ParamSet& ps, const std::string& prefix, int blocks, int channels, int image_channels, Rng& rng)
    : init_1x1_(Conv2d::make(ps, prefix + ".init_1x1", channels, image_channels, 1, 1, 0, rng)),
      up1_(Deconv2d::make(ps, prefix + ".up1", channels + image_channels, channels, 4, 2, 1, rng)),
      up2_(Deconv2d::make(ps, prefix + ".up2", channels, std::max(4, channels / 2), 4, 2, 1, rng)),
      un1_(BatchNorm::make(ps, prefix + ".up_norm1", channels)),
      un2_(BatchNorm::make(ps, prefix + ".up_norm2", std::max(4, channels / 2))),
      to_rgb_(Conv2d::make(ps, prefix + ".to_rgb", std::max(4, channels / 2), 3, 3, 1, 1, rng)) {
    if (blocks < 1) throw ConfigError("pagn: block count must be >= 1, got " + std::to_string(blocks));
    for (int i = 0; i < blocks; ++i)
        blocks_.emplace_back(ps, prefix + ".block" + std::to_string(i + 1), channels, image_channels, rng);
}

PagnResult Pagn::forward(const NodePtr& f_app, const NodePtr& f_pose_final, const NodePtr& target_pose_feat,
                         bool training) const {
    NodePtr f_g = f_pose_final;
    NodePtr i_g = init_1x1_(f_app);
    PagnResult result;
    result.masks.reserve(blocks_.size());
    for (const auto& block : blocks_) {
        auto out = block.forward(f_g, i_g, target_pose_feat, f_app, training);
        f_g = out.f_g;
        i_g = out.i_g;
        result.masks.push_back(out.mask);
    }
    auto h = concat_channels(f_g, i_g);
    h = relu(un1_(up1_(h), training));
    h = relu(un2_(up2_(h), training));
    result.image = tanh_act(to_rgb_(h));
    return result;
}

} // namespace posegan
