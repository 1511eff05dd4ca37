#include "posegan/paan.hpp"

namespace posegan {

using namespace nn;

PaanBlock::PaanBlock(ParamSet& ps, const std::string& prefix, int channels, Rng& rng)
    : a1_(Conv2d::make(ps, prefix + ".app1", channels, channels, 3, 1, 1, rng)),
      a2_(Conv2d::make(ps, prefix + ".app2", channels, channels, 3, 1, 1, rng)),
      p1_(Conv2d::make(ps, prefix + ".pose1", channels, channels, 3, 1, 1, rng)),
      p2_(Conv2d::make(ps, prefix + ".pose2", channels, channels, 3, 1, 1, rng)),
      an1_(BatchNorm::make(ps, prefix + ".app_norm1", channels)),
      an2_(BatchNorm::make(ps, prefix + ".app_norm2", channels)),
      pn1_(BatchNorm::make(ps, prefix + ".pose_norm1", channels)) {}

PaanBlock::Out PaanBlock::forward(const NodePtr& f_app, const NodePtr& f_pose, bool training) const {
    require_same_shape(f_app->value, f_pose->value, "paan_block streams");

    auto pose_next = p2_(relu(pn1_(p1_(f_pose), training)));
    auto mask = sigmoid(pose_next);
    auto app_conv = relu(an2_(a2_(relu(an1_(a1_(f_app), training))), training));
    auto app_next = add(mul(mask, app_conv), f_app);
    return {app_next, pose_next, mask};
}

Paan::Paan(ParamSet& ps, const std::string& prefix, int blocks, int channels, Rng& rng) {
    if (blocks < 1) throw ConfigError("paan: block count must be >= 1, got " + std::to_string(blocks));
    for (int i = 0; i < blocks; ++i)
        blocks_.emplace_back(ps, prefix + ".block" + std::to_string(i + 1), channels, rng);
}

PaanState Paan::forward(const NodePtr& f_app0, const NodePtr& f_pose0, bool training) const {
    PaanState state{f_app0, f_pose0, {}};
    state.masks.reserve(blocks_.size());
    for (const auto& block : blocks_) {
        auto out = block.forward(state.f_app, state.f_pose, training);
        state.f_app = out.f_app;
        state.f_pose = out.f_pose;
        state.masks.push_back(out.mask);
    }
    return state;
}

} // namespace posegan
