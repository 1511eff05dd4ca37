#include "posegan/discriminators.hpp"

namespace posegan {

using namespace nn;

Discriminator::Discriminator(ParamSet& ps, const std::string& prefix, int in_channels, int base_width, Rng& rng)
    : c1_(Conv2d::make(ps, prefix + ".conv1", in_channels, base_width, 4, 2, 1, rng)),
      c2_(Conv2d::make(ps, prefix + ".conv2", base_width, 2 * base_width, 4, 2, 1, rng)),
      c3_(Conv2d::make(ps, prefix + ".conv3", 2 * base_width, 4 * base_width, 4, 2, 1, rng)),
      c4_(Conv2d::make(ps, prefix + ".conv4", 4 * base_width, 8 * base_width, 4, 2, 1, rng)),
      n2_(BatchNorm::make(ps, prefix + ".norm2", 2 * base_width)),
      n3_(BatchNorm::make(ps, prefix + ".norm3", 4 * base_width)),
      n4_(BatchNorm::make(ps, prefix + ".norm4", 8 * base_width)),
      fc_(LinearLayer::make(ps, prefix + ".fc", 8 * base_width, 1, rng)),
      in_channels_(in_channels) {}

NodePtr Discriminator::score(const NodePtr& x, bool training) const {
    if (x->value.ndim() != 4 || x->value.dim(1) != in_channels_)
        throw ShapeError("discriminator expects [N," + std::to_string(in_channels_) + ",H,W], got " +
                         shape_str(x->value.shape()));
    auto h = leaky_relu(c1_(x), 0.2);
    h = leaky_relu(n2_(c2_(h), training), 0.2);
    h = leaky_relu(n3_(c3_(h), training), 0.2);
    h = leaky_relu(n4_(c4_(h), training), 0.2);
    auto logits = fc_(global_avg_pool(h));
    return clamp(sigmoid(logits), kScoreEps, 1.0 - kScoreEps);
}

NodePtr d_appearance(const Discriminator& d, const NodePtr& cond, const NodePtr& candidate, bool training) {
    if (cond->value.ndim() != 4 || cond->value.dim(1) != 3 || candidate->value.ndim() != 4 ||
        candidate->value.dim(1) != 3)
        throw ShapeError("d_appearance expects two [N,3,H,W] images");
    return d.score(concat_channels(cond, candidate), training);
}

NodePtr d_pose(const Discriminator& d, const NodePtr& pose_heatmap, const NodePtr& candidate, bool training) {
    if (pose_heatmap->value.ndim() != 4 || pose_heatmap->value.dim(1) != 18)
        throw ShapeError("d_pose expects an [N,18,H,W] heatmap, got " + shape_str(pose_heatmap->value.shape()));
    if (candidate->value.ndim() != 4 || candidate->value.dim(1) != 3)
        throw ShapeError("d_pose expects an [N,3,H,W] candidate image");
    return d.score(concat_channels(pose_heatmap, candidate), training);
}

NodePtr gan_objective(const NodePtr& real_score, const NodePtr& fake_score) {
    require_same_shape(real_score->value, fake_score->value, "gan_objective");
    auto real_term = mean_all(log_elem(real_score));
    auto fake_term = mean_all(log_elem(add_scalar(mul_scalar(fake_score, -1.0), 1.0)));
    return add(real_term, fake_term);
}

NodePtr generator_adversarial(const NodePtr& fake_score, bool non_saturating) {
    if (non_saturating) return mul_scalar(mean_all(log_elem(fake_score)), -1.0);
    return mean_all(log_elem(add_scalar(mul_scalar(fake_score, -1.0), 1.0)));
}

double gan_loss_value(const Discriminator& d, const NodePtr& cond, const NodePtr& real_target,
                      const NodePtr& fake, bool training) {
    NodePtr real_score, fake_score;
    if (d.in_channels() == 21) {
        real_score = d_pose(d, cond, real_target, training);
        fake_score = d_pose(d, cond, fake, training);
    } else {
        real_score = d_appearance(d, cond, real_target, training);
        fake_score = d_appearance(d, cond, fake, training);
    }
    return gan_objective(real_score, fake_score)->value[0];
}

} // namespace posegan
