#pragma once

#include "posegan/layers.hpp"

namespace posegan {

// Shared conditional discriminator stack: four 4x4 stride-2 convolutions
// (widths base, 2*base, 4*base, 8*base), leaky-ReLU 0.2 throughout and batch
// norm after every conv but the first, global average pooling, then a linear
// layer and sigmoid. Scores are clamped to (eps, 1-eps) so the log losses
// stay finite for any parameter values.
class Discriminator {
public:
    static constexpr double kScoreEps = 1e-7;

    Discriminator(nn::ParamSet& ps, const std::string& prefix, int in_channels, int base_width, Rng& rng);

    // x is the depth-concatenated (condition, candidate) stack; returns
    // scores [N,1] strictly inside (0,1).
    nn::NodePtr score(const nn::NodePtr& x, bool training) const;
    int in_channels() const { return in_channels_; }

private:
    nn::Conv2d c1_, c2_, c3_, c4_;
    nn::BatchNorm n2_, n3_, n4_;
    nn::LinearLayer fc_;
    int in_channels_;
};

// D_I(cond image, candidate image): channel-concatenates to 6xHxW.
nn::NodePtr d_appearance(const Discriminator& d, const nn::NodePtr& cond, const nn::NodePtr& candidate,
                         bool training);
// D_P(pose heatmap, candidate image): channel-concatenates to 21xHxW.
nn::NodePtr d_pose(const Discriminator& d, const nn::NodePtr& pose_heatmap, const nn::NodePtr& candidate,
                   bool training);

// E[log D(real) + log(1 - D(fake))]; the discriminator ascends this.
nn::NodePtr gan_objective(const nn::NodePtr& real_score, const nn::NodePtr& fake_score);
// Generator adversarial term: non-saturating -E[log D(fake)] by default,
// literal E[log(1 - D(fake))] otherwise.
nn::NodePtr generator_adversarial(const nn::NodePtr& fake_score, bool non_saturating = true);

// Value-level convenience used by tests: builds both discriminator passes and
// returns the Eq. objective value.
double gan_loss_value(const Discriminator& d, const nn::NodePtr& cond, const nn::NodePtr& real_target,
                      const nn::NodePtr& fake, bool training = false);

} // namespace posegan
