#pragma once

#include "posegan/layers.hpp"

namespace posegan {

// Adaptive instance normalization: per channel, the content map is
// renormalized to the style map's spatial mean and standard deviation.
// `eps` guards the content variance; the style deviation gets only a tiny
// denormal guard so moment matching stays exact to ~1e-12.
nn::NodePtr adain(const nn::NodePtr& style, const nn::NodePtr& content, double eps = 1e-5);

// One generation block. The style path deconvolves the concatenation of the
// generator appearance stream with the encoded target pose; the content path
// is a per-block 1x1 convolution of the PAAN output appearance map. AdaIN
// fuses them; the block emits
//   f_g' = adain(a, b) + a,
//   mask = sigmoid(conv-norm-relu(adain(a, b))),
//   i_g' = deconv(i_g || mask * adain(a, b)).
class PagnBlock {
public:
    PagnBlock(nn::ParamSet& ps, const std::string& prefix, int channels, int image_channels, Rng& rng);

    struct Out {
        nn::NodePtr f_g;
        nn::NodePtr i_g;
        nn::NodePtr mask;
    };
    Out forward(const nn::NodePtr& f_g, const nn::NodePtr& i_g, const nn::NodePtr& pose_feat,
                const nn::NodePtr& f_app, bool training) const;

    double adain_eps = 1e-5;

private:
    nn::Deconv2d style_deconv_;
    nn::Conv2d content_1x1_;
    nn::Conv2d mask_conv_;
    nn::BatchNorm mask_norm_;
    nn::Deconv2d image_deconv_;
};

struct PagnResult {
    nn::NodePtr image;              // [N,3,H,W] in [-1,1]
    std::vector<nn::NodePtr> masks; // one per block
};

// N generation blocks at encoder resolution followed by a x4 upsampling head
// (two stride-2 transposed convolutions) and a tanh projection to RGB.
// Stream initialization: f_g0 = PAAN final pose map, i_g0 = 1x1 conv of the
// PAAN final appearance map.
class Pagn {
public:
    Pagn(nn::ParamSet& ps, const std::string& prefix, int blocks, int channels, int image_channels, Rng& rng);

    PagnResult forward(const nn::NodePtr& f_app, const nn::NodePtr& f_pose_final,
                       const nn::NodePtr& target_pose_feat, bool training) const;
    int blocks() const { return static_cast<int>(blocks_.size()); }
    const PagnBlock& block(int i) const { return blocks_[static_cast<std::size_t>(i)]; }

private:
    nn::Conv2d init_1x1_;
    std::vector<PagnBlock> blocks_;
    nn::Deconv2d up1_, up2_;
    nn::BatchNorm un1_, un2_;
    nn::Conv2d to_rgb_;
};

} // namespace posegan
