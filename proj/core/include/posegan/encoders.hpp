#pragma once

#include "posegan/layers.hpp"

namespace posegan {

// Appearance encoder E_A (3-channel input) and pose encoder E_P (18-channel
// input) share this structure: two 3x3 stride-2 conv blocks, each followed by
// batch norm and ReLU, so a HxW input maps to width x H/4 x W/4.
class Encoder {
public:
    Encoder(nn::ParamSet& ps, const std::string& prefix, int in_channels, int width, Rng& rng);

    nn::NodePtr forward(const nn::NodePtr& x, bool training) const;
    int width() const { return width_; }
    int in_channels() const { return in_channels_; }

private:
    nn::Conv2d c1_, c2_;
    nn::BatchNorm n1_, n2_;
    int in_channels_, width_;
};

// Semantic / re-ID backbone E: four 3x3 stride-2 conv blocks with widths
// base, 2*base, 4*base, 8*base, global average pooling into a D = 8*base
// feature vector.
class SemanticEncoder {
public:
    SemanticEncoder(nn::ParamSet& ps, const std::string& prefix, int base_width, Rng& rng);

    nn::NodePtr forward(const nn::NodePtr& img, bool training) const; // [N, D]
    int feature_dim() const { return 8 * base_; }

private:
    std::vector<nn::Conv2d> convs_;
    std::vector<nn::BatchNorm> norms_;
    int base_;
};

} // namespace posegan
