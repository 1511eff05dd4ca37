#pragma once

#include "posegan/layers.hpp"

namespace posegan {

// One two-stream attention block. The pose stream runs conv-norm-ReLU-conv
// (no activation on the final layer, so the sigmoid mask can reach the whole
// (0,1) range); its output is both the next pose map and, through the
// sigmoid, the attention mask. The appearance stream runs two conv-norm-ReLU
// layers, is gated by the mask, and is added back onto the block's input
// appearance map.
class PaanBlock {
public:
    PaanBlock(nn::ParamSet& ps, const std::string& prefix, int channels, Rng& rng);

    struct Out {
        nn::NodePtr f_app;  // refined appearance map
        nn::NodePtr f_pose; // new pose map (pre-sigmoid)
        nn::NodePtr mask;   // sigmoid attention mask in [0,1]
    };
    Out forward(const nn::NodePtr& f_app, const nn::NodePtr& f_pose, bool training) const;

private:
    nn::Conv2d a1_, a2_, p1_, p2_;
    nn::BatchNorm an1_, an2_, pn1_;
};

struct PaanState {
    nn::NodePtr f_app;
    nn::NodePtr f_pose;
    std::vector<nn::NodePtr> masks; // one per block
};

// N sequential blocks refining the appearance map under pose-derived
// attention; block t consumes block t-1 outputs.
class Paan {
public:
    Paan(nn::ParamSet& ps, const std::string& prefix, int blocks, int channels, Rng& rng);

    PaanState forward(const nn::NodePtr& f_app0, const nn::NodePtr& f_pose0, bool training) const;
    int blocks() const { return static_cast<int>(blocks_.size()); }
    const PaanBlock& block(int i) const { return blocks_[static_cast<std::size_t>(i)]; }

private:
    std::vector<PaanBlock> blocks_;
};

} // namespace posegan
