#pragma once

#include <memory>

#include "posegan/config.hpp"
#include "posegan/discriminators.hpp"
#include "posegan/encoders.hpp"
#include "posegan/paan.hpp"
#include "posegan/pagn.hpp"
#include "posegan/reid.hpp"

namespace posegan {

// All networks of one run plus their parameter registries, grouped the way
// the optimizers and the checkpoint format see them: "generator" (E_A, E_P,
// PAAN, PAGN), "reid" (E, embedding head, classifier), and one group per
// discriminator.
struct Models {
    nn::ParamSet gen_params, reid_params, d_app_params, d_pose_params;

    std::unique_ptr<Encoder> appearance_encoder; // E_A
    std::unique_ptr<Encoder> pose_encoder;       // E_P
    std::unique_ptr<Paan> paan;
    std::unique_ptr<Pagn> pagn;
    std::unique_ptr<SemanticEncoder> semantic_encoder; // E
    std::unique_ptr<EmbedHead> embed_head;
    std::unique_ptr<Classifier> classifier;
    std::unique_ptr<Discriminator> d_appearance_net;
    std::unique_ptr<Discriminator> d_pose_net;

    int num_classes = 0;

    static Models build(const TrainConfig& cfg, int num_classes);

    struct GenOut {
        nn::NodePtr image; // [N,3,H,W]
        std::vector<nn::NodePtr> paan_masks;
        std::vector<nn::NodePtr> pagn_masks;
    };
    // Full generator pass: encode condition image and poses, run PAAN then
    // PAGN. Inputs are value tensors; leaves are created internally.
    GenOut generate(const nn::Tensor& cond_images, const nn::Tensor& cond_heatmaps,
                    const nn::Tensor& target_heatmaps, bool training) const;

    // Embedding pipeline E -> Theta_w for evaluation, eval mode.
    nn::Tensor embed_images(const nn::Tensor& images) const; // [N,128]
};

} // namespace posegan
