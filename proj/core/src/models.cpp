#include "posegan/models.hpp"

namespace posegan {

using namespace nn;

Models Models::build(const TrainConfig& cfg, int num_classes) {
    cfg.validate();
    if (num_classes < 1) throw ConfigError("models: need at least one identity class");
    Models m;
    m.num_classes = num_classes;

    // Initialization draws are ordered per group so that two builds with the
    // same config produce identical parameters.
    Rng gen_rng(derive_seed(cfg.seed, "init.generator"));
    m.appearance_encoder = std::make_unique<Encoder>(m.gen_params, "e_a", 3, cfg.channels, gen_rng);
    m.pose_encoder = std::make_unique<Encoder>(m.gen_params, "e_p", 18, cfg.channels, gen_rng);
    m.paan = std::make_unique<Paan>(m.gen_params, "paan", cfg.blocks_n, cfg.channels, gen_rng);
    m.pagn = std::make_unique<Pagn>(m.gen_params, "pagn", cfg.blocks_n, cfg.channels,
                                    cfg.image_stream_channels, gen_rng);

    Rng reid_rng(derive_seed(cfg.seed, "init.reid"));
    m.semantic_encoder = std::make_unique<SemanticEncoder>(m.reid_params, "e", cfg.semantic_base, reid_rng);
    m.embed_head =
        std::make_unique<EmbedHead>(m.reid_params, "embed", m.semantic_encoder->feature_dim(), reid_rng);
    m.classifier = std::make_unique<Classifier>(m.reid_params, "classifier",
                                                m.semantic_encoder->feature_dim(), num_classes, reid_rng);

    Rng d_app_rng(derive_seed(cfg.seed, "init.d_appearance"));
    m.d_appearance_net = std::make_unique<Discriminator>(m.d_app_params, "d_i", 6, cfg.disc_base, d_app_rng);
    Rng d_pose_rng(derive_seed(cfg.seed, "init.d_pose"));
    m.d_pose_net = std::make_unique<Discriminator>(m.d_pose_params, "d_p", 21, cfg.disc_base, d_pose_rng);
    return m;
}

Models::GenOut Models::generate(const Tensor& cond_images, const Tensor& cond_heatmaps,
                                const Tensor& target_heatmaps, bool training) const {
    auto i_c = constant(cond_images);
    auto p_c = constant(cond_heatmaps);
    auto p_t = constant(target_heatmaps);

    auto f_app0 = appearance_encoder->forward(i_c, training);
    auto f_pose0 = pose_encoder->forward(p_c, training);
    auto paan_state = paan->forward(f_app0, f_pose0, training);
    auto target_feat = pose_encoder->forward(p_t, training);
    auto pagn_out = pagn->forward(paan_state.f_app, paan_state.f_pose, target_feat, training);

    GenOut out;
    out.image = pagn_out.image;
    out.paan_masks = std::move(paan_state.masks);
    out.pagn_masks = std::move(pagn_out.masks);
    return out;
}

Tensor Models::embed_images(const Tensor& images) const {
    auto feats = semantic_encoder->forward(constant(images), false);
    return embed_head->forward(feats)->value;
}

} // namespace posegan
