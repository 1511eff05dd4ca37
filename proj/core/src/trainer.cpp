#include "posegan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "posegan/image.hpp"

namespace posegan {

using namespace nn;

void check_loss_finite(const LossComponents& c) {
    const std::pair<const char*, double> parts[] = {
        {"L_gan_I", c.gan_appearance}, {"L_gan_P", c.gan_pose}, {"L_R", c.rec},
        {"L_S", c.semantic},           {"L_quartet", c.quartet}, {"L_id", c.id},
    };
    for (const auto& [name, v] : parts)
        if (!std::isfinite(v)) throw DataError(std::string("non-finite loss component: ") + name);
}

Trainer::Trainer(TrainConfig cfg, const DatasetManifest& manifest)
    : cfg_(std::move(cfg)),
      canvas_(manifest.canvas),
      models_(Models::build(cfg_, std::max<int>(1, static_cast<int>(manifest.split_identities(Split::Train).size())))),
      shuffle_rng_(derive_seed(cfg_.seed, "trainer.shuffle")),
      quartet_rng_(derive_seed(cfg_.seed, "trainer.quartet")),
      dropout_rng_(derive_seed(cfg_.seed, "trainer.dropout")) {
    cfg_.validate();
    if (canvas_.h % 4 != 0 || canvas_.w % 4 != 0)
        throw ConfigError("trainer: canvas must be divisible by 4, got " + std::to_string(canvas_.h) + "x" +
                          std::to_string(canvas_.w));

    const auto train_records = manifest.split_records(Split::Train);
    if (train_records.empty()) throw DataError("trainer: manifest has no train split");
    const auto train_ids = manifest.split_identities(Split::Train);
    std::map<int, int> class_of;
    for (std::size_t i = 0; i < train_ids.size(); ++i) class_of[train_ids[i]] = static_cast<int>(i);

    const double sigma = default_sigma(canvas_);
    std::map<int, std::vector<int>> by_id;
    for (const auto* rec : train_records) {
        const Tensor img = load_png_image(manifest.image_file(*rec));
        if (img.dim(1) != canvas_.h || img.dim(2) != canvas_.w)
            throw DataError("trainer: image size mismatch for " + rec->image_path);
        const Keypoints kps = load_keypoints(manifest.keypoints_file(*rec), canvas_);
        images_.push_back(img);
        heatmaps_.push_back(keypoints_to_heatmap(kps, canvas_, sigma).data);
        record_class_.push_back(class_of.at(rec->identity_id));
        by_id[rec->identity_id].push_back(static_cast<int>(images_.size()) - 1);
    }

    // Ordered same-identity (condition, target) pairs; every training example
    // has a ground-truth target image by construction.
    for (const auto& [id, idxs] : by_id)
        for (int a : idxs)
            for (int b : idxs)
                if (a != b) pairs_.push_back({a, b});
    if (cfg_.max_pairs > 0 && static_cast<int>(pairs_.size()) > cfg_.max_pairs)
        pairs_.resize(static_cast<std::size_t>(cfg_.max_pairs));
    if (pairs_.empty()) throw DataError("trainer: no condition/target pairs (need >= 2 images per identity)");

    pair_order_.resize(pairs_.size());
    for (std::size_t i = 0; i < pairs_.size(); ++i) pair_order_[i] = static_cast<int>(i);

    opt_gen_.emplace([&] {
        auto nodes = models_.gen_params.param_nodes();
        const auto reid_nodes = models_.reid_params.param_nodes();
        nodes.insert(nodes.end(), reid_nodes.begin(), reid_nodes.end());
        return nodes;
    }());
    opt_d_app_.emplace(models_.d_app_params.param_nodes());
    opt_d_pose_.emplace(models_.d_pose_params.param_nodes());
}

OptimizerStates Trainer::optimizer_states() {
    return {&*opt_gen_, &*opt_d_app_, &*opt_d_pose_};
}

Trainer::PairTensors Trainer::pair_tensors(int pair_index) const {
    if (pair_index < 0 || pair_index >= static_cast<int>(pairs_.size()))
        throw IndexError("pair index out of range");
    const Pair& p = pairs_[static_cast<std::size_t>(pair_index)];
    return {&images_[static_cast<std::size_t>(p.cond)], &heatmaps_[static_cast<std::size_t>(p.cond)],
            &heatmaps_[static_cast<std::size_t>(p.target)], &images_[static_cast<std::size_t>(p.target)],
            record_class_[static_cast<std::size_t>(p.cond)]};
}

void Trainer::next_batch(std::vector<int>& out_pairs) {
    out_pairs.clear();
    for (int i = 0; i < cfg_.batch_size; ++i) {
        if (pair_cursor_ == 0) {
            // Fisher-Yates reshuffle at each epoch boundary.
            for (std::size_t j = pair_order_.size(); j > 1; --j)
                std::swap(pair_order_[j - 1], pair_order_[static_cast<std::size_t>(shuffle_rng_.uniform_int(j))]);
        }
        out_pairs.push_back(pair_order_[pair_cursor_]);
        pair_cursor_ = (pair_cursor_ + 1) % pair_order_.size();
    }
}

Tensor Trainer::gather_images(const std::vector<int>& pair_idx, bool target) const {
    std::vector<Tensor> rows;
    rows.reserve(pair_idx.size());
    for (int pi : pair_idx) {
        const Pair& p = pairs_[static_cast<std::size_t>(pi)];
        rows.push_back(images_[static_cast<std::size_t>(target ? p.target : p.cond)]);
    }
    return stack_images(rows);
}

Tensor Trainer::gather_heatmaps(const std::vector<int>& pair_idx, bool target) const {
    const Tensor& first = heatmaps_[static_cast<std::size_t>(pairs_[static_cast<std::size_t>(pair_idx[0])].cond)];
    Tensor out({static_cast<int>(pair_idx.size()), first.dim(0), first.dim(1), first.dim(2)});
    const long sz = first.numel();
    for (std::size_t i = 0; i < pair_idx.size(); ++i) {
        const Pair& p = pairs_[static_cast<std::size_t>(pair_idx[i])];
        const Tensor& hm = heatmaps_[static_cast<std::size_t>(target ? p.target : p.cond)];
        std::copy(hm.data(), hm.data() + sz, out.data() + static_cast<long>(i) * sz);
    }
    return out;
}

LossReport Trainer::train_step() { return step_impl(true, true, true); }

LossReport Trainer::debug_step(bool run_phase1, bool run_phase2, bool apply_updates) {
    return step_impl(run_phase1, run_phase2, apply_updates);
}

LossReport Trainer::step_impl(bool run_phase1, bool run_phase2, bool apply_updates) {
    const int steps_per_epoch =
        static_cast<int>((pairs_.size() + static_cast<std::size_t>(cfg_.batch_size) - 1) /
                         static_cast<std::size_t>(cfg_.batch_size));
    const int epoch = std::min<int>(cfg_.epochs, static_cast<int>(step_ / steps_per_epoch));
    const double lr = lr_schedule(std::min(epoch, cfg_.epochs), cfg_);

    std::vector<int> batch;
    next_batch(batch);
    const int b = static_cast<int>(batch.size());

    const Tensor i_c = gather_images(batch, false);
    const Tensor i_t = gather_images(batch, true);
    const Tensor hm_c = gather_heatmaps(batch, false);
    const Tensor hm_t = gather_heatmaps(batch, true);
    std::vector<int> batch_classes(static_cast<std::size_t>(b));
    for (int i = 0; i < b; ++i)
        batch_classes[static_cast<std::size_t>(i)] =
            record_class_[static_cast<std::size_t>(pairs_[static_cast<std::size_t>(batch[static_cast<std::size_t>(i)])].cond)];

    LossReport report;
    report.step = step_;
    report.lr = lr;

    // Shared generator forward; phase 1 sees it detached, phase 2 reuses the
    // same graph so the generator runs once per step.
    auto gen = models_.generate(i_c, hm_c, hm_t, true);
    for (const auto& masks : {gen.paan_masks, gen.pagn_masks})
        for (const auto& m : masks) {
            report.mask_min = std::min(report.mask_min, m->value.min());
            report.mask_max = std::max(report.mask_max, m->value.max());
        }

    auto i_c_node = constant(i_c);
    auto i_t_node = constant(i_t);
    auto hm_t_node = constant(hm_t);

    // Phase 1: discriminators ascend Eq. objectives against detached fakes.
    if (run_phase1) {
        auto fake = detach(gen.image);
        if (cfg_.use_d_appearance) {
            auto real_score = d_appearance(*models_.d_appearance_net, i_c_node, i_t_node, true);
            auto fake_score = d_appearance(*models_.d_appearance_net, i_c_node, fake, true);
            auto objective = gan_objective(real_score, fake_score);
            report.components.gan_appearance = objective->value[0];
            auto d_loss = mul_scalar(objective, -1.0);
            backward(d_loss);
            if (apply_updates) opt_d_app_->step(lr);
        }
        if (cfg_.use_d_pose) {
            auto real_score = d_pose(*models_.d_pose_net, hm_t_node, i_t_node, true);
            auto fake_score = d_pose(*models_.d_pose_net, hm_t_node, fake, true);
            auto objective = gan_objective(real_score, fake_score);
            report.components.gan_pose = objective->value[0];
            auto d_loss = mul_scalar(objective, -1.0);
            backward(d_loss);
            if (apply_updates) opt_d_pose_->step(lr);
        }
    }

    // Phase 2: generator + re-ID heads descend the weighted total.
    if (run_phase2) {
        NodePtr objective = constant(Tensor::scalar(0.0));

        if (cfg_.use_d_appearance) {
            auto fake_score = d_appearance(*models_.d_appearance_net, i_c_node, gen.image, true);
            objective = add(objective,
                            mul_scalar(generator_adversarial(fake_score, cfg_.non_saturating), cfg_.weights.gan));
        }
        if (cfg_.use_d_pose) {
            auto fake_score = d_pose(*models_.d_pose_net, hm_t_node, gen.image, true);
            objective = add(objective,
                            mul_scalar(generator_adversarial(fake_score, cfg_.non_saturating), cfg_.weights.gan));
        }

        auto rec = recon_l1(gen.image, i_t_node);
        report.components.rec = rec->value[0];
        objective = add(objective, mul_scalar(rec, cfg_.weights.rec));

        if (cfg_.use_semantic_loss && cfg_.weights.semantic > 0) {
            auto both = models_.semantic_encoder->forward(concat_batch(i_c_node, gen.image), true);
            auto sem = semantic_consistency(slice_batch(both, 0, b), slice_batch(both, b, b));
            report.components.semantic = sem->value[0];
            objective = add(objective, mul_scalar(sem, cfg_.weights.semantic));
        }

        const bool want_quartet = cfg_.weights.quartet > 0;
        const bool want_id = cfg_.weights.id > 0;
        if (want_quartet || want_id) {
            // Pool: every real training image plus the generated ring buffer,
            // all labeled by source identity.
            std::vector<int> pool_classes = record_class_;
            for (const auto& e : generated_pool_) pool_classes.push_back(e.class_index);

            std::vector<Quartet> quartets(static_cast<std::size_t>(b));
            for (auto& q : quartets) q = sample_quartet(pool_classes, quartet_rng_);

            const auto pool_image = [&](int idx) -> const Tensor& {
                const int real_count = static_cast<int>(record_class_.size());
                return idx < real_count ? images_[static_cast<std::size_t>(idx)]
                                        : generated_pool_[static_cast<std::size_t>(idx - real_count)].image;
            };
            std::vector<Tensor> qimgs;
            std::vector<int> qlabels;
            qimgs.reserve(static_cast<std::size_t>(4 * b));
            qlabels.reserve(static_cast<std::size_t>(4 * b));
            for (const int Quartet::*role : {&Quartet::anchor, &Quartet::positive, &Quartet::neg1, &Quartet::neg2})
                for (const auto& q : quartets) {
                    const int idx = q.*role;
                    qimgs.push_back(pool_image(idx));
                    qlabels.push_back(pool_classes[static_cast<std::size_t>(idx)]);
                }
            auto feats = models_.semantic_encoder->forward(constant(stack_images(qimgs)), true);

            if (want_quartet) {
                auto emb = models_.embed_head->forward(feats);
                auto q_loss = quartet_loss(slice_batch(emb, 0, b), slice_batch(emb, b, b),
                                           slice_batch(emb, 2 * b, b), slice_batch(emb, 3 * b, b), cfg_.margins,
                                           cfg_.quartet_form);
                report.components.quartet = q_loss->value[0];
                objective = add(objective, mul_scalar(q_loss, cfg_.weights.quartet));
            }
            if (want_id) {
                auto logits = models_.classifier->forward(feats, true, dropout_rng_);
                auto ce = id_loss(logits, qlabels);
                report.components.id = ce->value[0];
                objective = add(objective, mul_scalar(ce, cfg_.weights.id));
            }
        }

        check_loss_finite(report.components);
        backward(objective);
        if (apply_updates) opt_gen_->step(lr);

        // Feed the augmented pool for later quartets.
        if (cfg_.gen_pool_size > 0) {
            for (int i = 0; i < b; ++i) {
                GeneratedEntry e{batch_row(gen.image->value, i), batch_classes[static_cast<std::size_t>(i)]};
                if (static_cast<int>(generated_pool_.size()) < cfg_.gen_pool_size) {
                    generated_pool_.push_back(std::move(e));
                } else {
                    generated_pool_[generated_next_ % generated_pool_.size()] = std::move(e);
                    ++generated_next_;
                }
            }
        }
    }

    check_loss_finite(report.components);
    report.total = total_loss(report.components, cfg_.weights);
    if (!std::isfinite(report.total)) throw DataError("non-finite loss component: total");
    ++step_;
    return report;
}

void Trainer::train(const std::filesystem::path& out_dir, std::ostream* log, const StepCallback& callback) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!std::filesystem::is_directory(out_dir)) throw IoError("cannot create output directory: " + out_dir.string());

    const int steps_per_epoch =
        static_cast<int>((pairs_.size() + static_cast<std::size_t>(cfg_.batch_size) - 1) /
                         static_cast<std::size_t>(cfg_.batch_size));
    long total_steps = static_cast<long>(cfg_.epochs) * steps_per_epoch;
    if (cfg_.steps > 0) total_steps = std::min(total_steps, cfg_.steps);

    char name[64];
    for (long s = 0; s < total_steps; ++s) {
        const LossReport report = train_step();
        if (log) {
            (*log) << report.step << ", " << report.lr << ", " << report.components.gan_appearance << ", "
                   << report.components.gan_pose << ", " << report.components.rec << ", "
                   << report.components.semantic << ", " << report.components.quartet << ", "
                   << report.components.id << ", " << report.total << "\n";
        }
        if (callback) callback(report);

        const long epoch_done = (s + 1) / steps_per_epoch;
        const bool epoch_boundary = (s + 1) % steps_per_epoch == 0;
        if ((epoch_boundary && epoch_done % cfg_.checkpoint_every == 0) || s + 1 == total_steps) {
            const long tag = s + 1 == total_steps ? (total_steps + steps_per_epoch - 1) / steps_per_epoch : epoch_done;
            std::snprintf(name, sizeof(name), "ckpt_%05ld", tag);
            save(out_dir / name, tag);
            std::snprintf(name, sizeof(name), "grid_%05ld.png", tag);
            write_sample_grid(out_dir / name);
        }
    }
}

nn::Tensor Trainer::generate_eval(const Tensor& cond_images, const Tensor& cond_heatmaps,
                                  const Tensor& target_heatmaps) const {
    return models_.generate(cond_images, cond_heatmaps, target_heatmaps, false).image->value;
}

void Trainer::save(const std::filesystem::path& path, long epoch) {
    CheckpointMeta meta{epoch, models_.num_classes, cfg_.to_text()};
    save_checkpoint(path, meta, models_, optimizer_states());
}

namespace {
// Channel-max projection of an 18-channel heatmap to a gray RGB image.
Tensor heatmap_preview(const Tensor& hm) {
    const int h = hm.dim(1), w = hm.dim(2);
    Tensor img({3, h, w}, -1.0);
    for (int c = 0; c < hm.dim(0); ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double v = hm[(static_cast<long>(c) * h + y) * w + x] * 2.0 - 1.0;
                for (int ch = 0; ch < 3; ++ch) {
                    double& px = img[(static_cast<long>(ch) * h + y) * w + x];
                    px = std::max(px, v);
                }
            }
    return img;
}
} // namespace

void Trainer::write_sample_grid(const std::filesystem::path& path) {
    const int rows = std::min<int>(cfg_.grid_rows, static_cast<int>(pairs_.size()));
    std::vector<int> idx(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) idx[static_cast<std::size_t>(i)] = i;
    const Tensor i_c = gather_images(idx, false);
    const Tensor hm_c = gather_heatmaps(idx, false);
    const Tensor hm_t = gather_heatmaps(idx, true);
    const Tensor generated = generate_eval(i_c, hm_c, hm_t);

    std::vector<std::vector<Tensor>> grid;
    for (int i = 0; i < rows; ++i) {
        std::vector<Tensor> row;
        row.push_back(batch_row(i_c, i));
        Tensor hmc({hm_c.dim(1), hm_c.dim(2), hm_c.dim(3)});
        std::copy(hm_c.data() + static_cast<long>(i) * hmc.numel(),
                  hm_c.data() + static_cast<long>(i + 1) * hmc.numel(), hmc.data());
        row.push_back(heatmap_preview(hmc));
        Tensor hmt({hm_t.dim(1), hm_t.dim(2), hm_t.dim(3)});
        std::copy(hm_t.data() + static_cast<long>(i) * hmt.numel(),
                  hm_t.data() + static_cast<long>(i + 1) * hmt.numel(), hmt.data());
        row.push_back(heatmap_preview(hmt));
        row.push_back(batch_row(generated, i));
        grid.push_back(std::move(row));
    }
    save_png_image(path, compose_grid(grid));
}

} // namespace posegan
