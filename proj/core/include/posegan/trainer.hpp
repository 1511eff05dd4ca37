#pragma once

#include <functional>
#include <optional>
#include <ostream>

#include "posegan/checkpoint.hpp"
#include "posegan/manifest.hpp"
#include "posegan/models.hpp"

namespace posegan {

struct LossReport {
    long step = 0;
    double lr = 0;
    LossComponents components;
    double total = 0;
    double mask_min = 1; // extrema over every PAAN/PAGN mask this step
    double mask_max = 0;
};

// Throws DataError naming the first non-finite component.
void check_loss_finite(const LossComponents& c);

// Joint training of the generator (encoders + PAAN + PAGN), the re-ID heads
// and the two discriminators. Each step runs two phases: the discriminators
// ascend their objectives against a detached generator output, then the
// generator and re-ID heads descend the weighted total with the ablation
// flags applied. All state lives in memory; datasets are loaded once.
class Trainer {
public:
    Trainer(TrainConfig cfg, const DatasetManifest& manifest);

    // Runs the configured schedule, writing checkpoints, sample grids and a
    // per-step log line ("step, lr, L_gan_I, L_gan_P, L_R, L_S, L_quartet,
    // L_id, total"). The callback, when set, observes every report.
    using StepCallback = std::function<void(const LossReport&)>;
    void train(const std::filesystem::path& out_dir, std::ostream* log = nullptr,
               const StepCallback& callback = nullptr);

    // Single optimization step on the next batch.
    LossReport train_step();
    // Test hook: optionally skip phases or leave gradients in place.
    LossReport debug_step(bool run_phase1, bool run_phase2, bool apply_updates);

    const TrainConfig& config() const { return cfg_; }
    Models& models() { return models_; }
    const Models& models() const { return models_; }
    OptimizerStates optimizer_states();
    long current_step() const { return step_; }
    int pair_count() const { return static_cast<int>(pairs_.size()); }
    int num_classes() const { return models_.num_classes; }

    // Condition/target tensors of training pair i (for probes and grids).
    struct PairTensors {
        const nn::Tensor *cond_image, *cond_heatmap, *target_heatmap, *target_image;
        int class_index;
    };
    PairTensors pair_tensors(int pair_index) const;

    // Generator output for given batch tensors, eval mode.
    nn::Tensor generate_eval(const nn::Tensor& cond_images, const nn::Tensor& cond_heatmaps,
                             const nn::Tensor& target_heatmaps) const;

    void save(const std::filesystem::path& path, long epoch);
    void write_sample_grid(const std::filesystem::path& path);

private:
    struct Pair {
        int cond = 0, target = 0; // indices into records_
    };
    struct GeneratedEntry {
        nn::Tensor image;
        int class_index = 0;
    };

    LossReport step_impl(bool run_phase1, bool run_phase2, bool apply_updates);
    void next_batch(std::vector<int>& out_pairs);
    nn::Tensor gather_images(const std::vector<int>& pair_idx, bool target) const;
    nn::Tensor gather_heatmaps(const std::vector<int>& pair_idx, bool target) const;

    TrainConfig cfg_;
    Canvas canvas_;
    Models models_;
    std::optional<nn::Adam> opt_gen_, opt_d_app_, opt_d_pose_;

    std::vector<nn::Tensor> images_;   // per train record
    std::vector<nn::Tensor> heatmaps_; // per train record
    std::vector<int> record_class_;    // per train record
    std::vector<Pair> pairs_;
    std::vector<int> pair_order_;
    std::size_t pair_cursor_ = 0;
    Rng shuffle_rng_, quartet_rng_, dropout_rng_;

    std::vector<GeneratedEntry> generated_pool_;
    std::size_t generated_next_ = 0;

    long step_ = 0;
};

} // namespace posegan
