#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "posegan/losses.hpp"

namespace posegan {

// Run hyperparameters. The config file format is flat "key = value" text
// with '#' comments; every key below is recognized, anything else is a
// config error naming the offending key.
struct TrainConfig {
    int epochs = 2000;
    double base_lr = 2e-4;
    int decay_start_epoch = 1000;
    int batch_size = 8;
    LossWeights weights;
    Margins margins;
    int blocks_n = 4;
    bool use_d_appearance = true;
    bool use_d_pose = true;
    bool use_semantic_loss = true;
    std::uint64_t seed = 0;

    int channels = 8;              // encoder / PAAN / PAGN feature width
    int image_stream_channels = 8; // PAGN image stream width
    int semantic_base = 8;         // E widths: base,2b,4b,8b -> D = 8*base
    int disc_base = 8;             // discriminator widths: base..8*base

    long steps = 0;     // optional hard cap on total steps (0 = run all epochs)
    int max_pairs = 0;  // optional cap on training pairs (0 = all)
    int checkpoint_every = 500; // epochs between checkpoint + sample grid
    int grid_rows = 8;
    int gen_pool_size = 64; // generated-image pool capacity for quartets
    QuartetForm quartet_form = QuartetForm::AsPrinted;
    bool non_saturating = true; // generator adversarial surrogate

    void validate() const;
    std::string to_text() const; // round-trippable through parse_config_text
};

TrainConfig parse_config_text(const std::string& text);
TrainConfig parse_config_file(const std::filesystem::path& path);

// base_lr until decay_start_epoch, then linear decay hitting exactly zero at
// epoch == epochs. Valid domain is [0, epochs]; anything else is a parameter
// error.
double lr_schedule(int epoch, const TrainConfig& cfg);

} // namespace posegan
