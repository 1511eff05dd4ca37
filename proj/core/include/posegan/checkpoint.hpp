#pragma once

#include <filesystem>

#include "posegan/models.hpp"

namespace posegan {

// Versioned binary checkpoint: all parameter and buffer tensors by group and
// name (raw IEEE-754 doubles, so a load reproduces forward outputs
// bit-exactly), the three Adam states, the epoch counter and the config
// snapshot. A plain-text sidecar "<path>.cfg" carries the config for humans.
struct CheckpointMeta {
    long epoch = 0;
    int num_classes = 0;
    std::string config_text;
};

struct OptimizerStates {
    nn::Adam* generator = nullptr; // covers generator + reid parameters
    nn::Adam* d_appearance = nullptr;
    nn::Adam* d_pose = nullptr;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta, const Models& models,
                     const OptimizerStates& opts);

// Reads the header only (epoch, classes, config) without touching tensors.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

// Restores tensors into an already-built Models of matching architecture;
// optimizer entries may be null to skip their state.
CheckpointMeta load_checkpoint(const std::filesystem::path& path, Models& models, const OptimizerStates& opts);

// Convenience: rebuild Models from the stored config and load everything.
struct LoadedCheckpoint {
    TrainConfig config;
    CheckpointMeta meta;
    Models models;
};
LoadedCheckpoint load_checkpoint_models(const std::filesystem::path& path);

} // namespace posegan
