#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "posegan/manifest.hpp"
#include "posegan/pose_codec.hpp"
#include "posegan/tensor.hpp"

namespace posegan {

// Procedural stick-figure person generator. Identity is a color/proportion
// vector, pose an explicit 18-joint skeleton, so every quantity the pipeline
// is supposed to preserve has a ground truth.

struct IdentityParams {
    int identity_id = 0;
    std::array<double, 3> torso_color{};
    std::array<double, 3> limb_color{};
    std::array<double, 3> head_color{};
    double limb_thickness = 1.0; // pixels
    double height_scale = 1.0;   // in [0.8, 1.2]
};

enum class PoseTemplate { Stand, Walk, Side, Sit };

PoseTemplate pose_template_from_name(const std::string& name);

// Deterministic per seed. Colors live on a 0.125 grid and are never gray, so
// any two identities that differ at all differ by at least 0.125 in some
// channel; build_dataset additionally rejects color-identical pairs.
IdentityParams sample_identity(std::uint64_t seed);

// Base skeleton for a template scaled to the canvas, no jitter.
Keypoints pose_template_keypoints(PoseTemplate tmpl, Canvas canvas);

// Template skeleton plus bounded random joint-angle perturbation; all joints
// visible and clamped inside the canvas. Deterministic per seed.
Keypoints sample_pose(std::uint64_t seed, PoseTemplate tmpl, Canvas canvas);

// Anti-aliased skeleton render on a per-camera constant background. Output is
// [3,H,W] in [-1,1]. Throws DataError("empty pose") when no joint is visible
// and ParamError when the canvas is smaller than 32x16.
nn::Tensor render_person(const IdentityParams& identity, const Keypoints& pose, Canvas canvas, int camera_id = 0);

// Background gray level (in [-1,1]) used for a camera.
double camera_background(int camera_id);

// Per-channel normalized color histogram over foreground pixels. The
// background reference is the per-channel median of the image border; pixels
// further than `threshold` from it in any channel count as foreground.
// Returns [3][bins], each row summing to 1 (all-background images return
// zeros).
std::array<std::vector<double>, 3> foreground_histogram(const nn::Tensor& img, int bins = 8,
                                                        double threshold = 0.15);

struct BuildOptions {
    Canvas canvas{128, 64};
    int cameras = 2;
};

// Renders num_ids x poses_per_id records, writes PNGs, per-image keypoint
// JSON files and manifest.json under out_dir, and returns the manifest.
// Evaluation identities (present only when num_ids >= 6) are split so camera
// 0 images form the query set and camera 1 images the gallery.
DatasetManifest build_dataset(int num_ids, int poses_per_id, std::uint64_t seed,
                              const std::filesystem::path& out_dir, const BuildOptions& opts = {});

} // namespace posegan
