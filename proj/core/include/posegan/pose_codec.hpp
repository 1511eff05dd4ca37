#pragma once

#include <array>
#include <filesystem>

#include "posegan/tensor.hpp"

namespace posegan {

inline constexpr int kNumJoints = 18;

// COCO 18-joint order: nose, neck, r-shoulder, r-elbow, r-wrist, l-shoulder,
// l-elbow, l-wrist, r-hip, r-knee, r-ankle, l-hip, l-knee, l-ankle, r-eye,
// l-eye, r-ear, l-ear.
struct Joint {
    double x = 0;
    double y = 0;
    bool visible = false;
};

struct Keypoints {
    std::array<Joint, kNumJoints> joints;
};

struct Canvas {
    int h = 0;
    int w = 0;
};

// 18-channel Gaussian joint heatmap; channel k is exp(-((i-y_k)^2 +
// (j-x_k)^2) / (2 sigma^2)) for a visible joint k, identically zero otherwise.
struct Heatmap {
    nn::Tensor data; // [18,H,W], values in [0,1]
    double sigma = 0;
};

Heatmap keypoints_to_heatmap(const Keypoints& kps, Canvas canvas, double sigma);

// Per-channel argmax decode; channels whose maximum falls below the threshold
// decode as invisible. Equal maxima resolve to the smallest row-major index.
Keypoints heatmap_to_keypoints(const Heatmap& hm, double threshold);

// Keypoint JSON schema: {"joints": [[x, y, v], ... 18 entries]} with v in
// {0,1} and pixel coordinates. Visible joints must satisfy 0 <= x < W,
// 0 <= y < H for the supplied canvas.
Keypoints load_keypoints(const std::filesystem::path& path, Canvas canvas);
void save_keypoints(const std::filesystem::path& path, const Keypoints& kps);

// Default Gaussian width: 3 px at 128 rows, scaled linearly with canvas height.
double default_sigma(Canvas canvas);

inline constexpr double kDecodeThreshold = 0.1;

} // namespace posegan
