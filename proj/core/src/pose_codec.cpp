#include "posegan/pose_codec.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace posegan {

using nn::Tensor;

Heatmap keypoints_to_heatmap(const Keypoints& kps, Canvas canvas, double sigma) {
    if (sigma <= 0) throw ParamError("keypoints_to_heatmap: sigma must be > 0, got " + std::to_string(sigma));
    if (canvas.h <= 0 || canvas.w <= 0) throw ParamError("keypoints_to_heatmap: empty canvas");
    Heatmap hm;
    hm.sigma = sigma;
    hm.data = Tensor({kNumJoints, canvas.h, canvas.w});
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int k = 0; k < kNumJoints; ++k) {
        const Joint& j = kps.joints[static_cast<std::size_t>(k)];
        if (!j.visible) continue;
        double* plane = hm.data.data() + static_cast<long>(k) * canvas.h * canvas.w;
        for (int row = 0; row < canvas.h; ++row) {
            const double dy = row - j.y;
            for (int col = 0; col < canvas.w; ++col) {
                const double dx = col - j.x;
                plane[static_cast<long>(row) * canvas.w + col] = std::exp(-(dx * dx + dy * dy) * inv);
            }
        }
    }
    return hm;
}

Keypoints heatmap_to_keypoints(const Heatmap& hm, double threshold) {
    if (threshold <= 0 || threshold >= 1)
        throw ParamError("heatmap_to_keypoints: threshold must be in (0,1), got " + std::to_string(threshold));
    if (hm.data.ndim() != 3 || hm.data.dim(0) != kNumJoints)
        throw ShapeError("heatmap_to_keypoints: expected [18,H,W], got " + nn::shape_str(hm.data.shape()));
    const int h = hm.data.dim(1), w = hm.data.dim(2);
    Keypoints out;
    for (int k = 0; k < kNumJoints; ++k) {
        const double* plane = hm.data.data() + static_cast<long>(k) * h * w;
        double best = plane[0];
        long best_idx = 0;
        const long n = static_cast<long>(h) * w;
        for (long i = 1; i < n; ++i) {
            if (plane[i] > best) { // strict: ties keep the smaller row-major index
                best = plane[i];
                best_idx = i;
            }
        }
        Joint& j = out.joints[static_cast<std::size_t>(k)];
        if (best >= threshold) {
            j.visible = true;
            j.y = static_cast<double>(best_idx / w);
            j.x = static_cast<double>(best_idx % w);
        }
    }
    return out;
}

Keypoints load_keypoints(const std::filesystem::path& path, Canvas canvas) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open keypoint file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid keypoint JSON in " + path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("joints") || !doc["joints"].is_array())
        throw FormatError("keypoint file " + path.string() + ": missing \"joints\" array");
    const auto& arr = doc["joints"];
    if (arr.size() != kNumJoints)
        throw FormatError("keypoint file " + path.string() + ": expected 18 joints, got " +
                          std::to_string(arr.size()));
    Keypoints kps;
    for (std::size_t k = 0; k < kNumJoints; ++k) {
        const auto& e = arr[k];
        if (!e.is_array() || e.size() != 3 || !e[0].is_number() || !e[1].is_number() || !e[2].is_number())
            throw FormatError("keypoint file " + path.string() + ": joint " + std::to_string(k) +
                              " must be [x, y, v]");
        Joint& j = kps.joints[k];
        j.x = e[0].get<double>();
        j.y = e[1].get<double>();
        const double v = e[2].get<double>();
        if (v != 0.0 && v != 1.0)
            throw FormatError("keypoint file " + path.string() + ": joint " + std::to_string(k) +
                              " visibility must be 0 or 1");
        j.visible = v == 1.0;
        if (j.visible && (j.x < 0 || j.x >= canvas.w || j.y < 0 || j.y >= canvas.h))
            throw FormatError("keypoint file " + path.string() + ": joint " + std::to_string(k) +
                              " coordinate out of range for canvas " + std::to_string(canvas.h) + "x" +
                              std::to_string(canvas.w));
    }
    return kps;
}

void save_keypoints(const std::filesystem::path& path, const Keypoints& kps) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Joint& j : kps.joints) arr.push_back({j.x, j.y, j.visible ? 1 : 0});
    nlohmann::json doc;
    doc["joints"] = arr;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write keypoint file: " + path.string());
    out << doc.dump() << "\n";
}

double default_sigma(Canvas canvas) { return 3.0 * canvas.h / 128.0; }

} // namespace posegan
