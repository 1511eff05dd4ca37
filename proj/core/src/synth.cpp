#include "posegan/synth.hpp"

#include <algorithm>
#include <cmath>

#include "posegan/image.hpp"
#include "posegan/rng.hpp"

namespace posegan {

using nn::Tensor;

namespace {

struct Vec2 {
    double x, y;
};

// Template skeletons in unit coordinates (y grows downward, figure spans
// roughly [-0.45, 0.48] vertically). COCO 18-joint order.
using TemplateArray = std::array<Vec2, kNumJoints>;

constexpr TemplateArray kStand = {{
    {0.00, -0.42},  // nose
    {0.00, -0.30},  // neck
    {-0.13, -0.28}, // r shoulder
    {-0.16, -0.10}, // r elbow
    {-0.17, 0.06},  // r wrist
    {0.13, -0.28},  // l shoulder
    {0.16, -0.10},  // l elbow
    {0.17, 0.06},   // l wrist
    {-0.08, 0.05},  // r hip
    {-0.09, 0.27},  // r knee
    {-0.10, 0.48},  // r ankle
    {0.08, 0.05},   // l hip
    {0.09, 0.27},   // l knee
    {0.10, 0.48},   // l ankle
    {-0.03, -0.45}, // r eye
    {0.03, -0.45},  // l eye
    {-0.06, -0.43}, // r ear
    {0.06, -0.43},  // l ear
}};

constexpr TemplateArray kWalk = {{
    {0.00, -0.42},
    {0.00, -0.30},
    {-0.13, -0.28},
    {-0.10, -0.12},
    {-0.02, 0.00},
    {0.13, -0.28},
    {0.18, -0.08},
    {0.22, 0.08},
    {-0.08, 0.05},
    {-0.16, 0.25},
    {-0.22, 0.44},
    {0.08, 0.05},
    {0.14, 0.27},
    {0.18, 0.47},
    {-0.03, -0.45},
    {0.03, -0.45},
    {-0.06, -0.43},
    {0.06, -0.43},
}};

constexpr TemplateArray kSide = {{
    {0.06, -0.42},
    {0.00, -0.30},
    {0.02, -0.28},
    {0.06, -0.10},
    {0.10, 0.06},
    {-0.02, -0.28},
    {-0.04, -0.10},
    {-0.06, 0.06},
    {0.02, 0.05},
    {0.06, 0.27},
    {0.09, 0.48},
    {-0.02, 0.05},
    {-0.03, 0.27},
    {-0.05, 0.48},
    {0.08, -0.45},
    {0.04, -0.45},
    {0.02, -0.43},
    {-0.01, -0.43},
}};

// Crouched: shoulder-to-hip vertical gap is deliberately smaller than in the
// stand template, legs folded forward.
constexpr TemplateArray kSit = {{
    {0.00, -0.42},
    {0.00, -0.30},
    {-0.13, -0.28},
    {-0.15, -0.10},
    {-0.14, 0.04},
    {0.13, -0.28},
    {0.15, -0.10},
    {0.14, 0.04},
    {-0.08, -0.05},
    {-0.18, 0.05},
    {-0.19, 0.28},
    {0.08, -0.05},
    {0.18, 0.05},
    {0.19, 0.28},
    {-0.03, -0.45},
    {0.03, -0.45},
    {-0.06, -0.43},
    {0.06, -0.43},
}};

const TemplateArray& template_for(PoseTemplate t) {
    switch (t) {
    case PoseTemplate::Stand: return kStand;
    case PoseTemplate::Walk: return kWalk;
    case PoseTemplate::Side: return kSide;
    case PoseTemplate::Sit: return kSit;
    }
    throw ParamError("unknown pose template");
}

// Joint indices.
enum : int {
    kNose = 0,
    kNeck = 1,
    kRSho = 2,
    kRElb = 3,
    kRWri = 4,
    kLSho = 5,
    kLElb = 6,
    kLWri = 7,
    kRHip = 8,
    kRKne = 9,
    kRAnk = 10,
    kLHip = 11,
    kLKne = 12,
    kLAnk = 13,
};

void rotate_about(Vec2& p, const Vec2& center, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double dx = p.x - center.x, dy = p.y - center.y;
    p = {center.x + c * dx - s * dy, center.y + c * dy + s * dx};
}

Keypoints to_canvas(const TemplateArray& pts, Canvas canvas, double height_scale) {
    const double scale = 0.8 * canvas.h * height_scale;
    const double cx = canvas.w / 2.0, cy = canvas.h / 2.0;
    Keypoints kps;
    for (int k = 0; k < kNumJoints; ++k) {
        Joint& j = kps.joints[static_cast<std::size_t>(k)];
        j.x = std::clamp(cx + pts[static_cast<std::size_t>(k)].x * scale, 0.0, canvas.w - 1.0);
        j.y = std::clamp(cy + pts[static_cast<std::size_t>(k)].y * scale, 0.0, canvas.h - 1.0);
        j.visible = true;
    }
    return kps;
}

std::array<double, 3> draw_color(Rng& rng) {
    // Colors live on a 0.125 grid and must span at least two grid steps so no
    // identity color can be mistaken for the gray backgrounds.
    std::array<double, 3> c{};
    for (;;) {
        for (double& v : c) v = 0.125 * static_cast<double>(rng.uniform_int(9));
        const double mx = *std::max_element(c.begin(), c.end());
        const double mn = *std::min_element(c.begin(), c.end());
        if (mx - mn >= 0.25) return c;
    }
}

struct Painter {
    Tensor* img;
    int h, w;

    void blend(int y, int x, const std::array<double, 3>& color, double cov) {
        if (cov <= 0) return;
        for (int c = 0; c < 3; ++c) {
            double& px = (*img)[(static_cast<long>(c) * h + y) * w + x];
            const double target = 2.0 * color[static_cast<std::size_t>(c)] - 1.0;
            px += cov * (target - px);
        }
    }

    void line(Vec2 a, Vec2 b, const std::array<double, 3>& color, double thickness) {
        const double r = thickness * 0.5;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r - 1)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + r + 1)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r - 1)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + r + 1)));
        const double vx = b.x - a.x, vy = b.y - a.y;
        const double len2 = vx * vx + vy * vy;
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                double t = len2 > 0 ? ((x - a.x) * vx + (y - a.y) * vy) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                const double dx = x - (a.x + t * vx), dy = y - (a.y + t * vy);
                const double d = std::sqrt(dx * dx + dy * dy);
                blend(y, x, color, std::clamp(0.5 + r - d, 0.0, 1.0));
            }
    }

    void disc(Vec2 center, double radius, const std::array<double, 3>& color) {
        const int x0 = std::max(0, static_cast<int>(std::floor(center.x - radius - 1)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(center.x + radius + 1)));
        const int y0 = std::max(0, static_cast<int>(std::floor(center.y - radius - 1)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(center.y + radius + 1)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double d = std::hypot(x - center.x, y - center.y);
                blend(y, x, color, std::clamp(0.5 + radius - d, 0.0, 1.0));
            }
    }
};

constexpr std::array<std::pair<int, int>, 4> kTorsoEdges = {{{kNeck, kRSho}, {kNeck, kLSho}, {kNeck, kRHip}, {kNeck, kLHip}}};
constexpr std::array<std::pair<int, int>, 8> kLimbEdges = {{{kRSho, kRElb},
                                                            {kRElb, kRWri},
                                                            {kLSho, kLElb},
                                                            {kLElb, kLWri},
                                                            {kRHip, kRKne},
                                                            {kRKne, kRAnk},
                                                            {kLHip, kLKne},
                                                            {kLKne, kLAnk}}};

} // namespace

PoseTemplate pose_template_from_name(const std::string& name) {
    if (name == "stand") return PoseTemplate::Stand;
    if (name == "walk") return PoseTemplate::Walk;
    if (name == "side") return PoseTemplate::Side;
    if (name == "sit") return PoseTemplate::Sit;
    throw ParamError("unknown pose template: " + name);
}

IdentityParams sample_identity(std::uint64_t seed) {
    Rng rng(derive_seed(seed, "identity-params"));
    IdentityParams id;
    id.identity_id = static_cast<int>(seed & 0x7fffffff);
    id.torso_color = draw_color(rng);
    id.limb_color = draw_color(rng);
    id.head_color = draw_color(rng);
    id.limb_thickness = 1.5 + 0.5 * static_cast<double>(rng.uniform_int(3));
    id.height_scale = 0.8 + 0.05 * static_cast<double>(rng.uniform_int(9));
    return id;
}

Keypoints pose_template_keypoints(PoseTemplate tmpl, Canvas canvas) {
    return to_canvas(template_for(tmpl), canvas, 1.0);
}

Keypoints sample_pose(std::uint64_t seed, PoseTemplate tmpl, Canvas canvas) {
    Rng rng(derive_seed(seed, "pose-jitter"));
    TemplateArray pts = template_for(tmpl);

    // Bounded joint-angle perturbation along the limb chains; torso joints
    // receive only the small global offset so template gap relations survive.
    const auto swing = [&](int pivot, int mid, int tip, double range) {
        const double t1 = rng.uniform(-range, range);
        rotate_about(pts[static_cast<std::size_t>(mid)], pts[static_cast<std::size_t>(pivot)], t1);
        rotate_about(pts[static_cast<std::size_t>(tip)], pts[static_cast<std::size_t>(pivot)], t1);
        const double t2 = rng.uniform(-range, range);
        rotate_about(pts[static_cast<std::size_t>(tip)], pts[static_cast<std::size_t>(mid)], t2);
    };
    swing(kRSho, kRElb, kRWri, 0.25);
    swing(kLSho, kLElb, kLWri, 0.25);
    swing(kRHip, kRKne, kRAnk, 0.20);
    swing(kLHip, kLKne, kLAnk, 0.20);
    const double head_tilt = rng.uniform(-0.10, 0.10);
    for (int k : {static_cast<int>(kNose), 14, 15, 16, 17})
        rotate_about(pts[static_cast<std::size_t>(k)], pts[kNeck], head_tilt);

    const double ox = rng.uniform(-0.02, 0.02), oy = rng.uniform(-0.02, 0.02);
    for (auto& p : pts) {
        p.x += ox;
        p.y += oy;
    }
    return to_canvas(pts, canvas, 1.0);
}

double camera_background(int camera_id) { return camera_id % 2 == 0 ? -0.6 : -0.3; }

Tensor render_person(const IdentityParams& identity, const Keypoints& pose, Canvas canvas, int camera_id) {
    if (canvas.h < 32 || canvas.w < 16)
        throw ParamError("render_person: canvas must be at least 32x16, got " + std::to_string(canvas.h) + "x" +
                         std::to_string(canvas.w));
    const bool any_visible =
        std::any_of(pose.joints.begin(), pose.joints.end(), [](const Joint& j) { return j.visible; });
    if (!any_visible) throw DataError("empty pose");

    Tensor img({3, canvas.h, canvas.w}, camera_background(camera_id));
    Painter painter{&img, canvas.h, canvas.w};
    const auto at = [&](int k) -> Vec2 {
        const Joint& j = pose.joints[static_cast<std::size_t>(k)];
        return {j.x, j.y};
    };
    const auto vis = [&](int k) { return pose.joints[static_cast<std::size_t>(k)].visible; };

    for (auto [a, b] : kTorsoEdges)
        if (vis(a) && vis(b)) painter.line(at(a), at(b), identity.torso_color, identity.limb_thickness);
    for (auto [a, b] : kLimbEdges)
        if (vis(a) && vis(b)) painter.line(at(a), at(b), identity.limb_color, identity.limb_thickness);
    if (vis(kNose) && vis(kNeck)) {
        painter.line(at(kNose), at(kNeck), identity.head_color, identity.limb_thickness);
        const Vec2 nose = at(kNose), neck = at(kNeck);
        const Vec2 center{nose.x + 0.35 * (nose.x - neck.x), nose.y + 0.35 * (nose.y - neck.y)};
        const double radius = std::max(1.5, 0.8 * std::hypot(nose.x - neck.x, nose.y - neck.y));
        painter.disc(center, radius, identity.head_color);
    } else if (vis(kNose)) {
        painter.disc(at(kNose), std::max(1.5, 0.04 * canvas.h), identity.head_color);
    }
    return img;
}

std::array<std::vector<double>, 3> foreground_histogram(const Tensor& img, int bins, double threshold) {
    if (img.ndim() != 3 || img.dim(0) != 3)
        throw ShapeError("foreground_histogram: expected [3,H,W], got " + nn::shape_str(img.shape()));
    if (bins < 1) throw ParamError("foreground_histogram: bins must be >= 1");
    const int h = img.dim(1), w = img.dim(2);

    // Background reference: per-channel median of the border pixels.
    std::array<double, 3> bg{};
    std::vector<double> border;
    for (int c = 0; c < 3; ++c) {
        border.clear();
        for (int x = 0; x < w; ++x) {
            border.push_back(img[(static_cast<long>(c) * h + 0) * w + x]);
            border.push_back(img[(static_cast<long>(c) * h + h - 1) * w + x]);
        }
        for (int y = 0; y < h; ++y) {
            border.push_back(img[(static_cast<long>(c) * h + y) * w + 0]);
            border.push_back(img[(static_cast<long>(c) * h + y) * w + w - 1]);
        }
        std::nth_element(border.begin(), border.begin() + static_cast<long>(border.size() / 2), border.end());
        bg[static_cast<std::size_t>(c)] = border[border.size() / 2];
    }

    std::array<std::vector<double>, 3> hist;
    for (auto& hch : hist) hch.assign(static_cast<std::size_t>(bins), 0.0);
    long fg_count = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double dist = 0;
            for (int c = 0; c < 3; ++c)
                dist = std::max(dist, std::fabs(img[(static_cast<long>(c) * h + y) * w + x] - bg[static_cast<std::size_t>(c)]));
            if (dist <= threshold) continue;
            ++fg_count;
            for (int c = 0; c < 3; ++c) {
                const double v = img[(static_cast<long>(c) * h + y) * w + x];
                int b = static_cast<int>(std::floor((v + 1.0) * 0.5 * bins));
                b = std::clamp(b, 0, bins - 1);
                hist[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)] += 1.0;
            }
        }
    if (fg_count > 0)
        for (auto& hch : hist)
            for (double& v : hch) v /= static_cast<double>(fg_count);
    return hist;
}

DatasetManifest build_dataset(int num_ids, int poses_per_id, std::uint64_t seed,
                              const std::filesystem::path& out_dir, const BuildOptions& opts) {
    if (num_ids < 2) throw ParamError("build_dataset: need >= 2 identities, got " + std::to_string(num_ids));
    if (poses_per_id < 2)
        throw ParamError("build_dataset: need >= 2 poses per identity, got " + std::to_string(poses_per_id));
    if (opts.cameras < 2) throw ParamError("build_dataset: need >= 2 cameras");

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw IoError("cannot create output directory: " + out_dir.string());

    // Identities with pairwise color rejection: two accepted identities must
    // differ by >= 0.1 in at least one of the nine color channels.
    std::vector<IdentityParams> identities;
    for (int k = 0; k < num_ids; ++k) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt > 10000) throw SamplingError("build_dataset: identity rejection did not converge");
            IdentityParams cand =
                sample_identity(derive_seed(seed, "identity") + 1000003ULL * static_cast<std::uint64_t>(k) + attempt);
            cand.identity_id = k;
            bool ok = true;
            for (const auto& other : identities) {
                const std::array<const std::array<double, 3>*, 3> ca = {&cand.torso_color, &cand.limb_color,
                                                                        &cand.head_color};
                const std::array<const std::array<double, 3>*, 3> cb = {&other.torso_color, &other.limb_color,
                                                                        &other.head_color};
                double max_diff = 0;
                for (int g = 0; g < 3; ++g)
                    for (int c = 0; c < 3; ++c)
                        max_diff = std::max(max_diff, std::fabs((*ca[static_cast<std::size_t>(g)])[static_cast<std::size_t>(c)] -
                                                                (*cb[static_cast<std::size_t>(g)])[static_cast<std::size_t>(c)]));
                if (max_diff < 0.1) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                identities.push_back(cand);
                break;
            }
        }
    }

    const int eval_ids = num_ids >= 6 ? num_ids / 2 : 0;
    const int first_eval_id = num_ids - eval_ids;
    constexpr std::array<PoseTemplate, 4> kTemplateCycle = {PoseTemplate::Stand, PoseTemplate::Walk,
                                                            PoseTemplate::Side, PoseTemplate::Sit};

    DatasetManifest m;
    m.seed = seed;
    m.canvas = opts.canvas;
    m.root = out_dir;
    char name[64];
    for (int k = 0; k < num_ids; ++k) {
        for (int p = 0; p < poses_per_id; ++p) {
            const int camera = p % opts.cameras;
            const PoseTemplate tmpl = kTemplateCycle[static_cast<std::size_t>(p) % kTemplateCycle.size()];
            const std::uint64_t pose_seed =
                derive_seed(seed, "pose") + 7919ULL * static_cast<std::uint64_t>(k) + static_cast<std::uint64_t>(p);
            const Keypoints kps = sample_pose(pose_seed, tmpl, opts.canvas);
            const Tensor img = render_person(identities[static_cast<std::size_t>(k)], kps, opts.canvas, camera);

            std::snprintf(name, sizeof(name), "%04d_c%d_%03d", k, camera, p);
            ManifestRecord rec;
            rec.image_path = std::string(name) + ".png";
            rec.keypoints_path = std::string(name) + ".json";
            rec.identity_id = k;
            rec.camera_id = camera;
            if (k >= first_eval_id && eval_ids > 0)
                rec.split = camera == 0 ? Split::Query : Split::Gallery;
            else
                rec.split = Split::Train;
            save_png_image(out_dir / rec.image_path, img);
            save_keypoints(out_dir / rec.keypoints_path, kps);
            m.records.push_back(std::move(rec));
        }
    }
    save_manifest(out_dir / "manifest.json", m);
    return m;
}

} // namespace posegan
