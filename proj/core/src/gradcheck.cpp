#include "posegan/gradcheck.hpp"

#include <cmath>

#include "posegan/discriminators.hpp"
#include "posegan/encoders.hpp"
#include "posegan/losses.hpp"
#include "posegan/paan.hpp"
#include "posegan/pagn.hpp"
#include "posegan/reid.hpp"
#include "posegan/rng.hpp"

namespace posegan {

using namespace nn;

double finite_diff_max_rel_error(const std::function<NodePtr()>& build, const std::vector<NodePtr>& leaves,
                                 double eps, long max_elems_per_leaf) {
    if (eps <= 0) throw ParamError("finite_diff_max_rel_error: eps must be > 0");
    auto root = build();
    backward(root);
    std::vector<Tensor> analytic;
    analytic.reserve(leaves.size());
    for (const auto& leaf : leaves) {
        leaf->ensure_grad();
        analytic.push_back(leaf->grad);
        leaf->grad.fill(0.0);
    }

    const auto probe = [&](Tensor& x, long i, double step) {
        const double saved = x[i];
        x[i] = saved + step;
        const double lp = build()->value[0];
        x[i] = saved - step;
        const double lm = build()->value[0];
        x[i] = saved;
        return (lp - lm) / (2.0 * step);
    };

    double max_rel = 0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        Tensor& x = leaves[li]->value;
        const long n = x.numel();
        const long stride = std::max<long>(1, n / max_elems_per_leaf);
        for (long i = 0; i < n; i += stride) {
            const double fd1 = probe(x, i, eps);
            const double fd2 = probe(x, i, eps * 0.5);
            // A kink (ReLU/hinge crossing inside the step) makes the two
            // central differences disagree; the loss is not differentiable
            // there, so the element is skipped. A wrong analytic gradient is
            // still caught: both estimates agree with each other and differ
            // from it.
            if (std::fabs(fd1 - fd2) / std::max({std::fabs(fd1), std::fabs(fd2), 1e-3}) > 1e-6) continue;
            const double a = analytic[li][i];
            const double rel = std::fabs(a - fd1) / std::max({std::fabs(a), std::fabs(fd1), 1e-3});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    const long n = t.numel();
    for (long i = 0; i < n; ++i) t[i] = rng.normal(0.0, scale);
    return t;
}

std::vector<NodePtr> with_params(const ParamSet& ps, std::vector<NodePtr> extra) {
    auto nodes = ps.param_nodes();
    nodes.insert(nodes.end(), extra.begin(), extra.end());
    return nodes;
}

NodePtr sq_mean(const NodePtr& x) { return mean_all(square(x)); }

double check_adain(double eps) {
    Rng rng(41);
    auto style = leaf(random_tensor({2, 3, 4, 4}, rng), true);
    auto content = leaf(random_tensor({2, 3, 4, 4}, rng), true);
    return finite_diff_max_rel_error([&] { return sq_mean(adain(style, content, 1e-5)); }, {style, content}, eps);
}

double check_paan_block(double eps) {
    Rng rng(42);
    ParamSet ps;
    PaanBlock block(ps, "blk", 4, rng);
    auto f_app = leaf(random_tensor({1, 4, 8, 8}, rng), true);
    auto f_pose = leaf(random_tensor({1, 4, 8, 8}, rng), true);
    auto build = [&] {
        auto out = block.forward(f_app, f_pose, true);
        return add(add(sq_mean(out.f_app), sq_mean(out.f_pose)), sq_mean(out.mask));
    };
    return finite_diff_max_rel_error(build, with_params(ps, {f_app, f_pose}), eps);
}

double check_pagn_block(double eps) {
    Rng rng(43);
    ParamSet ps;
    PagnBlock block(ps, "blk", 4, 3, rng);
    auto f_g = leaf(random_tensor({1, 4, 8, 8}, rng), true);
    auto i_g = leaf(random_tensor({1, 3, 8, 8}, rng), true);
    auto pose_feat = leaf(random_tensor({1, 4, 8, 8}, rng), true);
    auto f_app = leaf(random_tensor({1, 4, 8, 8}, rng), true);
    auto build = [&] {
        auto out = block.forward(f_g, i_g, pose_feat, f_app, true);
        return add(add(sq_mean(out.f_g), sq_mean(out.i_g)), sq_mean(out.mask));
    };
    return finite_diff_max_rel_error(build, with_params(ps, {f_g, i_g, pose_feat, f_app}), eps);
}

double check_discriminator(int in_channels, double eps) {
    Rng rng(44 + in_channels);
    ParamSet ps;
    Discriminator d(ps, "d", in_channels + 3, 4, rng);
    auto cond = leaf(random_tensor({2, in_channels, 16, 16}, rng, 0.5), true);
    auto real = leaf(random_tensor({2, 3, 16, 16}, rng, 0.5), true);
    auto fake = leaf(random_tensor({2, 3, 16, 16}, rng, 0.5), true);
    auto build = [&] {
        NodePtr sr, sf;
        if (in_channels == 18) {
            sr = d_pose(d, cond, real, true);
            sf = d_pose(d, cond, fake, true);
        } else {
            sr = d_appearance(d, cond, real, true);
            sf = d_appearance(d, cond, fake, true);
        }
        return gan_objective(sr, sf);
    };
    return finite_diff_max_rel_error(build, with_params(ps, {cond, real, fake}), eps, 256);
}

double check_recon(double eps) {
    Rng rng(46);
    auto a = leaf(random_tensor({2, 3, 6, 6}, rng), true);
    auto b = leaf(random_tensor({2, 3, 6, 6}, rng), true);
    return finite_diff_max_rel_error([&] { return recon_l1(a, b); }, {a, b}, eps);
}

double check_semantic(double eps) {
    Rng rng(47);
    auto a = leaf(random_tensor({4, 16}, rng), true);
    auto b = leaf(random_tensor({4, 16}, rng), true);
    return finite_diff_max_rel_error([&] { return semantic_consistency(a, b); }, {a, b}, eps);
}

double check_quartet(double eps) {
    Rng rng(48);
    auto a = leaf(random_tensor({3, 8}, rng), true);
    auto p = leaf(random_tensor({3, 8}, rng), true);
    auto n1 = leaf(random_tensor({3, 8}, rng), true);
    auto n2 = leaf(random_tensor({3, 8}, rng), true);
    const Margins margins{1.0, 0.5};
    return finite_diff_max_rel_error([&] { return quartet_loss(a, p, n1, n2, margins); }, {a, p, n1, n2}, eps);
}

double check_id_loss(double eps) {
    Rng rng(49);
    auto logits = leaf(random_tensor({4, 5}, rng), true);
    const std::vector<int> labels = {0, 3, 2, 1};
    return finite_diff_max_rel_error([&] { return id_loss(logits, labels); }, {logits}, eps);
}

double check_total_loss(double eps) {
    Rng rng(50);
    auto gen = leaf(random_tensor({1, 3, 6, 6}, rng), true);
    auto gt = leaf(random_tensor({1, 3, 6, 6}, rng), true);
    auto ec = leaf(random_tensor({3, 8}, rng), true);
    auto eg = leaf(random_tensor({3, 8}, rng), true);
    auto n1 = leaf(random_tensor({3, 8}, rng), true);
    auto n2 = leaf(random_tensor({3, 8}, rng), true);
    auto logits = leaf(random_tensor({3, 4}, rng), true);
    const std::vector<int> labels = {1, 0, 2};
    const LossWeights w;
    const Margins margins{1.0, 0.5};
    auto build = [&] {
        auto total = mul_scalar(recon_l1(gen, gt), w.rec);
        total = add(total, mul_scalar(semantic_consistency(ec, eg), w.semantic));
        total = add(total, mul_scalar(quartet_loss(ec, eg, n1, n2, margins), w.quartet));
        total = add(total, mul_scalar(id_loss(logits, labels), w.id));
        return total;
    };
    return finite_diff_max_rel_error(build, {gen, gt, ec, eg, n1, n2, logits}, eps);
}

double check_embed_head(double eps) {
    Rng rng(51);
    ParamSet ps;
    EmbedHead head(ps, "embed", 12, rng);
    auto feats = leaf(random_tensor({3, 12}, rng), true);
    return finite_diff_max_rel_error([&] { return sq_mean(head.forward(feats)); }, with_params(ps, {feats}), eps,
                                     512);
}

double check_classifier(double eps) {
    Rng rng(52);
    ParamSet ps;
    Classifier cls(ps, "cls", 12, 5, rng);
    auto feats = leaf(random_tensor({4, 12}, rng), true);
    const std::vector<int> labels = {0, 1, 2, 4};
    auto build = [&] {
        Rng dropout_rng(7); // frozen mask across finite-difference evaluations
        return id_loss(cls.forward(feats, true, dropout_rng), labels);
    };
    return finite_diff_max_rel_error(build, with_params(ps, {feats}), eps, 512);
}

double check_encoder(int in_channels, double eps) {
    Rng rng(53 + in_channels);
    ParamSet ps;
    Encoder enc(ps, "enc", in_channels, 4, rng);
    auto x = leaf(random_tensor({1, in_channels, 8, 8}, rng, 0.5), true);
    return finite_diff_max_rel_error([&] { return sq_mean(enc.forward(x, true)); }, with_params(ps, {x}), eps, 256);
}

double check_semantic_encoder(double eps) {
    Rng rng(57);
    ParamSet ps;
    SemanticEncoder enc(ps, "e", 2, rng);
    auto x = leaf(random_tensor({2, 3, 16, 16}, rng, 0.5), true);
    return finite_diff_max_rel_error([&] { return sq_mean(enc.forward(x, true)); }, with_params(ps, {x}), eps, 256);
}

struct ComponentEntry {
    const char* name;
    double (*fn)(double eps);
};

double check_d_appearance(double eps) { return check_discriminator(3, eps); }
double check_d_pose(double eps) { return check_discriminator(18, eps); }
double check_encoder_appearance(double eps) { return check_encoder(3, eps); }
double check_encoder_pose(double eps) { return check_encoder(18, eps); }

constexpr ComponentEntry kComponents[] = {
    {"adain", check_adain},
    {"paan_block", check_paan_block},
    {"pagn_block", check_pagn_block},
    {"d_appearance", check_d_appearance},
    {"d_pose", check_d_pose},
    {"recon_l1", check_recon},
    {"semantic_consistency", check_semantic},
    {"quartet_loss", check_quartet},
    {"id_loss", check_id_loss},
    {"total_loss", check_total_loss},
    {"embed_head", check_embed_head},
    {"classifier", check_classifier},
    {"encoder_appearance", check_encoder_appearance},
    {"encoder_pose", check_encoder_pose},
    {"semantic_encoder", check_semantic_encoder},
};

} // namespace

std::vector<std::string> gradcheck_component_names() {
    std::vector<std::string> names;
    for (const auto& c : kComponents) names.emplace_back(c.name);
    return names;
}

double gradcheck_component(const std::string& name, double eps) {
    for (const auto& c : kComponents)
        if (name == c.name) return c.fn(eps);
    throw ParamError("unknown gradcheck component: " + name);
}

std::vector<GradCheckReport> gradcheck_all(double eps) {
    std::vector<GradCheckReport> out;
    for (const auto& c : kComponents) out.push_back({c.name, c.fn(eps)});
    return out;
}

} // namespace posegan
