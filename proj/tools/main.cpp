// posegan CLI: dataset synthesis, training, pose transfer, re-ID evaluation,
// sample grids and the gradient-check harness.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "posegan/gradcheck.hpp"
#include "posegan/image.hpp"
#include "posegan/synth.hpp"
#include "posegan/trainer.hpp"

namespace {

using namespace posegan;

int cmd_synth(int ids, int poses_per_id, std::uint64_t seed, const std::string& out, int canvas_h, int canvas_w) {
    BuildOptions opts;
    opts.canvas = {canvas_h, canvas_w};
    const DatasetManifest m = build_dataset(ids, poses_per_id, seed, out, opts);
    std::cout << (std::filesystem::path(out) / "manifest.json").string() << "\n";
    std::cout << "records: " << m.records.size() << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& manifest_path, const std::string& out,
              long steps_override, bool steps_given, std::int64_t seed_override, bool seed_given) {
    TrainConfig cfg = parse_config_file(config_path);
    if (steps_given) {
        if (steps_override < 1) throw ConfigError("steps must be >= 1");
        cfg.steps = steps_override;
    }
    if (seed_given) cfg.seed = static_cast<std::uint64_t>(seed_override);
    cfg.validate();

    const DatasetManifest manifest = load_manifest(manifest_path);
    Trainer trainer(cfg, manifest);
    std::filesystem::create_directories(out);
    std::ofstream log(std::filesystem::path(out) / "train.log");
    if (!log) throw IoError("cannot open train.log for writing");

    trainer.train(out, &log, [](const LossReport& r) {
        if (r.step % 100 == 0)
            std::cout << "step " << r.step << " lr " << r.lr << " L_R " << r.components.rec << " total " << r.total
                      << std::endl;
    });
    std::cout << "done: " << trainer.current_step() << " steps\n";
    return 0;
}

int cmd_transfer(const std::string& ckpt, const std::string& image_path, const std::string& pose_path,
                 const std::string& cond_pose_path, const std::string& out) {
    LoadedCheckpoint loaded = load_checkpoint_models(ckpt);
    const nn::Tensor image = load_png_image(image_path);
    const Canvas canvas{image.dim(1), image.dim(2)};
    if (canvas.h % 4 != 0 || canvas.w % 4 != 0)
        throw DataError("transfer: image size must be divisible by 4");

    // The condition pose defaults to the keypoint file next to the image.
    std::filesystem::path cond_path = cond_pose_path.empty()
                                          ? std::filesystem::path(image_path).replace_extension(".json")
                                          : std::filesystem::path(cond_pose_path);
    const Keypoints cond_kps = load_keypoints(cond_path, canvas);
    const Keypoints target_kps = load_keypoints(pose_path, canvas);

    const double sigma = default_sigma(canvas);
    const nn::Tensor hm_c = keypoints_to_heatmap(cond_kps, canvas, sigma).data;
    const nn::Tensor hm_t = keypoints_to_heatmap(target_kps, canvas, sigma).data;

    const nn::Tensor batch_img = stack_images({image});
    const nn::Tensor batch_hm_c = stack_images({hm_c});
    const nn::Tensor batch_hm_t = stack_images({hm_t});
    auto gen = loaded.models.generate(batch_img, batch_hm_c, batch_hm_t, false);
    save_png_image(out, batch_row(gen.image->value, 0));
    std::cout << out << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& manifest_path, const std::string& report_path) {
    LoadedCheckpoint loaded = load_checkpoint_models(ckpt);
    const DatasetManifest manifest = load_manifest(manifest_path);

    const auto embed_split = [&](Split split, std::vector<std::vector<double>>& embs, std::vector<int>& labels,
                                 std::vector<int>& cams) {
        const auto records = manifest.split_records(split);
        constexpr int kBatch = 16;
        for (std::size_t i = 0; i < records.size(); i += kBatch) {
            std::vector<nn::Tensor> imgs;
            for (std::size_t j = i; j < std::min(records.size(), i + kBatch); ++j)
                imgs.push_back(load_png_image(manifest.image_file(*records[j])));
            const nn::Tensor out = loaded.models.embed_images(stack_images(imgs));
            for (int r = 0; r < out.dim(0); ++r) {
                std::vector<double> e(static_cast<std::size_t>(out.dim(1)));
                for (int d = 0; d < out.dim(1); ++d) e[static_cast<std::size_t>(d)] = out.at(r, d);
                embs.push_back(std::move(e));
                labels.push_back(records[i + static_cast<std::size_t>(r)]->identity_id);
                cams.push_back(records[i + static_cast<std::size_t>(r)]->camera_id);
            }
        }
    };

    std::vector<std::vector<double>> q_embs, g_embs;
    std::vector<int> q_labels, q_cams, g_labels, g_cams;
    embed_split(Split::Query, q_embs, q_labels, q_cams);
    embed_split(Split::Gallery, g_embs, g_labels, g_cams);
    if (q_embs.empty()) throw DataError("eval: manifest has an empty query split");
    if (g_embs.empty()) throw DataError("eval: manifest has an empty gallery split");

    const ReidMetrics m = evaluate(q_embs, q_labels, q_cams, g_embs, g_labels, g_cams);

    nlohmann::json doc{{"rank1", m.rank1},
                       {"rank5", m.rank5},
                       {"rank10", m.rank10},
                       {"map", m.map},
                       {"skipped_queries", m.skipped_queries}};
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw IoError("cannot write report: " + report_path);
        out << doc.dump(2) << "\n";
    }
    std::cout << "metric            value\n";
    std::cout << "rank-1            " << m.rank1 << "\n";
    std::cout << "rank-5            " << m.rank5 << "\n";
    std::cout << "rank-10           " << m.rank10 << "\n";
    std::cout << "mAP               " << m.map << "\n";
    std::cout << "skipped queries   " << m.skipped_queries << "\n";
    if (report_path.empty()) std::cout << doc.dump() << "\n";
    return 0;
}

int cmd_grid(const std::string& ckpt, const std::string& manifest_path, const std::string& out, int rows) {
    const CheckpointMeta meta = read_checkpoint_meta(ckpt);
    TrainConfig cfg = parse_config_text(meta.config_text);
    if (rows > 0) cfg.grid_rows = rows;
    const DatasetManifest manifest = load_manifest(manifest_path);
    Trainer trainer(cfg, manifest);
    load_checkpoint(ckpt, trainer.models(), {});
    trainer.write_sample_grid(out);
    std::cout << out << "\n";
    return 0;
}

int cmd_gradcheck(const std::string& component, double eps) {
    constexpr double kThreshold = 1e-4;
    std::vector<GradCheckReport> reports;
    if (component == "all")
        reports = gradcheck_all(eps);
    else
        reports.push_back({component, gradcheck_component(component, eps)});
    bool ok = true;
    for (const auto& r : reports) {
        const bool pass = r.max_rel_error < kThreshold;
        ok = ok && pass;
        std::cout << r.component << ": max_rel_error = " << r.max_rel_error << (pass ? " (ok)" : " (FAIL)")
                  << "\n";
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pose-guided person image generation and re-identification"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic person dataset");
    int ids = 0, poses = 0, canvas_h = 128, canvas_w = 64;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--ids", ids, "number of identities")->required();
    synth->add_option("--poses-per-id", poses, "images per identity")->required();
    synth->add_option("--seed", synth_seed, "root seed")->default_val(0);
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--canvas-h", canvas_h, "canvas height")->default_val(128);
    synth->add_option("--canvas-w", canvas_w, "canvas width")->default_val(64);

    // train
    auto* train = app.add_subcommand("train", "train generator, discriminators and re-ID heads");
    std::string train_config, train_manifest, train_out;
    long steps_override = 0;
    std::int64_t seed_override = 0;
    train->add_option("--config", train_config, "config file")->required();
    train->add_option("--manifest", train_manifest, "dataset manifest")->required();
    train->add_option("--out", train_out, "output directory")->required();
    auto* steps_opt = train->add_option("--steps", steps_override, "cap total steps");
    auto* seed_opt = train->add_option("--seed", seed_override, "override config seed");

    // transfer
    auto* transfer = app.add_subcommand("transfer", "generate a pose-transferred image");
    std::string t_ckpt, t_image, t_pose, t_cond_pose, t_out;
    transfer->add_option("--ckpt", t_ckpt, "checkpoint file")->required();
    transfer->add_option("--image", t_image, "condition image (PNG)")->required();
    transfer->add_option("--pose", t_pose, "target pose keypoint JSON")->required();
    transfer->add_option("--cond-pose", t_cond_pose, "condition pose JSON (default: image sibling)");
    transfer->add_option("--out", t_out, "output PNG")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "CMC/mAP evaluation on the manifest splits");
    std::string e_ckpt, e_manifest, e_report;
    eval_cmd->add_option("--ckpt", e_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--manifest", e_manifest, "dataset manifest")->required();
    eval_cmd->add_option("--out", e_report, "JSON report path");

    // grid
    auto* grid = app.add_subcommand("grid", "re-emit a sample grid from a checkpoint");
    std::string g_ckpt, g_manifest, g_out;
    int g_rows = 0;
    grid->add_option("--ckpt", g_ckpt, "checkpoint file")->required();
    grid->add_option("--manifest", g_manifest, "dataset manifest")->required();
    grid->add_option("--out", g_out, "output PNG")->required();
    grid->add_option("--rows", g_rows, "grid rows");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    std::string gc_component = "all";
    double gc_eps = 1e-5;
    gc->add_option("--component", gc_component, "component name or 'all'")->default_val("all");
    gc->add_option("--eps", gc_eps, "finite-difference step")->default_val(1e-5);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error:usage:" << e.what() << "\n";
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(ids, poses, synth_seed, synth_out, canvas_h, canvas_w);
        if (train->parsed())
            return cmd_train(train_config, train_manifest, train_out, steps_override, steps_opt->count() > 0,
                             seed_override, seed_opt->count() > 0);
        if (transfer->parsed()) return cmd_transfer(t_ckpt, t_image, t_pose, t_cond_pose, t_out);
        if (eval_cmd->parsed()) return cmd_eval(e_ckpt, e_manifest, e_report);
        if (grid->parsed()) return cmd_grid(g_ckpt, g_manifest, g_out, g_rows);
        if (gc->parsed()) return cmd_gradcheck(gc_component, gc_eps);
    } catch (const ConfigError& e) {
        std::cerr << "error:config:" << e.what() << "\n";
        return 2;
    } catch (const ParamError& e) {
        std::cerr << "error:param:" << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error:" << e.domain() << ":" << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error:internal:" << e.what() << "\n";
        return 1;
    }
    return 2;
}
