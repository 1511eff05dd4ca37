#include "posegan/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace posegan {

using nn::Adam;
using nn::ParamSet;
using nn::Tensor;

namespace {

constexpr char kMagic[8] = {'P', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
void write_i64(std::ostream& out, std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
void write_str(std::ostream& out, const std::string& s) {
    write_i64(out, static_cast<std::int64_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void write_tensor(std::ostream& out, const Tensor& t) {
    write_u32(out, static_cast<std::uint32_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) write_u32(out, static_cast<std::uint32_t>(t.dim(i)));
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw FormatError("checkpoint truncated");
    return v;
}
std::int64_t read_i64(std::istream& in) {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw FormatError("checkpoint truncated");
    return v;
}
std::string read_str(std::istream& in) {
    const auto n = read_i64(in);
    if (n < 0 || n > (1 << 26)) throw FormatError("checkpoint: implausible string length");
    std::string s(static_cast<std::size_t>(n), '\0');
    in.read(s.data(), n);
    if (!in) throw FormatError("checkpoint truncated");
    return s;
}
void read_tensor_into(std::istream& in, Tensor& t, const std::string& name) {
    const auto nd = read_u32(in);
    if (static_cast<int>(nd) != t.ndim())
        throw FormatError("checkpoint: rank mismatch for " + name);
    for (int i = 0; i < t.ndim(); ++i)
        if (static_cast<int>(read_u32(in)) != t.dim(i))
            throw FormatError("checkpoint: shape mismatch for " + name);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in) throw FormatError("checkpoint truncated reading " + name);
}

void write_group(std::ostream& out, const std::string& name, const ParamSet& ps) {
    write_str(out, name);
    write_u32(out, static_cast<std::uint32_t>(ps.params().size()));
    for (const auto& [pname, node] : ps.params()) {
        write_str(out, pname);
        write_tensor(out, node->value);
    }
    write_u32(out, static_cast<std::uint32_t>(ps.buffers().size()));
    for (const auto& [bname, buf] : ps.buffers()) {
        write_str(out, bname);
        write_tensor(out, *buf);
    }
}

void read_group(std::istream& in, const std::string& expected, ParamSet& ps) {
    const std::string name = read_str(in);
    if (name != expected) throw FormatError("checkpoint: expected group " + expected + ", found " + name);
    const auto pcount = read_u32(in);
    if (pcount != ps.params().size()) throw FormatError("checkpoint: parameter count mismatch in " + expected);
    for (const auto& [pname, node] : ps.params()) {
        const std::string got = read_str(in);
        if (got != pname) throw FormatError("checkpoint: expected parameter " + pname + ", found " + got);
        read_tensor_into(in, node->value, pname);
    }
    const auto bcount = read_u32(in);
    if (bcount != ps.buffers().size()) throw FormatError("checkpoint: buffer count mismatch in " + expected);
    for (const auto& [bname, buf] : ps.buffers()) {
        const std::string got = read_str(in);
        if (got != bname) throw FormatError("checkpoint: expected buffer " + bname + ", found " + got);
        read_tensor_into(in, *buf, bname);
    }
}

void write_optimizer(std::ostream& out, const std::string& name, const Adam* opt) {
    write_str(out, name);
    write_u32(out, opt ? 1 : 0);
    if (!opt) return;
    Adam* o = const_cast<Adam*>(opt);
    write_i64(out, o->t_state());
    write_u32(out, static_cast<std::uint32_t>(o->params().size()));
    for (std::size_t i = 0; i < o->params().size(); ++i) {
        write_tensor(out, o->m_state()[i]);
        write_tensor(out, o->v_state()[i]);
    }
}

void read_optimizer(std::istream& in, const std::string& expected, Adam* opt) {
    const std::string name = read_str(in);
    if (name != expected) throw FormatError("checkpoint: expected optimizer " + expected + ", found " + name);
    const auto present = read_u32(in);
    if (!present) return;
    const auto t = read_i64(in);
    const auto count = read_u32(in);
    if (!opt) {
        // Skip over the stored state.
        for (std::uint32_t i = 0; i < 2 * count; ++i) {
            const auto nd = read_u32(in);
            long numel = 1;
            for (std::uint32_t d = 0; d < nd; ++d) numel *= static_cast<long>(read_u32(in));
            in.seekg(static_cast<std::streamoff>(numel * static_cast<long>(sizeof(double))), std::ios::cur);
            if (!in) throw FormatError("checkpoint truncated in optimizer " + expected);
        }
        return;
    }
    if (count != opt->params().size())
        throw FormatError("checkpoint: optimizer parameter count mismatch in " + expected);
    opt->t_state() = t;
    for (std::size_t i = 0; i < opt->params().size(); ++i) {
        read_tensor_into(in, opt->m_state()[i], expected + ".m");
        read_tensor_into(in, opt->v_state()[i], expected + ".v");
    }
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta, const Models& models,
                     const OptimizerStates& opts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path.string());
    out.write(kMagic, sizeof kMagic);
    write_u32(out, kVersion);
    write_i64(out, meta.epoch);
    write_u32(out, static_cast<std::uint32_t>(meta.num_classes));
    write_str(out, meta.config_text);
    write_group(out, "generator", models.gen_params);
    write_group(out, "reid", models.reid_params);
    write_group(out, "d_appearance", models.d_app_params);
    write_group(out, "d_pose", models.d_pose_params);
    write_optimizer(out, "opt.generator", opts.generator);
    write_optimizer(out, "opt.d_appearance", opts.d_appearance);
    write_optimizer(out, "opt.d_pose", opts.d_pose);
    if (!out) throw IoError("failed while writing checkpoint: " + path.string());

    std::ofstream sidecar(path.string() + ".cfg");
    if (!sidecar) throw IoError("cannot write checkpoint sidecar: " + path.string() + ".cfg");
    sidecar << meta.config_text;
}

namespace {
CheckpointMeta read_header(std::istream& in, const std::filesystem::path& path) {
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw FormatError("not a checkpoint file: " + path.string());
    const auto version = read_u32(in);
    if (version != kVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
    CheckpointMeta meta;
    meta.epoch = read_i64(in);
    meta.num_classes = static_cast<int>(read_u32(in));
    meta.config_text = read_str(in);
    return meta;
}
} // namespace

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    return read_header(in, path);
}

CheckpointMeta load_checkpoint(const std::filesystem::path& path, Models& models, const OptimizerStates& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    CheckpointMeta meta = read_header(in, path);
    read_group(in, "generator", models.gen_params);
    read_group(in, "reid", models.reid_params);
    read_group(in, "d_appearance", models.d_app_params);
    read_group(in, "d_pose", models.d_pose_params);
    read_optimizer(in, "opt.generator", opts.generator);
    read_optimizer(in, "opt.d_appearance", opts.d_appearance);
    read_optimizer(in, "opt.d_pose", opts.d_pose);
    return meta;
}

LoadedCheckpoint load_checkpoint_models(const std::filesystem::path& path) {
    const CheckpointMeta header = read_checkpoint_meta(path);
    TrainConfig cfg = parse_config_text(header.config_text);
    LoadedCheckpoint out{cfg, {}, Models::build(cfg, header.num_classes)};
    out.meta = load_checkpoint(path, out.models, {});
    return out;
}

} // namespace posegan
