#include "posegan/config.hpp"

#include <fstream>
#include <sstream>

namespace posegan {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(base_lr > 0)) throw ConfigError("base_lr must be > 0");
    if (decay_start_epoch < 0 || decay_start_epoch > epochs)
        throw ConfigError("decay_start_epoch must lie in [0, epochs]");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    weights.validate();
    margins.validate();
    if (blocks_n < 1 || blocks_n > 8) throw ConfigError("blocks_n must be in [1, 8]");
    if (channels < 2) throw ConfigError("channels must be >= 2");
    if (image_stream_channels < 1) throw ConfigError("image_stream_channels must be >= 1");
    if (semantic_base < 1) throw ConfigError("semantic_base must be >= 1");
    if (disc_base < 1) throw ConfigError("disc_base must be >= 1");
    if (steps < 0) throw ConfigError("steps must be >= 0");
    if (max_pairs < 0) throw ConfigError("max_pairs must be >= 0");
    if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
    if (grid_rows < 1) throw ConfigError("grid_rows must be >= 1");
    if (gen_pool_size < 0) throw ConfigError("gen_pool_size must be >= 0");
}

std::string TrainConfig::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "epochs = " << epochs << "\n";
    os << "base_lr = " << base_lr << "\n";
    os << "decay_start_epoch = " << decay_start_epoch << "\n";
    os << "batch_size = " << batch_size << "\n";
    os << "lambda_gan = " << weights.gan << "\n";
    os << "lambda_rec = " << weights.rec << "\n";
    os << "lambda_semantic = " << weights.semantic << "\n";
    os << "lambda_quartet = " << weights.quartet << "\n";
    os << "lambda_id = " << weights.id << "\n";
    os << "tau1 = " << margins.tau1 << "\n";
    os << "tau2 = " << margins.tau2 << "\n";
    os << "blocks_n = " << blocks_n << "\n";
    os << "use_d_appearance = " << (use_d_appearance ? "true" : "false") << "\n";
    os << "use_d_pose = " << (use_d_pose ? "true" : "false") << "\n";
    os << "use_semantic_loss = " << (use_semantic_loss ? "true" : "false") << "\n";
    os << "seed = " << seed << "\n";
    os << "channels = " << channels << "\n";
    os << "image_stream_channels = " << image_stream_channels << "\n";
    os << "semantic_base = " << semantic_base << "\n";
    os << "disc_base = " << disc_base << "\n";
    os << "steps = " << steps << "\n";
    os << "max_pairs = " << max_pairs << "\n";
    os << "checkpoint_every = " << checkpoint_every << "\n";
    os << "grid_rows = " << grid_rows << "\n";
    os << "gen_pool_size = " << gen_pool_size << "\n";
    os << "quartet_form = " << (quartet_form == QuartetForm::AsPrinted ? "as_printed" : "hinge") << "\n";
    os << "non_saturating = " << (non_saturating ? "true" : "false") << "\n";
    return os.str();
}

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("invalid boolean for key " + key + ": " + v);
}

long parse_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long out = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer for key " + key + ": " + v);
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for key " + key + ": " + v);
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

TrainConfig parse_config_text(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed config line (expected key = value): " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError("malformed config line: " + line);

        if (key == "epochs") cfg.epochs = static_cast<int>(parse_long(key, value));
        else if (key == "base_lr") cfg.base_lr = parse_double(key, value);
        else if (key == "decay_start_epoch") cfg.decay_start_epoch = static_cast<int>(parse_long(key, value));
        else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_long(key, value));
        else if (key == "lambda_gan") cfg.weights.gan = parse_double(key, value);
        else if (key == "lambda_rec") cfg.weights.rec = parse_double(key, value);
        else if (key == "lambda_semantic") cfg.weights.semantic = parse_double(key, value);
        else if (key == "lambda_quartet") cfg.weights.quartet = parse_double(key, value);
        else if (key == "lambda_id") cfg.weights.id = parse_double(key, value);
        else if (key == "tau1") cfg.margins.tau1 = parse_double(key, value);
        else if (key == "tau2") cfg.margins.tau2 = parse_double(key, value);
        else if (key == "blocks_n") cfg.blocks_n = static_cast<int>(parse_long(key, value));
        else if (key == "use_d_appearance") cfg.use_d_appearance = parse_bool(key, value);
        else if (key == "use_d_pose") cfg.use_d_pose = parse_bool(key, value);
        else if (key == "use_semantic_loss") cfg.use_semantic_loss = parse_bool(key, value);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
        else if (key == "channels") cfg.channels = static_cast<int>(parse_long(key, value));
        else if (key == "image_stream_channels") cfg.image_stream_channels = static_cast<int>(parse_long(key, value));
        else if (key == "semantic_base") cfg.semantic_base = static_cast<int>(parse_long(key, value));
        else if (key == "disc_base") cfg.disc_base = static_cast<int>(parse_long(key, value));
        else if (key == "steps") cfg.steps = parse_long(key, value);
        else if (key == "max_pairs") cfg.max_pairs = static_cast<int>(parse_long(key, value));
        else if (key == "checkpoint_every") cfg.checkpoint_every = static_cast<int>(parse_long(key, value));
        else if (key == "grid_rows") cfg.grid_rows = static_cast<int>(parse_long(key, value));
        else if (key == "gen_pool_size") cfg.gen_pool_size = static_cast<int>(parse_long(key, value));
        else if (key == "quartet_form") cfg.quartet_form = quartet_form_from_name(value);
        else if (key == "non_saturating") cfg.non_saturating = parse_bool(key, value);
        else throw ConfigError("unknown config key: " + key);
    }
    cfg.validate();
    return cfg;
}

TrainConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
    if (epoch < 0 || epoch > cfg.epochs)
        throw ParamError("lr_schedule: epoch " + std::to_string(epoch) + " outside [0, " +
                         std::to_string(cfg.epochs) + "]");
    if (epoch >= cfg.epochs) return 0.0;
    if (epoch < cfg.decay_start_epoch) return cfg.base_lr;
    return cfg.base_lr * static_cast<double>(cfg.epochs - epoch) /
           static_cast<double>(cfg.epochs - cfg.decay_start_epoch);
}

} // namespace posegan
