#include "qsensor/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qsensor {

namespace {

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v)
{
    const double x = to_double(key, v);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
        throw std::invalid_argument("config: " + key + " must be an integer, got '" + v + "'");
    return i;
}

std::uint64_t to_u64(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad seed value for " + key + ": '" + v + "'");
    }
}

std::vector<int> to_int_list(const std::string& key, const std::string& v)
{
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_int(key, item));
    }
    if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
    return out;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value)
{
    if (key == "eps1") eps1 = to_double(key, value);
    else if (key == "eps2") eps2 = to_double(key, value);
    else if (key == "g") g = to_double(key, value);
    else if (key == "drive_power") drive_power = to_double(key, value);
    else if (key == "pulse_width") pulse_width = to_double(key, value);
    else if (key == "tau_factor") tau_factor = to_double(key, value);
    else if (key == "window_factor") window_factor = to_double(key, value);
    else if (key == "delta_p") delta_p = to_double(key, value);
    else if (key == "delta_s") delta_s = to_double(key, value);
    else if (key == "resolution_factor") resolution_factor = to_int(key, value);
    else if (key == "quad_nodes_1d") quad_nodes_1d = to_int(key, value);
    else if (key == "quad_nodes_2d") quad_nodes_2d = to_int(key, value);
    else if (key == "samples_per_class") samples_per_class = to_int(key, value);
    else if (key == "master_seed") master_seed = to_u64(key, value);
    else if (key == "split_seed") split_seed = to_u64(key, value);
    else if (key == "train_seed") train_seed = to_u64(key, value);
    else if (key == "epochs") epochs = to_int(key, value);
    else if (key == "batch_size") batch_size = to_int(key, value);
    else if (key == "learning_rate") learning_rate = to_double(key, value);
    else if (key == "adam_beta1") adam_beta1 = to_double(key, value);
    else if (key == "adam_beta2") adam_beta2 = to_double(key, value);
    else if (key == "adam_epsilon") adam_epsilon = to_double(key, value);
    else if (key == "hidden_layers") hidden_layers = to_int_list(key, value);
    else if (key == "leak_slope") leak_slope = to_double(key, value);
    else if (key == "map_grid") map_grid = to_int(key, value);
    else if (key == "map_range") map_range = to_double(key, value);
    else if (key == "workers") workers = to_int(key, value);
    else if (key == "out_dir") out_dir = value;
    else if (key == "cache_dir") cache_dir = value;
    else if (key == "profile") apply_profile(value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const
{
    if (key == "eps1") return fmt(eps1);
    if (key == "eps2") return fmt(eps2);
    if (key == "g") return fmt(g);
    if (key == "drive_power") return fmt(drive_power);
    if (key == "pulse_width") return fmt(pulse_width);
    if (key == "tau_factor") return fmt(tau_factor);
    if (key == "window_factor") return fmt(window_factor);
    if (key == "delta_p") return fmt(delta_p);
    if (key == "delta_s") return fmt(delta_s);
    if (key == "resolution_factor") return std::to_string(resolution_factor);
    if (key == "quad_nodes_1d") return std::to_string(quad_nodes_1d);
    if (key == "quad_nodes_2d") return std::to_string(quad_nodes_2d);
    if (key == "samples_per_class") return std::to_string(samples_per_class);
    if (key == "master_seed") return std::to_string(master_seed);
    if (key == "split_seed") return std::to_string(split_seed);
    if (key == "train_seed") return std::to_string(train_seed);
    if (key == "epochs") return std::to_string(epochs);
    if (key == "batch_size") return std::to_string(batch_size);
    if (key == "learning_rate") return fmt(learning_rate);
    if (key == "adam_beta1") return fmt(adam_beta1);
    if (key == "adam_beta2") return fmt(adam_beta2);
    if (key == "adam_epsilon") return fmt(adam_epsilon);
    if (key == "hidden_layers") {
        std::string s;
        for (std::size_t i = 0; i < hidden_layers.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(hidden_layers[i]);
        }
        return s;
    }
    if (key == "leak_slope") return fmt(leak_slope);
    if (key == "map_grid") return std::to_string(map_grid);
    if (key == "map_range") return fmt(map_range);
    if (key == "workers") return std::to_string(workers);
    if (key == "out_dir") return out_dir;
    if (key == "cache_dir") return cache_dir;
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

void RunConfig::apply_profile(const std::string& profile)
{
    if (profile == "full") {
        quad_nodes_1d = 15;
        quad_nodes_2d = 9;
        samples_per_class = 500;
    } else if (profile == "fast") {
        quad_nodes_1d = 11;
        quad_nodes_2d = 7;
        samples_per_class = 100;
    } else {
        throw std::invalid_argument("config: unknown profile '" + profile +
                                    "' (expected 'full' or 'fast')");
    }
}

void RunConfig::validate() const
{
    SystemParams{eps1, eps2, g}.validate();
    if (!(drive_power > 0.0)) throw std::invalid_argument("config: drive_power must be positive");
    if (!(pulse_width > 0.0)) throw std::invalid_argument("config: pulse_width must be positive");
    if (!(tau_factor > 0.0)) throw std::invalid_argument("config: tau_factor must be positive");
    if (resolution_factor < 1) throw std::invalid_argument("config: resolution_factor < 1");
    if (quad_nodes_1d < 1 || quad_nodes_2d < 1)
        throw std::invalid_argument("config: quadrature orders must be >= 1");
    if (samples_per_class < 1) throw std::invalid_argument("config: samples_per_class < 1");
    if (map_grid < 1) throw std::invalid_argument("config: map_grid < 1");
    architecture().validate();
    train_config().validate();
}

SimContext RunConfig::sim_context() const
{
    SimContext ctx;
    ctx.proto.system = {eps1, eps2, g};
    ctx.proto.drive_power = drive_power;
    ctx.proto.pulse_width = pulse_width;
    ctx.proto.tau_factor = tau_factor;
    ctx.proto.window_factor = window_factor;
    ctx.proto.delta_p = delta_p;
    ctx.proto.delta_s = delta_s;
    ctx.proto.resolution_factor = resolution_factor;
    ctx.quadrature.quad_nodes_1d = quad_nodes_1d;
    ctx.quadrature.quad_nodes_2d = quad_nodes_2d;
    ctx.workers = workers;
    return ctx;
}

MlpArchitecture RunConfig::architecture() const
{
    MlpArchitecture arch;
    arch.layer_sizes.clear();
    arch.layer_sizes.push_back(3);
    for (int h : hidden_layers) arch.layer_sizes.push_back(h);
    arch.layer_sizes.push_back(6);
    arch.leak_slope = leak_slope;
    return arch;
}

TrainConfig RunConfig::train_config() const
{
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.learning_rate = learning_rate;
    t.adam_beta1 = adam_beta1;
    t.adam_beta2 = adam_beta2;
    t.adam_epsilon = adam_epsilon;
    t.seed = train_seed;
    return t;
}

std::string RunConfig::resolved_cache_dir() const
{
    if (!cache_dir.empty()) return cache_dir;
    return (std::filesystem::path(out_dir) / "cache").string();
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    RunConfig cfg;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(line_number) + " of " +
                                     path + " is not key = value");
        try {
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::runtime_error("config: line " + std::to_string(line_number) + " of " +
                                     path + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

std::vector<std::string> config_keys()
{
    return {"eps1", "eps2", "g", "drive_power", "pulse_width", "tau_factor",
            "window_factor", "delta_p", "delta_s", "resolution_factor", "quad_nodes_1d",
            "quad_nodes_2d", "samples_per_class", "master_seed", "split_seed", "train_seed",
            "epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2",
            "adam_epsilon", "hidden_layers", "leak_slope", "map_grid", "map_range",
            "workers", "out_dir", "cache_dir"};
}

void save_config(const std::string& path, const RunConfig& cfg)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot open " + path);
    for (const auto& key : config_keys()) out << key << " = " << cfg.get(key) << "\n";
}

} // namespace qsensor
