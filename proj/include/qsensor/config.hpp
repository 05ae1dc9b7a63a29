#pragma once

#include "qsensor/efficiency.hpp"
#include "qsensor/mlp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qsensor {

// Every knob of the pipeline with its production default, parseable from a
// plain key=value file. The "fast" profile only thins the quadrature and the
// dataset; the physics stays at the production values.
struct RunConfig {
    // physics
    double eps1 = 1.0;
    double eps2 = 1.0;
    double g = 0.5;
    double drive_power = 0.005;
    double pulse_width = 2000.0;
    double tau_factor = 0.7;
    double window_factor = 5.0;
    double delta_p = 0.0;
    double delta_s = 0.0;
    // integration and averaging
    int resolution_factor = 80;
    int quad_nodes_1d = 15;
    int quad_nodes_2d = 9;
    // dataset
    int samples_per_class = 500;
    std::uint64_t master_seed = 42;
    std::uint64_t split_seed = 43;
    std::uint64_t train_seed = 44;
    // training
    int epochs = 120;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::vector<int> hidden_layers{64, 32, 32, 32};
    double leak_slope = 0.01;
    // efficiency maps
    int map_grid = 41;
    double map_range = 0.025;
    // execution
    int workers = 0; // 0 = all available cores
    std::string out_dir = "out";
    std::string cache_dir; // empty = <out_dir>/cache

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    void apply_profile(const std::string& profile); // "full" or "fast"
    void validate() const;

    SimContext sim_context() const;
    MlpArchitecture architecture() const;
    TrainConfig train_config() const;
    std::string resolved_cache_dir() const;
};

RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& cfg);

std::vector<std::string> config_keys();

} // namespace qsensor
