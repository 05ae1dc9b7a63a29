#pragma once

#include "qsensor/efficiency.hpp"
#include "qsensor/noise.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qsensor {

inline constexpr const char* kGeneratorVersion = "qsensor-0.1.0";

struct Sample {
    FeatureVector features;
    int label = 0; // equals static_cast<int>(params.noise_class)
    NoiseSampleParams params;
    std::uint64_t seed = 0;
    std::string generator_version = kGeneratorVersion;
};

struct GenerationFailure {
    int class_id = 0;
    int index = 0;
    std::string message;
};

struct GenerationResult {
    std::vector<Sample> samples; // ordered by (class, index)
    std::vector<GenerationFailure> failures;
};

// samples_per_class draws for each of the six classes. Child seeds are a
// stable hash of (master_seed, class, index), so any sample can be
// regenerated in isolation. If cache_dir is non-empty, finished samples are
// stored there one file per child seed and reused on the next run.
GenerationResult generate_dataset(const SimContext& ctx, int samples_per_class,
                                  std::uint64_t master_seed, const std::string& cache_dir,
                                  int workers);

struct DatasetSplit {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
    std::uint64_t split_seed = 0;
};

// Class-stratified shuffle followed by a 3:1:1 partition (sizes within one
// per class of the exact ratio). Needs at least five samples per class.
DatasetSplit split_dataset(const std::vector<Sample>& samples, std::uint64_t split_seed);

// Line-oriented text format: a fixed header documenting feature order and
// label codes, then one key=value record per line at full precision.
void save_dataset(const std::string& path, const std::vector<Sample>& samples);
std::vector<Sample> load_dataset(const std::string& path);

std::string serialize_sample(const Sample& s);
Sample parse_sample(const std::string& line, int line_number = -1);

// Per-feature affine transform fitted on the training split only. A feature
// with zero spread is passed through unscaled (with a warning on stderr).
struct Standardizer {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d scale = Eigen::Vector3d::Ones();

    static Standardizer fit(const std::vector<Sample>& train);
    Eigen::Vector3d apply(const Eigen::Vector3d& x) const;
};

// FNV-1a over the serialized dataset; a convenient reproducibility fingerprint.
std::uint64_t dataset_fingerprint(const std::vector<Sample>& samples);

} // namespace qsensor
