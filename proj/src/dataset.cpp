#include "qsensor/dataset.hpp"

#include "qsensor/parallel.hpp"
#include "qsensor/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace qsensor {

namespace {

constexpr const char* kHeaderMagic = "# qsensor dataset v1";

std::string fmt_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& key, int line_number)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("dataset parse error at line " + std::to_string(line_number) +
                                 ": bad value for " + key + ": '" + s + "'");
    }
}

std::string cache_file_for(const std::string& cache_dir, std::uint64_t seed)
{
    char name[32];
    std::snprintf(name, sizeof(name), "%016llx.sample",
                  static_cast<unsigned long long>(seed));
    return (fs::path(cache_dir) / name).string();
}

} // namespace

std::string serialize_sample(const Sample& s)
{
    std::ostringstream out;
    out << "label=" << s.label << " class=" << noise_class_name(s.params.noise_class);
    out << " xi_equal=" << fmt_double(s.features.xi_equal);
    out << " xi_pump_double=" << fmt_double(s.features.xi_pump_double);
    out << " xi_stokes_double=" << fmt_double(s.features.xi_stokes_double);
    switch (s.params.noise_class) {
        case NoiseClass::NmCorrelated:
        case NoiseClass::NmAnticorrelated:
            out << " eta=" << fmt_double(s.params.eta)
                << " sigma=" << fmt_double(s.params.sigma);
            break;
        case NoiseClass::NmUncorrelated:
            out << " sigma1=" << fmt_double(s.params.sigma1)
                << " sigma2=" << fmt_double(s.params.sigma2);
            break;
        case NoiseClass::MCorrelated:
        case NoiseClass::MAnticorrelated:
            out << " eta=" << fmt_double(s.params.eta)
                << " gamma=" << fmt_double(s.params.gamma);
            break;
        case NoiseClass::MUncorrelated:
            out << " gamma1=" << fmt_double(s.params.gamma1)
                << " gamma2=" << fmt_double(s.params.gamma2);
            break;
    }
    out << " seed=" << s.seed << " version=" << s.generator_version;
    return out.str();
}

Sample parse_sample(const std::string& line, int line_number)
{
    Sample s;
    bool have_label = false, have_xi[3] = {false, false, false}, have_seed = false;
    std::istringstream in(line);
    std::string token;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("dataset parse error at line " +
                                     std::to_string(line_number) + ": token '" + token +
                                     "' is not key=value");
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        if (key == "label") {
            const int label = static_cast<int>(parse_double(value, key, line_number));
            if (label < 0 || label >= kNumNoiseClasses)
                throw std::runtime_error("dataset parse error at line " +
                                         std::to_string(line_number) + ": unknown label " +
                                         value);
            s.label = label;
            s.params.noise_class = noise_class_from_int(label);
            have_label = true;
        } else if (key == "class") {
            // redundant with label; kept for readability, checked below
        } else if (key == "xi_equal") {
            s.features.xi_equal = parse_double(value, key, line_number);
            have_xi[0] = true;
        } else if (key == "xi_pump_double") {
            s.features.xi_pump_double = parse_double(value, key, line_number);
            have_xi[1] = true;
        } else if (key == "xi_stokes_double") {
            s.features.xi_stokes_double = parse_double(value, key, line_number);
            have_xi[2] = true;
        } else if (key == "eta") {
            s.params.eta = parse_double(value, key, line_number);
        } else if (key == "sigma") {
            s.params.sigma = parse_double(value, key, line_number);
        } else if (key == "sigma1") {
            s.params.sigma1 = parse_double(value, key, line_number);
        } else if (key == "sigma2") {
            s.params.sigma2 = parse_double(value, key, line_number);
        } else if (key == "gamma") {
            s.params.gamma = parse_double(value, key, line_number);
        } else if (key == "gamma1") {
            s.params.gamma1 = parse_double(value, key, line_number);
        } else if (key == "gamma2") {
            s.params.gamma2 = parse_double(value, key, line_number);
        } else if (key == "seed") {
            s.seed = std::stoull(value);
            s.params.seed = s.seed;
            have_seed = true;
        } else if (key == "version") {
            s.generator_version = value;
        } else {
            throw std::runtime_error("dataset parse error at line " +
                                     std::to_string(line_number) + ": unknown field '" + key +
                                     "'");
        }
    }
    if (!have_label || !have_xi[0] || !have_xi[1] || !have_xi[2] || !have_seed)
        throw std::runtime_error("dataset parse error at line " + std::to_string(line_number) +
                                 ": missing required fields");
    for (double v : {s.features.xi_equal, s.features.xi_pump_double,
                     s.features.xi_stokes_double})
        if (!std::isfinite(v))
            throw std::runtime_error("dataset parse error at line " +
                                     std::to_string(line_number) + ": non-finite feature");
    return s;
}

GenerationResult generate_dataset(const SimContext& ctx, int samples_per_class,
                                  std::uint64_t master_seed, const std::string& cache_dir,
                                  int workers)
{
    if (samples_per_class < 1)
        throw std::invalid_argument("generate_dataset: samples_per_class must be >= 1");
    if (!cache_dir.empty()) fs::create_directories(cache_dir);

    const std::size_t total = static_cast<std::size_t>(samples_per_class) * kNumNoiseClasses;
    GenerationResult result;
    result.samples.resize(total);
    std::vector<char> ok(total, 0);
    std::mutex failure_mutex;

    parallel_for(total, workers, [&](std::size_t idx) {
        const int class_id = static_cast<int>(idx) / samples_per_class;
        const int index = static_cast<int>(idx) % samples_per_class;
        const std::uint64_t child_seed = derive_seed(master_seed, class_id, index);

        if (!cache_dir.empty()) {
            std::ifstream in(cache_file_for(cache_dir, child_seed));
            if (in) {
                std::string line;
                std::getline(in, line);
                try {
                    Sample cached = parse_sample(line, 1);
                    if (cached.label == class_id && cached.seed == child_seed &&
                        cached.generator_version == kGeneratorVersion) {
                        result.samples[idx] = std::move(cached);
                        ok[idx] = 1;
                        return;
                    }
                } catch (const std::exception&) {
                    // unreadable cache entry: fall through and recompute
                }
            }
        }

        try {
            Sample s;
            s.params = draw_sample_params(noise_class_from_int(class_id), child_seed);
            s.label = class_id;
            s.seed = child_seed;
            s.features = feature_vector(ctx, s.params);
            if (!cache_dir.empty()) {
                const std::string path = cache_file_for(cache_dir, child_seed);
                const std::string tmp = path + ".tmp";
                {
                    std::ofstream out(tmp);
                    out << serialize_sample(s) << "\n";
                }
                fs::rename(tmp, path);
            }
            result.samples[idx] = std::move(s);
            ok[idx] = 1;
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            result.failures.push_back({class_id, index, e.what()});
        }
    });

    // drop failed slots, keeping (class, index) order
    std::vector<Sample> kept;
    kept.reserve(total);
    for (std::size_t i = 0; i < total; ++i)
        if (ok[i]) kept.push_back(std::move(result.samples[i]));
    result.samples = std::move(kept);
    std::sort(result.failures.begin(), result.failures.end(),
              [](const GenerationFailure& a, const GenerationFailure& b) {
                  return std::tie(a.class_id, a.index) < std::tie(b.class_id, b.index);
              });
    for (const auto& f : result.failures)
        std::cerr << "generate_dataset: class " << f.class_id << " index " << f.index
                  << " failed: " << f.message << "\n";
    return result;
}

DatasetSplit split_dataset(const std::vector<Sample>& samples, std::uint64_t split_seed)
{
    std::vector<std::vector<std::size_t>> by_class(kNumNoiseClasses);
    for (std::size_t i = 0; i < samples.size(); ++i)
        by_class[samples[i].label].push_back(i);
    for (int c = 0; c < kNumNoiseClasses; ++c)
        if (by_class[c].size() < 5)
            throw std::invalid_argument("split_dataset: need at least 5 samples per class, class " +
                                        std::to_string(c) + " has " +
                                        std::to_string(by_class[c].size()));

    DatasetSplit split;
    split.split_seed = split_seed;
    for (int c = 0; c < kNumNoiseClasses; ++c) {
        auto& idx = by_class[c];
        Rng rng(derive_seed(split_seed, 0x73706c69 /* 'spli' */, c));
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            const std::size_t j = rng.raw() % (i + 1);
            std::swap(idx[i], idx[j]);
        }
        const std::size_t n = idx.size();
        const std::size_t n_val = static_cast<std::size_t>(std::lround(n * 0.2));
        const std::size_t n_test = static_cast<std::size_t>(std::lround(n * 0.2));
        const std::size_t n_train = n - n_val - n_test;
        for (std::size_t i = 0; i < n; ++i) {
            const Sample& s = samples[idx[i]];
            if (i < n_train)
                split.train.push_back(s);
            else if (i < n_train + n_val)
                split.validation.push_back(s);
            else
                split.test.push_back(s);
        }
    }
    return split;
}

void save_dataset(const std::string& path, const std::vector<Sample>& samples)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
    out << kHeaderMagic << "\n";
    out << "# features: xi_equal xi_pump_double xi_stokes_double"
           " (fixed order; dimensionless |ee> populations at fixed drive power)\n";
    out << "# labels: 0=nm_correlated 1=nm_anticorrelated 2=nm_uncorrelated"
           " 3=m_correlated 4=m_anticorrelated 5=m_uncorrelated\n";
    for (const auto& s : samples) out << serialize_sample(s) << "\n";
}

std::vector<Sample> load_dataset(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kHeaderMagic)
        throw std::runtime_error("load_dataset: missing or unrecognized header in " + path +
                                 " (expected '" + kHeaderMagic + "')");
    std::vector<Sample> samples;
    int line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line[0] == '#') continue;
        samples.push_back(parse_sample(line, line_number));
    }
    return samples;
}

Standardizer Standardizer::fit(const std::vector<Sample>& train)
{
    if (train.empty()) throw std::invalid_argument("Standardizer::fit: empty training set");
    Standardizer st;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& s : train) mean += s.features.vec();
    mean /= static_cast<double>(train.size());
    Eigen::Vector3d var = Eigen::Vector3d::Zero();
    for (const auto& s : train) {
        const Eigen::Vector3d d = s.features.vec() - mean;
        var += d.cwiseProduct(d);
    }
    var /= static_cast<double>(train.size());
    st.mean = mean;
    for (int k = 0; k < 3; ++k) {
        const double sd = std::sqrt(var(k));
        if (sd > 0.0) {
            st.scale(k) = sd;
        } else {
            std::cerr << "Standardizer: feature " << k
                      << " has zero spread; passing it through unscaled\n";
            st.scale(k) = 1.0;
        }
    }
    return st;
}

Eigen::Vector3d Standardizer::apply(const Eigen::Vector3d& x) const
{
    return (x - mean).cwiseQuotient(scale);
}

std::uint64_t dataset_fingerprint(const std::vector<Sample>& samples)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const std::string& s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& s : samples) mix(serialize_sample(s));
    return h;
}

} // namespace qsensor
