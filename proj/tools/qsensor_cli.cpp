// Command-line front end for the qsensor C API: simulate trajectories, render
// efficiency maps, generate datasets, train and evaluate the classifier.

#include "qsensor/qsensor.h"

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct ConfigHandle {
    qs_config* cfg = nullptr;
    ConfigHandle() : cfg(qs_config_create()) {}
    ~ConfigHandle() { qs_config_destroy(cfg); }
    ConfigHandle(const ConfigHandle&) = delete;
    ConfigHandle& operator=(const ConfigHandle&) = delete;
};

struct GlobalOptions {
    std::string config_path;
    std::string profile;
    std::string out_dir;
    std::int64_t seed = -1;
    int workers = -1;
};

// Applies global options onto a fresh config. Any failure here is a usage
// error (exit code 2).
bool build_config(const GlobalOptions& opts, qs_config* cfg)
{
    if (!opts.config_path.empty()) {
        if (qs_config_load(cfg, opts.config_path.c_str()) != QS_OK) {
            std::fprintf(stderr, "error: %s\n", qs_last_error());
            return false;
        }
    }
    if (!opts.profile.empty()) {
        if (qs_config_apply_profile(cfg, opts.profile.c_str()) != QS_OK) {
            std::fprintf(stderr, "error: %s\n", qs_last_error());
            return false;
        }
    }
    auto set = [&](const char* key, const std::string& value) {
        if (qs_config_set(cfg, key, value.c_str()) != QS_OK) {
            std::fprintf(stderr, "error: %s\n", qs_last_error());
            return false;
        }
        return true;
    };
    if (opts.seed >= 0) {
        if (!set("master_seed", std::to_string(opts.seed)) ||
            !set("split_seed", std::to_string(opts.seed + 1)) ||
            !set("train_seed", std::to_string(opts.seed + 2)))
            return false;
    }
    if (opts.workers >= 0 && !set("workers", std::to_string(opts.workers))) return false;
    if (!opts.out_dir.empty() && !set("out_dir", opts.out_dir)) return false;
    return true;
}

std::string out_dir_of(const qs_config* cfg)
{
    char buf[4096];
    if (qs_config_get(cfg, "out_dir", buf, sizeof(buf)) != QS_OK) return ".";
    return buf;
}

std::string out_path(const qs_config* cfg, const std::string& name)
{
    const std::filesystem::path dir = out_dir_of(cfg);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    return (dir / name).string();
}

bool parse_drive(const std::string& name, qs_drive* out)
{
    if (name == "equal") *out = QS_DRIVE_EQUAL;
    else if (name == "pump_double") *out = QS_DRIVE_PUMP_DOUBLE;
    else if (name == "stokes_double") *out = QS_DRIVE_STOKES_DOUBLE;
    else return false;
    return true;
}

const char* drive_name(qs_drive d)
{
    switch (d) {
        case QS_DRIVE_EQUAL: return "equal";
        case QS_DRIVE_PUMP_DOUBLE: return "pump_double";
        case QS_DRIVE_STOKES_DOUBLE: return "stokes_double";
    }
    return "unknown";
}

void print_report(const qs_eval_report& r)
{
    static const char* kNames[6] = {"nm_corr", "nm_anti", "nm_unc",
                                    "m_corr",  "m_anti",  "m_unc"};
    std::printf("samples evaluated: %d\n", r.n_samples);
    std::printf("overall accuracy: %.4f\n", r.accuracy);
    std::printf("markovian-vs-non-markovian accuracy: %.4f\n", r.markov_binary_accuracy);
    std::printf("non-markovian within-group accuracy: %.4f\n", r.nm_within_accuracy);
    std::printf("markovian within-group accuracy: %.4f\n", r.m_within_accuracy);
    std::printf("\nconfusion matrix (rows = true class, row-normalized %%):\n");
    std::printf("%9s", "");
    for (int p = 0; p < 6; ++p) std::printf(" %8s", kNames[p]);
    std::printf("\n");
    for (int t = 0; t < 6; ++t) {
        std::printf("%9s", kNames[t]);
        for (int p = 0; p < 6; ++p) std::printf(" %8.2f", r.confusion_row_pct[t * 6 + p]);
        std::printf("\n");
    }
    std::printf("\nconfusion matrix (counts):\n");
    for (int t = 0; t < 6; ++t) {
        std::printf("%9s", kNames[t]);
        for (int p = 0; p < 6; ++p) std::printf(" %8d", r.confusion_counts[t * 6 + p]);
        std::printf("\n");
    }
    std::printf("\nper-class recall:");
    for (int t = 0; t < 6; ++t) std::printf(" %s=%.4f", kNames[t], r.per_class_recall[t]);
    std::printf("\n");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qsensor: two-qubit noise sensing simulator and classifier"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "key = value configuration file");
    app.add_option("--profile", opts.profile, "apply a profile: full or fast");
    app.add_option("--seed", opts.seed, "base seed (sets master/split/train seeds)");
    app.add_option("--workers", opts.workers, "worker threads (0 = all cores)");
    app.add_option("--out", opts.out_dir, "output directory");

    // simulate
    auto* sim = app.add_subcommand("simulate", "propagate one protocol run and dump the trajectory");
    double delta1 = 0.0, delta2 = 0.0;
    std::string drive_str = "equal";
    sim->add_option("--delta1", delta1, "quasistatic shift of qubit 1");
    sim->add_option("--delta2", delta2, "quasistatic shift of qubit 2");
    sim->add_option("--drive", drive_str, "drive condition: equal, pump_double, stokes_double");

    // map
    auto* map = app.add_subcommand("map", "efficiency maps over the (delta1, delta2) grid");
    std::vector<std::string> map_drives{"equal", "pump_double", "stokes_double"};
    map->add_option("--drives", map_drives, "drive conditions to render");

    // generate
    auto* gen = app.add_subcommand("generate", "generate the labeled dataset");
    std::string dataset_out;
    gen->add_option("--dataset", dataset_out, "dataset output path (default <out>/dataset.txt)");

    // train
    auto* tr = app.add_subcommand("train", "train the classifier on a dataset");
    std::string train_dataset, checkpoint_out, history_out;
    tr->add_option("--dataset", train_dataset, "dataset path (default <out>/dataset.txt)");
    tr->add_option("--checkpoint", checkpoint_out,
                   "checkpoint output path (default <out>/checkpoint.json)");
    tr->add_option("--history", history_out,
                   "training history output path (default <out>/history.txt)");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset split");
    std::string eval_dataset, eval_checkpoint, eval_split = "test";
    ev->add_option("--dataset", eval_dataset, "dataset path (default <out>/dataset.txt)");
    ev->add_option("--checkpoint", eval_checkpoint,
                   "checkpoint path (default <out>/checkpoint.json)");
    ev->add_option("--split", eval_split, "train, validation, test or all");

    // predict
    auto* pr = app.add_subcommand("predict", "classify one feature vector");
    std::string predict_checkpoint;
    std::vector<double> features;
    pr->add_option("--checkpoint", predict_checkpoint,
                   "checkpoint path (default <out>/checkpoint.json)");
    pr->add_option("features", features, "xi_equal xi_pump_double xi_stokes_double")
        ->expected(3);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    ConfigHandle handle;
    if (!handle.cfg) {
        std::fprintf(stderr, "error: out of memory\n");
        return kExitRuntime;
    }
    if (!build_config(opts, handle.cfg)) return kExitUsage;
    const qs_config* cfg = handle.cfg;

    if (sim->parsed()) {
        qs_drive drive;
        if (!parse_drive(drive_str, &drive)) {
            std::fprintf(stderr, "error: unknown drive '%s'\n", drive_str.c_str());
            return kExitUsage;
        }
        const std::string traj =
            out_path(cfg, std::string("trajectory_") + drive_name(drive) + ".txt");
        double xi = 0.0;
        if (qs_simulate(cfg, delta1, delta2, drive, traj.c_str(), &xi) != QS_OK) {
            std::fprintf(stderr, "error: %s\n", qs_last_error());
            return kExitRuntime;
        }
        std::printf("final xi = %.10g\n", xi);
        std::printf("trajectory written to %s\n", traj.c_str());
        return kExitOk;
    }

    if (map->parsed()) {
        for (const auto& name : map_drives) {
            qs_drive drive;
            if (!parse_drive(name, &drive)) {
                std::fprintf(stderr, "error: unknown drive '%s'\n", name.c_str());
                return kExitUsage;
            }
            const std::string path = out_path(cfg, "map_" + name + ".txt");
            if (qs_efficiency_map(cfg, drive, path.c_str()) != QS_OK) {
                std::fprintf(stderr, "error: %s\n", qs_last_error());
                return kExitRuntime;
            }
            std::printf("map written to %s\n", path.c_str());
        }
        return kExitOk;
    }

    if (gen->parsed()) {
        const std::string path =
            dataset_out.empty() ? out_path(cfg, "dataset.txt") : dataset_out;
        int32_t n_samples = 0, n_failures = 0;
        if (qs_generate_dataset(cfg, path.c_str(), &n_samples, &n_failures) != QS_OK) {
            std::fprintf(stderr, "error: %s\n", qs_last_error());
            return kExitRuntime;
        }
        uint64_t fp = 0;
        qs_dataset_fingerprint(path.c_str(), &fp);
        std::printf("dataset written to %s (%d samples, %d failures)\n", path.c_str(),
                    n_samples, n_failures);
        std::printf("fingerprint = %016" PRIx64 "\n", fp);
        return n_failures == 0 ? kExitOk : kExitRuntime;
    }

    if (tr->parsed()) {
        const std::string dataset =
            train_dataset.empty() ? out_path(cfg, "dataset.txt") : train_dataset;
        const std::string checkpoint =
            checkpoint_out.empty() ? out_path(cfg, "checkpoint.json") : checkpoint_out;
        const std::string history =
            history_out.empty() ? out_path(cfg, "history.txt") : history_out;
        qs_train_summary summary{};
        if (qs_train(cfg, dataset.c_str(), checkpoint.c_str(), history.c_str(), &summary) !=
            QS_OK) {
            std::fprintf(stderr, "error: %s\n", qs_last_error());
            return kExitRuntime;
        }
        std::printf("trained %d epochs\n", summary.epochs);
        std::printf("final train loss %.6f acc %.4f | val loss %.6f acc %.4f\n",
                    summary.final_train_loss, summary.final_train_accuracy,
                    summary.final_val_loss, summary.final_val_accuracy);
        std::printf("checkpoint written to %s\n", checkpoint.c_str());
        std::printf("history written to %s\n", history.c_str());
        return kExitOk;
    }

    if (ev->parsed()) {
        const std::string dataset =
            eval_dataset.empty() ? out_path(cfg, "dataset.txt") : eval_dataset;
        const std::string checkpoint =
            eval_checkpoint.empty() ? out_path(cfg, "checkpoint.json") : eval_checkpoint;
        qs_eval_report report{};
        if (qs_evaluate(cfg, checkpoint.c_str(), dataset.c_str(), eval_split.c_str(),
                        &report) != QS_OK) {
            std::fprintf(stderr, "error: %s\n", qs_last_error());
            return kExitRuntime;
        }
        std::printf("split: %s\n", eval_split.c_str());
        print_report(report);
        return kExitOk;
    }

    if (pr->parsed()) {
        const std::string checkpoint =
            predict_checkpoint.empty() ? out_path(cfg, "checkpoint.json") : predict_checkpoint;
        const double x[3] = {features[0], features[1], features[2]};
        int32_t label = 0;
        double probs[6] = {0};
        if (qs_predict(checkpoint.c_str(), x, &label, probs) != QS_OK) {
            std::fprintf(stderr, "error: %s\n", qs_last_error());
            return kExitRuntime;
        }
        static const char* kNames[6] = {"nm_correlated",   "nm_anticorrelated",
                                        "nm_uncorrelated", "m_correlated",
                                        "m_anticorrelated", "m_uncorrelated"};
        std::printf("label = %d (%s)\n", label, kNames[label]);
        std::printf("probabilities:");
        for (int k = 0; k < 6; ++k) std::printf(" %s=%.6f", kNames[k], probs[k]);
        std::printf("\n");
        return kExitOk;
    }

    return kExitUsage;
}
