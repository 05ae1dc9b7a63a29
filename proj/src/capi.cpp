#include "qsensor/qsensor.h"

#include "qsensor/config.hpp"
#include "qsensor/dataset.hpp"
#include "qsensor/dynamics.hpp"
#include "qsensor/efficiency.hpp"
#include "qsensor/mlp.hpp"

#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>

using namespace qsensor;

struct qs_config {
    RunConfig cfg;
};

namespace {

thread_local std::string t_last_error = "no error";

qs_status fail(qs_status code, const std::string& message)
{
    t_last_error = message;
    return code;
}

// Maps C++ exceptions from the core onto status codes.
template <class Fn>
qs_status guarded(Fn&& fn)
{
    try {
        fn();
        return QS_OK;
    } catch (const std::invalid_argument& e) {
        return fail(QS_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        if (what.find("parse") != std::string::npos)
            return fail(QS_ERR_PARSE, what);
        if (what.find("cannot open") != std::string::npos ||
            what.find("missing or unrecognized header") != std::string::npos)
            return fail(QS_ERR_IO, what);
        if (what.find("norm drift") != std::string::npos ||
            what.find("trace drift") != std::string::npos ||
            what.find("negativity") != std::string::npos ||
            what.find("diverged") != std::string::npos)
            return fail(QS_ERR_NUMERIC, what);
        return fail(QS_ERR_INTERNAL, what);
    } catch (const std::exception& e) {
        return fail(QS_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(QS_ERR_INTERNAL, "unknown error");
    }
}

DriveTag to_tag(qs_drive drive)
{
    switch (drive) {
        case QS_DRIVE_EQUAL: return DriveTag::Equal;
        case QS_DRIVE_PUMP_DOUBLE: return DriveTag::PumpDouble;
        case QS_DRIVE_STOKES_DOUBLE: return DriveTag::StokesDouble;
    }
    throw std::invalid_argument("unknown drive condition " +
                                std::to_string(static_cast<int>(drive)));
}

const qs_config* require(const qs_config* cfg)
{
    if (!cfg) throw std::invalid_argument("config handle is NULL");
    return cfg;
}

std::vector<Sample> select_split(const std::vector<Sample>& samples, std::uint64_t split_seed,
                                 const std::string& split)
{
    if (split == "all") return samples;
    DatasetSplit s = split_dataset(samples, split_seed);
    if (split == "train") return s.train;
    if (split == "validation") return s.validation;
    if (split == "test") return s.test;
    throw std::invalid_argument("unknown split '" + split +
                                "' (expected train/validation/test/all)");
}

} // namespace

extern "C" {

const char* qs_version(void)
{
    return kGeneratorVersion;
}

const char* qs_last_error(void)
{
    return t_last_error.c_str();
}

qs_config* qs_config_create(void)
{
    return new (std::nothrow) qs_config{};
}

void qs_config_destroy(qs_config* cfg)
{
    delete cfg;
}

qs_status qs_config_load(qs_config* cfg, const char* path)
{
    return guarded([&] {
        require(cfg);
        if (!path) throw std::invalid_argument("path is NULL");
        cfg->cfg = load_config(path);
    });
}

qs_status qs_config_set(qs_config* cfg, const char* key, const char* value)
{
    return guarded([&] {
        require(cfg);
        if (!key || !value) throw std::invalid_argument("key/value is NULL");
        cfg->cfg.set(key, value);
        cfg->cfg.validate();
    });
}

qs_status qs_config_get(const qs_config* cfg, const char* key, char* buf, size_t buf_len)
{
    return guarded([&] {
        require(cfg);
        if (!key || !buf || buf_len == 0)
            throw std::invalid_argument("bad output buffer");
        const std::string v = cfg->cfg.get(key);
        if (v.size() + 1 > buf_len)
            throw std::invalid_argument("buffer too small for value of '" + std::string(key) +
                                        "'");
        std::memcpy(buf, v.c_str(), v.size() + 1);
    });
}

qs_status qs_config_apply_profile(qs_config* cfg, const char* profile)
{
    return guarded([&] {
        require(cfg);
        if (!profile) throw std::invalid_argument("profile is NULL");
        cfg->cfg.apply_profile(profile);
    });
}

qs_status qs_simulate(const qs_config* cfg, double delta1, double delta2, qs_drive drive,
                      const char* trajectory_path, double* final_xi)
{
    return guarded([&] {
        require(cfg);
        const SimContext ctx = cfg->cfg.sim_context();
        const Spectrum spec = eigensystem(ctx.proto.system);
        const PulseParams pulses = ctx.proto.pulses_for(to_tag(drive));
        const LabHamiltonian lab =
            assemble_lab_hamiltonian(ctx.proto.system, pulses, spec, delta1, delta2);
        const IntegratorConfig icfg = integrator_for(lab, ctx.proto.resolution_factor,
                                                     std::abs(delta1) + std::abs(delta2));
        Vector4cd initial = Vector4cd::Zero();
        initial(0) = 1.0;
        const Vector4cd ee = ee_state_eigenbasis(spec);
        const std::int64_t nsteps = icfg.step_count(pulses.t_start, pulses.t_end);
        const int stride =
            trajectory_path ? static_cast<int>(std::max<std::int64_t>(1, nsteps / 2000)) : 0;
        const SchrodingerResult res =
            propagate_schrodinger(lab, initial, icfg, stride, &ee);
        if (trajectory_path) write_trajectory(trajectory_path, res.trajectory);
        if (final_xi) *final_xi = population(res.state, ee);
    });
}

qs_status qs_efficiency_map(const qs_config* cfg, qs_drive drive, const char* out_path)
{
    return guarded([&] {
        require(cfg);
        if (!out_path) throw std::invalid_argument("out_path is NULL");
        const SimContext ctx = cfg->cfg.sim_context();
        const MapGrid grid{cfg->cfg.map_grid, cfg->cfg.map_range};
        write_map(out_path, efficiency_map(ctx, grid, to_tag(drive)));
    });
}

qs_status qs_generate_dataset(const qs_config* cfg, const char* out_path, int32_t* n_samples,
                              int32_t* n_failures)
{
    return guarded([&] {
        require(cfg);
        if (!out_path) throw std::invalid_argument("out_path is NULL");
        const SimContext ctx = cfg->cfg.sim_context();
        const GenerationResult result =
            generate_dataset(ctx, cfg->cfg.samples_per_class, cfg->cfg.master_seed,
                             cfg->cfg.resolved_cache_dir(), cfg->cfg.workers);
        const auto parent = std::filesystem::path(out_path).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        save_dataset(out_path, result.samples);
        if (n_samples) *n_samples = static_cast<int32_t>(result.samples.size());
        if (n_failures) *n_failures = static_cast<int32_t>(result.failures.size());
    });
}

qs_status qs_dataset_fingerprint(const char* dataset_path, uint64_t* fingerprint)
{
    return guarded([&] {
        if (!dataset_path || !fingerprint)
            throw std::invalid_argument("dataset_path/fingerprint is NULL");
        *fingerprint = dataset_fingerprint(load_dataset(dataset_path));
    });
}

qs_status qs_train(const qs_config* cfg, const char* dataset_path, const char* checkpoint_path,
                   const char* history_path, qs_train_summary* summary)
{
    return guarded([&] {
        require(cfg);
        if (!dataset_path || !checkpoint_path)
            throw std::invalid_argument("dataset_path/checkpoint_path is NULL");
        const std::vector<Sample> samples = load_dataset(dataset_path);
        const DatasetSplit split = split_dataset(samples, cfg->cfg.split_seed);
        const ModelCheckpoint cp =
            train(split, cfg->cfg.train_config(), cfg->cfg.architecture());
        save_checkpoint(checkpoint_path, cp);
        if (history_path) write_history(history_path, cp.history);
        if (summary) {
            summary->epochs = static_cast<int32_t>(cp.history.train_loss.size());
            summary->final_train_loss = cp.history.train_loss.back();
            summary->final_val_loss = cp.history.val_loss.back();
            summary->final_train_accuracy = cp.history.train_acc.back();
            summary->final_val_accuracy = cp.history.val_acc.back();
        }
    });
}

qs_status qs_evaluate(const qs_config* cfg, const char* checkpoint_path,
                      const char* dataset_path, const char* split, qs_eval_report* report)
{
    return guarded([&] {
        require(cfg);
        if (!checkpoint_path || !dataset_path || !report)
            throw std::invalid_argument("checkpoint_path/dataset_path/report is NULL");
        const ModelCheckpoint cp = load_checkpoint(checkpoint_path);
        const std::vector<Sample> samples = select_split(
            load_dataset(dataset_path), cfg->cfg.split_seed, split ? split : "test");
        const EvalReport r = evaluate(cp, samples);
        report->n_samples = r.n_samples;
        report->accuracy = r.accuracy;
        report->markov_binary_accuracy = r.markov_binary_accuracy;
        report->nm_within_accuracy = r.nm_within_accuracy;
        report->m_within_accuracy = r.m_within_accuracy;
        for (int t = 0; t < 6; ++t) {
            for (int p = 0; p < 6; ++p) {
                report->confusion_counts[t * 6 + p] = r.confusion_counts(t, p);
                report->confusion_row_pct[t * 6 + p] = r.confusion_row_pct(t, p);
            }
            report->per_class_recall[t] = r.per_class_recall(t);
        }
    });
}

qs_status qs_predict(const char* checkpoint_path, const double features[3], int32_t* label,
                     double probabilities[6])
{
    return guarded([&] {
        if (!checkpoint_path || !features)
            throw std::invalid_argument("checkpoint_path/features is NULL");
        const ModelCheckpoint cp = load_checkpoint(checkpoint_path);
        const Prediction p =
            predict(cp, Eigen::Vector3d(features[0], features[1], features[2]));
        if (label) *label = p.label;
        if (probabilities)
            for (int k = 0; k < 6; ++k) probabilities[k] = p.probabilities(k);
    });
}

} // extern "C"
