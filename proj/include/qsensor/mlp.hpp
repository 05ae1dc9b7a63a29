#pragma once

#include "qsensor/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace qsensor {

// Input 3 -> hidden (64, 32, 32, 32) -> output 6. The first hidden layer uses
// ReLU, the remaining hidden layers LeakyReLU, the output softmax.
struct MlpArchitecture {
    std::vector<int> layer_sizes{3, 64, 32, 32, 32, 6};
    double leak_slope = 0.01;

    void validate() const;
    int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
};

struct Mlp {
    MlpArchitecture arch;
    std::vector<Eigen::MatrixXd> weights; // weights[l]: D_{l+1} x D_l
    std::vector<Eigen::VectorXd> biases;

    // Symmetric uniform fan-based initialization, biases zero.
    static Mlp initialized(const MlpArchitecture& arch, std::uint64_t seed);

    // Rows of x are samples; returns row-stochastic probability matrix.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd forward(const Eigen::Vector3d& x) const;
};

// Sparse categorical cross-entropy, log arguments clamped at 1e-12.
double cross_entropy_loss(const Eigen::MatrixXd& probs, const std::vector<int>& labels);

// Fraction of argmax matches; ties break to the lowest index.
double accuracy_metric(const Eigen::MatrixXd& probs, const std::vector<int>& labels);

int argmax_lowest(const Eigen::VectorXd& v);

struct Gradients {
    std::vector<Eigen::MatrixXd> dw;
    std::vector<Eigen::VectorXd> db;
};

// Exact backpropagation gradients of the batch loss.
Gradients gradients(const Mlp& mlp, const Eigen::MatrixXd& x, const std::vector<int>& labels);

struct TrainConfig {
    int epochs = 120;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0; // initialization and shuffling

    void validate() const;
};

struct AdamState {
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
    std::int64_t t = 0;

    static AdamState zeros_like(const Mlp& mlp);
};

void adam_step(Mlp& mlp, const Gradients& grads, AdamState& state, const TrainConfig& cfg);

struct TrainHistory {
    std::vector<double> train_loss, val_loss, train_acc, val_acc;
};

struct ModelCheckpoint {
    Mlp mlp;
    Standardizer standardizer;
    std::vector<std::string> label_names;
    TrainHistory history;
    std::uint64_t seed = 0;
};

// Mini-batch training with per-epoch shuffling; the standardizer is fitted on
// the training split and applied to every split. History records full-batch
// loss/accuracy at each epoch end. Divergence (non-finite or huge loss) aborts.
ModelCheckpoint train(const DatasetSplit& split, const TrainConfig& cfg,
                      const MlpArchitecture& arch);

struct EvalReport {
    int n_samples = 0;
    double accuracy = 0.0;
    Eigen::Matrix<int, 6, 6> confusion_counts = Eigen::Matrix<int, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 6> confusion_row_pct = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> per_class_recall = Eigen::Matrix<double, 6, 1>::Zero();
    double markov_binary_accuracy = 0.0; // Markovian vs non-Markovian group
    double nm_within_accuracy = 0.0;     // exact class among true non-Markovian
    double m_within_accuracy = 0.0;      // exact class among true Markovian
};

EvalReport evaluate(const ModelCheckpoint& cp, const std::vector<Sample>& samples);

struct Prediction {
    int label = 0;
    Eigen::Matrix<double, 6, 1> probabilities;
};

// Applies the stored standardization, then the network.
Prediction predict(const ModelCheckpoint& cp, const Eigen::Vector3d& raw_features);

// Self-describing JSON checkpoint with full-precision parameters.
void save_checkpoint(const std::string& path, const ModelCheckpoint& cp);
ModelCheckpoint load_checkpoint(const std::string& path);

void write_history(const std::string& path, const TrainHistory& history);

} // namespace qsensor
