#include "qsensor/mlp.hpp"

#include "qsensor/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace qsensor {

namespace {

constexpr double kLogClamp = 1e-12;
constexpr double kDivergenceThreshold = 1e3;

// hidden layer 0 is ReLU, later hidden layers LeakyReLU
double activate(double z, int layer, int num_layers, double slope)
{
    (void)num_layers;
    if (layer == 0) return z > 0.0 ? z : 0.0;
    return z >= 0.0 ? z : slope * z;
}

double activate_grad(double z, int layer, double slope)
{
    if (layer == 0) return z > 0.0 ? 1.0 : 0.0;
    return z >= 0.0 ? 1.0 : slope;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z)
{
    Eigen::MatrixXd p(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        Eigen::RowVectorXd e = (z.row(i).array() - m).exp();
        p.row(i) = e / e.sum();
    }
    return p;
}

struct ForwardCache {
    std::vector<Eigen::MatrixXd> zs; // pre-activations per layer
    std::vector<Eigen::MatrixXd> ys; // ys[0] = input, ys[l+1] = activation of layer l
};

Eigen::MatrixXd forward_cached(const Mlp& mlp, const Eigen::MatrixXd& x, ForwardCache* cache)
{
    const int layers = mlp.arch.num_layers();
    Eigen::MatrixXd y = x;
    if (cache) cache->ys.push_back(y);
    for (int l = 0; l < layers; ++l) {
        Eigen::MatrixXd z = y * mlp.weights[l].transpose();
        z.rowwise() += mlp.biases[l].transpose();
        if (cache) cache->zs.push_back(z);
        if (l == layers - 1) {
            y = softmax_rows(z);
        } else {
            y = z.unaryExpr([&](double v) {
                return activate(v, l, layers, mlp.arch.leak_slope);
            });
        }
        if (cache) cache->ys.push_back(y);
    }
    return y;
}

} // namespace

void MlpArchitecture::validate() const
{
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("MlpArchitecture: need input and output layers");
    for (int n : layer_sizes)
        if (n < 1) throw std::invalid_argument("MlpArchitecture: layer sizes must be positive");
    if (layer_sizes.front() != 3 || layer_sizes.back() != 6)
        throw std::invalid_argument("MlpArchitecture: input width must be 3 and output width 6");
}

void TrainConfig::validate() const
{
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("TrainConfig: learning_rate must be positive");
}

Mlp Mlp::initialized(const MlpArchitecture& arch, std::uint64_t seed)
{
    arch.validate();
    Mlp mlp;
    mlp.arch = arch;
    Rng rng(seed);
    for (int l = 0; l < arch.num_layers(); ++l) {
        const int fan_in = arch.layer_sizes[l];
        const int fan_out = arch.layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-limit, limit);
        mlp.weights.push_back(std::move(w));
        mlp.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return mlp;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const
{
    return forward_cached(*this, x, nullptr);
}

Eigen::VectorXd Mlp::forward(const Eigen::Vector3d& x) const
{
    Eigen::MatrixXd row(1, 3);
    row << x(0), x(1), x(2);
    return forward_cached(*this, row, nullptr).row(0).transpose();
}

double cross_entropy_loss(const Eigen::MatrixXd& probs, const std::vector<int>& labels)
{
    if (static_cast<std::size_t>(probs.rows()) != labels.size())
        throw std::invalid_argument("cross_entropy_loss: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= probs.cols())
            throw std::invalid_argument("cross_entropy_loss: label out of range");
        sum -= std::log(std::max(probs(static_cast<Eigen::Index>(i), labels[i]), kLogClamp));
    }
    return sum / static_cast<double>(labels.size());
}

int argmax_lowest(const Eigen::VectorXd& v)
{
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = i;
    return best;
}

double accuracy_metric(const Eigen::MatrixXd& probs, const std::vector<int>& labels)
{
    if (static_cast<std::size_t>(probs.rows()) != labels.size())
        throw std::invalid_argument("accuracy_metric: size mismatch");
    if (labels.empty()) return 0.0;
    int correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (argmax_lowest(probs.row(static_cast<Eigen::Index>(i)).transpose()) == labels[i])
            ++correct;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

Gradients gradients(const Mlp& mlp, const Eigen::MatrixXd& x, const std::vector<int>& labels)
{
    const int layers = mlp.arch.num_layers();
    const auto n = static_cast<double>(x.rows());
    ForwardCache cache;
    const Eigen::MatrixXd probs = forward_cached(mlp, x, &cache);

    // d loss / d z_L = (probs - onehot) / N
    Eigen::MatrixXd dz = probs;
    for (Eigen::Index i = 0; i < dz.rows(); ++i) dz(i, labels[i]) -= 1.0;
    dz /= n;

    Gradients g;
    g.dw.resize(layers);
    g.db.resize(layers);
    for (int l = layers - 1; l >= 0; --l) {
        g.dw[l] = dz.transpose() * cache.ys[l];
        g.db[l] = dz.colwise().sum().transpose();
        if (l > 0) {
            Eigen::MatrixXd dy = dz * mlp.weights[l];
            dz = dy.cwiseProduct(cache.zs[l - 1].unaryExpr([&](double v) {
                return activate_grad(v, l - 1, mlp.arch.leak_slope);
            }));
        }
    }
    return g;
}

AdamState AdamState::zeros_like(const Mlp& mlp)
{
    AdamState st;
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        st.m_w.push_back(Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
        st.v_w.push_back(Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
        st.m_b.push_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
        st.v_b.push_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
    }
    return st;
}

namespace {

template <class T>
void adam_update(T& param, const T& grad, T& m, T& v, const TrainConfig& cfg, double bc1,
                 double bc2)
{
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
    param.array() -=
        cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_epsilon);
}

} // namespace

void adam_step(Mlp& mlp, const Gradients& grads, AdamState& state, const TrainConfig& cfg)
{
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        adam_update(mlp.weights[l], grads.dw[l], state.m_w[l], state.v_w[l], cfg, bc1, bc2);
        adam_update(mlp.biases[l], grads.db[l], state.m_b[l], state.v_b[l], cfg, bc1, bc2);
    }
}

namespace {

void to_matrix(const std::vector<Sample>& samples, const Standardizer& st,
               Eigen::MatrixXd& x, std::vector<int>& labels)
{
    x.resize(static_cast<Eigen::Index>(samples.size()), 3);
    labels.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = st.apply(samples[i].features.vec()).transpose();
        labels[i] = samples[i].label;
    }
}

} // namespace

ModelCheckpoint train(const DatasetSplit& split, const TrainConfig& cfg,
                      const MlpArchitecture& arch)
{
    cfg.validate();
    if (split.train.empty()) throw std::invalid_argument("train: empty training split");

    ModelCheckpoint cp;
    cp.seed = cfg.seed;
    cp.standardizer = Standardizer::fit(split.train);
    for (int c = 0; c < kNumNoiseClasses; ++c)
        cp.label_names.push_back(noise_class_name(noise_class_from_int(c)));

    Eigen::MatrixXd x_train, x_val;
    std::vector<int> y_train, y_val;
    to_matrix(split.train, cp.standardizer, x_train, y_train);
    to_matrix(split.validation, cp.standardizer, x_val, y_val);

    cp.mlp = Mlp::initialized(arch, cfg.seed);
    AdamState adam = AdamState::zeros_like(cp.mlp);

    const auto n = static_cast<std::size_t>(x_train.rows());
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, 0x6570 /* 'ep' */, epoch));
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = shuffle_rng.raw() % (i + 1);
            std::swap(order[i], order[j]);
        }

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            Eigen::MatrixXd xb(static_cast<Eigen::Index>(stop - start), 3);
            std::vector<int> yb(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                xb.row(static_cast<Eigen::Index>(i - start)) =
                    x_train.row(static_cast<Eigen::Index>(order[i]));
                yb[i - start] = y_train[order[i]];
            }
            const Gradients g = gradients(cp.mlp, xb, yb);
            adam_step(cp.mlp, g, adam, cfg);
        }

        const Eigen::MatrixXd p_train = cp.mlp.forward(x_train);
        const double train_loss = cross_entropy_loss(p_train, y_train);
        cp.history.train_loss.push_back(train_loss);
        cp.history.train_acc.push_back(accuracy_metric(p_train, y_train));
        if (x_val.rows() > 0) {
            const Eigen::MatrixXd p_val = cp.mlp.forward(x_val);
            cp.history.val_loss.push_back(cross_entropy_loss(p_val, y_val));
            cp.history.val_acc.push_back(accuracy_metric(p_val, y_val));
        } else {
            cp.history.val_loss.push_back(0.0);
            cp.history.val_acc.push_back(0.0);
        }

        if (!std::isfinite(train_loss) || train_loss > kDivergenceThreshold)
            throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch + 1) +
                                     " (loss " + std::to_string(train_loss) +
                                     "); lower the learning rate");
    }
    return cp;
}

EvalReport evaluate(const ModelCheckpoint& cp, const std::vector<Sample>& samples)
{
    EvalReport report;
    report.n_samples = static_cast<int>(samples.size());
    if (samples.empty()) return report;

    Eigen::MatrixXd x;
    std::vector<int> labels;
    to_matrix(samples, cp.standardizer, x, labels);
    const Eigen::MatrixXd probs = cp.mlp.forward(x);

    int correct = 0, bin_correct = 0;
    int nm_total = 0, nm_correct = 0, m_total = 0, m_correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int truth = labels[i];
        const int pred = argmax_lowest(probs.row(static_cast<Eigen::Index>(i)).transpose());
        report.confusion_counts(truth, pred) += 1;
        if (pred == truth) ++correct;
        const bool truth_markov = truth >= 3;
        const bool pred_markov = pred >= 3;
        if (truth_markov == pred_markov) ++bin_correct;
        if (truth_markov) {
            ++m_total;
            if (pred == truth) ++m_correct;
        } else {
            ++nm_total;
            if (pred == truth) ++nm_correct;
        }
    }
    report.accuracy = static_cast<double>(correct) / report.n_samples;
    report.markov_binary_accuracy = static_cast<double>(bin_correct) / report.n_samples;
    report.nm_within_accuracy = nm_total ? static_cast<double>(nm_correct) / nm_total : 0.0;
    report.m_within_accuracy = m_total ? static_cast<double>(m_correct) / m_total : 0.0;
    for (int t = 0; t < 6; ++t) {
        const int row_total = report.confusion_counts.row(t).sum();
        for (int p = 0; p < 6; ++p)
            report.confusion_row_pct(t, p) =
                row_total ? 100.0 * report.confusion_counts(t, p) / row_total : 0.0;
        report.per_class_recall(t) =
            row_total ? static_cast<double>(report.confusion_counts(t, t)) / row_total : 0.0;
    }
    return report;
}

Prediction predict(const ModelCheckpoint& cp, const Eigen::Vector3d& raw_features)
{
    Prediction p;
    const Eigen::VectorXd probs = cp.mlp.forward(
        Eigen::Vector3d(cp.standardizer.apply(raw_features)));
    p.probabilities = probs;
    p.label = argmax_lowest(probs);
    return p;
}

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j)
{
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
    return m;
}

} // namespace

void save_checkpoint(const std::string& path, const ModelCheckpoint& cp)
{
    json j;
    j["format"] = "qsensor-checkpoint-v1";
    j["architecture"]["layer_sizes"] = cp.mlp.arch.layer_sizes;
    j["architecture"]["leak_slope"] = cp.mlp.arch.leak_slope;
    json weights = json::array(), biases = json::array();
    for (std::size_t l = 0; l < cp.mlp.weights.size(); ++l) {
        weights.push_back(matrix_to_json(cp.mlp.weights[l]));
        json b = json::array();
        for (Eigen::Index i = 0; i < cp.mlp.biases[l].size(); ++i)
            b.push_back(cp.mlp.biases[l](i));
        biases.push_back(std::move(b));
    }
    j["weights"] = std::move(weights);
    j["biases"] = std::move(biases);
    j["standardizer"]["mean"] = {cp.standardizer.mean(0), cp.standardizer.mean(1),
                                 cp.standardizer.mean(2)};
    j["standardizer"]["scale"] = {cp.standardizer.scale(0), cp.standardizer.scale(1),
                                  cp.standardizer.scale(2)};
    j["label_names"] = cp.label_names;
    j["history"]["train_loss"] = cp.history.train_loss;
    j["history"]["val_loss"] = cp.history.val_loss;
    j["history"]["train_acc"] = cp.history.train_acc;
    j["history"]["val_acc"] = cp.history.val_acc;
    j["seed"] = cp.seed;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << j.dump(2) << "\n";
}

ModelCheckpoint load_checkpoint(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    json j;
    in >> j;
    if (j.value("format", "") != "qsensor-checkpoint-v1")
        throw std::runtime_error("load_checkpoint: unrecognized format in " + path);

    ModelCheckpoint cp;
    cp.mlp.arch.layer_sizes = j.at("architecture").at("layer_sizes").get<std::vector<int>>();
    cp.mlp.arch.leak_slope = j.at("architecture").at("leak_slope").get<double>();
    cp.mlp.arch.validate();
    for (const auto& w : j.at("weights")) cp.mlp.weights.push_back(matrix_from_json(w));
    for (const auto& b : j.at("biases")) {
        Eigen::VectorXd v(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) v(static_cast<Eigen::Index>(i)) =
            b.at(i).get<double>();
        cp.mlp.biases.push_back(std::move(v));
    }
    if (static_cast<int>(cp.mlp.weights.size()) != cp.mlp.arch.num_layers())
        throw std::runtime_error("load_checkpoint: weight count does not match architecture");
    for (int l = 0; l < cp.mlp.arch.num_layers(); ++l) {
        if (cp.mlp.weights[l].rows() != cp.mlp.arch.layer_sizes[l + 1] ||
            cp.mlp.weights[l].cols() != cp.mlp.arch.layer_sizes[l] ||
            cp.mlp.biases[l].size() != cp.mlp.arch.layer_sizes[l + 1])
            throw std::runtime_error("load_checkpoint: shape mismatch in layer " +
                                     std::to_string(l));
    }
    if (!j.contains("standardizer"))
        throw std::runtime_error("load_checkpoint: missing standardization stats");
    for (int k = 0; k < 3; ++k) {
        cp.standardizer.mean(k) = j.at("standardizer").at("mean").at(k).get<double>();
        cp.standardizer.scale(k) = j.at("standardizer").at("scale").at(k).get<double>();
    }
    cp.label_names = j.at("label_names").get<std::vector<std::string>>();
    cp.history.train_loss = j.at("history").at("train_loss").get<std::vector<double>>();
    cp.history.val_loss = j.at("history").at("val_loss").get<std::vector<double>>();
    cp.history.train_acc = j.at("history").at("train_acc").get<std::vector<double>>();
    cp.history.val_acc = j.at("history").at("val_acc").get<std::vector<double>>();
    cp.seed = j.at("seed").get<std::uint64_t>();
    return cp;
}

void write_history(const std::string& path, const TrainHistory& history)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_history: cannot open " + path);
    out << "# epoch train_loss val_loss train_acc val_acc\n";
    char line[160];
    for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
        std::snprintf(line, sizeof(line), "%zu %.10g %.10g %.10g %.10g\n", e + 1,
                      history.train_loss[e], history.val_loss[e], history.train_acc[e],
                      history.val_acc[e]);
        out << line;
    }
}

} // namespace qsensor
