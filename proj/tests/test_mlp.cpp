#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qsensor/mlp.hpp"
#include "qsensor/rng.hpp"

#include <cmath>
#include <filesystem>

using namespace qsensor;

namespace {

// independent reference forward pass, written against the layer equations
// rather than the production code path
Eigen::VectorXd reference_forward(const Mlp& mlp, const Eigen::Vector3d& x)
{
    Eigen::VectorXd y = x;
    const int layers = mlp.arch.num_layers();
    for (int l = 0; l < layers; ++l) {
        Eigen::VectorXd z = mlp.weights[l] * y + mlp.biases[l];
        if (l == layers - 1) {
            const double m = z.maxCoeff();
            Eigen::VectorXd e = (z.array() - m).exp();
            y = e / e.sum();
        } else {
            y.resize(z.size());
            for (Eigen::Index i = 0; i < z.size(); ++i) {
                if (l == 0)
                    y(i) = z(i) > 0.0 ? z(i) : 0.0;
                else
                    y(i) = z(i) >= 0.0 ? z(i) : mlp.arch.leak_slope * z(i);
            }
        }
    }
    return y;
}

double batch_loss(const Mlp& mlp, const Eigen::MatrixXd& x, const std::vector<int>& labels)
{
    return cross_entropy_loss(mlp.forward(x), labels);
}

std::vector<Sample> separable_samples(int per_class)
{
    // one tight cluster per class, trivially separable
    std::vector<Sample> samples;
    Rng rng(5);
    for (int c = 0; c < 6; ++c)
        for (int i = 0; i < per_class; ++i) {
            Sample s;
            s.label = c;
            s.params.noise_class = noise_class_from_int(c);
            s.seed = derive_seed(1, c, i);
            const double base = 0.15 * c;
            s.features = {base + 0.001 * rng.uniform(), 1.0 - base + 0.001 * rng.uniform(),
                          0.5 + 0.05 * c + 0.001 * rng.uniform()};
            samples.push_back(s);
        }
    return samples;
}

} // namespace

TEST_CASE("forward: all-zero network outputs the uniform distribution")
{
    MlpArchitecture arch;
    Mlp mlp;
    mlp.arch = arch;
    for (int l = 0; l < arch.num_layers(); ++l) {
        mlp.weights.push_back(
            Eigen::MatrixXd::Zero(arch.layer_sizes[l + 1], arch.layer_sizes[l]));
        mlp.biases.push_back(Eigen::VectorXd::Zero(arch.layer_sizes[l + 1]));
    }
    const Eigen::VectorXd p = mlp.forward(Eigen::Vector3d(0.3, -1.2, 2.0));
    for (int k = 0; k < 6; ++k) CHECK(p(k) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forward: matches an independent reference implementation")
{
    MlpArchitecture arch;
    arch.layer_sizes = {3, 5, 4, 6};
    Rng rng(33);
    for (int rep = 0; rep < 50; ++rep) {
        const Mlp mlp = Mlp::initialized(arch, rng.raw());
        const Eigen::Vector3d x(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
                                rng.uniform(-3.0, 3.0));
        const Eigen::VectorXd a = mlp.forward(x);
        const Eigen::VectorXd b = reference_forward(mlp, x);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("forward: leak slope is wired into the hidden layers")
{
    MlpArchitecture arch;
    arch.layer_sizes = {3, 1, 1, 6};
    Mlp mlp;
    mlp.arch = arch;
    // h1 = relu(x0); h2 = leaky(h1 - 1); out = softmax(w2 h2)
    mlp.weights.push_back((Eigen::MatrixXd(1, 3) << 1, 0, 0).finished());
    mlp.biases.push_back(Eigen::VectorXd::Zero(1));
    mlp.weights.push_back((Eigen::MatrixXd(1, 1) << 1).finished());
    mlp.biases.push_back((Eigen::VectorXd(1) << -1.0).finished());
    Eigen::MatrixXd w2(6, 1);
    w2 << 1, 2, 3, 4, 5, 6;
    mlp.weights.push_back(w2);
    mlp.biases.push_back(Eigen::VectorXd::Zero(6));

    // x0 = -1: relu gives 0, leaky sees -1 and outputs -0.01
    const Eigen::VectorXd p = mlp.forward(Eigen::Vector3d(-1.0, 0.0, 0.0));
    Eigen::VectorXd z = w2 * -0.01;
    Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
    const Eigen::VectorXd expected = e / e.sum();
    CHECK((p - expected).cwiseAbs().maxCoeff() < 1e-15);

    // x0 = 3: relu passes 3, leaky passes 2 unchanged
    const Eigen::VectorXd q = mlp.forward(Eigen::Vector3d(3.0, 0.0, 0.0));
    Eigen::VectorXd z2 = w2 * 2.0;
    Eigen::VectorXd e2 = (z2.array() - z2.maxCoeff()).exp();
    CHECK((q - Eigen::VectorXd(e2 / e2.sum())).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("forward: probabilities form a distribution for 1000 random nets")
{
    MlpArchitecture arch;
    Rng rng(101);
    const Mlp mlp = Mlp::initialized(arch, 9);
    for (int rep = 0; rep < 1000; ++rep) {
        const Eigen::Vector3d x(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0),
                                rng.uniform(-5.0, 5.0));
        const Eigen::VectorXd p = mlp.forward(x);
        double sum = 0.0;
        for (int k = 0; k < 6; ++k) {
            CHECK(p(k) >= 0.0);
            sum += p(k);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("loss: frozen unit values")
{
    Eigen::MatrixXd uniform(4, 6);
    uniform.setConstant(1.0 / 6.0);
    CHECK(cross_entropy_loss(uniform, {0, 1, 2, 3}) ==
          doctest::Approx(1.791759469228055).epsilon(1e-13));

    Eigen::MatrixXd half(1, 6);
    half << 0.5, 0.1, 0.1, 0.1, 0.1, 0.1;
    CHECK(cross_entropy_loss(half, {0}) == doctest::Approx(0.6931471805599453).epsilon(1e-13));

    // near-perfect prediction: interior probabilities are not clamped
    Eigen::MatrixXd sharp(1, 6);
    sharp << 1.0 - 1e-10, 2e-11, 2e-11, 2e-11, 2e-11, 2e-11;
    CHECK(cross_entropy_loss(sharp, {0}) <= 1e-9);

    // the clamp keeps exact zeros finite
    Eigen::MatrixXd zero(1, 6);
    zero << 0.0, 1.0, 0.0, 0.0, 0.0, 0.0;
    CHECK(cross_entropy_loss(zero, {0}) == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));

    CHECK_THROWS_AS(cross_entropy_loss(uniform, {0, 1, 2, 9}), std::invalid_argument);
}

TEST_CASE("accuracy: hand cases and lowest-index tie-break")
{
    Eigen::MatrixXd p(2, 6);
    p.setZero();
    p(0, 0) = 1.0;
    p(1, 0) = 1.0;
    CHECK(accuracy_metric(p, {0, 0}) == doctest::Approx(1.0));
    CHECK(accuracy_metric(p, {0, 1}) == doctest::Approx(0.5));

    Eigen::MatrixXd tie(1, 6);
    tie << 0.1, 0.3, 0.3, 0.1, 0.1, 0.1;
    CHECK(argmax_lowest(tie.row(0).transpose()) == 1);
    CHECK(accuracy_metric(tie, {1}) == doctest::Approx(1.0));
    CHECK(accuracy_metric(tie, {2}) == doctest::Approx(0.0));
}

TEST_CASE("gradients: softmax cross-entropy layer gradient in closed form")
{
    // d loss/d z_L = (probs - onehot)/N, checked through the bias gradient of
    // a network whose final layer input is frozen
    MlpArchitecture arch;
    arch.layer_sizes = {3, 4, 6};
    const Mlp mlp = Mlp::initialized(arch, 3);
    Eigen::MatrixXd x(2, 3);
    x << 0.4, -0.2, 1.0, -0.7, 0.3, 0.1;
    const std::vector<int> labels{2, 4};
    const Eigen::MatrixXd probs = mlp.forward(x);
    const Gradients g = gradients(mlp, x, labels);
    Eigen::MatrixXd dz = probs;
    dz(0, 2) -= 1.0;
    dz(1, 4) -= 1.0;
    dz /= 2.0;
    CHECK((g.db[1] - dz.colwise().sum().transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("gradients: match central finite differences on the production stack")
{
    const MlpArchitecture arch; // 3-64-32-32-32-6
    Mlp mlp = Mlp::initialized(arch, 1234);
    Rng rng(77);
    Eigen::MatrixXd x(5, 3);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform(-2.0, 2.0);
    const std::vector<int> labels{0, 2, 5, 1, 3};

    const Gradients g = gradients(mlp, x, labels);
    const double h = 1e-6;
    double max_rel = 0.0;
    for (int l = 0; l < arch.num_layers(); ++l) {
        for (Eigen::Index i = 0; i < mlp.weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < mlp.weights[l].cols(); ++j) {
                const double keep = mlp.weights[l](i, j);
                mlp.weights[l](i, j) = keep + h;
                const double up = batch_loss(mlp, x, labels);
                mlp.weights[l](i, j) = keep - h;
                const double dn = batch_loss(mlp, x, labels);
                mlp.weights[l](i, j) = keep;
                const double fd = (up - dn) / (2.0 * h);
                const double a = g.dw[l](i, j);
                max_rel = std::max(max_rel,
                                   std::abs(a - fd) / std::max({std::abs(a), std::abs(fd),
                                                                1e-6}));
            }
        for (Eigen::Index i = 0; i < mlp.biases[l].size(); ++i) {
            const double keep = mlp.biases[l](i);
            mlp.biases[l](i) = keep + h;
            const double up = batch_loss(mlp, x, labels);
            mlp.biases[l](i) = keep - h;
            const double dn = batch_loss(mlp, x, labels);
            mlp.biases[l](i) = keep;
            const double fd = (up - dn) / (2.0 * h);
            const double a = g.db[l](i);
            max_rel = std::max(max_rel, std::abs(a - fd) /
                                            std::max({std::abs(a), std::abs(fd), 1e-6}));
        }
    }
    CHECK(max_rel < 1e-5);
}

TEST_CASE("gradients: batch gradient is the weighted mean of chunk gradients")
{
    const MlpArchitecture arch;
    const Mlp mlp = Mlp::initialized(arch, 55);
    Rng rng(8);
    Eigen::MatrixXd x(6, 3);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
    const std::vector<int> labels{0, 1, 2, 3, 4, 5};

    const Gradients full = gradients(mlp, x, labels);
    const Gradients head = gradients(mlp, x.topRows(2), {0, 1});
    const Gradients tail = gradients(mlp, x.bottomRows(4), {2, 3, 4, 5});
    for (int l = 0; l < arch.num_layers(); ++l) {
        const Eigen::MatrixXd combined = (2.0 * head.dw[l] + 4.0 * tail.dw[l]) / 6.0;
        CHECK((full.dw[l] - combined).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged")
{
    const MlpArchitecture arch;
    Mlp mlp = Mlp::initialized(arch, 2);
    const Mlp before = mlp;
    AdamState st = AdamState::zeros_like(mlp);
    Gradients g;
    for (int l = 0; l < arch.num_layers(); ++l) {
        g.dw.push_back(Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
        g.db.push_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
    }
    TrainConfig cfg;
    adam_step(mlp, g, st, cfg);
    for (int l = 0; l < arch.num_layers(); ++l)
        CHECK((mlp.weights[l] - before.weights[l]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam: bias-corrected first step moves by the learning rate")
{
    MlpArchitecture arch;
    arch.layer_sizes = {3, 1, 1, 6}; // smallest valid stack
    Mlp mlp = Mlp::initialized(arch, 4);
    const double w0 = mlp.weights[0](0, 0);
    AdamState st = AdamState::zeros_like(mlp);
    Gradients g;
    for (int l = 0; l < arch.num_layers(); ++l) {
        g.dw.push_back(Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
        g.db.push_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
    }
    g.dw[0](0, 0) = 1.0;
    TrainConfig cfg;
    adam_step(mlp, g, st, cfg);
    // m-hat = 1, v-hat = 1: step = -lr / (1 + eps)
    CHECK(mlp.weights[0](0, 0) - w0 ==
          doctest::Approx(-cfg.learning_rate / (1.0 + cfg.adam_epsilon)).epsilon(1e-12));
}

TEST_CASE("adam: constant gradient settles to steps of size learning_rate")
{
    MlpArchitecture arch;
    arch.layer_sizes = {3, 1, 1, 6};
    Mlp mlp = Mlp::initialized(arch, 4);
    AdamState st = AdamState::zeros_like(mlp);
    Gradients g;
    for (int l = 0; l < arch.num_layers(); ++l) {
        g.dw.push_back(Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
        g.db.push_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
    }
    g.dw[0](0, 0) = 0.37; // any constant
    TrainConfig cfg;
    double prev = mlp.weights[0](0, 0);
    double step = 0.0;
    for (int t = 0; t < 500; ++t) {
        adam_step(mlp, g, st, cfg);
        step = prev - mlp.weights[0](0, 0);
        prev = mlp.weights[0](0, 0);
    }
    CHECK(step == doctest::Approx(cfg.learning_rate).epsilon(0.02));
}

TEST_CASE("train: memorizes a tiny separable dataset")
{
    DatasetSplit split;
    split.train = separable_samples(1);
    split.validation = split.train;
    split.test = split.train;
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.batch_size = 6;
    cfg.seed = 21;
    const ModelCheckpoint cp = train(split, cfg, MlpArchitecture{});
    CHECK(cp.history.train_acc.back() == doctest::Approx(1.0));
    CHECK(cp.history.train_loss.back() < cp.history.train_loss.front());

    const EvalReport report = evaluate(cp, split.train);
    CHECK(report.accuracy == doctest::Approx(1.0));
    for (int c = 0; c < 6; ++c) CHECK(report.confusion_counts(c, c) == 1);
    CHECK(report.markov_binary_accuracy == doctest::Approx(1.0));
    CHECK(report.nm_within_accuracy == doctest::Approx(1.0));
    CHECK(report.m_within_accuracy == doctest::Approx(1.0));
}

TEST_CASE("train: loss decreases with only small transients")
{
    DatasetSplit split;
    split.train = separable_samples(8);
    split.validation = separable_samples(2);
    split.test = split.validation;
    TrainConfig cfg;
    cfg.epochs = 80;
    cfg.seed = 31;
    const ModelCheckpoint cp = train(split, cfg, MlpArchitecture{});
    const auto& loss = cp.history.train_loss;
    REQUIRE(loss.size() == 80);
    CHECK(loss.back() < loss.front());
    for (std::size_t e = 1; e < loss.size(); ++e)
        CHECK(loss[e] <= loss[e - 1] * 1.10); // transient increases below 10%
    CHECK(cp.history.val_acc.back() > 0.9);
}

TEST_CASE("train: deterministic given the seeds")
{
    DatasetSplit split;
    split.train = separable_samples(4);
    split.validation = separable_samples(1);
    split.test = split.validation;
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.seed = 77;
    const ModelCheckpoint a = train(split, cfg, MlpArchitecture{});
    const ModelCheckpoint b = train(split, cfg, MlpArchitecture{});
    for (std::size_t l = 0; l < a.mlp.weights.size(); ++l)
        CHECK((a.mlp.weights[l] - b.mlp.weights[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.history.train_loss == b.history.train_loss);

    TrainConfig other = cfg;
    other.seed = 78;
    const ModelCheckpoint c = train(split, other, MlpArchitecture{});
    CHECK((a.mlp.weights[0] - c.mlp.weights[0]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("checkpoint round-trip preserves outputs bit-for-bit")
{
    DatasetSplit split;
    split.train = separable_samples(2);
    split.validation = separable_samples(1);
    split.test = split.validation;
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 13;
    const ModelCheckpoint cp = train(split, cfg, MlpArchitecture{});

    const std::string path =
        (std::filesystem::temp_directory_path() / "qs_ckpt_test.json").string();
    save_checkpoint(path, cp);
    const ModelCheckpoint loaded = load_checkpoint(path);
    std::filesystem::remove(path);

    for (std::size_t l = 0; l < cp.mlp.weights.size(); ++l) {
        CHECK((cp.mlp.weights[l] - loaded.mlp.weights[l]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((cp.mlp.biases[l] - loaded.mlp.biases[l]).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK((cp.standardizer.mean - loaded.standardizer.mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((cp.standardizer.scale - loaded.standardizer.scale).cwiseAbs().maxCoeff() == 0.0);
    CHECK(loaded.history.train_loss == cp.history.train_loss);
    CHECK(loaded.label_names == cp.label_names);

    const EvalReport before = evaluate(cp, split.test);
    const EvalReport after = evaluate(loaded, split.test);
    CHECK(before.accuracy == after.accuracy);
    CHECK((before.confusion_counts - after.confusion_counts).cwiseAbs().maxCoeff() == 0);

    // predict reproduces the evaluation path bit-for-bit
    const Sample& s = split.train.front();
    const Prediction pred = predict(loaded, s.features.vec());
    const Eigen::VectorXd direct =
        loaded.mlp.forward(Eigen::Vector3d(loaded.standardizer.apply(s.features.vec())));
    CHECK((pred.probabilities - direct).cwiseAbs().maxCoeff() == 0.0);
    CHECK(pred.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pred.label >= 0);
    CHECK(pred.label < 6);
}

TEST_CASE("checkpoint loading validates file and shapes")
{
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/qs.json"), std::runtime_error);
    const std::string path =
        (std::filesystem::temp_directory_path() / "qs_bad_ckpt.json").string();
    std::ofstream(path) << "{\"format\": \"something-else\"}";
    CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("evaluate: within-group and binary aggregates on a crafted confusion")
{
    // craft samples and a checkpoint that predicts via a fixed diagonal map:
    // reuse the memorizing network but mislabel two samples to shape the matrix
    DatasetSplit split;
    split.train = separable_samples(1);
    split.validation = split.train;
    split.test = split.train;
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.batch_size = 6;
    cfg.seed = 21;
    const ModelCheckpoint cp = train(split, cfg, MlpArchitecture{});

    auto samples = split.train;
    samples[0].label = 1;                   // true nm_anticorrelated, predicted as class 0
    samples[3].label = 4;                   // true m_anticorrelated, predicted as class 3
    const EvalReport r = evaluate(cp, samples);
    CHECK(r.n_samples == 6);
    CHECK(r.accuracy == doctest::Approx(4.0 / 6.0));
    CHECK(r.markov_binary_accuracy == doctest::Approx(1.0)); // mistakes stay in-group
    CHECK(r.nm_within_accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(r.m_within_accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(r.confusion_counts(1, 0) == 1);
    CHECK(r.confusion_row_pct(1, 0) == doctest::Approx(100.0));
    CHECK(r.per_class_recall(1) == doctest::Approx(0.0));
    CHECK(r.per_class_recall(0) == doctest::Approx(1.0));
}

TEST_CASE("training history export")
{
    TrainHistory h;
    h.train_loss = {1.0, 0.5};
    h.val_loss = {1.1, 0.6};
    h.train_acc = {0.5, 0.8};
    h.val_acc = {0.4, 0.7};
    const std::string path =
        (std::filesystem::temp_directory_path() / "qs_hist_test.txt").string();
    write_history(path, h);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "# epoch train_loss val_loss train_acc val_acc");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    std::filesystem::remove(path);
}
