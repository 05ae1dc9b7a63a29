#include "qsensor/noise.hpp"

#include "qsensor/parallel.hpp"
#include "qsensor/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace qsensor {

const char* noise_class_name(NoiseClass c)
{
    switch (c) {
        case NoiseClass::NmCorrelated: return "nm_correlated";
        case NoiseClass::NmAnticorrelated: return "nm_anticorrelated";
        case NoiseClass::NmUncorrelated: return "nm_uncorrelated";
        case NoiseClass::MCorrelated: return "m_correlated";
        case NoiseClass::MAnticorrelated: return "m_anticorrelated";
        case NoiseClass::MUncorrelated: return "m_uncorrelated";
    }
    return "unknown";
}

NoiseClass noise_class_from_int(int code)
{
    if (code < 0 || code >= kNumNoiseClasses)
        throw std::invalid_argument("noise class code out of range: " + std::to_string(code));
    return static_cast<NoiseClass>(code);
}

bool is_markovian(NoiseClass c)
{
    return static_cast<int>(c) >= 3;
}

NoiseSampleParams draw_sample_params(NoiseClass c, std::uint64_t seed)
{
    Rng rng(seed);
    NoiseSampleParams p;
    p.noise_class = c;
    p.seed = seed;
    switch (c) {
        case NoiseClass::NmCorrelated:
            p.eta = rng.uniform(0.1, 5.0);
            p.sigma = kBaseSigma;
            break;
        case NoiseClass::NmAnticorrelated:
            p.eta = rng.uniform(-5.0, -0.1);
            p.sigma = kBaseSigma;
            break;
        case NoiseClass::NmUncorrelated:
            p.sigma1 = rng.uniform(kBaseSigma / 5.0, 5.0 * kBaseSigma);
            p.sigma2 = rng.uniform(kBaseSigma / 5.0, 5.0 * kBaseSigma);
            break;
        case NoiseClass::MCorrelated:
            p.eta = rng.uniform(0.1, 5.0);
            p.gamma = rng.uniform(1e-4, 1e-3);
            break;
        case NoiseClass::MAnticorrelated:
            p.eta = rng.uniform(-5.0, -0.1);
            p.gamma = rng.uniform(1e-4, 1e-3);
            break;
        case NoiseClass::MUncorrelated:
            p.gamma1 = rng.uniform(1e-4, 1e-3);
            p.gamma2 = rng.uniform(1e-4, 1e-3);
            break;
    }
    return p;
}

QuadratureRule gauss_hermite_rule(int n, double sigma)
{
    if (n < 1) throw std::invalid_argument("gauss_hermite_rule: need at least one node");
    if (!(sigma > 0.0)) throw std::invalid_argument("gauss_hermite_rule: sigma must be positive");

    // Golub-Welsch on the Jacobi matrix of the (physicists') Hermite
    // polynomials: zero diagonal, off-diagonal sqrt(k/2).
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max(n - 1, 1));
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(k / 2.0);

    QuadratureRule rule;
    rule.order = n;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    if (n == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 1.0;
        return rule;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub.head(n - 1));
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = std::sqrt(2.0) * sigma * es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = v0 * v0; // normalized to the Gaussian measure
    }
    return rule;
}

Matrix4d local_noise_operator(int qubit, const Spectrum& spec)
{
    if (qubit == 1) return noise_hamiltonian(1.0, 0.0, spec);
    if (qubit == 2) return noise_hamiltonian(0.0, 1.0, spec);
    throw std::invalid_argument("local_noise_operator: qubit must be 1 or 2");
}

std::vector<JumpOperator> jump_operators(const NoiseSampleParams& p, const Spectrum& spec)
{
    if (!is_markovian(p.noise_class))
        throw std::invalid_argument("jump_operators: only defined for Markovian classes");

    const Matrix4d o1 = local_noise_operator(1, spec);
    const Matrix4d o2 = local_noise_operator(2, spec);

    std::vector<JumpOperator> jumps;
    if (p.noise_class == NoiseClass::MUncorrelated) {
        jumps.push_back({o1.cast<std::complex<double>>(), p.gamma1});
        jumps.push_back({o2.cast<std::complex<double>>(), p.gamma2});
        return jumps;
    }
    if (p.eta == 0.0)
        throw std::invalid_argument("jump_operators: eta = 0 is singular");
    const Matrix4d o = (o1 + p.eta * o2) / std::sqrt(std::abs(p.eta));
    jumps.push_back({o.cast<std::complex<double>>(), p.gamma});
    return jumps;
}

WhiteNoiseEstimate white_noise_oracle(const NoiseSampleParams& p, const ProtocolParams& proto,
                                      DriveTag drive, int n_traj, double dt_noise,
                                      int workers)
{
    if (!is_markovian(p.noise_class))
        throw std::invalid_argument("white_noise_oracle: only defined for Markovian classes");
    if (n_traj < 2)
        throw std::invalid_argument("white_noise_oracle: need at least two trajectories");

    const Spectrum spec = eigensystem(proto.system);
    const PulseParams pulses = proto.pulses_for(drive);
    const LabHamiltonian lab =
        assemble_lab_hamiltonian(proto.system, pulses, spec, 0.0, 0.0);
    const IntegratorConfig cfg = integrator_for(lab, proto.resolution_factor);

    const std::int64_t nsteps = cfg.step_count(pulses.t_start, pulses.t_end);
    const double dt = (pulses.t_end - pulses.t_start) / static_cast<double>(nsteps);
    const double ratio = dt_noise / dt;
    const std::int64_t steps_per_segment = static_cast<std::int64_t>(std::llround(ratio));
    if (steps_per_segment < 1 || std::abs(ratio - static_cast<double>(steps_per_segment)) > 1e-9)
        throw std::invalid_argument(
            "white_noise_oracle: dt_noise must be an integer multiple of the integrator dt");

    const bool correlated = p.noise_class != NoiseClass::MUncorrelated;
    const double sig_chi = correlated ? std::sqrt(p.gamma / dt_noise) : 0.0;
    const double sig1 = correlated ? 0.0 : std::sqrt(p.gamma1 / dt_noise);
    const double sig2 = correlated ? 0.0 : std::sqrt(p.gamma2 / dt_noise);
    const double inv_sqrt_eta = correlated ? 1.0 / std::sqrt(std::abs(p.eta)) : 0.0;

    const Vector4cd ee = ee_state_eigenbasis(spec);
    Vector4cd initial = Vector4cd::Zero();
    initial(0) = 1.0;

    std::vector<double> xi(n_traj, 0.0);
    parallel_for(static_cast<std::size_t>(n_traj), workers, [&](std::size_t traj) {
        Rng rng(derive_seed(p.seed, 0x7261 /* 'tr' */, traj));
        std::int64_t expected_segment = 0;
        auto deltas = [&](std::int64_t segment) -> std::pair<double, double> {
            // segments are visited in order within a trajectory, keeping the
            // draw sequence deterministic
            if (segment != expected_segment)
                throw std::logic_error("white_noise_oracle: segments visited out of order");
            ++expected_segment;
            if (correlated) {
                const double chi = rng.gaussian(sig_chi);
                const double d1 = chi * inv_sqrt_eta;
                return {d1, p.eta * d1};
            }
            return {rng.gaussian(sig1), rng.gaussian(sig2)};
        };
        const SchrodingerResult res = propagate_schrodinger_piecewise(
            lab, spec, deltas, steps_per_segment, initial, cfg);
        xi[traj] = population(res.state, ee);
    });

    double mean = 0.0;
    for (double v : xi) mean += v;
    mean /= n_traj;
    double var = 0.0;
    for (double v : xi) var += (v - mean) * (v - mean);
    var /= (n_traj - 1);

    WhiteNoiseEstimate est;
    est.xi = mean;
    est.std_error = std::sqrt(var / n_traj);
    return est;
}

} // namespace qsensor
